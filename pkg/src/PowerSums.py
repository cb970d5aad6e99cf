"""Exact power sums and the oscillatory sum bound used by the spectral estimates."""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from src.Errors import InvalidArgumentError

BOUND_RTOL = 1e-10


@lru_cache(maxsize=None)
def bernoulli_numbers(n):
    """B_0..B_n with the convention B_1 = +1/2."""
    if n < 0:
        raise InvalidArgumentError(f"Bernoulli index must be non-negative, got {n}")
    numbers = [Fraction(1)]
    for m in range(1, n + 1):
        total = sum(math.comb(m + 1, j) * numbers[j] for j in range(m))
        numbers.append(-total / (m + 1))
    if n >= 1:
        numbers[1] = -numbers[1]
    return tuple(numbers)


def _check(p, N):
    if int(p) != p or p < 0 or int(N) != N or N < 0:
        raise InvalidArgumentError(f"power sums need integers p >= 0 and N >= 0, got p = {p}, N = {N}")


def faulhaber(p, N) -> int:
    """sum_{k=1}^{N} k^p from the closed form."""
    _check(p, N)
    B = bernoulli_numbers(p)
    value = sum(math.comb(p + 1, j) * B[j] * Fraction(N) ** (p + 1 - j) for j in range(p + 1)) / (p + 1)
    if value.denominator != 1:
        raise ArithmeticError(f"closed form gave a non-integer power sum {value}")
    return int(value)


def power_sum(p, N) -> int:
    """sum_{k=0}^{N} k^p by direct summation, with 0^0 = 1."""
    _check(p, N)
    return sum(k ** p for k in range(N + 1))


@dataclass(frozen=True)
class PowerSumReport:
    p: int
    N: int
    exact: int
    closed_form: int
    lower: Fraction
    upper: int

    @property
    def exact_ok(self):
        return self.exact == self.closed_form

    @property
    def bounds_ok(self):
        return self.lower <= self.exact <= self.upper


def power_sum_check(p, N) -> PowerSumReport:
    """N^{p+1} / (p+1) <= sum_{k=0}^{N} k^p <= N^{p+1}, for p >= 1 and N >= 1."""
    if p < 1 or N < 1:
        raise InvalidArgumentError(f"the power sum bounds need p >= 1 and N >= 1, got p = {p}, N = {N}")
    exact = power_sum(p, N)
    return PowerSumReport(p=p, N=N, exact=exact, closed_form=faulhaber(p, N),
                          lower=Fraction(N ** (p + 1), p + 1), upper=N ** (p + 1))


@dataclass(frozen=True)
class CancellationReport:
    value: float
    bound: float

    @property
    def passed(self):
        return self.value <= self.bound * (1 + BOUND_RTOL)


def trig_cancellation_check(N, m, z) -> CancellationReport:
    """|sum_{k=0}^{N} k^m z^k| <= 2 N^m / |1 - z| for unimodular z != 1."""
    z = complex(z)
    if abs(abs(z) - 1) > 1e-12 or z == 1:
        raise InvalidArgumentError(f"z must lie on the unit circle away from 1, got {z}")
    if N < 1 or m < 0:
        raise InvalidArgumentError(f"needs N >= 1 and m >= 0, got N = {N}, m = {m}")
    k = np.arange(N + 1, dtype=float)
    terms = k ** m * np.exp(1j * np.angle(z) * k)
    value = float(abs(np.sum(terms)))
    return CancellationReport(value=value, bound=2 * float(N) ** m / abs(1 - z))
