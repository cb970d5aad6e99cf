"""Single-cluster spectral analysis: distance matrices, the P_m kernel chain,
the Micchelli form, Gram eigenvalue bounds and singular value scaling."""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch

from src.Errors import IllConditionedError, InvalidArgumentError, OutOfRegimeError, PreconditionError
from src.Linalg import (ComplexMatrix, adjoint, as_matrix, as_vector, frobenius_norm, orthonormal_complement,
                        orthonormal_nullspace, projector, singular_values)
from src.Nodes import ClusterConfig, NodeSet
from src.Utils import fit_loglog
from src.Vandermonde import GramSpec, VandermondeSpec, build_centered, build_vandermonde

MIN_RESCALED_SPACING = 1e-10
CHAIN_TOL = 1e-10
KERNEL_TOL = 1e-10
BOUND_RTOL = 1e-10
REGIME_CAP = 0.5
SIGMA_ATOL = 1e-13


def _rescaled(y):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0 or not np.all(np.isfinite(y)):
        raise InvalidArgumentError("rescaled nodes must be a non-empty list of finite values")
    return y


@dataclass(frozen=True, eq=False)
class RescaledCluster:
    y: np.ndarray
    epsilon: float
    M: int

    @classmethod
    def from_nodes(cls, nodes: NodeSet, N):
        spec = GramSpec.from_bandwidth(nodes, N)
        return cls(y=spec.y, epsilon=spec.epsilon, M=spec.M)

    @property
    def s(self):
        return int(self.y.size)

    @property
    def tau(self):
        if self.s < 2:
            return None
        gaps = np.abs(self.y[:, None] - self.y[None, :])[np.triu_indices(self.s, 1)]
        return float(gaps.min())


def distance_matrix_power(y, k) -> ComplexMatrix:
    if int(k) != k or k < 0:
        raise InvalidArgumentError(f"distance matrix power must be a non-negative integer, got {k}")
    y = _rescaled(y)
    differences = y[:, None] - y[None, :]
    return as_matrix(differences ** int(k))


def pm_matrix(y, m) -> ComplexMatrix:
    y = _rescaled(y)
    if not 0 <= m <= y.size - 1:
        raise InvalidArgumentError(f"P_m needs 0 <= m <= s - 1 = {y.size - 1}, got m = {m}")
    return as_matrix(np.vander(y, m + 1, increasing=True).T)


@dataclass(frozen=True, eq=False)
class KernelChain:
    """Nested kernels ker P_{m-1} = ker P_m (+) M_m for m = 0..s-1.

    ``before[m]`` spans ker P_{m-1} (the whole space for m = 0), ``kernels[m]`` spans ker P_m,
    ``complements[m]`` is the unit vector spanning M_m and ``accumulated[m]`` spans
    Q_m = M_0 (+) ... (+) M_m.
    """

    y: np.ndarray
    before: List[ComplexMatrix]
    kernels: List[ComplexMatrix]
    complements: List[ComplexMatrix]
    accumulated: List[ComplexMatrix]

    @property
    def s(self):
        return int(self.y.size)


def kernel_chain(y) -> KernelChain:
    y = _rescaled(y)
    s = y.size
    if s > 1 and np.diff(np.sort(y)).min() < MIN_RESCALED_SPACING:
        raise IllConditionedError("rescaled nodes closer than 1e-10 make the kernel chain ill-conditioned")

    # ker P_m only depends on the polynomial space, so an affine change of y keeps it
    spread = np.abs(y - y.mean()).max()
    z = (y - y.mean()) / spread if spread > 0 else y - y.mean()

    before, kernels, complements, accumulated = [], [], [], []
    previous = torch.eye(s, dtype=torch.complex128)
    for m in range(s):
        kernel = orthonormal_nullspace(pm_matrix(z, m), rank=m + 1)
        complement = orthonormal_complement(previous, kernel)
        if complement.shape[1] != 1:
            raise IllConditionedError(f"M_{m} has dimension {complement.shape[1]}, expected 1")
        defect = frobenius_norm(projector(previous) - projector(kernel) - projector(complement))
        if defect > CHAIN_TOL:
            raise IllConditionedError(f"kernel chain splitting fails at m = {m} (defect {defect:.3e})")
        before.append(previous)
        kernels.append(kernel)
        complements.append(complement)
        accumulated.append(complement if m == 0 else torch.cat([accumulated[-1], complement], dim=1))
        previous = kernel
    return KernelChain(y=y, before=before, kernels=kernels, complements=complements, accumulated=accumulated)


def _kernel_residual(basis, a):
    if basis.shape[1] == 0:
        return float(torch.linalg.vector_norm(a))
    return float(torch.linalg.vector_norm(a - basis @ (adjoint(basis) @ a)))


def micchelli_form(y, m, a, chain: Optional[KernelChain] = None) -> float:
    y = _rescaled(y)
    a = as_vector(a)
    if a.shape[0] != y.size:
        raise InvalidArgumentError(f"vector has {a.shape[0]} entries for {y.size} nodes")
    if not 0 <= m <= y.size - 1:
        raise InvalidArgumentError(f"m must lie in 0..{y.size - 1}, got {m}")
    chain = kernel_chain(y) if chain is None else chain
    scale = max(float(torch.linalg.vector_norm(a)), 1e-300)
    if _kernel_residual(chain.before[m], a) > KERNEL_TOL * scale:
        raise PreconditionError(f"the vector does not lie in ker P_{m - 1}")
    value = adjoint(a) @ distance_matrix_power(y, 2 * m) @ a
    return (-1) ** m * float(value.real.item())


def cross_form(y, m, a, b) -> complex:
    """a^H D^{2m} b, which vanishes for a in ker P_{m-1} and b in ker P_m."""
    value = adjoint(as_vector(a)) @ distance_matrix_power(y, 2 * m) @ as_vector(b)
    return complex(value.item())


def _single_cluster(nodes: NodeSet):
    if nodes.num_clusters != 1:
        raise InvalidArgumentError(f"expected one cluster, got {nodes.num_clusters}")


def _gram_eigenvalues(spec: GramSpec) -> np.ndarray:
    # squared singular values of the centered matrix keep small eigenvalues to relative accuracy
    sigma = singular_values(build_centered(VandermondeSpec(spec.nodes, spec.N))).values
    return sigma ** 2


def _regime_spec(nodes: NodeSet, N) -> GramSpec:
    _single_cluster(nodes)
    spec = GramSpec.from_bandwidth(nodes, N)
    if spec.epsilon >= 1:
        raise OutOfRegimeError(f"epsilon = N h / 2 = {spec.epsilon:.4g} is outside the regime epsilon < 1")
    return spec


@dataclass(frozen=True)
class EigenBoundReport:
    epsilon: float
    eigenvalues: tuple
    bounds: tuple
    passed: bool

    @property
    def violations(self):
        return tuple(m for m, (lam, bound) in enumerate(zip(self.eigenvalues, self.bounds))
                     if lam > bound * (1 + BOUND_RTOL))


def gram_eig_upper_check(nodes: NodeSet, N) -> EigenBoundReport:
    spec = _regime_spec(nodes, N)
    s = nodes.size
    eigenvalues = _gram_eigenvalues(spec)
    bounds = tuple(s * math.e * spec.epsilon ** (2 * m) for m in range(s))
    passed = all(lam <= bound * (1 + BOUND_RTOL) for lam, bound in zip(eigenvalues, bounds))
    return EigenBoundReport(epsilon=spec.epsilon, eigenvalues=tuple(float(v) for v in eigenvalues),
                            bounds=bounds, passed=passed)


@dataclass(frozen=True)
class RestrictedMinimum:
    m: int
    epsilon: float
    mu: float
    rho: float
    eigenvalue: float

    @property
    def gap(self):
        return self.rho - self.mu

    @property
    def consistent(self):
        # both sides are squared singular values, accurate to SIGMA_ATOL before squaring
        return math.sqrt(self.mu) <= math.sqrt(self.eigenvalue) * (1 + BOUND_RTOL) + SIGMA_ATOL

    @property
    def normalized(self):
        return self.mu / self.epsilon ** (2 * self.m)


def restricted_minimum(nodes: NodeSet, N, m, chain: Optional[KernelChain] = None) -> RestrictedMinimum:
    """mu = min of a^H G_N a over unit a in Q_m, and rho, the same form at the unit vector of M_m.

    Both are evaluated as squared singular values / norms of the centered matrix times the basis.
    """
    spec = _regime_spec(nodes, N)
    s = nodes.size
    if not 0 <= m <= s - 1:
        raise InvalidArgumentError(f"m must lie in 0..{s - 1}, got {m}")
    chain = kernel_chain(spec.y) if chain is None else chain
    V = build_centered(VandermondeSpec(nodes, spec.N))
    mu = singular_values(V @ chain.accumulated[m]).min ** 2
    rho = float(torch.linalg.vector_norm(V @ chain.complements[m])) ** 2
    eigenvalue = float(_gram_eigenvalues(spec)[m])
    return RestrictedMinimum(m=m, epsilon=spec.epsilon, mu=mu, rho=rho, eigenvalue=eigenvalue)


@dataclass(frozen=True)
class ScalingReport:
    N: int
    h: float
    sigma: tuple
    ratios: tuple
    upper: tuple
    upper_ok: Optional[bool]

    @property
    def Nh(self):
        return self.N * self.h

    @property
    def in_regime(self):
        return self.upper_ok is not None


def single_cluster_scaling(nodes: NodeSet, N) -> ScalingReport:
    """sigma_j(V_N) / (sqrt(N) (N h)^{j-1}), with the explicit upper bound sqrt(s e N) (N h / 2)^{j-1}.

    Odd N is bounded through the next even bandwidth, since adding rows cannot shrink singular values.
    Above N h = 0.5 the report carries the ratios only.
    """
    _single_cluster(nodes)
    s = nodes.size
    if N < s:
        raise InvalidArgumentError(f"single cluster scaling needs N >= s, got N = {N}, s = {s}")
    h = float(np.abs(nodes.differences()).max())
    sigma = singular_values(build_vandermonde(VandermondeSpec(nodes, N))).values
    ratios = tuple(float(v / (math.sqrt(N) * (N * h) ** j)) for j, v in enumerate(sigma))

    bandwidth = N if N % 2 == 0 else N + 1
    upper = tuple(math.sqrt(s * math.e * bandwidth) * (bandwidth * h / 2) ** j for j in range(s))
    upper_ok = None
    if N * h <= REGIME_CAP:
        upper_ok = all(v <= bound * (1 + BOUND_RTOL) for v, bound in zip(sigma, upper))
    return ScalingReport(N=int(N), h=h, sigma=tuple(float(v) for v in sigma), ratios=ratios,
                         upper=upper, upper_ok=upper_ok)


def expected_multiplicities(multiplicities: Sequence[int]) -> tuple:
    """l_j = number of clusters with at least j nodes."""
    if not multiplicities or any(s < 1 for s in multiplicities):
        raise InvalidArgumentError(f"multiplicities must be positive, got {multiplicities}")
    return tuple(sum(1 for s in multiplicities if s >= j) for j in range(1, max(multiplicities) + 1))


@dataclass(frozen=True)
class CensusReport:
    expected: tuple
    measured: tuple
    slopes: tuple

    @property
    def matches(self):
        return self.expected == self.measured


def multiplicity_census(config: ClusterConfig, nh_values, spectra) -> CensusReport:
    """Bin each singular value index by the nearest integer log-log slope against N h.

    ``spectra`` holds one non-increasing list of normalized singular values per sample.
    """
    widths = {c.h for c in config.clusters if c.s >= 2}
    if len(widths) > 1:
        raise InvalidArgumentError(f"the census needs equal cluster widths, got {sorted(widths)}")
    expected = expected_multiplicities(config.multiplicities)
    values = np.asarray(spectra, dtype=float)
    if values.ndim != 2 or values.shape[1] != config.size:
        raise InvalidArgumentError(f"expected {config.size} singular values per sample")
    if values.shape[0] != len(nh_values):
        raise InvalidArgumentError("one N h value per sample is required")

    slopes = tuple(fit_loglog(nh_values, values[:, i]).slope for i in range(config.size))
    bins = [max(int(math.floor(slope + 0.5)), 0) for slope in slopes]
    counts = [0] * max(len(expected), max(bins) + 1)
    for j in bins:
        counts[j] += 1
    return CensusReport(expected=expected, measured=tuple(counts), slopes=slopes)
