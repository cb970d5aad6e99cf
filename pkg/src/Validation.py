"""Randomised verification suites for the explicit-constant inequalities and exact identities."""
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import torch
from tqdm import tqdm

import src.Log
from src.Bases import (DividedDifferenceTable, basis_deviation_check, column_norm_bounds_check,
                       divided_difference, exp_divided_differences, explicit_divided_difference,
                       hilbert_min_eigenvalue, interpolation_leading_coefficient, limit_basis,
                       limit_conditioning_check, limit_inner_product_check)
from src.ClusterSpectrum import (cross_form, distance_matrix_power, gram_eig_upper_check, kernel_chain,
                                 micchelli_form, restricted_minimum)
from src.Errors import InvalidArgumentError, PreconditionError, VandermondeError
from src.LeastSquares import perturbation_experiment, row_norm_product_bound_check
from src.Linalg import (adjoint, frobenius_norm, hermitian_eigs, max_norm, numerical_rank,
                        operator_norm, operator_norm_estimate, random_matrix, singular_values)
from src.Nodes import (EQUISPACED, TWO_PI, UNIFORM_RANDOM, ClusterConfig, ClusterSpec, NodeSet, generate_cluster,
                       generate_multi_cluster, wrap_angle)
from src.PowerSums import faulhaber, power_sum, power_sum_check, trig_cancellation_check
from src.Subspace import block_diagonal, block_qr, union_spectrum_compare
from src.Utils import evenly_spaced_centers, log_uniform
from src.Vandermonde import (GramSpec, VandermondeSpec, build_centered, build_vandermonde, gram_matrix,
                             gram_taylor)
from src.Writer import write_yaml

RTOL = 1e-10


@dataclass(frozen=True)
class Suite:
    name: str
    count: int
    check: Callable
    cases: Optional[tuple] = None


@dataclass(frozen=True)
class SuiteResult:
    name: str
    instances: int
    violations: int
    replay: Optional[str] = None

    @property
    def passed(self):
        return self.violations == 0


@dataclass(frozen=True)
class VerifyReport:
    results: tuple

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def failed(self):
        return [r.name for r in self.results if not r.passed]


def _spread_points(rng, s, gap, low=0.0, high=1.0, endpoints=False):
    """Sorted points in [low, high] with consecutive gaps of at least ``gap``."""
    while True:
        if endpoints:
            inner = rng.uniform(low, high, size=max(s - 2, 0))
            points = np.sort(np.concatenate([[low, high], inner]))[:s]
        else:
            points = np.sort(rng.uniform(low, high, size=s))
        if s < 2 or np.diff(points).min() >= gap:
            return points


def _random_cluster(rng, s, N, nh_low, nh_high, layout=None):
    h = log_uniform(rng, nh_low, nh_high) / N
    layout = layout or (EQUISPACED if rng.random() < 0.5 else UNIFORM_RANDOM)
    center = float(rng.uniform(-math.pi, math.pi))
    return generate_cluster(center, h, s, layout, rng_seed=int(rng.integers(2 ** 32)))


def check_divided_differences(rng):
    s = int(rng.integers(1, 7))
    points = _spread_points(rng, s, 0.05)
    k = float(rng.uniform(-10, 10))
    f = lambda t: np.exp(1j * k * t)

    recursive = divided_difference(points, f)
    explicit = explicit_divided_difference(points, f)
    leading = interpolation_leading_coefficient(points, f)
    mean_value = abs(k) ** (s - 1) / math.factorial(s - 1)
    table = DividedDifferenceTable.build(points, f)

    # nearly confluent points approach the scaled derivative
    delta = 1e-7
    confluent = exp_divided_differences(delta * np.arange(s), [k])[0, s - 1] / math.factorial(s - 1)
    derivative = (1j * k) ** (s - 1) / math.factorial(s - 1)

    tol = 1e-7 * max(1.0, mean_value)
    ok = (abs(recursive - explicit) <= tol and abs(recursive - leading) <= tol
          and abs(recursive) <= mean_value * (1 + RTOL) + 1e-9
          and abs(table.newton_coefficients()[-1] - recursive) == 0
          and abs(confluent - derivative) <= 1e-4 * max(abs(derivative), 1.0))
    instance = {"points": points.tolist(), "k": k, "recursive": [recursive.real, recursive.imag],
                "explicit": [explicit.real, explicit.imag]}
    return instance, bool(ok)


def check_limit_inner_product(rng):
    while True:
        zeta1, zeta2 = (float(v) for v in rng.uniform(-math.pi, math.pi, size=2))
        if abs(wrap_angle(zeta1 - zeta2)) >= 0.01:
            break
    s1, s2 = (int(v) for v in rng.integers(1, 6, size=2))
    N = int(round(log_uniform(rng, 10, 500)))
    report = limit_inner_product_check(zeta1, s1, zeta2, s2, N)
    instance = {"zeta1": zeta1, "zeta2": zeta2, "s1": s1, "s2": s2, "N": N,
                "max_inner": report.max_inner, "bound": report.bound}
    return instance, report.passed


def check_basis_deviation(rng):
    s = int(rng.integers(1, 6))
    N = int(round(log_uniform(rng, max(10, s), 2000)))
    nodes = _random_cluster(rng, s, N, 1e-8, 1.0)
    report = basis_deviation_check(nodes, N)
    instance = {"angles": nodes.angles.tolist(), "offsets": nodes.offsets.tolist(), "N": N,
                "max_deviation": report.max_deviation, "bound": report.bound}
    return instance, report.passed


def check_column_norms(rng):
    s = int(rng.integers(1, 7))
    N = int(rng.integers(max(s - 1, 1), 5001))
    zeta = float(rng.uniform(-math.pi, math.pi))
    report = column_norm_bounds_check(limit_basis(zeta, N, s), N, s)
    instance = {"zeta": zeta, "N": N, "s": s, "norms": list(report.norms)}
    return instance, report.passed


def check_eig_upper(rng):
    s = int(rng.integers(1, 6))
    M = int(rng.integers(max(s, 5), 1001))
    epsilon = log_uniform(rng, 1e-2, 0.9)
    center = float(rng.uniform(-math.pi, math.pi))
    layout = EQUISPACED if rng.random() < 0.5 else UNIFORM_RANDOM
    nodes = generate_cluster(center, epsilon / M, s, layout, rng_seed=int(rng.integers(2 ** 32)))
    report = gram_eig_upper_check(nodes, 2 * M)
    chain = kernel_chain(GramSpec(nodes, M).y) if s > 1 else None
    consistent = all(restricted_minimum(nodes, 2 * M, m, chain).consistent for m in range(s)) if s > 1 else True
    instance = {"angles": nodes.angles.tolist(), "offsets": nodes.offsets.tolist(), "N": 2 * M,
                "eigenvalues": list(report.eigenvalues), "bounds": list(report.bounds)}
    return instance, report.passed and consistent


def check_micchelli(rng):
    s = int(rng.integers(2, 7))
    y = _spread_points(rng, s, 0.1, endpoints=True)
    m = int(rng.integers(0, s))
    chain = kernel_chain(y)

    def unit(basis):
        coefficients = random_matrix(basis.shape[1], 1, rng)
        vector = basis @ coefficients
        return vector / torch.linalg.vector_norm(vector)

    a = unit(chain.before[m])
    value = micchelli_form(y, m, a, chain)
    projection = float(torch.abs(adjoint(chain.complements[m]) @ a).item())
    ok = value >= -1e-12
    if projection >= 0.5:
        ok = ok and value > 1e-10
    ok = ok and abs(float((adjoint(a) @ distance_matrix_power(y, 2 * m) @ a).real.item())) <= s * (1 + RTOL)

    if m < s - 1:
        b = unit(chain.kernels[m])
        ok = ok and abs(micchelli_form(y, m, b, chain)) <= 1e-10
        ok = ok and abs(cross_form(y, m, a, b)) <= 1e-10
    if m >= 1:
        outside = chain.complements[m - 1]
        try:
            micchelli_form(y, m, outside, chain)
            ok = False
        except PreconditionError:
            pass
    instance = {"y": y.tolist(), "m": m, "value": value, "projection": projection}
    return instance, bool(ok)


def _random_multi_cluster(rng, max_clusters=3, max_size=3, nh_range=(1e-3, 0.05), N_range=(100, 1000)):
    count = int(rng.integers(2, max_clusters + 1))
    sizes = [int(v) for v in rng.integers(1, max_size + 1, size=count)]
    N = int(round(log_uniform(rng, *N_range)))
    h = log_uniform(rng, *nh_range) / N
    centers = evenly_spaced_centers(count, float(rng.uniform(-math.pi, math.pi)))
    specs = tuple(ClusterSpec(center=c, h=h if s >= 2 else 0.0, s=s) for c, s in zip(centers, sizes))
    theta = TWO_PI / count - h
    nodes = generate_multi_cluster(ClusterConfig(specs, theta), rng_seed=int(rng.integers(2 ** 32)))
    return nodes, N


def check_union(rng):
    nodes, N = _random_multi_cluster(rng)
    report = union_spectrum_compare(nodes, N)
    instance = {"angles": nodes.angles.tolist(), "offsets": nodes.offsets.tolist(),
                "partition": [list(b) for b in nodes.blocks], "N": N, "alpha": report.alpha,
                "ratios": list(report.ratios)}
    if not report.applicable:
        return instance, True
    return instance, bool(report.bounds_ok and report.q_bounds_ok)


def _product_bounds(B, C):
    sigma_b = singular_values(B)
    sigma_c = singular_values(C).values
    sigma_a = singular_values(B @ C).values
    count = min(len(sigma_c), len(sigma_a))
    slack = RTOL * sigma_b.max * sigma_c[0]
    return all(sigma_b.min * sigma_c[j] - slack <= sigma_a[j] <= sigma_b.max * sigma_c[j] + slack
               for j in range(count))


def check_product(rng):
    if rng.random() < 0.5:
        p = int(rng.integers(1, 6))
        m = int(rng.integers(p, 9))
        n = int(rng.integers(1, 7))
        B, C = random_matrix(m, p, rng), random_matrix(p, n, rng)
        return {"B_shape": [m, p], "C_shape": [p, n]}, _product_bounds(B, C)
    nodes, N = _random_multi_cluster(rng)
    V = build_vandermonde(VandermondeSpec(nodes, N))
    Q, blocks = block_qr(nodes, N)
    R = block_diagonal(blocks)
    factor_ok = frobenius_norm(Q @ R - V) <= RTOL * frobenius_norm(V)
    instance = {"angles": nodes.angles.tolist(), "offsets": nodes.offsets.tolist(),
                "partition": [list(b) for b in nodes.blocks], "N": N}
    return instance, bool(factor_ok and _product_bounds(Q, R))


def check_matrix_norms(rng):
    rows, cols = (int(v) for v in rng.integers(1, 9, size=2))
    A = random_matrix(rows, cols, rng, real=bool(rng.random() < 0.3))
    op = operator_norm(A)
    estimate = operator_norm_estimate(A, seed=int(rng.integers(2 ** 31)))
    chain = (max_norm(A) <= op * (1 + RTOL) and op <= frobenius_norm(A) * (1 + RTOL)
             and frobenius_norm(A) <= math.sqrt(numerical_rank(A)) * op * (1 + RTOL))
    estimate_ok = estimate <= op * (1 + RTOL) and estimate >= op * (1 - 1e-3)
    return {"shape": [rows, cols], "operator": op, "estimate": estimate}, bool(chain and estimate_ok)


def check_row_norm(rng):
    m, p, n = (int(v) for v in rng.integers(1, 7, size=3))
    if rng.random() < 0.25:
        B = random_matrix(m, 1, rng) @ random_matrix(1, p, rng)
    else:
        B = random_matrix(m, p, rng)
    report = row_norm_product_bound_check(B, random_matrix(p, n, rng))
    return {"shapes": [m, p, n], "row_norms": list(report.row_norms), "bounds": list(report.bounds)}, report.passed


def check_holder(rng):
    nodes, N = _random_multi_cluster(rng, nh_range=(1e-3, 0.5), N_range=(50, 1000))
    eps_noise = log_uniform(rng, 1e-8, 1e-2)
    seed = int(rng.integers(2 ** 32))
    result = perturbation_experiment(nodes, N, eps_noise, seed=seed)
    instance = {"angles": nodes.angles.tolist(), "offsets": nodes.offsets.tolist(),
                "partition": [list(b) for b in nodes.blocks], "N": N, "eps_noise": eps_noise, "seed": seed}
    return instance, result.holder_ok


FAULHABER_CASES = [(p, N) for p in range(11) for N in (0, 1, 2, 3, 4, 10, 100, 1000, 10_000)]


def check_faulhaber(rng, case):
    p, N = case
    exact = faulhaber(p, N) == power_sum(p, N) - (1 if p == 0 else 0)
    bounds = power_sum_check(p, N).bounds_ok if p >= 1 and N >= 1 else True
    return {"p": p, "N": N}, bool(exact and bounds)


def check_trig(rng):
    N = int(rng.integers(1, 10_001))
    m = int(rng.integers(0, 6))
    phi = float(rng.uniform(1e-3, TWO_PI - 1e-3))
    report = trig_cancellation_check(N, m, complex(math.cos(phi), math.sin(phi)))
    return {"N": N, "m": m, "phi": phi, "value": report.value, "bound": report.bound}, report.passed


def check_identities(rng):
    # roots of unity give orthogonal columns
    N = int(rng.integers(1, 201))
    s = int(rng.integers(1, min(N + 1, 8) + 1))
    j = np.sort(rng.choice(N + 1, size=s, replace=False))
    roots = NodeSet(wrap_angle(TWO_PI * j / (N + 1)))
    sigma = singular_values(build_vandermonde(VandermondeSpec(roots, N))).values
    ok = bool(np.all(np.abs(sigma - math.sqrt(N + 1)) <= RTOL * math.sqrt(N + 1)))

    # separated nodes: sigma_j(V_N)^2 = N lambda_j(G_N) and G_N = V~^H V~
    s = int(rng.integers(1, 7))
    angles = _spread_points(rng, s, 0.3, -math.pi + 0.15, math.pi - 0.15)
    M = int(rng.integers(max(s, 5), 201))
    spec = GramSpec(NodeSet(angles), M)
    gram = gram_matrix(spec)
    centered = build_centered(VandermondeSpec(spec.nodes, spec.N))
    eigenvalues = np.sort(hermitian_eigs(gram))[::-1]
    sigma = singular_values(build_vandermonde(VandermondeSpec(spec.nodes, spec.N))).values
    predicted = np.sqrt(spec.N * np.maximum(eigenvalues, 0))
    ok = ok and bool(np.all(np.abs(sigma - predicted) <= RTOL * sigma))
    ok = ok and float(torch.abs(gram - adjoint(centered) @ centered).max()) <= 1e-12

    # a narrow cluster: the Taylor form agrees with the closed form
    cluster = _random_cluster(rng, int(rng.integers(1, 6)), 2 * M, 1e-3, 1.8)
    narrow = GramSpec(cluster, M)
    taylor_gap = float(torch.abs(gram_taylor(narrow) - gram_matrix(narrow)).max())
    narrow_centered = build_centered(VandermondeSpec(cluster, narrow.N))
    direct_gap = float(torch.abs(gram_matrix(narrow) - adjoint(narrow_centered) @ narrow_centered).max())
    ok = ok and taylor_gap <= 1e-10 and direct_gap <= 1e-12
    instance = {"roots": j.tolist(), "N": N, "angles": angles.tolist(), "M": M,
                "cluster": cluster.angles.tolist(), "taylor_gap": taylor_gap}
    return instance, ok


def check_hilbert(rng):
    s = int(rng.integers(2, 5))
    zeta = float(rng.uniform(-math.pi, math.pi))
    report = limit_conditioning_check(zeta, 10_000, s)
    monotone = all(hilbert_min_eigenvalue(k + 1) <= hilbert_min_eigenvalue(k) for k in range(1, 9))
    instance = {"s": s, "zeta": zeta, "sigma_min": report.sigma_min, "limit": report.limit}
    return instance, bool(report.gap <= 1e-2 and report.exceeds and monotone)


SUITES = (
    Suite("divided-differences", 200, check_divided_differences),
    Suite("limit-inner-product", 1000, check_limit_inner_product),
    Suite("basis-deviation", 200, check_basis_deviation),
    Suite("column-norms", 200, check_column_norms),
    Suite("eig-upper", 200, check_eig_upper),
    Suite("micchelli", 500, check_micchelli),
    Suite("union", 200, check_union),
    Suite("product", 200, check_product),
    Suite("matrix-norms", 200, check_matrix_norms),
    Suite("row-norm", 200, check_row_norm),
    Suite("holder", 100, check_holder),
    Suite("faulhaber", len(FAULHABER_CASES), check_faulhaber, tuple(FAULHABER_CASES)),
    Suite("trig", 1000, check_trig),
    Suite("identities", 50, check_identities),
    Suite("hilbert", 20, check_hilbert),
)
SUITE_NAMES = tuple(suite.name for suite in SUITES)


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.ndarray, np.generic)):
        return _plain(value.tolist())
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def run_suite(suite: Suite, seed, count=None, out_dir=None, logger=None) -> SuiteResult:
    rng = np.random.default_rng([seed, SUITE_NAMES.index(suite.name)])
    count = suite.count if count is None else count
    violations, replay = 0, None
    for index in tqdm(range(count), desc=suite.name):
        try:
            args = (suite.cases[index % len(suite.cases)],) if suite.cases else ()
            instance, ok = suite.check(rng, *args)
        except (VandermondeError, ArithmeticError) as e:
            instance, ok = {"error": f"{type(e).__name__}: {e}"}, False
        if ok:
            continue
        violations += 1
        if replay is None and out_dir is not None:
            replay = write_yaml(os.path.join(out_dir, f"verify-replay-{suite.name}.yaml"),
                                {"suite": suite.name, "seed": int(seed), "instance_index": index,
                                 "instance": _plain(instance)})
    if logger is not None:
        log = logger.log_info if violations == 0 else logger.log_error
        log(f"Suite {suite.name}: {count} instances, {violations} violations")
    return SuiteResult(name=suite.name, instances=count, violations=violations, replay=replay)


def run_verify(names: Sequence[str] = None, seed=0, out_dir=None, logger=None) -> VerifyReport:
    selected = SUITE_NAMES if not names else tuple(names)
    unknown = [n for n in selected if n not in SUITE_NAMES]
    if unknown:
        raise InvalidArgumentError(f"unknown suites {unknown}, expected names from {list(SUITE_NAMES)}")
    results = []
    for suite in SUITES:
        if suite.name not in selected:
            continue
        result = run_suite(suite, seed, out_dir=out_dir, logger=logger)
        color = "green" if result.passed else "red"
        src.Log.print_with_color(f"{suite.name}: {result.instances} instances, {result.violations} violations",
                                 color)
        results.append(result)
    return VerifyReport(results=tuple(results))
