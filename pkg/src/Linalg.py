"""Dense complex linear algebra on torch complex128 tensors."""
from dataclasses import dataclass

import numpy as np
import torch

from src.Errors import InvalidArgumentError, RankDeficientError

DTYPE = torch.complex128
REAL_DTYPE = torch.float64

RANK_TOL = 1e-13
HERMITIAN_TOL = 1e-12

ComplexMatrix = torch.Tensor


def as_matrix(a) -> ComplexMatrix:
    if isinstance(a, torch.Tensor):
        matrix = a.to(DTYPE)
    else:
        matrix = torch.as_tensor(np.asarray(a, dtype=complex), dtype=DTYPE)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {tuple(matrix.shape)}")
    if not bool(torch.isfinite(matrix).all()):
        raise InvalidArgumentError("matrix entries must be finite")
    return matrix


def as_vector(b) -> torch.Tensor:
    vector = as_matrix(b)
    if vector.shape[1] != 1:
        raise InvalidArgumentError(f"expected a vector, got shape {tuple(vector.shape)}")
    return vector


def to_numpy(a) -> np.ndarray:
    return a.detach().cpu().numpy()


def adjoint(a: ComplexMatrix) -> ComplexMatrix:
    return a.conj().transpose(-2, -1)


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if np.any(values < 0):
            raise InvalidArgumentError("singular values are non-negative")
        if np.any(np.diff(values) > 0):
            raise InvalidArgumentError("spectrum values must be non-increasing")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, item):
        return self.values[item]

    def __iter__(self):
        return iter(self.values.tolist())

    @property
    def max(self):
        return float(self.values[0])

    @property
    def min(self):
        return float(self.values[-1])

    @property
    def condition_number(self):
        return float(self.values[0] / self.values[-1]) if self.values[-1] > 0 else float("inf")


def singular_values(a) -> Spectrum:
    matrix = as_matrix(a)
    if matrix.numel() == 0:
        raise InvalidArgumentError("singular values of an empty matrix")
    values = to_numpy(torch.linalg.svdvals(matrix))
    # svdvals is non-increasing up to rounding in the last bit
    return Spectrum(np.maximum.accumulate(values[::-1])[::-1].copy())


def operator_norm(a) -> float:
    return singular_values(a).max


def operator_norm_estimate(a, iterations=2000, tol=1e-15, seed=0) -> float:
    """Largest singular value by power iteration on A^H A."""
    matrix = as_matrix(a)
    generator = torch.Generator().manual_seed(seed)
    x = torch.randn(matrix.shape[1], 1, generator=generator, dtype=REAL_DTYPE).to(DTYPE)
    x = x / torch.linalg.vector_norm(x)
    estimate = 0.0
    for _ in range(iterations):
        y = adjoint(matrix) @ (matrix @ x)
        norm = float(torch.linalg.vector_norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(norm - estimate) <= tol * norm:
            estimate = norm
            break
        estimate = norm
    return float(np.sqrt(estimate))


def numerical_rank(a, tol=RANK_TOL) -> int:
    values = singular_values(a).values
    if values[0] == 0:
        return 0
    return int(np.sum(values > tol * values[0]))


def thin_qr(a):
    matrix = as_matrix(a)
    rows, cols = matrix.shape
    if rows < cols:
        raise RankDeficientError(f"a {rows}x{cols} matrix cannot have full column rank")
    q, r = torch.linalg.qr(matrix, mode="reduced")
    scale = float(torch.linalg.matrix_norm(matrix, ord=2))
    diagonal = torch.abs(torch.diagonal(r))
    if scale == 0.0 or bool((diagonal < RANK_TOL * scale).any()):
        raise RankDeficientError(
            f"matrix is numerically rank deficient (min |R_jj| = {float(diagonal.min()):.3e}, norm {scale:.3e})")
    return q, r


def hermitian_eigs(h) -> np.ndarray:
    matrix = as_matrix(h)
    if matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {tuple(matrix.shape)}")
    scale = float(torch.linalg.matrix_norm(matrix))
    defect = float(torch.linalg.matrix_norm(matrix - adjoint(matrix)))
    if defect > HERMITIAN_TOL * max(scale, 1e-300):
        raise InvalidArgumentError(f"matrix is not Hermitian (defect {defect:.3e})")
    symmetric = (matrix + adjoint(matrix)) / 2
    return to_numpy(torch.linalg.eigvalsh(symmetric))


def lstsq_solve(a, b) -> torch.Tensor:
    matrix = as_matrix(a)
    rhs = as_matrix(b)
    if rhs.shape[0] != matrix.shape[0]:
        raise InvalidArgumentError(
            f"right-hand side has {rhs.shape[0]} rows, the matrix has {matrix.shape[0]}")
    q, r = thin_qr(matrix)
    x = torch.linalg.solve_triangular(r, adjoint(q) @ rhs, upper=True)
    vector_input = (b.ndim if isinstance(b, torch.Tensor) else np.ndim(b)) == 1
    return x.reshape(-1) if vector_input else x


def pseudoinverse(a) -> ComplexMatrix:
    q, r = thin_qr(a)
    return torch.linalg.solve_triangular(r, adjoint(q), upper=True)


def orthonormal_nullspace(a, tol=RANK_TOL, rank=None) -> ComplexMatrix:
    """Orthonormal basis of ker A; ``rank`` overrides the numerical rank when it is known exactly."""
    matrix = as_matrix(a)
    if matrix.numel() == 0:
        raise InvalidArgumentError("nullspace of an empty matrix")
    _, values, vh = torch.linalg.svd(matrix, full_matrices=True)
    if rank is not None:
        if not 0 <= rank <= min(matrix.shape):
            raise InvalidArgumentError(f"rank {rank} is impossible for shape {tuple(matrix.shape)}")
    elif values.numel() == 0 or float(values[0]) == 0.0:
        rank = 0
    else:
        rank = int((values > tol * values[0]).sum())
    return adjoint(vh[rank:, :])


def orthonormal_complement(basis, sub) -> ComplexMatrix:
    """Orthonormal basis of the part of span(basis) orthogonal to span(sub).

    ``basis`` must have orthonormal columns and span(sub) must lie inside span(basis).
    """
    basis = as_matrix(basis)
    if sub.shape[1] == 0:
        return basis
    coefficients = orthonormal_nullspace(adjoint(as_matrix(sub)) @ basis)
    return basis @ coefficients


def projector(basis) -> ComplexMatrix:
    basis = as_matrix(basis)
    return basis @ adjoint(basis)


def normalize_columns(a) -> ComplexMatrix:
    matrix = as_matrix(a)
    norms = torch.linalg.vector_norm(matrix, dim=0)
    if bool((norms == 0).any()):
        raise RankDeficientError("cannot normalize a zero column")
    return matrix / norms


def max_norm(a) -> float:
    return float(torch.abs(as_matrix(a)).max())


def frobenius_norm(a) -> float:
    return float(torch.linalg.matrix_norm(as_matrix(a)))


def random_matrix(rows, cols, rng, real=False) -> ComplexMatrix:
    """Gaussian test matrix drawn from a numpy Generator."""
    values = rng.standard_normal((rows, cols))
    if not real:
        values = values + 1j * rng.standard_normal((rows, cols))
    return as_matrix(values)
