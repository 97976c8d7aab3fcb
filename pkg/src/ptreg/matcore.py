"""Dense matrix helpers: block indexing, partial trace, eigendecomposition, PSD tests.

Matrices are plain ``float64`` numpy arrays. Indices are zero-based throughout;
only the CLI reports one-based block indices.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BlockSpec:
    """``outer`` x ``outer`` grid of ``inner`` x ``inner`` blocks."""

    outer: int
    inner: int

    def __post_init__(self):
        if self.outer < 1 or self.inner < 1:
            raise ValueError(f"block dimensions must be positive, got {self.outer}x{self.inner}")

    @property
    def side(self) -> int:
        return self.outer * self.inner


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, same order


def as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {M.shape}")
    return M


def _require_square(M: np.ndarray, what: str = "matrix") -> None:
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValueError(f"{what} must be square, got shape {M.shape}")


def symmetrize(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def block(M: np.ndarray, spec: BlockSpec, i: int, j: int) -> np.ndarray:
    """View of block ``(i, j)`` of ``M``."""
    k = spec.inner
    return M[i * k:(i + 1) * k, j * k:(j + 1) * k]


def partial_trace(M, spec: BlockSpec) -> np.ndarray:
    """Trace out the inner factor: entry ``(i, j)`` is ``tr`` of block ``(i, j)``.

    Works on a single ``(q*m, q*m)`` matrix or a stack ``(..., q*m, q*m)``.
    """
    M = np.asarray(M, dtype=np.float64)
    _require_square(M)
    if M.shape[-1] != spec.side:
        raise ValueError(
            f"partial_trace expects side {spec.side} ({spec.outer}x{spec.inner} blocks), "
            f"got side {M.shape[-1]}"
        )
    q, m = spec.outer, spec.inner
    blocks = M.reshape(M.shape[:-2] + (q, m, q, m))
    return np.trace(blocks, axis1=-3, axis2=-1)


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    """``n x n`` zero matrix with a single one at zero-based ``(i, j)``."""
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"matrix unit index ({i}, {j}) out of range for n={n}")
    E = np.zeros((n, n))
    E[i, j] = 1.0
    return E


def sym_eig(S) -> EigResult:
    """Eigendecomposition of the symmetric part of ``S``, eigenvalues descending.

    Backed by LAPACK ``syevd`` through :func:`numpy.linalg.eigh`, which is
    deterministic for identical input bits.
    """
    S = np.asarray(S, dtype=np.float64)
    _require_square(S)
    w, V = np.linalg.eigh(symmetrize(S))
    return EigResult(w[..., ::-1], V[..., ::-1])


def min_eigenvalue(S) -> float:
    S = np.asarray(S, dtype=np.float64)
    _require_square(S)
    return float(np.linalg.eigvalsh(symmetrize(S))[0])


def is_psd(S, tol: float = 0.0) -> bool:
    return min_eigenvalue(S) >= -tol


def frobenius_mse(A, B) -> float:
    """Sum of squared entrywise differences (squared Frobenius distance)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    D = A - B
    return float(np.sum(D * D))
