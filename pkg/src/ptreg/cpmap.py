"""Completely positive maps stored as Kraus operators.

A :class:`KrausLayer` holds ``r`` operators ``A_j`` of shape ``(q, p)`` and acts
as ``X -> sum_j A_j X A_j^T``. The Choi matrix of such a map is the ``pq x pq``
block matrix whose ``(i, j)`` block (``q x q``) is the image of the matrix unit
``E_ij``. Its entries are

    C[i*q + s, j*q + t] = sum_k A_k[s, i] * A_k[t, j]

so the Choi matrix equals ``sum_k v_k v_k^T`` with ``v_k = A_k.T.ravel()``, i.e.
``v_k`` lists the columns of ``A_k`` one after another. :func:`kraus_from_choi`
inverts this convention; the transposed convention would give the adjoint map.
"""

from dataclasses import dataclass

import numpy as np

from .matcore import BlockSpec, is_psd, matrix_unit, partial_trace, sym_eig


class NotCompletelyPositiveError(ValueError):
    """Raised when a Choi matrix has an eigenvalue below ``-tol``."""

    def __init__(self, eigenvalue: float, tol: float):
        self.eigenvalue = eigenvalue
        super().__init__(
            f"not completely positive: Choi matrix has eigenvalue {eigenvalue:.6g} < -{tol:g}"
        )


@dataclass(frozen=True, eq=False)
class KrausLayer:
    """One CP map ``M_p -> M_q``; ``kraus`` has shape ``(r, q, p)``."""

    kraus: np.ndarray

    def __post_init__(self):
        K = np.array(self.kraus, dtype=np.float64)
        if K.ndim != 3 or K.shape[0] < 1:
            raise ValueError(f"kraus must have shape (r, q, p) with r >= 1, got {K.shape}")
        # r > p*q is accepted: redundant, but the map's Kraus rank is still <= p*q
        K.setflags(write=False)
        object.__setattr__(self, "kraus", K)

    @classmethod
    def from_list(cls, ops) -> "KrausLayer":
        return cls(np.stack([np.asarray(A, dtype=np.float64) for A in ops]))

    @property
    def r(self) -> int:
        return self.kraus.shape[0]

    @property
    def q(self) -> int:
        return self.kraus.shape[1]

    @property
    def p(self) -> int:
        return self.kraus.shape[2]


@dataclass(frozen=True)
class ChoiMatrix:
    p: int
    q: int
    mat: np.ndarray

    def __post_init__(self):
        if self.mat.shape != (self.p * self.q, self.p * self.q):
            raise ValueError(f"Choi matrix for p={self.p}, q={self.q} must be "
                             f"{self.p * self.q}x{self.p * self.q}, got {self.mat.shape}")

    def block(self, i: int, j: int) -> np.ndarray:
        q = self.q
        return self.mat[i * q:(i + 1) * q, j * q:(j + 1) * q]


@dataclass(frozen=True)
class StinespringForm:
    """``X -> tr_m(A X A^T)`` with ``A`` of shape ``(q*m, p)``."""

    p: int
    q: int
    m: int
    A: np.ndarray


def apply(layer: KrausLayer, X) -> np.ndarray:
    """``sum_j A_j X A_j^T`` for one ``(p, p)`` input or a stack ``(n, p, p)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-2:] != (layer.p, layer.p):
        raise ValueError(f"input must be {layer.p}x{layer.p}, got {X.shape[-2:]}")
    K = layer.kraus
    if X.ndim == 2:
        return np.sum(K @ X @ K.transpose(0, 2, 1), axis=0)
    AX = K[None] @ X[:, None]  # (n, r, q, p)
    return np.sum(AX @ K.transpose(0, 2, 1)[None], axis=1)


def adjoint_apply(layer: KrausLayer, G) -> np.ndarray:
    """``sum_j A_j^T G A_j``: pulls a ``(q, q)`` gradient back to ``(p, p)``."""
    G = np.asarray(G, dtype=np.float64)
    K = layer.kraus
    Kt = K.transpose(0, 2, 1)
    if G.ndim == 2:
        return np.sum(Kt @ G @ K, axis=0)
    return np.sum(Kt[None] @ G[:, None] @ K[None], axis=1)


def choi(layer: KrausLayer) -> ChoiMatrix:
    V = layer.kraus.transpose(0, 2, 1).reshape(layer.r, -1)
    C = V.T @ V
    return ChoiMatrix(layer.p, layer.q, C)


def choi_by_definition(layer: KrausLayer) -> ChoiMatrix:
    """Choi matrix assembled block by block from images of matrix units."""
    p, q = layer.p, layer.q
    C = np.zeros((p * q, p * q))
    for i in range(p):
        for j in range(p):
            C[i * q:(i + 1) * q, j * q:(j + 1) * q] = apply(layer, matrix_unit(p, i, j))
    return ChoiMatrix(p, q, C)


def kraus_from_choi(C: ChoiMatrix, tol: float = 1e-9) -> KrausLayer:
    """Factor a PSD Choi matrix into Kraus operators, one per eigenvalue above ``tol``.

    Raises:
        NotCompletelyPositiveError: the smallest eigenvalue is below ``-tol``.
    """
    eig = sym_eig(C.mat)
    lam, V = eig.eigenvalues, eig.eigenvectors
    if lam[-1] < -tol:
        raise NotCompletelyPositiveError(float(lam[-1]), tol)
    keep = lam > tol
    if not np.any(keep):
        return KrausLayer(np.zeros((1, C.q, C.p)))
    vecs = V[:, keep] * np.sqrt(lam[keep])
    ops = vecs.T.reshape(-1, C.p, C.q).transpose(0, 2, 1)
    return KrausLayer(ops)


def to_stinespring(layer: KrausLayer) -> StinespringForm:
    # row s*m + u of A is row s of A_u
    A = layer.kraus.transpose(1, 0, 2).reshape(layer.q * layer.r, layer.p)
    return StinespringForm(layer.p, layer.q, layer.r, A)


def apply_stinespring(sf: StinespringForm, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-2:] != (sf.p, sf.p):
        raise ValueError(f"input must be {sf.p}x{sf.p}, got {X.shape[-2:]}")
    return partial_trace(sf.A @ X @ sf.A.T, BlockSpec(sf.q, sf.m))


def kraus_rank(layer: KrausLayer, tol: float = 1e-9) -> int:
    """Minimal number of Kraus operators: Choi eigenvalues above ``tol * max``."""
    lam = sym_eig(choi(layer).mat).eigenvalues
    top = lam[0]
    if top <= 0:
        return 0
    return int(np.sum(lam > tol * top))


def is_completely_positive(C: ChoiMatrix, tol: float = 1e-10) -> bool:
    return is_psd(C.mat, tol)
