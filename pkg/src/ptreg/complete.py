"""PSD matrix completion by learning a CP map from the observed blocks.

An ``n x n`` matrix with ``n = p*q`` is read as a ``p x p`` grid of ``q x q``
blocks. Block ``(i, j)`` is a training target for the input ``E_ij`` (a matrix
unit of ``M_p``). After fitting, every block is predicted as ``model(E_ij)``,
so at depth 1 the completed matrix is the Choi matrix of the learned map and
is PSD by construction.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .matcore import matrix_unit, symmetrize
from .model import StackedModel, forward
from .train import Dataset, TrainConfig, TrainLog, fit


@dataclass(frozen=True)
class BlockLayout:
    p: int
    q: int

    @property
    def n(self) -> int:
        return self.p * self.q


@dataclass(frozen=True, eq=False)
class ObservationMask:
    observed: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=bool)
        if obs.ndim != 2 or obs.shape[0] != obs.shape[1]:
            raise ValueError(f"mask must be square, got shape {obs.shape}")
        if not np.array_equal(obs, obs.T):
            raise ValueError("observation mask must be symmetric")
        if not obs.any():
            raise ValueError("no observed entries")
        object.__setattr__(self, "observed", obs)

    @property
    def n(self) -> int:
        return self.observed.shape[0]

    @classmethod
    def from_nan(cls, M) -> "ObservationMask":
        return cls(~np.isnan(np.asarray(M, dtype=np.float64)))


def completion_arch(q: int, rank: int, depth: int = 1) -> List[Tuple[int, int]]:
    """``depth`` layers of Kraus rank ``rank``; hidden layers keep side ``q``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return [(q, rank)] * depth


def unit_inputs(p: int) -> np.ndarray:
    """All ``p^2`` matrix units, ordered ``(0,0), (0,1), ..., (p-1,p-1)``."""
    return np.stack([matrix_unit(p, i, j) for i in range(p) for j in range(p)])


def _blocks(M: np.ndarray, layout: BlockLayout) -> np.ndarray:
    p, q = layout.p, layout.q
    return M.reshape(p, q, p, q).transpose(0, 2, 1, 3).reshape(p * p, q, q)


def _unblocks(B: np.ndarray, layout: BlockLayout) -> np.ndarray:
    p, q = layout.p, layout.q
    return B.reshape(p, p, q, q).transpose(0, 2, 1, 3).reshape(p * q, p * q)


def _check_layout(M: np.ndarray, layout: BlockLayout):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    if M.shape[0] != layout.n:
        raise ValueError(f"layout {layout.p}x{layout.q} needs side {layout.n}, got {M.shape[0]}")


def block_training_set(M_obs, layout: BlockLayout, mask: Optional[ObservationMask] = None):
    """Training pairs ``(E_ij, block_ij)`` for every block with an observed entry.

    Missing entries are zero-filled in the targets and switched off in the
    returned per-sample masks.

    Returns:
        (Dataset, masks, block_index) with masks of shape ``(k, q, q)`` and
        block_index a list of zero-based ``(i, j)``.
    """
    M_obs = np.asarray(M_obs, dtype=np.float64)
    _check_layout(M_obs, layout)
    if mask is None:
        mask = ObservationMask.from_nan(M_obs)
    if mask.n != layout.n:
        raise ValueError(f"mask side {mask.n} does not match matrix side {layout.n}")
    filled = np.where(mask.observed, np.nan_to_num(M_obs), 0.0)
    Yb = _blocks(filled, layout)
    Mb = _blocks(mask.observed, layout)
    keep = np.flatnonzero(Mb.reshape(len(Mb), -1).any(axis=1))
    p = layout.p
    index = [(int(k // p), int(k % p)) for k in keep]
    X = unit_inputs(p)[keep]
    return Dataset(X, Yb[keep]), Mb[keep], index


def reconstruct(model: StackedModel, layout: BlockLayout) -> np.ndarray:
    """Matrix whose ``(i, j)`` block is ``model(E_ij)``; symmetrised for depth 1."""
    M = _unblocks(forward(model, unit_inputs(layout.p)), layout)
    return symmetrize(M) if model.depth == 1 else M


def complete_matrix(M_obs, layout: BlockLayout, arch, cfg: TrainConfig,
                    mask: Optional[ObservationMask] = None):
    """Fit a stacked Kraus model on the observed blocks and predict the whole matrix.

    Returns:
        (M_hat, model, log)
    """
    data, masks, _ = block_training_set(M_obs, layout, mask)
    model, log = fit(data, arch, cfg, masks=masks)
    return reconstruct(model, layout), model, log


def completion_error(M_true, M_hat, mask) -> float:
    """MSE over the missing entries (``mask`` False), or over all entries if none are missing."""
    M_true = np.asarray(M_true, dtype=np.float64)
    M_hat = np.asarray(M_hat, dtype=np.float64)
    if M_true.shape != M_hat.shape:
        raise ValueError(f"shape mismatch: {M_true.shape} vs {M_hat.shape}")
    observed = mask.observed if isinstance(mask, ObservationMask) else np.asarray(mask, dtype=bool)
    D = (M_true - M_hat)[~observed] if not observed.all() else (M_true - M_hat).ravel()
    return float(np.mean(D * D))


# -- masks ------------------------------------------------------------------

def block_mask(layout: BlockLayout, missing_blocks: Sequence[Tuple[int, int]]) -> ObservationMask:
    """Mask hiding the listed blocks and their transposes."""
    obs = np.ones((layout.n, layout.n), dtype=bool)
    q = layout.q
    for i, j in missing_blocks:
        obs[i * q:(i + 1) * q, j * q:(j + 1) * q] = False
        obs[j * q:(j + 1) * q, i * q:(i + 1) * q] = False
    return ObservationMask(obs)


def random_block_mask(layout: BlockLayout, offdiag_pairs: int, diag_blocks: int, seed) -> ObservationMask:
    """Hide ``offdiag_pairs`` random off-diagonal block pairs and ``diag_blocks`` diagonal blocks."""
    rng = np.random.default_rng(seed)
    p = layout.p
    upper = [(i, j) for i in range(p) for j in range(i + 1, p)]
    pairs = [upper[k] for k in rng.choice(len(upper), size=offdiag_pairs, replace=False)]
    diag = [(int(i), int(i)) for i in rng.choice(p, size=diag_blocks, replace=False)]
    return block_mask(layout, pairs + diag)


def random_entry_mask(n: int, frac_missing: float, seed) -> ObservationMask:
    """Hide each upper-triangular entry (diagonal included) independently, mirrored below."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) >= frac_missing)
    obs = upper | upper.T
    if not obs.any():
        obs[0, 0] = True
    return ObservationMask(obs)


# -- hyperparameter search ----------------------------------------------------

def holdout_split(mask: ObservationMask, fraction: float, seed):
    """Split observed entries (as symmetric pairs) into fit and holdout masks."""
    rng = np.random.default_rng(seed)
    iu = np.argwhere(np.triu(mask.observed))
    chosen = rng.random(len(iu)) < fraction
    hold = np.zeros_like(mask.observed)
    hold[iu[chosen, 0], iu[chosen, 1]] = True
    hold = hold | hold.T
    return ObservationMask(mask.observed & ~hold), hold


def divisor_layouts(n: int) -> List[BlockLayout]:
    return [BlockLayout(n // q, q) for q in range(1, n + 1) if n % q == 0]


def grid_search(M_obs, candidates, cfg: TrainConfig, depth: int = 1,
                holdout: float = 0.2, seed: int = 0, mask: Optional[ObservationMask] = None):
    """Score ``(layout, rank)`` candidates by MSE on a held-out fifth of the observed entries.

    Returns:
        (best_layout, best_rank, rows) with rows of ``(p, q, rank, holdout_mse)``.
    """
    M_obs = np.asarray(M_obs, dtype=np.float64)
    if mask is None:
        mask = ObservationMask.from_nan(M_obs)
    fit_mask, hold = holdout_split(mask, holdout, seed)
    rows = []
    for layout, rank in candidates:
        M_hat, _, _ = complete_matrix(M_obs, layout, completion_arch(layout.q, rank, depth),
                                      cfg, fit_mask)
        D = (M_hat - np.nan_to_num(M_obs))[hold]
        rows.append((layout.p, layout.q, rank, float(np.mean(D * D)) if D.size else float("nan")))
    best = min(rows, key=lambda row: (np.inf if np.isnan(row[3]) else row[3]))
    return BlockLayout(best[0], best[1]), best[2], rows
