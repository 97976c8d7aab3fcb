"""Seeded synthetic data: random CP maps, PSD inputs, regression sets, completion targets."""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cpmap import KrausLayer, choi
from .model import StackedModel, forward
from .train import Dataset


def random_kraus_map(p: int, q: int, r: int, seed, scale: Optional[float] = None) -> KrausLayer:
    """``r`` Kraus operators with IID N(0, scale^2) entries; default scale ``1/sqrt(p*r)``."""
    if r > p * q:
        warnings.warn(f"rank {r} exceeds p*q={p * q}; the map's Kraus rank will be at most {p * q}",
                      stacklevel=2)
    if scale is None:
        scale = 1.0 / np.sqrt(p * r)
    rng = np.random.default_rng(seed)
    return KrausLayer(scale * rng.standard_normal((r, q, p)))


def _normalized_gram(rng, p: int, size=None) -> np.ndarray:
    shape = (p, p) if size is None else (size, p, p)
    G = rng.standard_normal(shape)
    return (G @ np.swapaxes(G, -1, -2)) / p


def random_psd(p: int, seed) -> np.ndarray:
    """``G G^T / p`` with standard Gaussian ``G``; diagonal entries have mean 1."""
    return _normalized_gram(np.random.default_rng(seed), p)


@dataclass(frozen=True, eq=False)
class SyntheticTask:
    """Regression task ``Y = true_map(X) + noise``.

    With ``cross_map`` set, targets come from the two-factor form
    ``sum_j A_j X B_j^T`` instead (``B_j`` from ``cross_map``); the learner stays CP.
    """

    true_map: StackedModel
    noise_sigma: float = 0.0
    seed: int = 0
    input_law: str = "psd"
    cross_map: Optional[KrausLayer] = None

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.input_law not in ("psd", "gaussian"):
            raise ValueError(f"unknown input law {self.input_law!r}")


def synth_dataset(task: SyntheticTask, n: int) -> Dataset:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(task.seed)
    p = task.true_map.p
    if task.input_law == "psd":
        X = _normalized_gram(rng, p, n)
    else:
        X = rng.standard_normal((n, p, p))
    if task.cross_map is None:
        Y = forward(task.true_map, X)
    else:
        A = task.true_map.layers[0].kraus
        B = task.cross_map.kraus
        Y = np.sum(A[None] @ X[:, None] @ B.transpose(0, 2, 1)[None], axis=1)
    if task.noise_sigma > 0:
        q = Y.shape[-1]
        N = rng.standard_normal((n, q, q))
        Y = Y + task.noise_sigma * 0.5 * (N + N.transpose(0, 2, 1))
    return Dataset(X, Y)


def planted_choi_target(p: int, q: int, r: int, seed) -> np.ndarray:
    """Choi matrix of a random rank-``r`` map: a ``pq x pq`` PSD matrix of rank ``<= r``."""
    return choi(random_kraus_map(p, q, r, seed)).mat
