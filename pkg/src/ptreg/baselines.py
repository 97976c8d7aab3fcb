"""Comparison regressors: entrywise PSD trace regression, OLS and reduced-rank OLS.

All predictors expose ``predict(X)`` on a stack of inputs and are scored with
:func:`ptreg.train.mean_entry_mse`, the same metric used for partial trace
regression.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cpmap import KrausLayer
from .model import StackedModel, forward
from .train import AdamState, Dataset, TrainConfig, TrainLog, adam_step, fit, sgd_step


@dataclass(frozen=True, eq=False)
class TraceRegressionModel:
    """``q x q`` grid of independent scalar trace regressions.

    Entry ``(s, t)`` predicts ``sum_j a_j^T X a_j`` with its own ``r`` vectors,
    i.e. ``tr(B_st X)`` for the PSD matrix ``B_st = sum_j a_j a_j^T``.
    ``vectors`` has shape ``(q, q, r, p)``.
    """

    vectors: np.ndarray

    @property
    def q(self) -> int:
        return self.vectors.shape[0]

    @property
    def p(self) -> int:
        return self.vectors.shape[-1]

    def entry_model(self, s: int, t: int) -> StackedModel:
        """Entry ``(s, t)`` as a one-layer ``M_p -> M_1`` model."""
        return StackedModel((KrausLayer(self.vectors[s, t][:, None, :]),))

    def regression_matrices(self) -> np.ndarray:
        return np.swapaxes(self.vectors, -1, -2) @ self.vectors

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        q = self.q
        flat = X.reshape(-1, self.p * self.p) @ self.regression_matrices().reshape(q * q, -1).T
        return flat.reshape(X.shape[:-2] + (q, q))


def _tr_grad(V, X, Y):
    # loss = sum_b sum_st (tr(B_st X_b) - Y_bst)^2 with B_st = V_st^T V_st
    b, q = len(X), V.shape[0]
    B = np.swapaxes(V, -1, -2) @ V
    R = (X.reshape(b, -1) @ B.reshape(q * q, -1).T).reshape(b, q, q) - Y
    XXt = (X + np.swapaxes(X, -1, -2)).reshape(b, -1)
    M = (R.reshape(b, -1).T @ XXt).reshape(B.shape)
    return 2.0 * (V @ np.swapaxes(M, -1, -2))


def fit_trace_regression(data: Dataset, r: int, cfg: TrainConfig):
    """Fit one PSD trace regression of rank ``r`` per output entry.

    For ``q == 1`` this is exactly :func:`ptreg.train.fit` with architecture
    ``[(1, r)]`` and the result is a :class:`StackedModel`. For ``q > 1`` the
    ``q^2`` problems are optimised side by side: they share the shuffling
    sequence, and since both the loss and Adam's update are separable across
    entries, each entry follows the same trajectory as an independent run.

    Returns:
        (model, TrainLog) where model is a StackedModel (q == 1) or a
        TraceRegressionModel.
    """
    if data.q == 1:
        return fit(data, [(1, r)], cfg)
    rng = np.random.default_rng(cfg.seed)
    q, p = data.q, data.p
    std = 1.0 / np.sqrt(p * r) if cfg.init_scale == "auto" else float(cfg.init_scale)
    V = rng.normal(0.0, std, size=(q, q, r, p))
    step = adam_step if cfg.optimizer == "adam" else sgd_step
    state = AdamState() if cfg.optimizer == "adam" else None
    params = [V]

    def score(V):
        D = TraceRegressionModel(V).predict(data.X) - data.Y
        return float(np.mean(D * D))

    log = TrainLog(initial_loss=score(V))
    start = time.perf_counter()
    n = len(data)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            g = _tr_grad(params[0], data.X[idx], data.Y[idx]) / len(idx)
            params, state = step(params, [g], state, cfg)
        log.losses.append(score(params[0]))
    log.seconds = time.perf_counter() - start
    return TraceRegressionModel(params[0]), log


@dataclass(frozen=True, eq=False)
class LinearMapCoeffs:
    """``vec(Y) = B vec(X) + intercept`` with row-major vectorisation; ``B`` is ``q^2 x p^2``."""

    B: np.ndarray
    p: int
    q: int
    intercept: Optional[np.ndarray] = None

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        y = X.reshape(n, -1) @ self.B.T
        if self.intercept is not None:
            y = y + self.intercept
        return y.reshape(n, self.q, self.q)


def _design(data: Dataset):
    n = len(data)
    return data.X.reshape(n, -1), data.Y.reshape(n, -1)


def fit_multivariate_ls(data: Dataset) -> LinearMapCoeffs:
    """Minimum-norm least squares on vectorised inputs and outputs."""
    Xd, Yd = _design(data)
    W, *_ = np.linalg.lstsq(Xd, Yd, rcond=None)
    return LinearMapCoeffs(W.T, data.p, data.q)


def fit_reduced_rank(data: Dataset, k: int) -> LinearMapCoeffs:
    """OLS coefficients truncated to their top-``k`` singular triplets."""
    limit = min(data.p ** 2, data.q ** 2)
    if not 1 <= k <= limit:
        raise ValueError(f"rank k must lie in [1, {limit}], got {k}")
    B = fit_multivariate_ls(data).B
    if k == limit:
        return LinearMapCoeffs(B, data.p, data.q)
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    return LinearMapCoeffs((U[:, :k] * s[:k]) @ Vt[:k], data.p, data.q)


def predict(model, X) -> np.ndarray:
    """Uniform prediction over every model type in the package."""
    if isinstance(model, StackedModel):
        return forward(model, X)
    return model.predict(X)
