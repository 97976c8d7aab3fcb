"""Square-loss fitting of stacked Kraus models with analytic gradients.

Gradients are derived by hand (no autodiff). :func:`finite_diff_grad` is an
independent central-difference oracle used by the tests and the ``gradcheck``
command.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import cpmap
from .cpmap import KrausLayer
from .matcore import symmetrize
from .model import DEFAULT_EPS, StackedModel, forward, forward_trace, init_model

DEGENERATE_GAP = 1e-9


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired inputs ``X`` of shape ``(n, p, p)`` and targets ``Y`` of shape ``(n, q, q)``."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        if X.ndim != 3 or X.shape[1] != X.shape[2]:
            raise ValueError(f"X must be a stack of square matrices, got {X.shape}")
        if Y.ndim != 3 or Y.shape[1] != Y.shape[2]:
            raise ValueError(f"Y must be a stack of square matrices, got {Y.shape}")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"{X.shape[0]} inputs but {Y.shape[0]} targets")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def from_pairs(cls, pairs) -> "Dataset":
        pairs = list(pairs)
        if not pairs:
            raise ValueError("empty dataset")
        return cls(np.stack([x for x, _ in pairs]), np.stack([y for _, y in pairs]))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.Y[idx])


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 16
    seed: int = 0
    init_scale: object = "auto"
    activation_eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class TrainLog:
    losses: List[float] = field(default_factory=list)
    initial_loss: float = float("nan")
    seconds: float = 0.0

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else self.initial_loss


# -- losses -----------------------------------------------------------------

def _check_mask(mask, shape):
    mask = np.asarray(mask, dtype=bool)
    try:
        mask = np.broadcast_to(mask, shape)
    except ValueError:
        raise ValueError(f"mask shape {mask.shape} does not match {shape}") from None
    if not mask.any():
        raise ValueError("mask observes no entries")
    return mask


def square_loss(Y, Yhat, mask=None) -> float:
    """Sum of squared residuals, restricted to observed entries when a mask is given."""
    Y = np.asarray(Y, dtype=np.float64)
    Yhat = np.asarray(Yhat, dtype=np.float64)
    if Y.shape != Yhat.shape:
        raise ValueError(f"shape mismatch: {Y.shape} vs {Yhat.shape}")
    D = Yhat - Y
    if mask is not None:
        D = np.where(_check_mask(mask, D.shape), D, 0.0)
    return float(np.sum(D * D))


def mean_entry_mse(Yhat, Y, masks=None) -> float:
    """Mean squared error per entry, averaged over samples (observed entries only if masked).

    This is the single reporting metric shared by every model and baseline.
    """
    Y = np.asarray(Y, dtype=np.float64)
    D = np.asarray(Yhat, dtype=np.float64) - Y
    if masks is None:
        return float(np.mean(D * D))
    m = _check_mask(masks, D.shape)
    return float(np.sum(np.where(m, D * D, 0.0)) / np.count_nonzero(m))


def dataset_mse(model: StackedModel, data: Dataset, masks=None) -> float:
    return mean_entry_mse(forward(model, data.X), data.Y, masks)


# -- gradients --------------------------------------------------------------

def _kraus_array(layer):
    return layer.kraus if isinstance(layer, KrausLayer) else np.asarray(layer, dtype=np.float64)


def grad_layer(layer, X, G) -> np.ndarray:
    """Gradient of ``<G, sum_j A_j X A_j^T>`` with respect to each ``A_j``.

    ``X`` and ``G`` may be single matrices or stacks; stacks are summed in
    sample order. Returns an array shaped like the Kraus stack ``(r, q, p)``.
    """
    K = _kraus_array(layer)
    X = np.asarray(X, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    r, q, p = K.shape
    if X.shape[-2:] != (p, p) or G.shape[-2:] != (q, q):
        raise ValueError(f"expected X {p}x{p} and G {q}x{q}, got {X.shape} and {G.shape}")
    if X.ndim == 2:
        return G @ K @ X.T + G.T @ K @ X
    Xt = np.swapaxes(X, -1, -2)
    Gt = np.swapaxes(G, -1, -2)
    out = (G[:, None] @ K[None] @ Xt[:, None]) + (Gt[:, None] @ K[None] @ X[:, None])
    return out.sum(axis=0)


def grad_reeig(S, eps: float, G) -> np.ndarray:
    """Backward rule for :func:`ptreg.model.reeig` (single matrix or stack).

    Uses the divided-difference (Daleckii-Krein) formula on the eigenbasis of
    the symmetric part of ``S``; near-degenerate pairs use the derivative of
    the clamp, 0 below ``eps`` and 1 above.
    """
    S = np.asarray(S, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise ValueError(f"grad_reeig needs square input, got shape {S.shape}")
    lam, U = np.linalg.eigh(symmetrize(S))
    Ut = np.swapaxes(U, -1, -2)
    P = Ut @ symmetrize(G) @ U
    g = np.maximum(lam, eps)
    dg = (lam >= eps).astype(np.float64)
    diff = lam[..., :, None] - lam[..., None, :]
    gdiff = g[..., :, None] - g[..., None, :]
    close = np.abs(diff) <= DEGENERATE_GAP
    Kmat = np.where(close, 0.5 * (dg[..., :, None] + dg[..., None, :]),
                    gdiff / np.where(close, 1.0, diff))
    return symmetrize(U @ (Kmat * P) @ Ut)


def residual_grad(Yhat, Y, mask=None) -> np.ndarray:
    """``d/dYhat`` of the (masked) square loss: ``2 * mask * (Yhat - Y)``."""
    R = 2.0 * (np.asarray(Yhat) - np.asarray(Y))
    if mask is not None:
        R = np.where(mask, R, 0.0)
    return R


def backprop(model: StackedModel, inputs, pre_acts, G_out) -> List[np.ndarray]:
    """Chain rule through the stack given the gradient w.r.t. the model output."""
    grads = [None] * model.depth
    G = G_out
    for k in range(model.depth - 1, -1, -1):
        layer = model.layers[k]
        grads[k] = grad_layer(layer, inputs[k], G)
        if k > 0:
            G = cpmap.adjoint_apply(layer, G)
            G = grad_reeig(pre_acts[k - 1], model.activation_eps, G)
    return grads


def grad_model(model: StackedModel, X, Y, mask=None) -> List[np.ndarray]:
    """Gradient of the summed square loss over ``X``/``Y`` (single pair or batch)."""
    out, inputs, pre_acts = forward_trace(model, X)
    return backprop(model, inputs, pre_acts, residual_grad(out, Y, mask))


def finite_diff_grad(loss_fn: Callable[[Sequence[np.ndarray]], float], params, h: float = 1e-5):
    """Central-difference gradient of ``loss_fn`` at ``params`` (a list of arrays)."""
    params = [np.array(P, dtype=np.float64) for P in params]
    grads = []
    for P in params:
        g = np.zeros_like(P)
        flat, gflat = P.reshape(-1), g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_fn(params)
            flat[idx] = orig - h
            down = loss_fn(params)
            flat[idx] = orig
            gflat[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_relative_deviation(analytic, numeric) -> float:
    """``max|a - n| / max|n|`` over all parameters (scale-free, robust to zero entries)."""
    num = max(float(np.max(np.abs(n))) for n in numeric)
    dev = max(float(np.max(np.abs(a - n))) for a, n in zip(analytic, numeric))
    return dev / num if num > 0 else dev


# -- optimizers -------------------------------------------------------------

def sgd_step(params, grads, state, cfg: TrainConfig):
    _check_aligned(params, grads)
    return [P - cfg.learning_rate * g for P, g in zip(params, grads)], state


@dataclass
class AdamState:
    t: int = 0
    m: Optional[List[np.ndarray]] = None
    v: Optional[List[np.ndarray]] = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params, grads, state: AdamState, cfg: TrainConfig):
    _check_aligned(params, grads)
    if state.m is None:
        state.m = [np.zeros_like(P) for P in params]
        state.v = [np.zeros_like(P) for P in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    new = []
    for k, (P, g) in enumerate(zip(params, grads)):
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * (g * g)
        mhat = state.m[k] / bc1
        vhat = state.v[k] / bc2
        new.append(P - cfg.learning_rate * mhat / (np.sqrt(vhat) + state.eps))
    return new, state


def _check_aligned(params, grads):
    if len(params) != len(grads) or any(P.shape != g.shape for P, g in zip(params, grads)):
        raise ValueError("parameter and gradient shapes do not align")


# -- fitting ----------------------------------------------------------------

def check_arch(p: int, q: int, arch) -> None:
    if not arch:
        raise ValueError("architecture needs at least one layer")
    if arch[-1][0] != q:
        raise ValueError(f"architecture ends at {arch[-1][0]}x{arch[-1][0]} but targets are {q}x{q}")
    for q_k, r_k in arch:
        if q_k < 1 or r_k < 1:
            raise ValueError(f"invalid layer spec ({q_k}, {r_k})")


def fit(data: Dataset, arch, cfg: TrainConfig, masks=None, init: Optional[StackedModel] = None):
    """Mini-batch minimisation of the square loss.

    Each step uses the batch-mean of the per-sample losses. The loss recorded
    per epoch is :func:`dataset_mse` on the full training set at the end of
    the epoch.

    Returns:
        (StackedModel, TrainLog)
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    arch = [tuple(a) for a in arch]
    check_arch(data.p, data.q, arch)
    if masks is not None:
        masks = np.broadcast_to(np.asarray(masks, dtype=bool), data.Y.shape)
        if not masks.any():
            raise ValueError("masks observe no entries")
    rng = np.random.default_rng(cfg.seed)
    model = init if init is not None else init_model(
        data.p, arch, rng, cfg.init_scale, cfg.activation_eps)
    step = adam_step if cfg.optimizer == "adam" else sgd_step
    state = AdamState() if cfg.optimizer == "adam" else None
    params = [np.array(P) for P in model.params()]
    eps = model.activation_eps
    log = TrainLog(initial_loss=dataset_mse(model, data, masks))
    start = time.perf_counter()
    n = len(data)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            current = _raw_model(params, eps)
            bmask = None if masks is None else masks[idx]
            grads = grad_model(current, data.X[idx], data.Y[idx], bmask)
            grads = [g / len(idx) for g in grads]
            params, state = step(params, grads, state, cfg)
        log.losses.append(dataset_mse(_raw_model(params, eps), data, masks))
    log.seconds = time.perf_counter() - start
    return model.with_params(params) if cfg.epochs else model, log


def _raw_model(params, eps) -> StackedModel:
    return StackedModel(tuple(KrausLayer(P) for P in params), eps)


def gradcheck_case(p: int, q: int, r: int, depth: int, seed, h: float = 1e-5,
                   margin: float = 0.1, eps: float = DEFAULT_EPS) -> float:
    """Max relative deviation between analytic and central-difference gradients.

    Builds a random model (hidden sides ``min(q, p_k * r)`` so hidden outputs
    are generically full rank) and rescales each non-final layer until every
    pre-activation eigenvalue exceeds ``eps + 2 * margin``, keeping the check
    away from the clamp kink.
    """
    rng = np.random.default_rng(seed)
    arch, side = [], p
    for _ in range(depth - 1):
        side = min(q, side * r)
        arch.append((side, r))
    arch.append((q, r))
    model = init_model(p, arch, rng, activation_eps=eps)
    G = rng.standard_normal((p, p))
    X = G @ G.T / p + np.eye(p)
    layers = list(model.layers)
    Z = X
    for k in range(depth - 1):
        S = cpmap.apply(layers[k], Z)
        low = float(np.linalg.eigvalsh(symmetrize(S))[0])
        target = eps + 2 * margin
        if low < target:
            layers[k] = KrausLayer(layers[k].kraus * np.sqrt(target / max(low, 1e-300)))
            S = cpmap.apply(layers[k], Z)
        Z = S
    model = StackedModel(tuple(layers), eps)
    N = rng.standard_normal((q, q))
    Y = 0.5 * (N + N.T)

    def loss(params):
        return square_loss(Y, forward(model.with_params(params), X))

    analytic = grad_model(model, X, Y)
    numeric = finite_diff_grad(loss, model.params(), h)
    return max_relative_deviation(analytic, numeric)
