"""Stacked Kraus layers with an eigenvalue-clamping activation between them."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import cpmap
from .cpmap import KrausLayer
from .matcore import symmetrize

DEFAULT_EPS = 1e-4


def reeig(S, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Clamp the eigenvalues of the symmetric part of ``S`` from below at ``eps``.

    Accepts a single matrix or a stack. Inputs that are already symmetric with
    every eigenvalue ``>= eps`` are returned unchanged (as a copy).
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise ValueError(f"reeig needs square input, got shape {S.shape}")
    Ssym = symmetrize(S)
    lam, U = np.linalg.eigh(Ssym)
    low = lam < eps
    if not np.any(low):
        return Ssym.copy()
    clamped = np.maximum(lam, eps)
    return symmetrize((U * clamped[..., None, :]) @ np.swapaxes(U, -1, -2))


@dataclass(frozen=True, eq=False)
class StackedModel:
    layers: Tuple[KrausLayer, ...]
    activation_eps: float = DEFAULT_EPS

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("model needs at least one layer")
        for k in range(len(layers) - 1):
            if layers[k].q != layers[k + 1].p:
                raise ValueError(
                    f"layer {k} outputs {layers[k].q}x{layers[k].q} but layer {k + 1} "
                    f"expects {layers[k + 1].p}x{layers[k + 1].p}"
                )
        if self.activation_eps <= 0:
            raise ValueError("activation_eps must be positive")
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def p(self) -> int:
        return self.layers[0].p

    @property
    def q(self) -> int:
        return self.layers[-1].q

    @property
    def arch(self) -> List[Tuple[int, int]]:
        return [(layer.q, layer.r) for layer in self.layers]

    def params(self) -> List[np.ndarray]:
        return [layer.kraus for layer in self.layers]

    def with_params(self, params) -> "StackedModel":
        return StackedModel(tuple(KrausLayer(P) for P in params), self.activation_eps)


def forward(model: StackedModel, X) -> np.ndarray:
    """Evaluate the model on one input or a stack of inputs."""
    Z = np.asarray(X, dtype=np.float64)
    if Z.shape[-2:] != (model.p, model.p):
        raise ValueError(f"model expects {model.p}x{model.p} inputs, got {Z.shape[-2:]}")
    for layer in model.layers[:-1]:
        Z = reeig(cpmap.apply(layer, Z), model.activation_eps)
    return cpmap.apply(model.layers[-1], Z)


def forward_trace(model: StackedModel, X):
    """Forward pass keeping what backprop needs.

    Returns ``(output, inputs, pre_acts)`` where ``inputs[k]`` is the input to
    layer ``k`` and ``pre_acts[k]`` the output of layer ``k`` before the
    activation (only for non-final layers).
    """
    Z = np.asarray(X, dtype=np.float64)
    inputs, pre_acts = [], []
    for layer in model.layers[:-1]:
        inputs.append(Z)
        S = cpmap.apply(layer, Z)
        pre_acts.append(S)
        Z = reeig(S, model.activation_eps)
    inputs.append(Z)
    return cpmap.apply(model.layers[-1], Z), inputs, pre_acts


def init_model(p: int, arch, rng: np.random.Generator, init_scale="auto",
               activation_eps: float = DEFAULT_EPS) -> StackedModel:
    """Gaussian initialisation; ``"auto"`` uses std ``1/sqrt(p_k * r_k)`` per layer."""
    layers = []
    p_k = p
    for q_k, r_k in arch:
        std = 1.0 / np.sqrt(p_k * r_k) if init_scale == "auto" else float(init_scale)
        layers.append(KrausLayer(rng.normal(0.0, std, size=(r_k, q_k, p_k))))
        p_k = q_k
    return StackedModel(tuple(layers), activation_eps)
