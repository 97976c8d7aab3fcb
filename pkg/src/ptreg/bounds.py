"""Capacity and generalisation-gap calculators for rank-``r`` CP maps ``M_p -> M_q``.

All logarithms are natural logarithms.
"""

import math
from dataclasses import dataclass

LOG_CONVENTION = "natural-log convention"


@dataclass(frozen=True)
class BoundInputs:
    p: int
    q: int
    r: int
    l: int
    gamma: float = 1.0
    delta: float = 0.05


def pseudo_dim_bound(p: int, q: int, r: int) -> float:
    """``pqr * ln(8 e pq / r)``."""
    if min(p, q, r) < 1:
        raise ValueError("p, q and r must be positive")
    if r > p * q:
        raise ValueError(f"rank {r} exceeds p*q={p * q}")
    return p * q * r * math.log(8 * math.e * p * q / r)


def generalization_gap(inputs: BoundInputs) -> float:
    """Excess of true over empirical risk holding with probability ``1 - delta``.

    ``gamma * sqrt(pdim * ln(l / pqr) / l) + gamma * sqrt(ln(1/delta) / (2l))``
    where ``pdim`` is :func:`pseudo_dim_bound`. ``delta = 1`` is accepted and
    zeroes the confidence term.
    """
    p, q, r, l = inputs.p, inputs.q, inputs.r, inputs.l
    pdim = pseudo_dim_bound(p, q, r)
    if not 0 < inputs.delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {inputs.delta}")
    if inputs.gamma <= 0:
        raise ValueError("gamma must be positive")
    if l <= p * q * r:
        raise ValueError(f"bound vacuous at this sample size: l={l} <= pqr={p * q * r}")
    capacity = inputs.gamma * math.sqrt(pdim * math.log(l / (p * q * r)) / l)
    confidence = inputs.gamma * math.sqrt(math.log(1 / inputs.delta) / (2 * l))
    return capacity + confidence
