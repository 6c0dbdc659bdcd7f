"""Confidence radii and KL-divergence tools (natural log throughout)."""

from __future__ import annotations

import math
from typing import Sequence

from .errors import DomainError

BIASED_VS_FAIR = "biased-vs-fair"
FAIR_VS_BIASED = "fair-vs-biased"


def hoeffding_radius(n: int, T: int) -> float:
    """``sqrt(2 ln T / n)``; callers with an ``n+1`` convention pass ``n+1``."""
    if n < 1:
        raise DomainError("confidence radius needs at least one sample")
    if T < 2:
        raise DomainError("horizon must be at least 2")
    return math.sqrt(2.0 * math.log(T) / n)


def _check_pair(p: Sequence[float], q: Sequence[float]) -> None:
    if len(p) != len(q):
        raise DomainError(f"length mismatch: {len(p)} vs {len(q)}")


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """KL(p, q), with ``0 ln(0/q) = 0`` and ``+inf`` on a support violation."""
    _check_pair(p, q)
    terms = []
    for px, qx in zip(p, q):
        if px <= 0.0:
            continue
        if qx <= 0.0:
            return math.inf
        terms.append(px * math.log(px / qx))
    return math.fsum(terms)


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    _check_pair(p, q)
    return 0.5 * math.fsum(abs(a - b) for a, b in zip(p, q))


def coin(eps: float) -> tuple[float, float]:
    """Two-point distribution ``(P[heads], P[tails])`` of a coin with bias ``eps``."""
    return ((1.0 + eps) / 2.0, (1.0 - eps) / 2.0)


def coin_kl(eps: float, direction: str = BIASED_VS_FAIR) -> float:
    """Closed-form KL between a fair coin and one with bias ``eps``."""
    if not 0.0 < eps < 0.5:
        raise DomainError("eps must lie in (0, 0.5)")
    if direction == FAIR_VS_BIASED:
        return -0.5 * math.log1p(-eps * eps)
    if direction == BIASED_VS_FAIR:
        return 0.5 * math.log1p(-eps * eps) + 0.5 * eps * math.log((1.0 + eps) / (1.0 - eps))
    raise DomainError(f"unknown direction {direction!r}")
