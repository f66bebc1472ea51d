"""Per-slot choice of the harvest/transmit split.

A slot of unit length spends ``1 - alpha`` harvesting from the primary
transmitter and ``alpha`` transmitting, draining the harvested energy, so the
secondary transmit power is ``(1 - alpha) * g * pt / alpha`` and the rate is
``f(alpha) = alpha * log2(1 + (1 - alpha) / alpha * S)``.

Every function here accepts scalars or numpy arrays. Scalars in, floats out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelBatch, ChannelDraw, SystemParams, snr_factor

__all__ = [
    "SlotDecision",
    "SlotCandidates",
    "rate_f",
    "solve_z0",
    "solve_z0_excess",
    "alpha_unconstrained",
    "alpha_boundary",
    "outage_indicator",
    "transmit_power",
    "slot_candidates",
    "as_candidates",
    "choose_alpha",
]

_LN2 = math.log(2.0)
_REL_WIDTH = 1e-14
_MAX_BISECT = 400
_BOUNDARY_SLACK = 1e-12


def _out(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


@dataclass(frozen=True)
class SlotDecision:
    alpha: float
    indicator: int
    rate: float
    tx_power: float


def rate_f(alpha, s):
    """Achievable rate in bits/s/Hz for time share ``alpha`` and SNR factor ``s``.

    Exactly 0 at ``alpha == 1``. Raises ``ValueError`` outside ``0 < alpha <= 1``.
    """
    a = np.asarray(alpha, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(~(a > 0.0) | (a > 1.0)):
        raise ValueError("alpha must lie in (0, 1]")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        t = (1.0 - a) * s / a
        out = a * np.log1p(t) / _LN2
        huge = np.isinf(t)
        if np.any(huge):
            # log(1 + t) ~ log(t) once t overflows
            alt = a * (np.log1p(-a) + np.log(s) - np.log(a)) / _LN2
            out = np.where(huge, alt, out)
    return _out(out)


def _excess_residual(d, s):
    # z ln z - z - s + 1 written in d = z - 1 so small roots keep their digits
    return (1.0 + d) * np.log1p(d) - d - s


def solve_z0_excess(s):
    """Return ``z0 - 1`` where ``z0 > 1`` solves ``z ln z - z - s + 1 = 0``.

    Bisection on ``d = z - 1``. The residual is strictly increasing in ``d``
    (derivative ``ln z > 0``), so growing the upper end by doubling and then
    halving the bracket always converges. Iteration stops per element once the
    bracket is below 1e-14 of its upper end or cannot be split further.
    """
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0.0)) or not np.all(np.isfinite(s)):
        raise ValueError("s must be positive and finite")
    lo = np.zeros_like(s)
    hi = np.ones_like(s)
    while True:
        short = _excess_residual(hi, s) <= 0.0
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)

    flat_lo = lo.ravel().copy()
    flat_hi = hi.ravel().copy()
    flat_s = s.ravel()
    idx = np.arange(flat_s.size)
    for _ in range(_MAX_BISECT):
        l, h = flat_lo[idx], flat_hi[idx]
        mid = 0.5 * (l + h)
        live = ((h - l) > _REL_WIDTH * h) & (mid > l) & (mid < h)
        if not live.all():
            idx, l, h, mid = idx[live], l[live], h[live], mid[live]
            if idx.size == 0:
                break
        above = _excess_residual(mid, flat_s[idx]) > 0.0
        flat_hi[idx] = np.where(above, mid, h)
        flat_lo[idx] = np.where(above, l, mid)
    return _out((0.5 * (flat_lo + flat_hi)).reshape(s.shape))


def solve_z0(s):
    """Unique root ``z0 > 1`` of ``z ln z - z - s + 1 = 0`` for ``s > 0``."""
    return _out(1.0 + np.asarray(solve_z0_excess(s)))


def alpha_unconstrained(s):
    """Maximizer of ``f(., s)`` over (0, 1): ``s / (s + z0 - 1)``; 1 for ``s == 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("s must be non-negative")
    out = np.ones_like(s)
    pos = s > 0.0
    if np.any(pos):
        sp = s[pos]
        out[pos] = sp / (sp + np.asarray(solve_z0_excess(sp)))
    return _out(out)


def alpha_boundary(g, z, pt, gamma_th):
    """Smallest time share whose interference ``P * z`` stays within ``gamma_th``.

    Computes ``q / (q + gamma_th)`` with ``q = g * pt * z`` and then steps up by
    single ulps wherever rounding would leave the evaluated interference above
    the threshold. This only matters when ``q >> gamma_th``.
    """
    g = np.asarray(g, dtype=float)
    z = np.asarray(z, dtype=float)
    q = g * pt * z
    a = q / (q + gamma_th)
    for _ in range(64):
        safe = np.where(a > 0.0, a, 1.0)
        over = (a > 0.0) & ((1.0 - safe) * g * pt / safe * z > gamma_th * (1.0 + _BOUNDARY_SLACK))
        if not over.any():
            break
        a = np.where(over, np.nextafter(a, 2.0), a)
    return _out(a)


def outage_indicator(alpha, g, z, pt, gamma_th):
    """1 if the slot's interference would exceed ``gamma_th``, else 0.

    Outage iff ``alpha`` is strictly below :func:`alpha_boundary`, so the
    boundary value itself is outage free.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(~(a > 0.0) | (a > 1.0)):
        raise ValueError("alpha must lie in (0, 1]")
    return _out((a < np.asarray(alpha_boundary(g, z, pt, gamma_th))).astype(np.int64))


def transmit_power(alpha, g, pt):
    """Secondary transmit power ``(1 - alpha) * g * pt / alpha`` in watts."""
    a = np.asarray(alpha, dtype=float)
    if np.any(~(a > 0.0) | (a > 1.0)):
        raise ValueError("alpha must lie in (0, 1]")
    return _out((1.0 - a) * np.asarray(g, dtype=float) * pt / a)


@dataclass(frozen=True)
class SlotCandidates:
    """Both candidate time shares of every slot, computed once per batch.

    ``gain`` is ``rate1 - rate2`` clipped at zero on outage slots and NaN
    elsewhere: a slot keeps the outage-causing ``alpha1`` iff ``gain > lam``.
    """

    s: np.ndarray
    g: np.ndarray
    z: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    rate1: np.ndarray
    rate2: np.ndarray
    outage1: np.ndarray
    gain: np.ndarray
    pt: float

    def __len__(self) -> int:
        return self.s.shape[0]

    def keeps_alpha1(self, lam: float) -> np.ndarray:
        if not lam >= 0.0:
            raise ValueError(f"lambda must be non-negative, got {lam!r}")
        # equality goes to alpha2
        return ~self.outage1 | (self.gain > lam)


def slot_candidates(batch: ChannelBatch, params: SystemParams) -> SlotCandidates:
    s = np.atleast_1d(np.asarray(snr_factor(batch, params), dtype=float))
    g = np.atleast_1d(np.asarray(batch.g, dtype=float))
    z = np.atleast_1d(np.asarray(batch.z, dtype=float))
    a1 = np.atleast_1d(np.asarray(alpha_unconstrained(s), dtype=float))
    a2 = np.atleast_1d(np.asarray(alpha_boundary(g, z, params.pt, params.gamma_th), dtype=float))
    r1 = np.atleast_1d(np.asarray(rate_f(a1, s), dtype=float))
    has_a2 = a2 > 0.0
    r2 = np.where(has_a2, rate_f(np.where(has_a2, a2, 1.0), s), 0.0)
    outage1 = a1 < a2
    gain = np.where(outage1, np.maximum(r1 - r2, 0.0), np.nan)
    return SlotCandidates(s, g, z, a1, a2, r1, r2, outage1, gain, float(params.pt))


def as_candidates(draws, params: SystemParams) -> SlotCandidates:
    """Accept a :class:`SlotCandidates`, a :class:`ChannelBatch` or draws."""
    if isinstance(draws, SlotCandidates):
        return draws
    if isinstance(draws, ChannelDraw):
        draws = [draws]
    if not isinstance(draws, ChannelBatch):
        draws = ChannelBatch.from_draws(draws)
    return slot_candidates(draws, params)


def choose_alpha(draw: ChannelDraw, params: SystemParams, lam: float) -> SlotDecision:
    """Penalized per-slot decision.

    Keep the unconstrained maximizer when it causes no outage, or when its
    rate advantage over the boundary share strictly exceeds ``lam``; otherwise
    fall back to the boundary share.
    """
    c = slot_candidates(ChannelBatch.from_draws([draw]), params)
    if c.keeps_alpha1(lam)[0]:
        alpha, ind, rate = float(c.alpha1[0]), int(c.outage1[0]), float(c.rate1[0])
    else:
        alpha, ind, rate = float(c.alpha2[0]), 0, float(c.rate2[0])
    return SlotDecision(alpha, ind, rate, float(transmit_power(alpha, draw.g, params.pt)))
