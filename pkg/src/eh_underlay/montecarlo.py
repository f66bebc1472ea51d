"""Monte Carlo evaluation of time-sharing policies over block-fading slots.

Slots are processed in fixed chunks that may run on a thread pool. Per-slot
results depend only on the slot index, and metrics are reduced once over the
full index-ordered arrays, so the worker count never changes a single bit of
the output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .calibrate import CalibrationResult, calibrate_lambda
from .channel import (
    EVAL_STREAM,
    TRAIN_STREAM,
    ChannelBatch,
    ChannelDraw,
    SlotStream,
    SystemParams,
    draw_slots,
    watts_to_dbm,
)
from .timeshare import SlotCandidates, SlotDecision, as_candidates, rate_f, slot_candidates

__all__ = [
    "OptimalTimeShare",
    "FixedAlpha",
    "Unconstrained",
    "Policy",
    "SlotArrays",
    "SlotRecord",
    "RunMetrics",
    "ScenarioResult",
    "decide",
    "decide_batch",
    "aggregate",
    "run",
    "run_scenario",
    "stream_candidates",
]

CHUNK = 1 << 15


@dataclass(frozen=True)
class OptimalTimeShare:
    lam: float = 0.0
    name = "optimal"

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be non-negative, got {self.lam!r}")


@dataclass(frozen=True)
class FixedAlpha:
    alpha: float = 0.5
    name = "fixed"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"fixed alpha must lie strictly inside (0, 1), got {self.alpha!r}")


@dataclass(frozen=True)
class Unconstrained:
    name = "unconstrained"


Policy = Union[OptimalTimeShare, FixedAlpha, Unconstrained]


@dataclass(frozen=True)
class SlotArrays:
    """Per-slot decisions of one policy, indexed like the input draws."""

    alpha: np.ndarray
    indicator: np.ndarray
    rate: np.ndarray
    tx_power: np.ndarray

    def __getitem__(self, i: int) -> SlotDecision:
        return SlotDecision(float(self.alpha[i]), int(self.indicator[i]), float(self.rate[i]), float(self.tx_power[i]))

    def __len__(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True)
class SlotRecord:
    slot_index: int
    draw: ChannelDraw
    decision: SlotDecision


@dataclass(frozen=True)
class RunMetrics:
    avg_rate: float
    p_he: float
    outage_fraction: float
    m_slots: int
    trace: tuple[SlotRecord, ...] = field(default=(), compare=False, repr=False)

    @property
    def p_he_dbm(self) -> float:
        return float(watts_to_dbm(self.p_he)) if self.p_he > 0 else float("-inf")


@dataclass(frozen=True)
class ScenarioResult:
    calibration: CalibrationResult
    optimal: RunMetrics
    fixed: RunMetrics
    unconstrained: RunMetrics

    @property
    def metrics(self) -> dict[str, RunMetrics]:
        return {"optimal": self.optimal, "fixed": self.fixed, "unconstrained": self.unconstrained}


def _tx_power(alpha, g, pt):
    return (1.0 - alpha) * g * pt / alpha


def decide_batch(policy: Policy, cands: SlotCandidates) -> SlotArrays:
    if isinstance(policy, FixedAlpha):
        a = np.full(len(cands), policy.alpha)
        rate = np.asarray(rate_f(a, cands.s), dtype=float)
        ind = (a < cands.alpha2).astype(np.int64)
        return SlotArrays(a, ind, rate, _tx_power(a, cands.g, cands.pt))
    if isinstance(policy, Unconstrained):
        keep = np.ones(len(cands), dtype=bool)
    elif isinstance(policy, OptimalTimeShare):
        keep = cands.keeps_alpha1(policy.lam)
    else:
        raise TypeError(f"unknown policy {policy!r}")
    a = np.where(keep, cands.alpha1, cands.alpha2)
    rate = np.where(keep, cands.rate1, cands.rate2)
    ind = (keep & cands.outage1).astype(np.int64)
    return SlotArrays(a, ind, rate, _tx_power(a, cands.g, cands.pt))


def decide(policy: Policy, draw: ChannelDraw, params: SystemParams) -> SlotDecision:
    return decide_batch(policy, as_candidates([draw], params))[0]


def aggregate(slots: SlotArrays) -> RunMetrics:
    """Arithmetic means over slots, summed pairwise in index order."""
    m = len(slots)
    if m == 0:
        raise ValueError("cannot aggregate an empty run")
    return RunMetrics(
        avg_rate=float(np.sum(slots.rate) / m),
        p_he=float(np.sum(slots.tx_power) / m),
        outage_fraction=float(np.count_nonzero(slots.indicator)) / m,
        m_slots=m,
    )


def _chunked(fn, n: int, workers: int):
    bounds = [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]
    if workers <= 1 or len(bounds) <= 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def _concat_candidates(parts: list[SlotCandidates]) -> SlotCandidates:
    if len(parts) == 1:
        return parts[0]
    names = ("s", "g", "z", "alpha1", "alpha2", "rate1", "rate2", "outage1", "gain")
    cols = {k: np.concatenate([getattr(p, k) for p in parts]) for k in names}
    return SlotCandidates(pt=parts[0].pt, **cols)


def stream_candidates(stream: SlotStream, params: SystemParams, n: int, workers: int = 1):
    """Draw slots ``0 .. n-1`` of ``stream`` and precompute both candidate shares."""
    def work(lo, hi):
        batch = draw_slots(stream, params, lo, hi)
        return batch, slot_candidates(batch, params)

    parts = _chunked(work, n, workers)
    batch = ChannelBatch.concat([b for b, _ in parts])
    return batch, _concat_candidates([c for _, c in parts])


def _with_trace(metrics: RunMetrics, batch: ChannelBatch, slots: SlotArrays, trace: int) -> RunMetrics:
    if trace <= 0:
        return metrics
    n = min(trace, len(slots))
    records = tuple(SlotRecord(batch.start + i, batch[i], slots[i]) for i in range(n))
    return RunMetrics(metrics.avg_rate, metrics.p_he, metrics.outage_fraction, metrics.m_slots, records)


def _evaluate(policy: Policy, batch: ChannelBatch, cands: SlotCandidates, trace: int) -> RunMetrics:
    slots = decide_batch(policy, cands)
    return _with_trace(aggregate(slots), batch, slots, trace)


def run(policy: Policy, params: SystemParams, *, draws: ChannelBatch | None = None,
        trace: int = 0, workers: int = 1) -> RunMetrics:
    """Evaluate ``policy`` on ``params.m_slots`` evaluation slots, or on ``draws`` if given."""
    if draws is None:
        batch, cands = stream_candidates(SlotStream(params.seed, EVAL_STREAM), params, params.m_slots, workers)
    else:
        batch = draws if isinstance(draws, ChannelBatch) else ChannelBatch.from_draws(draws)
        cands = slot_candidates(batch, params)
    return _evaluate(policy, batch, cands, trace)


def run_scenario(params: SystemParams, *, in_sample: bool = False, trace: int = 0,
                 workers: int = 1, fixed_alpha: float = 0.5) -> ScenarioResult:
    """Train ``lam`` then run the optimal, fixed and unconstrained policies.

    By default ``lam`` is fitted on ``m_train`` slots from a separate training
    stream; ``in_sample=True`` fits it on the evaluation slots themselves.
    All three policies see the same evaluation draws.
    """
    batch, cands = stream_candidates(SlotStream(params.seed, EVAL_STREAM), params, params.m_slots, workers)
    if in_sample:
        train = cands
    else:
        _, train = stream_candidates(SlotStream(params.seed, TRAIN_STREAM), params, params.m_train, workers)
    cal = calibrate_lambda(train, params)
    return ScenarioResult(
        calibration=cal,
        optimal=_evaluate(OptimalTimeShare(cal.lam), batch, cands, trace),
        fixed=_evaluate(FixedAlpha(fixed_alpha), batch, cands, trace),
        unconstrained=_evaluate(Unconstrained(), batch, cands, trace),
    )
