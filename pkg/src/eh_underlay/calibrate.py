"""Training-phase calibration of the outage penalty ``lam``.

The empirical outage count is a right-continuous step function of ``lam``:
slot ``i`` contributes an outage exactly when its critical penalty
``lam_i = f(alpha1) - f(alpha2)`` is strictly larger than ``lam``. With
``K = floor(epsilon * N)`` allowed outages, the smallest feasible ``lam`` is
therefore the (K+1)-th largest critical penalty, or 0 if there are at most
``K`` outage-prone slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import ChannelDraw, SystemParams
from .timeshare import as_candidates

__all__ = [
    "CalibrationResult",
    "allowed_outages",
    "outage_fraction",
    "critical_lambda",
    "critical_lambdas",
    "calibrate_lambda",
    "calibrate_lambda_bisection",
]


@dataclass(frozen=True)
class CalibrationResult:
    lam: float
    train_outage_fraction: float
    binding: bool
    n_train: int = 0
    outage_count: int = 0


def allowed_outages(epsilon: float, n: int) -> int:
    """``floor(epsilon * n)`` on the decimal value of ``epsilon``.

    ``Fraction(str(0.29)) * 100 == 29`` whereas the binary float product
    floors to 28.
    """
    return math.floor(Fraction(repr(float(epsilon))) * n)


def outage_fraction(draws, params: SystemParams, lam: float) -> float:
    c = as_candidates(draws, params)
    if len(c) == 0:
        raise ValueError("need at least one draw")
    keep = c.keeps_alpha1(lam)
    return float(np.count_nonzero(keep & c.outage1)) / len(c)


def critical_lambdas(draws, params: SystemParams) -> np.ndarray:
    """Per-slot switching penalty; NaN for slots that never cause an outage."""
    return as_candidates(draws, params).gain.copy()


def critical_lambda(draw: ChannelDraw, params: SystemParams) -> float | None:
    """Penalty at and above which this slot switches to the boundary share."""
    value = float(critical_lambdas([draw], params)[0])
    return None if math.isnan(value) else value


def calibrate_lambda(train_draws, params: SystemParams) -> CalibrationResult:
    """Exact order-statistic calibration on the training draws."""
    c = as_candidates(train_draws, params)
    n = len(c)
    if n == 0:
        raise ValueError("training set is empty")
    k = allowed_outages(params.epsilon, n)
    crit = c.gain[c.outage1]
    if crit.size <= k:
        lam = 0.0
    else:
        # (k+1)-th largest
        lam = float(np.partition(crit, crit.size - k - 1)[crit.size - k - 1])
    count = int(np.count_nonzero(crit > lam))
    return CalibrationResult(lam, count / n, lam > 0.0, n, count)


def calibrate_lambda_bisection(train_draws, params: SystemParams, iterations: int = 200) -> CalibrationResult:
    """Reference calibrator: bisect ``lam`` on the outage count directly.

    Kept as a cross-check for :func:`calibrate_lambda`; it never looks at the
    critical penalties, only at the decision rule.
    """
    c = as_candidates(train_draws, params)
    n = len(c)
    if n == 0:
        raise ValueError("training set is empty")
    k = allowed_outages(params.epsilon, n)

    def count(lam):
        return int(np.count_nonzero(c.keeps_alpha1(lam) & c.outage1))

    if count(0.0) <= k:
        return CalibrationResult(0.0, count(0.0) / n, False, n, count(0.0))
    lo, hi = 0.0, 1.0 + float(np.max(c.rate1))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if count(mid) <= k:
            hi = mid
        else:
            lo = mid
    m = count(hi)
    return CalibrationResult(hi, m / n, hi > 0.0, n, m)
