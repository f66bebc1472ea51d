"""Optimal harvest/transmit time sharing for an underlay cognitive radio link
powered by RF energy harvested from the primary transmitter."""

from .calibrate import CalibrationResult, calibrate_lambda, critical_lambda, outage_fraction
from .channel import (
    ChannelBatch,
    ChannelDraw,
    SlotStream,
    SystemParams,
    db_to_linear,
    dbm_to_watts,
    draw_slot,
    draw_slots,
    snr_factor,
)
from .montecarlo import (
    FixedAlpha,
    OptimalTimeShare,
    RunMetrics,
    ScenarioResult,
    Unconstrained,
    decide,
    run,
    run_scenario,
)
from .timeshare import (
    SlotDecision,
    alpha_boundary,
    alpha_unconstrained,
    choose_alpha,
    outage_indicator,
    rate_f,
    solve_z0,
    transmit_power,
)

__version__ = "0.1.0"
