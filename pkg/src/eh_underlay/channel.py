"""Block-fading channel draws and unit conversions.

All quantities inside the package are linear: watts for powers and plain
ratios for channel power gains. dB/dBm/dBW only show up at the CLI and CSV
boundary.

Randomness is counter based. Slot ``i`` of a stream consumes exactly one
Philox-4x64 block (four 64-bit words, one per link), keyed by the root seed
and a stream id. A slot's gains are therefore a pure function of
``(seed, stream_id, i)`` and any chunking or threading of the slot range
reproduces the same draws bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "SystemParams",
    "ChannelDraw",
    "ChannelBatch",
    "SlotStream",
    "EVAL_STREAM",
    "TRAIN_STREAM",
    "db_to_linear",
    "linear_to_db",
    "dbm_to_watts",
    "watts_to_dbm",
    "dbw_to_watts",
    "watts_to_dbw",
    "gains_from_uniforms",
    "draw_slot",
    "draw_slots",
    "snr_factor",
]

EVAL_STREAM = 0
TRAIN_STREAM = 1

_U53 = 1.0 / 9007199254740992.0  # 2**-53


def db_to_linear(value_db):
    """Convert a power ratio in dB to linear scale."""
    out = 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(value):
    out = 10.0 * np.log10(np.asarray(value, dtype=float))
    return float(out) if out.ndim == 0 else out


def dbm_to_watts(value_dbm):
    return db_to_linear(value_dbm - 30.0)


def watts_to_dbm(value_w):
    return linear_to_db(value_w) + 30.0


def dbw_to_watts(value_dbw):
    return db_to_linear(value_dbw)


def watts_to_dbw(value_w):
    return linear_to_db(value_w)


@dataclass(frozen=True)
class SystemParams:
    """Physical and statistical parameters of one scenario.

    Defaults follow the simulation setup used for the figures: 30 dBW primary
    transmitter, -90 dBm noise and interference threshold, 1 % outage budget
    and 10^4 slots. ``m_train`` defaults to ``m_slots``.
    """

    pt: float = 1000.0
    noise: float = 1e-12
    gamma_th: float = 1e-12
    epsilon: float = 0.01
    mu_x: float = 1e-3
    mu_y: float = 1e-7
    mu_g: float = 1e-6
    mu_z: float = 1e-9
    m_slots: int = 10_000
    m_train: int | None = None
    seed: int = 42

    def __post_init__(self):
        if self.m_train is None:
            object.__setattr__(self, "m_train", self.m_slots)
        for name in ("pt", "noise", "gamma_th", "mu_x", "mu_y", "mu_g", "mu_z"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if int(self.m_slots) != self.m_slots or self.m_slots < 1:
            raise ValueError(f"m_slots must be a positive integer, got {self.m_slots!r}")
        if int(self.m_train) != self.m_train or self.m_train < 1:
            raise ValueError(f"m_train must be a positive integer, got {self.m_train!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def means(self) -> tuple[float, float, float, float]:
        return (self.mu_x, self.mu_y, self.mu_g, self.mu_z)


@dataclass(frozen=True)
class ChannelDraw:
    """Fading power gains of one slot.

    x: secondary Tx -> secondary Rx, y: primary Tx -> secondary Rx,
    g: primary Tx -> harvester, z: secondary Tx -> primary Rx.
    """

    x: float
    y: float
    g: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "g", "z"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"gain {name} must be finite and non-negative, got {value!r}")


@dataclass(frozen=True)
class ChannelBatch:
    """Column-wise gains for a contiguous run of slots starting at ``start``."""

    x: np.ndarray
    y: np.ndarray
    g: np.ndarray
    z: np.ndarray
    start: int = 0

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, i: int) -> ChannelDraw:
        return ChannelDraw(float(self.x[i]), float(self.y[i]), float(self.g[i]), float(self.z[i]))

    def __iter__(self) -> Iterator[ChannelDraw]:
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_draws(cls, draws, start: int = 0) -> "ChannelBatch":
        draws = list(draws)
        cols = np.array([[d.x, d.y, d.g, d.z] for d in draws], dtype=float).reshape(-1, 4)
        return cls(cols[:, 0].copy(), cols[:, 1].copy(), cols[:, 2].copy(), cols[:, 3].copy(), start)

    @classmethod
    def concat(cls, batches) -> "ChannelBatch":
        batches = list(batches)
        return cls(
            np.concatenate([b.x for b in batches]),
            np.concatenate([b.y for b in batches]),
            np.concatenate([b.g for b in batches]),
            np.concatenate([b.z for b in batches]),
            batches[0].start if batches else 0,
        )

    def slice(self, lo: int, hi: int) -> "ChannelBatch":
        return ChannelBatch(self.x[lo:hi], self.y[lo:hi], self.g[lo:hi], self.z[lo:hi], self.start + lo)


@dataclass(frozen=True)
class SlotStream:
    """Counter-based random source addressed by slot index."""

    seed: int
    stream_id: int = EVAL_STREAM
    key: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence([int(self.seed), int(self.stream_id)])
        object.__setattr__(self, "key", ss.generate_state(2, dtype=np.uint64))

    def uniforms(self, start: int, stop: int) -> np.ndarray:
        """Uniforms in [0, 1) of shape ``(stop - start, 4)``; row i belongs to slot ``start + i``."""
        n = stop - start
        if n < 0 or start < 0:
            raise ValueError(f"invalid slot range [{start}, {stop})")
        raw = np.random.Philox(key=self.key, counter=start).random_raw(4 * n)
        return (raw >> np.uint64(11)).astype(np.float64).reshape(n, 4) * _U53


def gains_from_uniforms(u, means):
    """Exponential inverse CDF, ``-mean * ln(1 - u)``, applied columnwise."""
    return -np.asarray(means, dtype=float) * np.log1p(-np.asarray(u, dtype=float))


def draw_slots(stream: SlotStream, params: SystemParams, start: int, stop: int) -> ChannelBatch:
    """Rayleigh block-fading gains for slots ``start .. stop-1``."""
    gains = gains_from_uniforms(stream.uniforms(start, stop), params.means)
    return ChannelBatch(
        np.ascontiguousarray(gains[:, 0]),
        np.ascontiguousarray(gains[:, 1]),
        np.ascontiguousarray(gains[:, 2]),
        np.ascontiguousarray(gains[:, 3]),
        start,
    )


def draw_slot(stream: SlotStream, params: SystemParams, index: int) -> ChannelDraw:
    return draw_slots(stream, params, index, index + 1)[0]


def snr_factor(draw, params: SystemParams):
    """Effective SNR scaling ``g*pt*x / (y*pt + noise)``.

    Works on a single :class:`ChannelDraw` or a :class:`ChannelBatch`.
    """
    return draw.g * params.pt * draw.x / (draw.y * params.pt + params.noise)
