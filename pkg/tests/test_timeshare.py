import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.special import lambertw

from eh_underlay.channel import ChannelDraw, SystemParams, snr_factor
from eh_underlay.timeshare import (
    alpha_boundary,
    alpha_unconstrained,
    choose_alpha,
    outage_indicator,
    rate_f,
    solve_z0,
    transmit_power,
)

log_s = st.floats(min_value=-4, max_value=10).map(lambda e: 10.0**e)


def bisect_z0(s, iterations=200):
    """Plain bisection on z ln z - z - s + 1 over (1, hi)."""
    h = lambda z: z * math.log(z) - z - s + 1
    lo, hi = 1.0, 2.0
    while h(hi) <= 0:
        hi *= 2
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def lambert_z0(s):
    # z (ln z - 1) = s - 1  =>  z = (s - 1) / W((s - 1) / e)
    if s == 1:
        return math.e
    return float(np.real((s - 1) / lambertw((s - 1) / math.e)))


class TestRate:
    def test_no_harvest_time(self):
        assert rate_f(1.0, 5.0) == 0.0
        assert rate_f(1.0, 0.0) == 0.0

    def test_equal_split(self):
        assert rate_f(0.5, 3.0) == pytest.approx(1.0, rel=1e-15)

    def test_at_optimum_for_unit_s(self):
        assert rate_f(1 / math.e, 1.0) == pytest.approx(0.53073784542304298853, rel=1e-14)

    @pytest.mark.parametrize("a", [0.0, -0.1, 1.5, float("nan")])
    def test_domain(self, a):
        with pytest.raises(ValueError):
            rate_f(a, 1.0)

    def test_tiny_alpha_limit(self):
        vals = [rate_f(a, 1e10) for a in (1e-100, 1e-300, 5e-324)]
        assert all(math.isfinite(v) and v >= 0 for v in vals)
        assert vals[-1] < 1e-300

    def test_tiny_argument_precision(self):
        # (1-a)/a*s ~ 1e-18: log1p keeps it, log(1+t) would give 0
        a = 1 - 1e-12
        assert rate_f(a, 1e-6) == pytest.approx(a * 1e-12 / a * 1e-6 / math.log(2), rel=1e-6)

    def test_vectorized(self):
        out = rate_f(np.array([0.5, 1.0]), np.array([3.0, 3.0]))
        np.testing.assert_allclose(out, [1.0, 0.0])


class TestSolveZ0:
    def test_unit(self):
        assert abs(solve_z0(1.0) - math.e) < 1e-9

    def test_large(self):
        s = 1e9
        z = solve_z0(s)
        assert abs(z * math.log(z) - z - s + 1) <= 1e-1
        assert z == pytest.approx(bisect_z0(s), rel=1e-12)
        assert z == pytest.approx(59184981.184230441556, rel=1e-13)

    def test_small_expansion(self):
        z = solve_z0(1e-8)
        assert abs(z - 1 - math.sqrt(2e-8)) < 1e-6
        assert z == pytest.approx(1.0001414246895313606, rel=1e-14)

    @pytest.mark.parametrize("s", [0.0, -1.0, float("inf"), float("nan")])
    def test_domain(self, s):
        with pytest.raises(ValueError):
            solve_z0(s)

    @given(log_s)
    def test_residual_and_lambert(self, s):
        z = solve_z0(s)
        assert z > 1
        assert abs(z * math.log(z) - z - s + 1) <= 1e-10 * max(1.0, s)
        assert z == pytest.approx(lambert_z0(s), rel=1e-10)

    def test_vector_matches_scalar(self):
        s = np.array([1e-6, 0.3, 1.0, 42.0, 1e8])
        vec = solve_z0(s)
        np.testing.assert_array_equal(vec, [solve_z0(float(v)) for v in s])


class TestAlphaUnconstrained:
    def test_unit(self):
        assert alpha_unconstrained(1.0) == pytest.approx(1 / math.e, rel=1e-14)

    def test_idle(self):
        assert alpha_unconstrained(0.0) == 1.0

    def test_grid_oracle_s10(self):
        grid = np.linspace(0, 1, 10**6 + 1)[1:-1]
        best = grid[np.argmax(rate_f(grid, 10.0))]
        a = alpha_unconstrained(10.0)
        assert abs(a - best) <= 2e-6
        assert a == pytest.approx(0.58226316917519835227, rel=1e-13)

    @settings(max_examples=200)
    @given(log_s)
    def test_optimality(self, s):
        a = alpha_unconstrained(s)
        grid = np.linspace(0, 1, 10**4 + 1)[1:-1]
        assert rate_f(a, s) >= np.max(rate_f(grid, s)) - 1e-12

    @given(log_s, st.floats(0.001, 0.999), st.floats(0.001, 0.999))
    def test_concavity(self, s, a, b):
        assume(a != b)
        assert rate_f((a + b) / 2, s) >= (rate_f(a, s) + rate_f(b, s)) / 2 - 1e-12


class TestBoundary:
    def test_symmetry(self):
        assert alpha_boundary(1e-3, 1e-6, 1000.0, 1e-6) == pytest.approx(0.5, rel=1e-15)

    def test_no_interference_channel(self):
        assert alpha_boundary(1e-3, 0.0, 1000.0, 1e-12) == 0.0

    def test_arithmetic(self):
        assert alpha_boundary(1e-6, 1e-6, 1000.0, 1e-12) == pytest.approx(0.999000999000999001, rel=1e-14)

    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_interference_safe(self, lg, lz):
        g, z, pt, gam = 10.0**lg, 10.0**lz, 1000.0, 1e-12
        a = alpha_boundary(g, z, pt, gam)
        if a > 0:
            assert transmit_power(a, g, pt) * z <= gam * (1 + 1e-9)

    def test_indicator(self):
        args = (1e-6, 1e-6, 1000.0, 1e-12)
        assert outage_indicator(1.0, *args) == 0
        assert outage_indicator(alpha_boundary(*args), *args) == 0
        assert outage_indicator(0.3, *args) == 1


class TestTransmitPower:
    def test_examples(self):
        assert transmit_power(1.0, 1e-3, 1000.0) == 0.0
        assert transmit_power(0.5, 1.0, 2.0) == 2.0
        assert transmit_power(0.25, 1e-3, 1000.0) == pytest.approx(3.0, rel=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            transmit_power(0.0, 1.0, 1.0)


gain = st.floats(-9, -1).map(lambda e: 10.0**e)
draws = st.builds(ChannelDraw, gain, gain, gain, gain)
PARAMS = SystemParams()


class TestChooseAlpha:
    def test_idle_slot(self):
        d = choose_alpha(ChannelDraw(0.0, 1e-7, 1e-3, 1e-6), PARAMS, 0.3)
        assert (d.alpha, d.rate, d.indicator, d.tx_power) == (1.0, 0.0, 0, 0.0)

    @given(draws)
    def test_zero_penalty_is_unconstrained(self, draw):
        s = snr_factor(draw, PARAMS)
        d = choose_alpha(draw, PARAMS, 0.0)
        assert d.rate == pytest.approx(rate_f(alpha_unconstrained(s), s), rel=1e-15, abs=0)

    @given(draws)
    def test_huge_penalty_switches(self, draw):
        s = snr_factor(draw, PARAMS)
        a1 = alpha_unconstrained(s)
        d = choose_alpha(draw, PARAMS, rate_f(a1, s) + 1.0)
        assert d.indicator == 0
        if outage_indicator(a1, draw.g, draw.z, PARAMS.pt, PARAMS.gamma_th):
            assert d.alpha == alpha_boundary(draw.g, draw.z, PARAMS.pt, PARAMS.gamma_th)

    @given(draws, st.floats(0, 30))
    def test_decision_invariants(self, draw, lam):
        d = choose_alpha(draw, PARAMS, lam)
        assert 0 < d.alpha <= 1
        assert d.rate >= 0 and d.tx_power >= 0
        assert d.tx_power * d.alpha == pytest.approx((1 - d.alpha) * draw.g * PARAMS.pt, rel=1e-12, abs=1e-300)
        assert d.indicator == outage_indicator(d.alpha, draw.g, draw.z, PARAMS.pt, PARAMS.gamma_th)
        a2 = alpha_boundary(draw.g, draw.z, PARAMS.pt, PARAMS.gamma_th)
        if d.alpha == a2:
            assert d.tx_power * draw.z <= PARAMS.gamma_th * (1 + 1e-9)

    @given(draws, st.lists(st.floats(0, 20), min_size=2, max_size=8))
    def test_indicator_non_increasing_in_penalty(self, draw, lams):
        inds = [choose_alpha(draw, PARAMS, lam).indicator for lam in sorted(lams)]
        assert all(a >= b for a, b in zip(inds, inds[1:]))

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError):
            choose_alpha(ChannelDraw(1e-3, 1e-7, 1e-3, 1e-6), PARAMS, -1.0)

    def test_three_cases(self):
        p = SystemParams()
        # case 1: a1 already clear of the boundary
        d1 = ChannelDraw(x=1e-3, y=1e-7, g=1e-9, z=1e-12)
        s = snr_factor(d1, p)
        assert choose_alpha(d1, p, 0.0).alpha == alpha_unconstrained(s)
        assert choose_alpha(d1, p, 0.0).indicator == 0
        # case 2: a1 inside the outage region
        d2 = ChannelDraw(x=1e-3, y=1e-7, g=1e-6, z=1e-6)
        s2 = snr_factor(d2, p)
        a1, a2 = alpha_unconstrained(s2), alpha_boundary(d2.g, d2.z, p.pt, p.gamma_th)
        assert a1 < a2
        gap = rate_f(a1, s2) - rate_f(a2, s2)
        assert choose_alpha(d2, p, 0.5 * gap).alpha == a1  # 2c: penalty too small
        assert choose_alpha(d2, p, 2.0 * gap).alpha == a2  # 2b
        assert choose_alpha(d2, p, gap).alpha == a2        # tie goes to the boundary
