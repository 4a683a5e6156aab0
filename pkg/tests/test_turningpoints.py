"""Hypothetical-price imbalance and the turning-price solver."""

import numpy as np
import pytest

from esmkit.marketdata import Bar, Timeframe
from esmkit.nedcore import ProxyKind, candle_flow_proxy, ned_from_flow
from esmkit.states import TrioConfig, classify_state, state_series
from esmkit.turningpoints import (
    TpDirection,
    TpKind,
    solve_turning_price,
    turning_points,
    window_ned_at_price,
)

from .conftest import T0, mkbar, random_candle_window as random_window
from .oracles import grid_scan_crossing

TRIO = TrioConfig(
    fine=Timeframe("1m", 1), mid=Timeframe("x2", 2), coarse=Timeframe("x4", 4),
    proxy=ProxyKind.CANDLE,
)


class TestWindowNedAtPrice:
    def test_noop_substitution_at_close(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            bars = random_window(rng)
            from esmkit.nedcore import window_flow

            direct = ned_from_flow(window_flow(bars, ProxyKind.CANDLE))
            assert window_ned_at_price(bars, bars[-1].close, ProxyKind.CANDLE) == pytest.approx(
                direct, abs=1e-15
            )

    def test_price_above_all_highs_saturates_buy(self):
        bars = [mkbar(0, o=100, h=102, l=98, c=99, v=50),
                mkbar(1, o=99, h=101, l=97, c=98, v=50)]
        p = 103.0
        at_close = window_ned_at_price(bars, bars[-1].close, ProxyKind.CANDLE)
        at_top = window_ned_at_price(bars, p, ProxyKind.CANDLE)
        assert at_top > at_close
        # last bar is fully buy at p: only the fixed bar's sell side remains
        fixed = candle_flow_proxy(bars[0])
        expected = (fixed.buy + 50 - fixed.sell) / (fixed.buy + fixed.sell + 50)
        assert at_top == pytest.approx(expected, abs=1e-12)

    def test_matches_from_scratch_recomputation(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            bars = random_window(rng)
            p = float(rng.uniform(80, 125))
            got = window_ned_at_price(bars, p, ProxyKind.CANDLE)
            # rebuild the substituted bar and re-sum every flow from scratch
            last = bars[-1]
            sub = Bar(
                timestamp=last.timestamp,
                open=min(max(last.open, min(last.low, p)), max(last.high, p)),
                high=max(last.high, p),
                low=min(last.low, p),
                close=p,
                volume=last.volume,
            )
            buy = sell = 0.0
            for b in [*bars[:-1], sub]:
                s = candle_flow_proxy(b)
                buy += s.buy
                sell += s.sell
            assert got == pytest.approx((buy - sell) / (buy + sell), abs=1e-12)

    def test_monotone_in_price(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            bars = random_window(rng, n_fixed=int(rng.integers(0, 4)))
            p1 = float(rng.uniform(80, 125))
            p2 = p1 + float(rng.uniform(0, 20))
            assert (
                window_ned_at_price(bars, p1, ProxyKind.CANDLE)
                <= window_ned_at_price(bars, p2, ProxyKind.CANDLE) + 1e-12
            )

    def test_zero_price_rejected(self):
        with pytest.raises(ValueError):
            window_ned_at_price([mkbar(0)], 0.0, ProxyKind.CANDLE)


class TestSolveTurningPrice:
    def test_root_at_start(self):
        # close at mid-range: balanced split, imbalance exactly zero
        bars = [mkbar(0, o=100, h=102, l=98, c=100, v=100)]
        assert solve_turning_price(bars, ProxyKind.CANDLE) == 100.0

    def test_unreachable_when_partial_bar_too_small(self):
        # fixed bars heavily sell-dominated; the tiny partial bar cannot
        # flip the sum anywhere within +/-20%
        bars = [
            mkbar(0, o=100, h=101, l=95, c=95.5, v=1000),
            mkbar(1, o=95.5, h=96, l=95, c=95.8, v=1.0),
        ]
        assert solve_turning_price(bars, ProxyKind.CANDLE) is None

    def test_agrees_with_grid_scan(self):
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 60:
            bars = random_window(rng)
            ned0 = window_ned_at_price(bars, bars[-1].close, ProxyKind.CANDLE)
            if abs(ned0) < 1e-9:
                continue
            level = solve_turning_price(bars, ProxyKind.CANDLE)
            crossing, step = grid_scan_crossing(bars, n_points=100_000)
            if level is None:
                assert crossing is None or abs(
                    window_ned_at_price(bars, crossing, ProxyKind.CANDLE)
                ) > 0  # jump without attainable zero
            else:
                assert crossing is not None
                # one grid step of oracle discretization plus the solver's
                # own relative price tolerance
                assert abs(level - crossing) <= step + 1e-6 * bars[-1].close
                assert abs(window_ned_at_price(bars, level, ProxyKind.CANDLE)) <= 1e-6
            checked += 1

    def test_deterministic(self):
        rng = np.random.default_rng(23)
        bars = random_window(rng)
        a = solve_turning_price(bars, ProxyKind.CANDLE)
        b = solve_turning_price(bars, ProxyKind.CANDLE)
        assert a == b


class TestTurningPoints:
    def make_bars(self, neds_geometry):
        """Bars built so the candle proxy yields chosen imbalances."""
        bars = []
        for i, x in enumerate(neds_geometry):
            # close positioned inside a +/-1 range to hit buy fraction (1+x)/2
            o = 100.0
            f = (1.0 + x) / 2.0
            l, h = 99.0, 101.0
            c = l + f * (h - l)
            bars.append(mkbar(i, o=o, h=h, l=l, c=c, v=1000.0))
        return bars

    def test_mixed_signs_give_opposite_directions(self):
        # mid window imbalance negative, coarse positive at the last close;
        # both nets small enough for the partial bar to flip in-bracket
        bars = self.make_bars([0.4, 0.3, -0.5, 0.2])
        (t2, t4) = turning_points(bars, TRIO)[-1]
        assert t2.kind is TpKind.T2 and t4.kind is TpKind.T4
        assert t2.direction is TpDirection.UP_FLIP
        assert t2.level is not None and t2.level >= bars[-1].close
        assert t4.direction is TpDirection.DOWN_FLIP
        assert t4.level is not None and t4.level <= bars[-1].close

    def test_balanced_flows_level_at_price(self):
        bars = self.make_bars([0.0, 0.0, 0.0, 0.0])
        for t2, t4 in turning_points(bars, TRIO):
            assert t2.level == pytest.approx(bars[0].close, rel=1e-9)
            assert t4.level == pytest.approx(bars[0].close, rel=1e-9)

    def test_levels_match_grid_scan_per_window(self):
        bars = self.make_bars([0.6, -0.2, 0.3, -0.4, 0.1, -0.3, 0.5, -0.1])
        pairs = turning_points(bars, TRIO)
        assert len(pairs) == 8
        for j, (t2, t4) in enumerate(pairs):
            for tp, mult in ((t2, 2), (t4, 4)):
                start = (j // mult) * mult
                window = bars[start : j + 1]
                crossing, step = grid_scan_crossing(window, n_points=100_000)
                if tp.level is None:
                    continue
                assert crossing is not None
                assert abs(tp.level - crossing) <= step + 1e-12

    def test_crossing_t2_level_shifts_state_by_two(self):
        bars = [
            self.make_bars([0.9])[0],
            mkbar(1, o=100, h=101, l=99, c=100.8, v=1000),
            mkbar(2, o=100, h=101, l=99, c=99.5, v=1000),
            mkbar(3, o=100, h=101, l=99, c=100.2, v=1000),
        ]
        (t2, _) = turning_points(bars, TRIO)[-1]
        assert t2.direction is TpDirection.UP_FLIP and t2.level is not None
        before = state_series(bars, TRIO)[-1]
        # move only the partial bar's close just through the level
        crossed = bars[:3] + [
            mkbar(3, o=100, h=max(101, t2.level + 0.2), l=99, c=t2.level + 0.2, v=1000)
        ]
        after = state_series(crossed, TRIO)[-1]
        assert before.trio.fine == after.trio.fine
        assert before.trio.coarse == after.trio.coarse
        assert after.index - before.index == 2

    def test_crossing_t4_level_shifts_state_by_four(self):
        # heavy selling in the first half, strong buying after: the coarse
        # window is still net-sell while the mid window is already net-buy
        bars = self.make_bars([-0.8, -0.8, 0.7]) + [
            mkbar(3, o=100, h=101, l=99, c=100.2, v=1000)
        ]
        (_, t4) = turning_points(bars, TRIO)[-1]
        assert t4.direction is TpDirection.UP_FLIP and t4.level is not None
        before = state_series(bars, TRIO)[-1]
        crossed = bars[:3] + [
            mkbar(3, o=100, h=max(101, t4.level + 0.05), l=99, c=t4.level + 0.05, v=1000)
        ]
        after = state_series(crossed, TRIO)[-1]
        assert before.trio.fine == after.trio.fine
        assert before.trio.mid == after.trio.mid
        assert after.index - before.index == 4

    def test_emission_count(self):
        bars = self.make_bars([0.1] * 9)  # 9 bars, fine mult 1
        assert len(turning_points(bars, TRIO)) == 9
