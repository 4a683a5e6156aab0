"""Imbalance computation: proxies, windowing, and consistency invariants."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esmkit.errors import ConfigError, UndefinedFlowError
from esmkit.marketdata import Timeframe, resample_bars
from esmkit.nedcore import (
    FlowSplit,
    ProxyKind,
    candle_flow_proxy,
    ned_from_flow,
    ned_series,
    window_flow,
    write_ned_csv,
)

from .conftest import flow_bar, mkbar


class TestNedFromFlow:
    def test_balanced_is_exactly_zero(self):
        assert ned_from_flow(FlowSplit(100, 100)) == 0.0

    def test_one_sided_extreme(self):
        assert ned_from_flow(FlowSplit(100, 0)) == 1.0
        assert ned_from_flow(FlowSplit(0, 100)) == -1.0

    def test_forced_arithmetic(self):
        assert ned_from_flow(FlowSplit(30, 70)) == pytest.approx(-0.4, abs=1e-15)

    def test_zero_flow_undefined(self):
        with pytest.raises(UndefinedFlowError):
            ned_from_flow(FlowSplit(0, 0))

    @given(st.floats(0, 1e9), st.floats(0, 1e9))
    @settings(max_examples=200, deadline=None)
    def test_bounded_and_sign(self, buy, sell):
        if buy + sell <= 0:
            return
        v = ned_from_flow(FlowSplit(buy, sell))
        assert -1.0 <= v <= 1.0
        if buy > sell:
            assert v > 0
        elif buy < sell:
            assert v < 0
        else:
            assert v == 0.0

    @given(st.floats(1, 1e6), st.floats(1, 1e6), st.floats(1e-3, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_scale_invariance(self, buy, sell, c):
        v0 = ned_from_flow(FlowSplit(buy, sell))
        v1 = ned_from_flow(FlowSplit(buy * c, sell * c))
        assert v1 == pytest.approx(v0, rel=1e-12, abs=1e-12)


class TestCandleProxy:
    def test_close_at_high(self):
        split = candle_flow_proxy(mkbar(0, o=99, h=100, l=98, c=100, v=100))
        assert (split.buy, split.sell) == (100.0, 0.0)
        assert ned_from_flow(split) == 1.0

    def test_zero_range_splits_even(self):
        split = candle_flow_proxy(mkbar(0, o=100, h=100, l=100, c=100, v=100))
        assert (split.buy, split.sell) == (50.0, 50.0)
        assert ned_from_flow(split) == 0.0

    def test_hand_computed_fraction(self):
        # f = (95 - 90) / (110 - 90) = 1/4
        split = candle_flow_proxy(mkbar(0, o=100, h=110, l=90, c=95, v=200))
        assert (split.buy, split.sell) == (50.0, 150.0)
        assert ned_from_flow(split) == -0.5


class TestWindowFlow:
    def test_singleton(self):
        bar = flow_bar(0, 0.5)
        assert window_flow([bar], ProxyKind.FLOW) == FlowSplit(bar.buy_volume, bar.sell_volume)

    def test_cancellation(self):
        bars = [mkbar(0, v=10, buy=10, sell=0), mkbar(1, v=10, buy=0, sell=10)]
        flow = window_flow(bars, ProxyKind.FLOW)
        assert (flow.buy, flow.sell) == (10.0, 10.0)
        assert ned_from_flow(flow) == 0.0

    def test_matches_per_bar_summation(self):
        rng = np.random.default_rng(42)
        bars = []
        for i in range(5):
            o = float(rng.uniform(90, 110))
            c = float(rng.uniform(90, 110))
            h = max(o, c) + float(rng.uniform(0, 2))
            l = min(o, c) - float(rng.uniform(0, 2))
            bars.append(mkbar(i, o=o, h=h, l=l, c=c, v=float(rng.uniform(1, 100))))
        flow = window_flow(bars, ProxyKind.CANDLE)
        buy = sell = 0.0
        for b in bars:
            s = candle_flow_proxy(b)
            buy += s.buy
            sell += s.sell
        assert flow.buy == buy and flow.sell == sell

    def test_flow_proxy_requires_columns(self):
        with pytest.raises(ConfigError):
            window_flow([mkbar(0)], ProxyKind.FLOW)


class TestNedSeries:
    def test_identity_windowing(self):
        bars = [flow_bar(i, 0.25) for i in range(4)]
        series = ned_series(bars, Timeframe("1m", 1), ProxyKind.FLOW)
        assert len(series) == 4
        assert all(p.value == pytest.approx(0.25, abs=1e-15) for p in series.points)

    def test_window_counting_with_partial(self):
        bars = [flow_bar(i, 0.5, minutes=5) for i in range(10)]
        series = ned_series(bars, Timeframe("15m", 3), ProxyKind.FLOW)
        assert len(series) == 4
        assert [p.partial for p in series.points] == [False, False, False, True]

    def test_zero_flow_window_omitted(self):
        bars = [flow_bar(0, 0.5), mkbar(1, v=0, buy=0, sell=0), flow_bar(2, 0.5)]
        series = ned_series(bars, Timeframe("1m", 1), ProxyKind.FLOW)
        assert len(series) == 2

    def test_resampling_consistency_flow(self):
        rng = np.random.default_rng(7)
        bars = []
        for i in range(60):
            v = float(rng.uniform(1, 100))
            buy = v * float(rng.uniform(0, 1))
            bars.append(mkbar(i, v=v, buy=buy, sell=v - buy))
        coarse_direct = ned_series(bars, Timeframe("x5", 5), ProxyKind.FLOW)
        coarse_via_resample = ned_series(
            resample_bars(bars, 5), Timeframe("1m", 1), ProxyKind.FLOW
        )
        assert len(coarse_direct) == len(coarse_via_resample) == 12
        for a, b in zip(coarse_direct.points, coarse_via_resample.points):
            assert b.value == pytest.approx(a.value, rel=1e-12, abs=1e-12)

    def test_coarse_equals_summed_fine_flows_candle(self):
        rng = np.random.default_rng(11)
        bars = []
        for i in range(40):
            o = float(rng.uniform(90, 110))
            c = float(rng.uniform(90, 110))
            bars.append(mkbar(i, o=o, h=max(o, c) + 1, l=min(o, c) - 1, c=c,
                              v=float(rng.uniform(1, 50))))
        series = ned_series(bars, Timeframe("x8", 8), ProxyKind.CANDLE)
        for w, p in enumerate(series.points):
            ref = window_flow(bars[w * 8 : (w + 1) * 8], ProxyKind.CANDLE)
            assert p.value == pytest.approx(ned_from_flow(ref), rel=1e-12)

    def test_rederived_coarse_candle_differs_in_general(self):
        bars = [
            mkbar(0, o=100, h=106, l=100, c=101, v=10),
            mkbar(1, o=101, h=101, l=95, c=96, v=10),
        ]
        summed = ned_series(bars, Timeframe("x2", 2), ProxyKind.CANDLE)
        rederived = ned_series(
            bars, Timeframe("x2", 2), ProxyKind.CANDLE, derive_from_coarse_candle=True
        )
        assert summed.points[0].value != rederived.points[0].value

    @given(st.lists(st.floats(-0.999, 0.999), min_size=1, max_size=50), st.integers(1, 9))
    @settings(max_examples=60, deadline=None)
    def test_bounded_over_random_flows(self, neds, mult):
        bars = [flow_bar(i, x) for i, x in enumerate(neds)]
        tf = Timeframe("1m", 1) if mult == 1 else Timeframe(f"x{mult + 1}", mult + 1)
        series = ned_series(bars, tf, ProxyKind.FLOW)
        for p in series.points:
            assert -1.0 <= p.value <= 1.0

    def test_csv_export_schema(self):
        bars = [flow_bar(i, 0.5) for i in range(3)]
        series = ned_series(bars, Timeframe("x3", 3), ProxyKind.FLOW)
        buf = io.StringIO()
        write_ned_csv(series, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "window_end,timeframe,value,buy_volume,sell_volume,partial"
        assert lines[1].split(",")[1] == "x3"
