"""Sign-trio state classification and state series semantics."""

import itertools

import pytest

from esmkit.marketdata import Timeframe
from esmkit.nedcore import ProxyKind
from esmkit.states import (
    MarketState,
    Sign,
    SignTrio,
    TrioConfig,
    ZeroRule,
    classify_state,
    sign_of,
    state_series,
)

from .conftest import flow_bar, mkbar

# The eight canonical sign columns, state index -> (fine, mid, coarse).
CANONICAL = {
    1: ("N", "N", "N"),
    2: ("P", "N", "N"),
    3: ("N", "P", "N"),
    4: ("P", "P", "N"),
    5: ("N", "N", "P"),
    6: ("P", "N", "P"),
    7: ("N", "P", "P"),
    8: ("P", "P", "P"),
}

INTRADAY = TrioConfig(
    fine=Timeframe("1m", 1), mid=Timeframe("x2", 2), coarse=Timeframe("x4", 4),
    proxy=ProxyKind.FLOW,
)


def trio(f, m, c):
    return SignTrio(Sign(f), Sign(m), Sign(c))


class TestClassifyState:
    def test_full_table(self):
        for index, signs in CANONICAL.items():
            assert classify_state(trio(*signs)) == index

    def test_bijective(self):
        seen = {
            classify_state(trio(f, m, c))
            for f, m, c in itertools.product("PN", repeat=3)
        }
        assert seen == set(range(1, 9))

    def test_monotone_coding(self):
        increments = {"fine": 1, "mid": 2, "coarse": 4}
        for f, m, c in itertools.product("PN", repeat=3):
            base = classify_state(trio(f, m, c))
            for field, inc in increments.items():
                signs = {"fine": f, "mid": m, "coarse": c}
                if signs[field] == "N":
                    signs[field] = "P"
                    assert classify_state(trio(signs["fine"], signs["mid"], signs["coarse"])) == base + inc


class TestSignOf:
    def test_positive_negative(self):
        assert sign_of(0.3) is Sign.P
        assert sign_of(-0.3) is Sign.N

    def test_zero_rules(self):
        assert sign_of(0.0) is Sign.N
        assert sign_of(0.0, ZeroRule.CARRY_PREVIOUS, previous=Sign.P) is Sign.P
        assert sign_of(0.0, ZeroRule.CARRY_PREVIOUS, previous=None) is Sign.N


class TestTrioConfig:
    def test_chain_must_hold(self):
        from esmkit.errors import ConfigError

        with pytest.raises(ConfigError):
            TrioConfig(fine=Timeframe("1m", 1), mid=Timeframe("x3", 3),
                       coarse=Timeframe("x4", 4))
        with pytest.raises(ConfigError):
            TrioConfig(fine=Timeframe("x5", 5), mid=Timeframe("x5", 5),
                       coarse=Timeframe("x10", 10))


class TestStateSeries:
    def test_all_buy_is_state_eight(self):
        bars = [flow_bar(i, 0.9) for i in range(12)]
        states = state_series(bars, INTRADAY)
        assert len(states) == 12
        assert all(s.index == 8 for s in states)

    def test_all_sell_is_state_one(self):
        bars = [flow_bar(i, -0.9) for i in range(12)]
        assert all(s.index == 1 for s in state_series(bars, INTRADAY))

    def test_fine_flip_alternates_seven_eight(self):
        neds = [0.8 if i % 2 == 0 else -0.2 for i in range(12)]
        bars = [flow_bar(i, x) for i, x in enumerate(neds)]
        states = state_series(bars, INTRADAY)
        assert [s.index for s in states] == [8, 7] * 6

    def test_needs_one_coarse_window(self):
        with pytest.raises(ValueError):
            state_series([flow_bar(i, 0.5) for i in range(3)], INTRADAY)

    def test_causal_prefix(self):
        neds = [0.8, -0.3, 0.1, -0.9, 0.4, 0.4, -0.2, 0.6, -0.6, 0.2, 0.3, -0.1]
        bars = [flow_bar(i, x) for i, x in enumerate(neds)]
        full = state_series(bars, INTRADAY)
        for cut in range(4, len(bars) + 1):
            prefix = state_series(bars[:cut], INTRADAY)
            assert prefix == full[: len(prefix)]

    def test_partial_fine_window_not_emitted(self):
        cfg = TrioConfig(fine=Timeframe("x2", 2), mid=Timeframe("x4", 4),
                         coarse=Timeframe("x8", 8), proxy=ProxyKind.FLOW)
        bars = [flow_bar(i, 0.5) for i in range(9)]  # trailing half fine window
        assert len(state_series(bars, cfg)) == 4

    def test_zero_flow_follows_zero_rule(self):
        neds = [0.8, 0.8, 0.8, 0.8]
        bars = [flow_bar(i, x) for i, x in enumerate(neds)]
        bars.append(mkbar(4, v=0, buy=0, sell=0))
        bars.append(flow_bar(5, 0.8))
        default = state_series(bars, INTRADAY)
        # the zero bar opens fresh mid/coarse windows, so every stream sees
        # zero flow: treat-as-N collapses to state 1 for that emission
        assert [s.index for s in default] == [8, 8, 8, 8, 1, 8]
        carry = state_series(
            bars,
            TrioConfig(fine=INTRADAY.fine, mid=INTRADAY.mid, coarse=INTRADAY.coarse,
                       proxy=ProxyKind.FLOW, zero_rule=ZeroRule.CARRY_PREVIOUS),
        )
        assert [s.index for s in carry] == [8, 8, 8, 8, 8, 8]

    def test_emission_timestamps_are_window_closes(self):
        bars = [flow_bar(i, 0.5) for i in range(4)]
        states = state_series(bars, INTRADAY)
        assert states[0].at == bars[1].timestamp
        assert states[-1].at > bars[-1].timestamp


class TestMarketStateType:
    def test_index_bounds(self):
        with pytest.raises(ValueError):
            MarketState(index=9, trio=trio("P", "P", "P"), at=mkbar(0).timestamp)
