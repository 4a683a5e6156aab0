"""Eight-state market classification from imbalance signs over a timeframe trio.

Each emission time carries the imbalance sign at a fine, mid, and coarse
timeframe; the three signs index one of eight states via a binary encoding
(fine adds 1, mid adds 2, coarse adds 4 on top of state 1), so state 1 is
all-negative and state 8 all-positive sentiment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import IO, Sequence

from .errors import ConfigError
from .marketdata import Bar, Timeframe, format_ts, infer_bar_period
from .nedcore import ProxyKind, bar_flow

logger = logging.getLogger(__name__)


class Sign(Enum):
    P = "P"
    N = "N"

    def __str__(self) -> str:
        return self.value


class ZeroRule(Enum):
    TREAT_AS_N = "n"
    CARRY_PREVIOUS = "carry"


@dataclass(frozen=True, slots=True)
class SignTrio:
    fine: Sign
    mid: Sign
    coarse: Sign


@dataclass(frozen=True, slots=True)
class TrioConfig:
    """Three nested timeframes whose imbalance signs define the state.

    Multiples are in base bars and must chain: mid a multiple of fine,
    coarse a multiple of mid. The default trio is daily/weekly/monthly in
    trading time (5-day weeks, 20-day months).
    """

    fine: Timeframe = Timeframe("1d", 1)
    mid: Timeframe = Timeframe("1w", 5)
    coarse: Timeframe = Timeframe("1mo", 20)
    proxy: ProxyKind = ProxyKind.CANDLE
    zero_rule: ZeroRule = ZeroRule.TREAT_AS_N

    def __post_init__(self):
        f, m, c = self.fine.multiple, self.mid.multiple, self.coarse.multiple
        if not (f < m < c):
            raise ConfigError("trio multiples must strictly increase fine < mid < coarse")
        if m % f != 0 or c % m != 0:
            raise ConfigError("trio multiples must chain as integer multiples")


@dataclass(frozen=True, slots=True)
class MarketState:
    index: int
    trio: SignTrio
    at: datetime

    def __post_init__(self):
        if not 1 <= self.index <= 8:
            raise ValueError("state index must be in 1..8")


def sign_of(
    value: float,
    zero_rule: ZeroRule = ZeroRule.TREAT_AS_N,
    previous: Sign | None = None,
) -> Sign:
    """Sign of an imbalance value; exact zero resolves via the zero rule."""
    if value > 0:
        return Sign.P
    if value < 0:
        return Sign.N
    if zero_rule is ZeroRule.CARRY_PREVIOUS and previous is not None:
        return previous
    return Sign.N


def classify_state(trio: SignTrio) -> int:
    """State index 1..8; bijective over the eight sign combinations."""
    return (
        1
        + (1 if trio.fine is Sign.P else 0)
        + (2 if trio.mid is Sign.P else 0)
        + (4 if trio.coarse is Sign.P else 0)
    )


class _SignTracker:
    """Folds window flow into a sign stream, applying the zero rule.

    Zero-flow windows (no information) follow the same carry behavior as
    exact-zero values.
    """

    __slots__ = ("zero_rule", "prev")

    def __init__(self, zero_rule: ZeroRule):
        self.zero_rule = zero_rule
        self.prev: Sign | None = None

    def sign(self, buy: float, sell: float) -> Sign:
        total = buy + sell
        if total <= 0:
            s = self.prev if (
                self.zero_rule is ZeroRule.CARRY_PREVIOUS and self.prev is not None
            ) else Sign.N
        else:
            s = sign_of((buy - sell) / total, self.zero_rule, self.prev)
        self.prev = s
        return s


def state_series(bars: Sequence[Bar], cfg: TrioConfig) -> list[MarketState]:
    """One state per completed fine window.

    At each fine-window close the fine sign uses the just-completed window
    while mid and coarse use their current, generally partial, windows: the
    coarse sentiment reacts intra-window rather than waiting for the window
    to finish. A trailing incomplete fine window emits nothing.
    """
    if len(bars) < cfg.coarse.multiple:
        raise ValueError("bars must span at least one coarse window")
    period = infer_bar_period(bars, cfg.fine)
    f_mult, m_mult, c_mult = cfg.fine.multiple, cfg.mid.multiple, cfg.coarse.multiple

    fine_t = _SignTracker(cfg.zero_rule)
    mid_t = _SignTracker(cfg.zero_rule)
    coarse_t = _SignTracker(cfg.zero_rule)

    out: list[MarketState] = []
    fb = fs = mb = ms = cb = cs = 0.0  # running buy/sell per stream
    for j, bar in enumerate(bars):
        if j % f_mult == 0:
            fb = fs = 0.0
        if j % m_mult == 0:
            mb = ms = 0.0
        if j % c_mult == 0:
            cb = cs = 0.0
        split = bar_flow(bar, cfg.proxy)
        fb += split.buy
        fs += split.sell
        mb += split.buy
        ms += split.sell
        cb += split.buy
        cs += split.sell
        if (j + 1) % f_mult != 0:
            continue
        trio = SignTrio(
            fine=fine_t.sign(fb, fs),
            mid=mid_t.sign(mb, ms),
            coarse=coarse_t.sign(cb, cs),
        )
        out.append(
            MarketState(
                index=classify_state(trio),
                trio=trio,
                at=bar.timestamp + period,
            )
        )
    return out


def write_state_csv(states: Sequence[MarketState], fh: IO[str]) -> None:
    fh.write("at,fine_sign,mid_sign,coarse_sign,state\n")
    for s in states:
        fh.write(
            f"{format_ts(s.at)},{s.trio.fine},{s.trio.mid},{s.trio.coarse},{s.index}\n"
        )
