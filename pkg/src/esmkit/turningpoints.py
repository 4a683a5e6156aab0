"""Price levels at which a window's imbalance would cross zero.

A forecast asks: at what hypothetical price would the current mid (T2) or
coarse (T4) window flip its imbalance sign, implying a two- or four-level
state shift? The evaluation substitutes the hypothetical price into the
window's last bar (close replaced, range extended to reach it, volume kept
fixed) and re-sums the window flows. Under both proxies the resulting
imbalance is monotone nondecreasing in price, so bisection finds the unique
crossing when one exists inside the bracket.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import IO, Sequence

from .errors import InternalConsistencyError, UndefinedFlowError
from .marketdata import Bar, format_ts, infer_bar_period
from .nedcore import ProxyKind, window_flow
from .states import TrioConfig

logger = logging.getLogger(__name__)

# |imbalance| at the returned level must not exceed this.
ROOT_NED_TOL = 1e-6
# |imbalance| below this counts as already at the crossing.
AT_ROOT_TOL = 1e-9
_MAX_BISECT = 200


class TpKind(Enum):
    T2 = "T2"
    T4 = "T4"

    def __str__(self) -> str:
        return self.value

    @property
    def magnitude(self) -> int:
        return 2 if self is TpKind.T2 else 4


class TpDirection(Enum):
    UP_FLIP = "up"
    DOWN_FLIP = "down"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class TurningPointForecast:
    """A sign-flip price level; ``level`` is None when unreachable in-bracket."""

    kind: TpKind
    level: float | None
    direction: TpDirection
    as_of: datetime
    window_id: int


def _fixed_flows(window_bars: Sequence[Bar], proxy: ProxyKind) -> tuple[float, float]:
    if len(window_bars) > 1:
        fixed = window_flow(window_bars[:-1], proxy)
        return fixed.buy, fixed.sell
    return 0.0, 0.0


def _ned_at(fixed_buy: float, fixed_sell: float, last: Bar, p: float) -> float:
    """O(1) substituted-window imbalance given precomputed fixed flows."""
    hi = last.high if last.high > p else p
    lo = last.low if last.low < p else p
    if hi > lo:
        f = (p - lo) / (hi - lo)
    else:
        f = 0.5
    buy = fixed_buy + f * last.volume
    sell = fixed_sell + (1.0 - f) * last.volume
    total = buy + sell
    if total <= 0:
        raise UndefinedFlowError("window has zero total flow")
    return (buy - sell) / total


def window_ned_at_price(
    window_bars: Sequence[Bar], p: float, proxy: ProxyKind
) -> float:
    """Window imbalance if the last bar's close were moved to ``p``.

    The last bar keeps its recorded volume; its close becomes ``p`` and its
    range stretches to include ``p``. Its split is always recomputed from
    the candle geometry: recorded aggressor sides cannot be re-split for a
    price that never traded, so flow mode falls back to the candle formula
    for this one bar. Completed bars keep their recorded (or proxied) flows.
    """
    if not window_bars:
        raise ValueError("window must contain at least one bar")
    if not p > 0:
        raise ValueError("hypothetical price must be > 0")
    fixed_buy, fixed_sell = _fixed_flows(window_bars, proxy)
    return _ned_at(fixed_buy, fixed_sell, window_bars[-1], p)


def solve_turning_price(
    window_bars: Sequence[Bar],
    proxy: ProxyKind,
    bracket_width: float = 0.20,
    tol: float = 1e-6,
) -> float | None:
    """Price at which the window imbalance crosses zero, or None if out of reach.

    Searches within ``bracket_width`` of the current close (levels farther
    out are not actionable). Bisection runs until the bracket is within
    ``tol`` (relative) and the imbalance at the candidate is within
    ROOT_NED_TOL; a window whose imbalance jumps across zero without
    attaining it (zero-range last bar) reports unreachable rather than a
    false level.
    """
    close = window_bars[-1].close
    last = window_bars[-1]
    fixed_buy, fixed_sell = _fixed_flows(window_bars, proxy)
    ned0 = _ned_at(fixed_buy, fixed_sell, last, close)
    if abs(ned0) < AT_ROOT_TOL:
        return close
    if ned0 < 0.0:
        lo, hi = close, close * (1.0 + bracket_width)
        ned_lo, ned_hi = ned0, _ned_at(fixed_buy, fixed_sell, last, hi)
    else:
        lo, hi = close * (1.0 - bracket_width), close
        ned_lo, ned_hi = _ned_at(fixed_buy, fixed_sell, last, lo), ned0
    if ned_lo > ned_hi + 1e-12:
        raise InternalConsistencyError(
            f"imbalance not monotone across bracket: f({lo})={ned_lo} > f({hi})={ned_hi}"
        )
    if ned_lo > 0.0 or ned_hi < 0.0:
        return None  # no sign change within the bracket

    best_p, best_ned = (lo, ned_lo) if abs(ned_lo) <= abs(ned_hi) else (hi, ned_hi)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket exhausted at float resolution
        ned_mid = _ned_at(fixed_buy, fixed_sell, last, mid)
        if ned_mid < ned_lo - 1e-12 or ned_mid > ned_hi + 1e-12:
            raise InternalConsistencyError(
                f"imbalance not monotone at p={mid}: {ned_lo} .. {ned_mid} .. {ned_hi}"
            )
        if abs(ned_mid) < abs(best_ned):
            best_p, best_ned = mid, ned_mid
        if ned_mid < 0.0:
            lo, ned_lo = mid, ned_mid
        else:
            hi, ned_hi = mid, ned_mid
        if hi - lo <= tol * close and abs(best_ned) <= ROOT_NED_TOL:
            break
    if abs(best_ned) <= ROOT_NED_TOL:
        return best_p
    return None  # sign jump with no attainable zero


def turning_points(
    bars: Sequence[Bar], cfg: TrioConfig, bracket_width: float = 0.20, tol: float = 1e-6
) -> list[tuple[TurningPointForecast, TurningPointForecast]]:
    """(T2, T4) forecasts at each completed fine-window close.

    T2 solves the current mid window, T4 the current coarse window, both
    taken through the latest base bar (partial until their boundary).
    Direction comes from the sign of the substituted-window imbalance at
    the current close: negative means the flip level lies above the price,
    positive below. A window whose solve fails (zero flow) emits an
    unreachable forecast and the replay continues.
    """
    period = infer_bar_period(bars, cfg.fine)
    f_mult, m_mult, c_mult = cfg.fine.multiple, cfg.mid.multiple, cfg.coarse.multiple
    out: list[tuple[TurningPointForecast, TurningPointForecast]] = []
    for j in range(f_mult - 1, len(bars), f_mult):
        as_of = bars[j].timestamp + period
        pair = []
        for kind, mult in ((TpKind.T2, m_mult), (TpKind.T4, c_mult)):
            start = (j // mult) * mult
            window = bars[start : j + 1]
            window_id = j // mult
            try:
                ned_now = window_ned_at_price(window, window[-1].close, cfg.proxy)
                direction = (
                    TpDirection.UP_FLIP if ned_now <= 0.0 else TpDirection.DOWN_FLIP
                )
                level = solve_turning_price(window, cfg.proxy, bracket_width, tol)
            except UndefinedFlowError:
                logger.info("zero-flow %s window at %s; unreachable", kind, format_ts(as_of))
                direction, level = TpDirection.UP_FLIP, None
            pair.append(
                TurningPointForecast(
                    kind=kind,
                    level=level,
                    direction=direction,
                    as_of=as_of,
                    window_id=window_id,
                )
            )
        out.append((pair[0], pair[1]))
    return out


def write_turning_point_csv(
    forecasts: Sequence[tuple[TurningPointForecast, TurningPointForecast]], fh: IO[str]
) -> None:
    fh.write("as_of,kind,direction,level\n")
    for pair in forecasts:
        for tp in pair:
            level = "NA" if tp.level is None else repr(tp.level)
            fh.write(f"{format_ts(tp.as_of)},{tp.kind},{tp.direction},{level}\n")
