"""Bar and trade-tick ingestion, validation, resampling, and session volatility.

Bar CSV schema: ``timestamp,open,high,low,close,volume[,buy_volume,sell_volume]``
with ISO-8601 UTC timestamps. Tick CSV schema: ``timestamp,price,size[,side]``
with side B or S. Files ending in ``.gz`` are transparently decompressed.
"""

from __future__ import annotations

import gzip
import io
import logging
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence
from zoneinfo import ZoneInfo

from .errors import DataError

logger = logging.getLogger(__name__)

# Relative tolerance for the buy + sell == volume consistency check.
FLOW_SUM_RTOL = 1e-9

BAR_COLUMNS = ("timestamp", "open", "high", "low", "close", "volume")
BAR_FLOW_COLUMNS = ("buy_volume", "sell_volume")
TICK_COLUMNS = ("timestamp", "price", "size")

# Nominal durations for labelled timeframes, used only to infer the close
# time of a window when bar spacing cannot be measured from the data.
LABEL_SECONDS = {
    "1m": 60,
    "5m": 300,
    "15m": 900,
    "30m": 1800,
    "1h": 3600,
    "1d": 86_400,
    "1w": 604_800,
    "1mo": 2_592_000,
    "1q": 7_776_000,
    "1y": 31_536_000,
}


class Side(Enum):
    BUY = "B"
    SELL = "S"
    UNKNOWN = "U"


@dataclass(frozen=True, slots=True)
class Bar:
    """One OHLCV candle; ``timestamp`` is the bar open time (UTC)."""

    timestamp: datetime
    open: float
    high: float
    low: float
    close: float
    volume: float
    buy_volume: float | None = None
    sell_volume: float | None = None
    partial: bool = False

    def __post_init__(self):
        if self.timestamp.tzinfo is None:
            raise ValueError("bar timestamp must be timezone-aware UTC")
        for name in ("open", "high", "low", "close"):
            if not getattr(self, name) > 0:
                raise ValueError(f"bar {name} must be > 0")
        if not (self.low <= self.open <= self.high):
            raise ValueError("bar open outside [low, high]")
        if not (self.low <= self.close <= self.high):
            raise ValueError("bar close outside [low, high]")
        if self.volume < 0:
            raise ValueError("bar volume must be >= 0")
        if (self.buy_volume is None) != (self.sell_volume is None):
            raise ValueError("buy_volume and sell_volume must be given together")
        if self.buy_volume is not None:
            if self.buy_volume < 0 or self.sell_volume < 0:
                raise ValueError("flow volumes must be >= 0")
            total = self.buy_volume + self.sell_volume
            if abs(total - self.volume) > FLOW_SUM_RTOL * max(1.0, abs(self.volume)):
                raise ValueError("buy_volume + sell_volume must equal volume")

    @property
    def has_flow(self) -> bool:
        return self.buy_volume is not None


@dataclass(frozen=True, slots=True)
class Timeframe:
    """A bar duration, expressed as a bar-count multiple of the run's base bars.

    ``label`` is one of the known duration labels (1m ... 1y) or ``x<N>`` for a
    custom multiple. Window arithmetic is count-based throughout; labels only
    carry a nominal duration for output timestamps.
    """

    label: str
    multiple: int = 1

    def __post_init__(self):
        if self.multiple < 1:
            raise ValueError("timeframe multiple must be >= 1")
        if self.label not in LABEL_SECONDS:
            if not (self.label.startswith("x") and self.label[1:].isdigit()):
                raise ValueError(f"unknown timeframe label {self.label!r}")
            if self.multiple < 2:
                raise ValueError("custom timeframe multiple must be >= 2")

    @classmethod
    def parse(cls, text: str) -> "Timeframe":
        """Parse ``1d``, ``1w:5`` (label with explicit multiple) or ``x3`` / ``3``."""
        text = text.strip()
        if ":" in text:
            label, _, mult = text.partition(":")
            return cls(label, int(mult))
        if text in LABEL_SECONDS:
            return cls(text, 1)
        digits = text[1:] if text.startswith("x") else text
        if not digits.isdigit():
            raise ValueError(f"cannot parse timeframe {text!r}")
        return cls(f"x{digits}", int(digits))

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True, slots=True)
class TradeTick:
    timestamp: datetime
    price: float
    size: float
    side: Side = Side.UNKNOWN

    def __post_init__(self):
        if not self.price > 0:
            raise ValueError("tick price must be > 0")
        if not self.size > 0:
            raise ValueError("tick size must be > 0")


def _parse_ts(text: str) -> datetime:
    ts = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _open_text(source) -> IO[str]:
    """Accept a path, bytes, or file object; gunzip by filename extension."""
    if isinstance(source, (str, bytes)) and not isinstance(source, str):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        if source.endswith(".gz"):
            return io.TextIOWrapper(gzip.open(source, "rb"), encoding="utf-8")
        return open(source, "r", encoding="utf-8")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


def _header_map(header: str, required: Sequence[str], schema: Mapping[str, str] | None):
    """Resolve column name -> index, applying an optional logical->csv rename map."""
    names = [h.strip() for h in header.rstrip("\n\r").split(",")]
    rename = dict(schema) if schema else {}
    positions = {}
    for logical in (*required, *BAR_FLOW_COLUMNS, "side"):
        csv_name = rename.get(logical, logical)
        if csv_name in names:
            positions[logical] = names.index(csv_name)
    missing = [c for c in required if c not in positions]
    if missing:
        raise DataError(f"missing required column(s): {', '.join(missing)}")
    return positions


def parse_bar_csv(
    source,
    schema: Mapping[str, str] | None = None,
    skip_bad: bool = False,
) -> list[Bar]:
    """Parse a bar CSV into validated bars in strictly increasing time order.

    A malformed row aborts the run with a diagnostic naming the row, unless
    ``skip_bad`` is set, in which case the row is logged and dropped.
    """
    fh = _open_text(source)
    header = fh.readline()
    if not header.strip():
        raise DataError("empty input: missing header row")
    pos = _header_map(header, BAR_COLUMNS, schema)
    have_flow = all(c in pos for c in BAR_FLOW_COLUMNS)

    bars: list[Bar] = []
    last_ts: datetime | None = None
    for row_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        fields = line.rstrip("\n\r").split(",")
        try:
            ts = _parse_ts(fields[pos["timestamp"]])
            kwargs = {name: float(fields[pos[name]]) for name in BAR_COLUMNS[1:]}
            if have_flow and fields[pos["buy_volume"]].strip():
                kwargs["buy_volume"] = float(fields[pos["buy_volume"]])
                kwargs["sell_volume"] = float(fields[pos["sell_volume"]])
            bar = Bar(timestamp=ts, **kwargs)
            if last_ts is not None and bar.timestamp <= last_ts:
                raise ValueError("timestamps must be strictly increasing")
        except (ValueError, IndexError) as exc:
            if skip_bad:
                logger.warning("skipping bad bar row %d: %s", row_no, exc)
                continue
            raise DataError(str(exc), row=row_no) from exc
        last_ts = bar.timestamp
        bars.append(bar)
    return bars


def parse_tick_csv(source, schema: Mapping[str, str] | None = None) -> list[TradeTick]:
    """Parse a trade-tick CSV; side column is optional (B/S)."""
    fh = _open_text(source)
    header = fh.readline()
    if not header.strip():
        raise DataError("empty input: missing header row")
    pos = _header_map(header, TICK_COLUMNS, schema)

    ticks: list[TradeTick] = []
    last_ts: datetime | None = None
    for row_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        fields = line.rstrip("\n\r").split(",")
        try:
            ts = _parse_ts(fields[pos["timestamp"]])
            price = float(fields[pos["price"]])
            size = float(fields[pos["size"]])
            side = Side.UNKNOWN
            if "side" in pos and len(fields) > pos["side"] and fields[pos["side"]].strip():
                side = Side(fields[pos["side"]].strip())
            tick = TradeTick(ts, price, size, side)
            if last_ts is not None and ts < last_ts:
                raise ValueError("tick timestamps must be non-decreasing")
        except (ValueError, IndexError) as exc:
            raise DataError(str(exc), row=row_no) from exc
        last_ts = ts
        ticks.append(tick)
    return ticks


def write_bar_csv(bars: Iterable[Bar], fh: IO[str]) -> None:
    """Serialize bars back to the canonical CSV schema (round-trip stable)."""
    bars = list(bars)
    have_flow = bool(bars) and all(b.has_flow for b in bars)
    cols = BAR_COLUMNS + (BAR_FLOW_COLUMNS if have_flow else ())
    fh.write(",".join(cols) + "\n")
    for b in bars:
        row = [format_ts(b.timestamp), repr(b.open), repr(b.high), repr(b.low),
               repr(b.close), repr(b.volume)]
        if have_flow:
            row += [repr(b.buy_volume), repr(b.sell_volume)]
        fh.write(",".join(row) + "\n")


def resample_bars(bars: Sequence[Bar], factor: int) -> list[Bar]:
    """Aggregate every ``factor`` consecutive bars into one coarser bar.

    Open/close come from the group's first/last bar, high/low are extremes,
    volumes are summed. A trailing incomplete group is emitted with the
    ``partial`` flag set rather than dropped.
    """
    if factor < 2:
        raise ValueError("resample factor must be >= 2")
    out: list[Bar] = []
    for start in range(0, len(bars), factor):
        group = bars[start : start + factor]
        have_flow = all(b.has_flow for b in group)
        out.append(
            Bar(
                timestamp=group[0].timestamp,
                open=group[0].open,
                high=max(b.high for b in group),
                low=min(b.low for b in group),
                close=group[-1].close,
                volume=sum(b.volume for b in group),
                buy_volume=sum(b.buy_volume for b in group) if have_flow else None,
                sell_volume=sum(b.sell_volume for b in group) if have_flow else None,
                partial=len(group) < factor or any(b.partial for b in group),
            )
        )
    return out


def tick_rule_classify(
    ticks: Sequence[TradeTick], first_side: Side = Side.BUY
) -> list[TradeTick]:
    """Resolve unknown trade sides with the tick rule.

    An uptick is a buy, a downtick a sell, and an equal price inherits the
    previous resolved side. The first unresolved tick takes ``first_side``
    (buy by default; the choice is symmetric). Pre-tagged sides pass
    through untouched but still update the reference price and side for
    subsequent unknowns.
    """
    if first_side is Side.UNKNOWN:
        raise ValueError("first_side must be buy or sell")
    out: list[TradeTick] = []
    prev_price: float | None = None
    prev_side = first_side
    for tick in ticks:
        if tick.side is not Side.UNKNOWN:
            side = tick.side
        elif prev_price is None or tick.price == prev_price:
            side = prev_side
        else:
            side = Side.BUY if tick.price > prev_price else Side.SELL
        out.append(replace(tick, side=side) if side is not tick.side else tick)
        if prev_price is None or tick.price != prev_price:
            prev_price = tick.price
        prev_side = side
    return out


def session_volatility(day_bars: Sequence[Bar], prev_close: float) -> float:
    """High-low range of one session divided by the prior session close."""
    if not day_bars:
        raise ValueError("session must contain at least one bar")
    if not prev_close > 0:
        raise ValueError("prev_close must be > 0")
    hi = max(b.high for b in day_bars)
    lo = min(b.low for b in day_bars)
    return (hi - lo) / prev_close


def split_sessions(bars: Sequence[Bar], tz: str = "UTC") -> list[tuple]:
    """Group bars by their timestamp date in the given timezone.

    Returns (date, bars) pairs in time order. Dates stand in for full
    trading-calendar sessions.
    """
    try:
        zone = ZoneInfo(tz)
    except (KeyError, ValueError, OSError) as exc:
        from .errors import ConfigError

        raise ConfigError(f"unknown timezone {tz!r}") from exc
    sessions: list[tuple] = []
    for bar in bars:
        day = bar.timestamp.astimezone(zone).date()
        if sessions and sessions[-1][0] == day:
            sessions[-1][1].append(bar)
        else:
            sessions.append((day, [bar]))
    return sessions


def infer_bar_period(bars: Sequence[Bar], timeframe: Timeframe | None = None) -> timedelta:
    """Best-effort bar duration: measured spacing, else the label's nominal length."""
    if len(bars) >= 2:
        deltas = [
            (bars[i + 1].timestamp - bars[i].timestamp) for i in range(len(bars) - 1)
        ]
        return min(deltas)
    if timeframe is not None and timeframe.label in LABEL_SECONDS:
        return timedelta(seconds=LABEL_SECONDS[timeframe.label])
    return timedelta(minutes=1)
