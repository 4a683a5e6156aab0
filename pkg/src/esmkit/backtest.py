"""Historical replay, reversal scoring, and report emission.

``replay`` folds base bars through the full pipeline (imbalance, states,
signals, turning points, outlooks) with one log row per completed fine
window and no lookahead: replaying any prefix of the bars reproduces the
corresponding prefix of the log. ``evaluate_reversals`` scores the
reversal-type signals against subsequent closes, and ``emit_report`` writes
the full CSV/SVG/JSON output set byte-deterministically.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Mapping, Sequence

from . import __version__ as _version
from . import kernels
from .errors import DataError
from .marketdata import (
    Bar,
    format_ts,
    infer_bar_period,
    resample_bars,
    session_volatility,
    split_sessions,
    write_bar_csv,
)
from .nedcore import FlowSplit, NedPoint, NedSeries, flow_arrays
from .signals import (
    DetectorConfig,
    Outlook,
    SignalEvent,
    SignalKind,
    combine_outlook,
    detect_signals,
    write_outlook_csv,
    write_signal_csv,
)
from .states import MarketState, TrioConfig, state_series, write_state_csv
from .turningpoints import (
    TurningPointForecast,
    turning_points,
    write_turning_point_csv,
)

logger = logging.getLogger(__name__)

UP_KINDS = (SignalKind.S3_REVERSE_UP, SignalKind.S6_INFORMED_BUYING)
DOWN_KINDS = (SignalKind.S4_REVERSE_DOWN, SignalKind.S5_INFORMED_SELLING)


@dataclass(frozen=True, slots=True)
class ReversalSpec:
    """What counts as a materialized reversal: a relative close-to-close move
    within ``horizon`` bars of the signal's own timeframe."""

    horizon: int = 7
    move_threshold: float = 5e-3

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.move_threshold > 0:
            raise ValueError("move_threshold must be > 0")


@dataclass(frozen=True, slots=True)
class ReplayLog:
    """Everything one replay emits, aligned per completed fine window."""

    fine_bars: tuple[Bar, ...]
    fine_ned: NedSeries
    states: tuple[MarketState, ...]
    tps: tuple[tuple[TurningPointForecast, TurningPointForecast], ...]
    signals: tuple[SignalEvent, ...]
    outlooks: tuple[Outlook, ...]


@dataclass(frozen=True, slots=True)
class KindScore:
    emitted: int = 0
    hits: int = 0
    misses: int = 0
    unresolved: int = 0

    @property
    def hit_rate(self) -> float | None:
        resolved = self.hits + self.misses
        return self.hits / resolved if resolved else None


@dataclass(frozen=True, slots=True)
class VolatilityTable:
    rows: tuple[tuple[date, float], ...]
    mean: float | None
    notes: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class BacktestReport:
    scores: Mapping[str, KindScore]
    signal_counts: Mapping[str, int]
    state_occupancy: tuple[int, ...]  # counts for states 1..8
    volatility: VolatilityTable
    config: Mapping[str, object] = field(default_factory=dict)
    config_hash: str = ""
    data_hash: str = ""
    span: tuple[str, str] | None = None
    n_bars: int = 0

    @property
    def hit_rate(self) -> float | None:
        hits = sum(s.hits for s in self.scores.values())
        misses = sum(s.misses for s in self.scores.values())
        return hits / (hits + misses) if hits + misses else None


def replay(
    bars: Sequence[Bar],
    cfg: TrioConfig | None = None,
    det: DetectorConfig | None = None,
    proximity: float = 5e-3,
    bracket_width: float = 0.20,
    tol: float = 1e-6,
) -> ReplayLog:
    """Run the full pipeline over history, one emission per completed fine window.

    Zero-flow fine windows carry the previous imbalance value forward (0 at
    the very start) so the signal series stays aligned with the fine bars.
    """
    cfg = cfg or TrioConfig()
    det = det or DetectorConfig()
    if not bars:
        return ReplayLog((), NedSeries(cfg.fine, ()), (), (), (), ())
    if len(bars) < cfg.coarse.multiple:
        raise DataError(
            f"need at least one coarse window ({cfg.coarse.multiple} bars), got {len(bars)}"
        )

    f_mult = cfg.fine.multiple
    fine_bars = list(bars) if f_mult == 1 else resample_bars(bars, f_mult)
    n_fine = len(bars) // f_mult
    fine_bars = fine_bars[:n_fine]  # completed fine windows only

    period = infer_bar_period(bars, cfg.fine)
    buy_arr, sell_arr = flow_arrays(bars, cfg.proxy)
    bounds = [i * f_mult for i in range(n_fine + 1)]
    buys = kernels.window_sums(buy_arr, bounds)
    sells = kernels.window_sums(sell_arr, bounds)
    ned_values: list[float] = []
    points: list[NedPoint] = []
    prev = 0.0
    for i in range(n_fine):
        total = buys[i] + sells[i]
        if total <= 0:
            logger.info("zero-flow fine window %d; carrying previous imbalance", i)
            value = prev
        else:
            value = (buys[i] - sells[i]) / total
        prev = value
        ned_values.append(value)
        points.append(
            NedPoint(
                window_end=bars[(i + 1) * f_mult - 1].timestamp + period,
                timeframe=cfg.fine,
                value=value,
                window_flow=FlowSplit(max(buys[i], 0.0), max(sells[i], 0.0)),
            )
        )
    fine_ned = NedSeries(cfg.fine, tuple(points))

    states = state_series(bars, cfg)
    tps = turning_points(bars, cfg, bracket_width=bracket_width, tol=tol)
    signals = detect_signals(fine_bars, fine_ned, det)

    by_bar: dict[int, list[SignalEvent]] = {}
    for ev in signals:
        by_bar.setdefault(ev.bar_index, []).append(ev)
    outlooks: list[Outlook] = []
    recent: list[SignalEvent] = []
    for i in range(n_fine):
        recent.extend(by_bar.get(i, ()))
        recent = [e for e in recent if i - e.bar_index <= det.trend_lookback]
        outlooks.append(
            combine_outlook(
                states[i], recent, tps[i], fine_bars[i].close, proximity=proximity
            )
        )

    return ReplayLog(
        fine_bars=tuple(fine_bars),
        fine_ned=fine_ned,
        states=tuple(states),
        tps=tuple(tps),
        signals=tuple(signals),
        outlooks=tuple(outlooks),
    )


def evaluate_reversals(
    log: ReplayLog, spec: ReversalSpec | None = None
) -> dict[str, KindScore]:
    """Score S3-S6 events against subsequent fine closes.

    An upward forecast hits when some close within the horizon exceeds the
    signal-bar close by the move threshold; downward mirrored. Events
    without a full horizon of subsequent bars stay unresolved, whatever the
    partial window shows. Trend signals S1/S2 are not reversal forecasts
    and are not scored.
    """
    spec = spec or ReversalSpec()
    closes = [b.close for b in log.fine_bars]
    counts: dict[str, list[int]] = {
        k.short_name: [0, 0, 0, 0] for k in (*UP_KINDS, *DOWN_KINDS)
    }
    for ev in log.signals:
        if ev.kind not in UP_KINDS and ev.kind not in DOWN_KINDS:
            continue
        c = counts[ev.kind.short_name]
        c[0] += 1
        future = closes[ev.bar_index + 1 : ev.bar_index + 1 + spec.horizon]
        if len(future) < spec.horizon:
            c[3] += 1
            continue
        ref = closes[ev.bar_index]
        if ev.kind in UP_KINDS:
            hit = max(future) >= ref * (1.0 + spec.move_threshold)
        else:
            hit = min(future) <= ref * (1.0 - spec.move_threshold)
        c[1 if hit else 2] += 1
    return {
        name: KindScore(emitted=c[0], hits=c[1], misses=c[2], unresolved=c[3])
        for name, c in sorted(counts.items())
    }


def volatility_report(
    bars: Sequence[Bar],
    prev_closes: Mapping[date, float] | None = None,
    tz: str = "UTC",
) -> VolatilityTable:
    """Per-session high-low range over prior close, plus the span mean.

    The prior close defaults to the previous session's last close;
    ``prev_closes`` entries override per date. A first session with no
    prior close available is omitted with a note.
    """
    sessions = split_sessions(bars, tz)
    rows: list[tuple[date, float]] = []
    notes: list[str] = []
    prev_close: float | None = None
    for day, day_bars in sessions:
        ref = prev_closes.get(day) if prev_closes else None
        if ref is None:
            ref = prev_close
        if ref is None:
            notes.append(f"{day.isoformat()}: no prior close; session omitted")
        else:
            rows.append((day, session_volatility(day_bars, ref)))
        prev_close = day_bars[-1].close
    mean = sum(v for _, v in rows) / len(rows) if rows else None
    return VolatilityTable(rows=tuple(rows), mean=mean, notes=tuple(notes))


def build_report(
    log: ReplayLog,
    bars: Sequence[Bar],
    spec: ReversalSpec | None = None,
    config: Mapping[str, object] | None = None,
    tz: str = "UTC",
    prev_closes: Mapping[date, float] | None = None,
) -> BacktestReport:
    """Assemble scoring, occupancy, volatility, and run metadata."""
    scores = evaluate_reversals(log, spec)
    signal_counts = {f"S{n}": 0 for n in range(1, 7)}
    for ev in log.signals:
        signal_counts[ev.kind.short_name] += 1
    occupancy = [0] * 8
    for st in log.states:
        occupancy[st.index - 1] += 1
    vol = volatility_report(bars, prev_closes=prev_closes, tz=tz)
    config = dict(config or {})
    config_hash = hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode()
    ).hexdigest()
    buf = io.StringIO()
    write_bar_csv(bars, buf)
    data_hash = hashlib.sha256(buf.getvalue().encode()).hexdigest()
    span = (
        (format_ts(bars[0].timestamp), format_ts(bars[-1].timestamp)) if bars else None
    )
    return BacktestReport(
        scores=scores,
        signal_counts=signal_counts,
        state_occupancy=tuple(occupancy),
        volatility=vol,
        config=config,
        config_hash=config_hash,
        data_hash=data_hash,
        span=span,
        n_bars=len(bars),
    )


def write_reversal_csv(scores: Mapping[str, KindScore], fh: IO[str]) -> None:
    fh.write("kind,emitted,hits,misses,unresolved,hit_rate\n")
    total = [0, 0, 0, 0]
    for name, s in scores.items():
        rate = "NA" if s.hit_rate is None else repr(s.hit_rate)
        fh.write(f"{name},{s.emitted},{s.hits},{s.misses},{s.unresolved},{rate}\n")
        total[0] += s.emitted
        total[1] += s.hits
        total[2] += s.misses
        total[3] += s.unresolved
    resolved = total[1] + total[2]
    rate = repr(total[1] / resolved) if resolved else "NA"
    fh.write(f"total,{total[0]},{total[1]},{total[2]},{total[3]},{rate}\n")


def write_volatility_csv(vol: VolatilityTable, fh: IO[str]) -> None:
    fh.write("date,v\n")
    for day, v in vol.rows:
        fh.write(f"{day.isoformat()},{v!r}\n")
    if vol.mean is not None:
        fh.write(f"mean,{vol.mean!r}\n")


def emit_report(report: BacktestReport, log: ReplayLog, out_dir) -> list[str]:
    """Write the full output set; byte-identical for identical inputs."""
    from pathlib import Path

    from .chart import render_chart

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    def emit(name: str, writer, *args) -> None:
        path = out / name
        buf = io.StringIO()
        writer(*args, buf)
        path.write_text(buf.getvalue(), encoding="utf-8")
        written.append(name)

    emit("states.csv", write_state_csv, log.states)
    emit("signals.csv", write_signal_csv, log.signals)
    emit("turning_points.csv", write_turning_point_csv, log.tps)
    emit("outlooks.csv", write_outlook_csv, log.outlooks)
    emit("reversals.csv", write_reversal_csv, report.scores)
    emit("volatility.csv", write_volatility_csv, report.volatility)

    (out / "chart.svg").write_text(render_chart(log), encoding="utf-8")
    written.append("chart.svg")

    run = {
        "version": _version,
        "kernel": kernels.IMPL,
        "config": report.config,
        "config_hash": report.config_hash,
        "data_hash": report.data_hash,
        "bars": report.n_bars,
        "span": list(report.span) if report.span else None,
        "signal_counts": report.signal_counts,
        "state_occupancy": list(report.state_occupancy),
        "hit_rate": report.hit_rate,
        "mean_volatility": report.volatility.mean,
        "notes": list(report.volatility.notes),
    }
    (out / "run.json").write_text(
        json.dumps(run, sort_keys=True, indent=2, default=str) + "\n", encoding="utf-8"
    )
    written.append("run.json")
    return written
