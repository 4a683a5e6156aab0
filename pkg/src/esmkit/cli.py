"""Command-line entry point.

Subcommands: ingest, simulate, ned, states, signals, turnpoints, backtest,
report. A flat key=value config file can preload any option; explicit flags
win over the file, which wins over built-in defaults. Exit codes: 0 success,
1 usage error, 2 data error. ``ESM_LOG`` sets verbosity (error/info/debug).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .backtest import ReversalSpec, build_report, emit_report, replay
from .errors import ConfigError, DataError, EsmError
from .esmsim import EsmParams, MTerm, constant_ned, simulate_bars, sinusoid_ned
from .marketdata import Timeframe, parse_bar_csv, resample_bars, write_bar_csv
from .nedcore import ProxyKind, ned_series, write_ned_csv
from .signals import DetectorConfig, detect_signals, write_signal_csv
from .states import TrioConfig, ZeroRule, state_series, write_state_csv
from .turningpoints import turning_points, write_turning_point_csv

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(message)


@dataclass
class RunConfig:
    """Resolved options for one run; mirrors the config-file keys."""

    data: str | None = None
    out: str = "out"
    timezone: str = "America/New_York"
    proxy: ProxyKind = ProxyKind.CANDLE
    fine: Timeframe = Timeframe("1d", 1)
    mid: Timeframe = Timeframe("1w", 5)
    coarse: Timeframe = Timeframe("1mo", 20)
    zero_rule: ZeroRule = ZeroRule.TREAT_AS_N
    k: int = 2
    eps_price: float = 5e-4
    eps_ned: float = 0.02
    pair_window: int = 2
    trend_lookback: int = 20
    horizon: int = 7
    move_threshold: float = 5e-3
    proximity: float = 5e-3
    bracket_width: float = 0.20
    tol: float = 1e-6
    skip_bad: bool = False
    recompute_proxy_on_coarse: bool = False
    extra: dict = field(default_factory=dict)

    def trio(self) -> TrioConfig:
        return TrioConfig(
            fine=self.fine, mid=self.mid, coarse=self.coarse,
            proxy=self.proxy, zero_rule=self.zero_rule,
        )

    def detector(self) -> DetectorConfig:
        return DetectorConfig(
            k=self.k, eps_price=self.eps_price, eps_ned=self.eps_ned,
            pair_window=self.pair_window, trend_lookback=self.trend_lookback,
        )

    def reversal(self) -> ReversalSpec:
        return ReversalSpec(horizon=self.horizon, move_threshold=self.move_threshold)

    def echo(self) -> dict:
        # the output directory is where results land, not what they are;
        # leaving it out keeps run.json byte-identical across target dirs
        return {
            "data": self.data,
            "timezone": self.timezone,
            "proxy": self.proxy.value,
            "fine": f"{self.fine.label}:{self.fine.multiple}",
            "mid": f"{self.mid.label}:{self.mid.multiple}",
            "coarse": f"{self.coarse.label}:{self.coarse.multiple}",
            "zero_rule": self.zero_rule.value,
            "k": self.k,
            "eps_price": self.eps_price,
            "eps_ned": self.eps_ned,
            "pair_window": self.pair_window,
            "trend_lookback": self.trend_lookback,
            "horizon": self.horizon,
            "move_threshold": self.move_threshold,
            "proximity": self.proximity,
            "bracket_width": self.bracket_width,
            "tol": self.tol,
            "skip_bad": self.skip_bad,
            "recompute_proxy_on_coarse": self.recompute_proxy_on_coarse,
        }


_BOOL_KEYS = {"skip_bad", "recompute_proxy_on_coarse"}
_INT_KEYS = {"k", "pair_window", "trend_lookback", "horizon"}
_FLOAT_KEYS = {
    "eps_price", "eps_ned", "move_threshold", "proximity", "bracket_width", "tol",
}


def load_config_file(path: str) -> dict:
    """Parse a flat key=value file; '#' starts a comment."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _coerce(cfg: RunConfig, key: str, value: str) -> None:
    if key in _BOOL_KEYS:
        setattr(cfg, key, value.lower() in ("1", "true", "yes", "on"))
    elif key in _INT_KEYS:
        setattr(cfg, key, int(value))
    elif key in _FLOAT_KEYS:
        setattr(cfg, key, float(value))
    elif key in ("fine", "mid", "coarse"):
        setattr(cfg, key, Timeframe.parse(value))
    elif key == "proxy":
        setattr(cfg, key, ProxyKind(value))
    elif key == "zero_rule":
        setattr(cfg, key, ZeroRule(value))
    elif key in ("data", "out", "timezone"):
        setattr(cfg, key, value)
    else:
        cfg.extra[key] = value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, value in load_config_file(args.config).items():
            try:
                _coerce(cfg, key, value)
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
    for key in list(cfg.echo()):
        flag = getattr(args, key, None)
        if flag is not None:
            try:
                _coerce(cfg, key, str(flag))
            except ValueError as exc:
                raise UsageError(f"--{key.replace('_', '-')}: {exc}") from exc
    return cfg


def _add_common(p: _Parser, *, data_positional: bool = True) -> None:
    if data_positional:
        p.add_argument("data", nargs="?", help="bar CSV path (.gz accepted)")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--data", dest="data_flag", help="bar CSV path (overrides positional)")
    p.add_argument("--out", help="output path or directory ('-' for stdout)")
    p.add_argument("--proxy", choices=["flow", "candle"])
    p.add_argument("--fine", help="fine timeframe, e.g. 1d:1")
    p.add_argument("--mid", help="mid timeframe, e.g. 1w:5")
    p.add_argument("--coarse", help="coarse timeframe, e.g. 1mo:20")
    p.add_argument("--zero-rule", dest="zero_rule", choices=["n", "carry"])
    p.add_argument("--timezone")
    p.add_argument("--skip-bad", dest="skip_bad", action="store_const", const=True)


def _add_detector(p: _Parser) -> None:
    p.add_argument("--k", type=int)
    p.add_argument("--eps-price", dest="eps_price", type=float)
    p.add_argument("--eps-ned", dest="eps_ned", type=float)
    p.add_argument("--pair-window", dest="pair_window", type=int)
    p.add_argument("--trend-lookback", dest="trend_lookback", type=int)


def build_parser() -> _Parser:
    parser = _Parser(prog="esm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"esm {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="parse, validate, and optionally resample a bar CSV")
    _add_common(p)
    p.add_argument("--resample", type=int, help="aggregate every N bars")

    p = sub.add_parser("simulate", help="emit synthetic bars from the rate-equation model")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", help="output path ('-' for stdout)")
    p.add_argument("--h-gain", dest="h_gain", type=float, default=1.0)
    p.add_argument("--ned", default="const:0.5",
                   help="driving path: const:X or sin:AMP,PERIOD")
    p.add_argument("--m", default="zero", help="drift term: zero, const:X, or sin:AMP,PERIOD")
    p.add_argument("--dt", type=float, default=1.0 / 390.0)
    p.add_argument("--p0", type=float, default=100.0)
    p.add_argument("--bars", type=int, default=390)
    p.add_argument("--substeps", type=int, default=10)
    p.add_argument("--volume", type=float, default=1000.0)
    p.add_argument("--start", default="2025-01-02T14:30:00Z")
    p.add_argument("--bar-minutes", dest="bar_minutes", type=float, default=1.0)

    p = sub.add_parser("ned", help="windowed imbalance series for one timeframe")
    _add_common(p)
    p.add_argument("--timeframe", default="1d:1", help="target timeframe, e.g. 15m:3")
    p.add_argument("--recompute-proxy-on-coarse", dest="recompute_proxy_on_coarse",
                   action="store_const", const=True)

    p = sub.add_parser("states", help="eight-state series over a timeframe trio")
    _add_common(p)

    p = sub.add_parser("signals", help="directional signal events at the fine timeframe")
    _add_common(p)
    _add_detector(p)

    p = sub.add_parser("turnpoints", help="T2/T4 turning-price forecasts per fine close")
    _add_common(p)
    p.add_argument("--bracket-width", dest="bracket_width", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("backtest", help="full replay with scoring and report files")
    _add_common(p)
    _add_detector(p)
    p.add_argument("--bracket-width", dest="bracket_width", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--proximity", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--move-threshold", dest="move_threshold", type=float)

    p = sub.add_parser("report", help="print a text summary of a finished backtest run")
    p.add_argument("rundir", help="directory written by 'esm backtest'")
    return parser


def _out_stream(args, cfg: RunConfig):
    out = getattr(args, "out", None) or None
    if out == "-" or (out is None and cfg.out == "-"):
        return sys.stdout, False
    path = Path(out or cfg.out)
    if path.is_dir():
        raise UsageError(f"--out {path} is a directory; give a file path")
    return open(path, "w", encoding="utf-8"), True


def _load_bars(args, cfg: RunConfig):
    data = getattr(args, "data_flag", None) or getattr(args, "data", None) or cfg.data
    if not data:
        raise UsageError("no input data given (positional, --data, or config data=)")
    if not Path(data).exists():
        raise DataError(f"input file not found: {data}")
    cfg.data = data
    bars = parse_bar_csv(data, skip_bad=cfg.skip_bad)
    logger.info("loaded %d bars from %s", len(bars), data)
    return bars


def _parse_path_spec(text: str):
    kind, _, rest = text.partition(":")
    if kind == "const":
        return constant_ned(float(rest))
    if kind == "sin":
        amp, _, period = rest.partition(",")
        return sinusoid_ned(float(amp), float(period))
    raise UsageError(f"cannot parse path spec {text!r} (want const:X or sin:A,P)")


def _parse_m_spec(text: str) -> MTerm:
    if text == "zero":
        return MTerm()
    kind, _, rest = text.partition(":")
    if kind == "const":
        return MTerm(kind="constant", value=float(rest))
    if kind == "sin":
        amp, _, period = rest.partition(",")
        return MTerm(kind="sinusoid", amplitude=float(amp), period=float(period))
    raise UsageError(f"cannot parse m-term {text!r} (want zero, const:X, or sin:A,P)")


def cmd_ingest(args) -> int:
    cfg = resolve_config(args)
    bars = _load_bars(args, cfg)
    if getattr(args, "resample", None):
        bars = resample_bars(bars, args.resample)
    fh, close = _out_stream(args, cfg)
    try:
        write_bar_csv(bars, fh)
    finally:
        if close:
            fh.close()
    return 0


def cmd_simulate(args) -> int:
    from datetime import timedelta

    cfg = resolve_config(args)
    params = EsmParams(
        h_gain=args.h_gain,
        ned_path=_parse_path_spec(args.ned),
        m_term=_parse_m_spec(args.m),
        dt=args.dt,
        p0=args.p0,
    )
    start = datetime.fromisoformat(args.start.replace("Z", "+00:00"))
    if start.tzinfo is None:
        start = start.replace(tzinfo=timezone.utc)
    bars = simulate_bars(
        params, args.bars, substeps=args.substeps, start=start,
        bar_period=timedelta(minutes=args.bar_minutes), base_volume=args.volume,
    )
    fh, close = _out_stream(args, cfg)
    try:
        write_bar_csv(bars, fh)
    finally:
        if close:
            fh.close()
    return 0


def cmd_ned(args) -> int:
    cfg = resolve_config(args)
    bars = _load_bars(args, cfg)
    series = ned_series(
        bars, Timeframe.parse(args.timeframe), cfg.proxy,
        derive_from_coarse_candle=cfg.recompute_proxy_on_coarse,
    )
    fh, close = _out_stream(args, cfg)
    try:
        write_ned_csv(series, fh)
    finally:
        if close:
            fh.close()
    return 0


def cmd_states(args) -> int:
    cfg = resolve_config(args)
    bars = _load_bars(args, cfg)
    states = state_series(bars, cfg.trio())
    fh, close = _out_stream(args, cfg)
    try:
        write_state_csv(states, fh)
    finally:
        if close:
            fh.close()
    return 0


def cmd_signals(args) -> int:
    cfg = resolve_config(args)
    bars = _load_bars(args, cfg)
    log = replay(bars, cfg.trio(), cfg.detector(), proximity=cfg.proximity,
                 bracket_width=cfg.bracket_width, tol=cfg.tol)
    fh, close = _out_stream(args, cfg)
    try:
        write_signal_csv(log.signals, fh)
    finally:
        if close:
            fh.close()
    return 0


def cmd_turnpoints(args) -> int:
    cfg = resolve_config(args)
    bars = _load_bars(args, cfg)
    tps = turning_points(bars, cfg.trio(), bracket_width=cfg.bracket_width, tol=cfg.tol)
    fh, close = _out_stream(args, cfg)
    try:
        write_turning_point_csv(tps, fh)
    finally:
        if close:
            fh.close()
    return 0


def cmd_backtest(args) -> int:
    cfg = resolve_config(args)
    bars = _load_bars(args, cfg)
    log = replay(bars, cfg.trio(), cfg.detector(), proximity=cfg.proximity,
                 bracket_width=cfg.bracket_width, tol=cfg.tol)
    report = build_report(log, bars, spec=cfg.reversal(), config=cfg.echo(),
                          tz=cfg.timezone)
    out = getattr(args, "out", None) or cfg.out
    if out == "-":
        raise UsageError("backtest writes a directory; --out - is not supported")
    written = emit_report(report, log, out)
    logger.info("wrote %s into %s", ", ".join(written), out)
    return 0


def cmd_report(args) -> int:
    rundir = Path(args.rundir)
    run_json = rundir / "run.json"
    if not run_json.exists():
        raise DataError(f"not a backtest run directory (missing {run_json})")
    run = json.loads(run_json.read_text(encoding="utf-8"))
    lines = [
        f"run over {run.get('bars', '?')} bars, span {run.get('span')}",
        f"kernel: {run.get('kernel')}  config hash: {run.get('config_hash', '')[:12]}",
        f"signal counts: {run.get('signal_counts')}",
        f"state occupancy (1..8): {run.get('state_occupancy')}",
        f"reversal hit rate: {run.get('hit_rate')}",
        f"mean session volatility: {run.get('mean_volatility')}",
    ]
    reversals = rundir / "reversals.csv"
    if reversals.exists():
        lines.append("reversal scores:")
        lines.extend("  " + row for row in reversals.read_text().strip().splitlines())
    print("\n".join(lines))
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "simulate": cmd_simulate,
    "ned": cmd_ned,
    "states": cmd_states,
    "signals": cmd_signals,
    "turnpoints": cmd_turnpoints,
    "backtest": cmd_backtest,
    "report": cmd_report,
}


def run(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("ESM_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except EsmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help / --version
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
