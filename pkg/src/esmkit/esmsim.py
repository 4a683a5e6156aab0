"""Log-price rate-equation simulator for synthetic fixtures.

Integrates d(ln p)/dt = H(x(t)) + M(t) with explicit Euler steps, where
x(t) is a prescribed normalized-excess-demand path in [-1, +1] and H is
linear with positive gain (the minimal increasing form with H(0) = 0).
Log-space stepping keeps prices strictly positive and makes the first-order
convergence of the scheme directly testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Callable, Sequence

from .marketdata import Bar


@dataclass(frozen=True, slots=True)
class MTerm:
    """Price-maker drift term: zero, a constant, or a sinusoid of time."""

    kind: str = "zero"
    value: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "sinusoid"):
            raise ValueError(f"unknown m-term kind {self.kind!r}")
        if self.kind == "sinusoid" and self.period <= 0:
            raise ValueError("sinusoid period must be > 0")

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "sinusoid":
            return self.amplitude * math.sin(2.0 * math.pi * t / self.period)
        return 0.0


def constant_ned(c: float) -> Callable[[float], float]:
    return lambda t: c


def sinusoid_ned(amplitude: float, period: float) -> Callable[[float], float]:
    if period <= 0:
        raise ValueError("period must be > 0")
    return lambda t: amplitude * math.sin(2.0 * math.pi * t / period)


@dataclass(frozen=True, slots=True)
class EsmParams:
    """Parameters of one simulation run.

    ``ned_path`` maps time to an imbalance value in [-1, +1]; a sequence or
    a recorded imbalance series is treated as per-step values (the final
    value extends past the end). ``dt`` is in sessions by convention, with
    one minute = 1/390 of a session as the default step.
    """

    h_gain: float
    ned_path: Callable[[float], float] | Sequence[float]
    m_term: MTerm = MTerm()
    dt: float = 1.0 / 390.0
    p0: float = 100.0

    def __post_init__(self):
        if not self.h_gain > 0:
            raise ValueError("h_gain must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.p0 > 0:
            raise ValueError("p0 must be > 0")
        if hasattr(self.ned_path, "points"):  # recorded series -> step values
            object.__setattr__(self, "ned_path", tuple(self.ned_path.values()))
        if not callable(self.ned_path) and len(self.ned_path) == 0:
            raise ValueError("ned_path sequence must not be empty")

    def ned_at(self, t: float, step: int) -> float:
        if callable(self.ned_path):
            x = float(self.ned_path(t))
        else:
            x = float(self.ned_path[min(step, len(self.ned_path) - 1)])
        if not -1.0 <= x <= 1.0:
            raise ValueError(f"ned value {x} at t={t} outside [-1, 1]")
        return x


def simulate_prices(params: EsmParams, steps: int) -> list[tuple[float, float]]:
    """Explicit Euler in log price; returns (time, price) incl. the initial point."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    out = [(0.0, params.p0)]
    ln_p = math.log(params.p0)
    for k in range(steps):
        t = k * params.dt
        ln_p += (params.h_gain * params.ned_at(t, k) + params.m_term(t)) * params.dt
        out.append(((k + 1) * params.dt, math.exp(ln_p)))
    return out


def simulate_bars(
    params: EsmParams,
    n_bars: int,
    substeps: int = 10,
    start: datetime | None = None,
    bar_period: timedelta = timedelta(minutes=1),
    base_volume: float = 1000.0,
) -> list[Bar]:
    """Build synthetic bars from a simulated path.

    Each bar aggregates ``substeps`` Euler points (open/close from the
    endpoints, high/low from the extremes) and carries buy/sell columns
    sized so the flow-proxy imbalance of the bar equals the driving path
    value at the bar open. A monotone intra-bar path also closes at its
    range extreme, so the candle proxy reproduces the driving sign.
    """
    if n_bars < 1:
        raise ValueError("n_bars must be >= 1")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if start is None:
        start = datetime(2025, 1, 2, 14, 30, tzinfo=timezone.utc)
    path = simulate_prices(params, n_bars * substeps)
    prices = [p for _, p in path]
    bars: list[Bar] = []
    for i in range(n_bars):
        seg = prices[i * substeps : (i + 1) * substeps + 1]
        x = params.ned_at(i * substeps * params.dt, i * substeps)
        buy = base_volume * (1.0 + x) / 2.0
        sell = base_volume * (1.0 - x) / 2.0
        bars.append(
            Bar(
                timestamp=start + i * bar_period,
                open=seg[0],
                high=max(seg),
                low=min(seg),
                close=seg[-1],
                volume=base_volume,
                buy_volume=buy,
                sell_volume=sell,
            )
        )
    return bars
