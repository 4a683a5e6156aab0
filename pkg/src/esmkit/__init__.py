"""Signal engine for normalized-excess-demand market analysis.

Parses OHLCV/tick data, computes windowed buy-sell imbalance over nested
timeframes, classifies the eight sentiment states, detects the six
directional signals, solves turning-point price levels, simulates the
underlying log-price rate equation for synthetic fixtures, and replays
history to score reversal forecasts.
"""

__version__ = "0.1.0"

from .backtest import (
    BacktestReport,
    KindScore,
    ReplayLog,
    ReversalSpec,
    VolatilityTable,
    build_report,
    emit_report,
    evaluate_reversals,
    replay,
    volatility_report,
)
from .errors import (
    ConfigError,
    DataError,
    EsmError,
    InternalConsistencyError,
    UndefinedFlowError,
)
from .esmsim import EsmParams, MTerm, constant_ned, simulate_bars, simulate_prices, sinusoid_ned
from .marketdata import (
    Bar,
    Side,
    Timeframe,
    TradeTick,
    parse_bar_csv,
    parse_tick_csv,
    resample_bars,
    session_volatility,
    tick_rule_classify,
    write_bar_csv,
)
from .nedcore import (
    FlowSplit,
    NedPoint,
    NedSeries,
    ProxyKind,
    candle_flow_proxy,
    ned_from_flow,
    ned_series,
    window_flow,
)
from .signals import (
    DetectorConfig,
    Extremum,
    ExtremumKind,
    Outlook,
    OutlookDirection,
    SignalEvent,
    SignalKind,
    combine_outlook,
    detect_signals,
    find_extrema,
)
from .states import (
    MarketState,
    Sign,
    SignTrio,
    TrioConfig,
    ZeroRule,
    classify_state,
    sign_of,
    state_series,
)
from .turningpoints import (
    TpDirection,
    TpKind,
    TurningPointForecast,
    solve_turning_price,
    turning_points,
    window_ned_at_price,
)
