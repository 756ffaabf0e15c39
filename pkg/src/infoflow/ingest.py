"""Trade-tape ingestion: parsing, minute aggregation, returns, windowing.

Raw per-pair trade files (``timestamp,price,volume`` lines) are aggregated
to gap-free minute bars with volume-weighted prices, turned into
continuous log-return series, and sliced into weekly Monday-aligned
analysis windows.
"""
from __future__ import annotations

import datetime as dt
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateDataError
from .validation import check_labels

logger = logging.getLogger(__name__)

WEEK_MINUTES = 10080
ASSET_CLASSES = ("coin", "token", "stablecoin", "fiat")

UTC = dt.timezone.utc


@dataclass(frozen=True)
class TradeRecord:
    timestamp: int  # Unix seconds, UTC
    price: float    # fiat units per asset unit, > 0
    volume: float   # asset units, >= 0


@dataclass(frozen=True)
class MinuteBar:
    minute_index: int  # minutes since epoch, UTC
    price: float       # VWAP, or carried forward when synthetic
    volume: float
    synthetic: bool    # True for gap-filled bars (volume == 0)


@dataclass(frozen=True)
class AssetMeta:
    ticker: str
    asset_class: str
    first_day: dt.date

    def __post_init__(self):
        if self.asset_class not in ASSET_CLASSES:
            raise ValueError(
                f"class {self.asset_class!r} for {self.ticker} not in {ASSET_CLASSES}"
            )


@dataclass
class ParseResult:
    """Parsed trades plus per-line rejection diagnostics."""

    records: list[TradeRecord]
    rejected: list[tuple[int, str]] = field(default_factory=list)
    sorted_applied: bool = False


def parse_trades(raw) -> ParseResult:
    """Parse newline-delimited ``timestamp,price,volume`` records.

    Malformed lines are rejected with a (line number, reason) diagnostic,
    never silently dropped.  Records arriving out of timestamp order are
    sorted, with a diagnostic.  Duplicate timestamps are preserved as
    distinct records.
    """
    if isinstance(raw, str):
        lines: Iterable[str] = raw.splitlines()
    else:
        lines = raw
    records: list[TradeRecord] = []
    rejected: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            rejected.append((lineno, f"expected 3 fields, got {len(parts)}"))
            continue
        try:
            ts = int(parts[0])
            price = float(parts[1])
            volume = float(parts[2])
        except ValueError:
            rejected.append((lineno, "non-numeric field"))
            continue
        if not (np.isfinite(price) and np.isfinite(volume)):
            rejected.append((lineno, "non-finite field"))
            continue
        if price <= 0:
            rejected.append((lineno, "price <= 0"))
            continue
        if volume < 0:
            rejected.append((lineno, "volume < 0"))
            continue
        records.append(TradeRecord(ts, price, volume))

    if not records:
        logger.warning("no valid trades parsed (%d lines rejected)", len(rejected))
    for lineno, reason in rejected:
        logger.warning("line %d rejected: %s", lineno, reason)

    sorted_applied = False
    if any(records[i].timestamp > records[i + 1].timestamp for i in range(len(records) - 1)):
        records.sort(key=lambda r: r.timestamp)
        sorted_applied = True
        logger.warning("trades were out of timestamp order; sorted")
    return ParseResult(records=records, rejected=rejected, sorted_applied=sorted_applied)


def aggregate_minutes(
    trades: Sequence[TradeRecord],
    span: tuple[int, int] | None = None,
) -> list[MinuteBar]:
    """Aggregate trades to gap-free minute bars.

    Minutes with trades get the volume-weighted mean price and summed
    volume; trade-free minutes after the first trade carry the previous
    price forward with zero volume and ``synthetic=True``.  Minutes before
    the first trade produce no bars.  ``span`` is an inclusive
    ``(first_minute, last_minute)`` range; trades before it still seed the
    carried price.
    """
    for i in range(len(trades) - 1):
        if trades[i].timestamp > trades[i + 1].timestamp:
            raise ValueError("trades must be sorted by timestamp")
    if span is None:
        if not trades:
            return []
        span = (trades[0].timestamp // 60, trades[-1].timestamp // 60)
    first_minute, last_minute = span
    if last_minute < first_minute:
        raise ValueError("span end precedes span start")

    by_minute: dict[int, list[TradeRecord]] = {}
    last_price: float | None = None
    for tr in trades:
        minute = tr.timestamp // 60
        if minute < first_minute:
            last_price = tr.price
            continue
        if minute > last_minute:
            break
        by_minute.setdefault(minute, []).append(tr)

    bars: list[MinuteBar] = []
    for minute in range(first_minute, last_minute + 1):
        batch = by_minute.get(minute)
        if batch is not None:
            total_volume = sum(t.volume for t in batch)
            if total_volume > 0:
                price = sum(t.price * t.volume for t in batch) / total_volume
            else:
                price = sum(t.price for t in batch) / len(batch)
                logger.warning(
                    "minute %d has trades but zero total volume; unweighted mean price used",
                    minute,
                )
            bars.append(MinuteBar(minute, price, total_volume, synthetic=False))
            last_price = price
        elif last_price is not None:
            bars.append(MinuteBar(minute, last_price, 0.0, synthetic=True))
        # else: before the first trade, no bar
    return bars


def log_returns(bars: Sequence[MinuteBar]) -> np.ndarray:
    """Minute log returns ``ln(p_t) - ln(p_{t-1})``; length = len(bars) - 1."""
    if len(bars) < 2:
        raise DegenerateDataError("series too short: need at least 2 bars")
    prices = np.array([b.price for b in bars], dtype=np.float64)
    if (prices <= 0).any():
        raise ValueError("bar prices must be positive")
    return np.diff(np.log(prices))


def dollar_volume(bars: Sequence[MinuteBar], first_minute: int, last_minute: int) -> float:
    """Total traded value (price * volume) over an inclusive minute range."""
    return float(
        sum(b.price * b.volume for b in bars if first_minute <= b.minute_index <= last_minute)
    )


@dataclass(frozen=True)
class WindowCalendar:
    """Monday-aligned weekly analysis windows.

    Windows 0..n-2 are exactly 10080 minutes; the final window runs from
    its Monday to the last covered minute, so it may be irregular.
    ``start`` and ``end`` are Unix seconds; ``end`` marks the start of the
    final covered minute.
    """

    start: int
    window_count: int
    end: int
    minutes_per_window: int = WEEK_MINUTES

    def __post_init__(self):
        if self.start % 60 or self.end % 60:
            raise ValueError("calendar timestamps must be whole minutes")
        begin = dt.datetime.fromtimestamp(self.start, tz=UTC)
        if begin.weekday() != 0 or begin.time() != dt.time(0, 0):
            raise ValueError("calendar must start on a Monday at 00:00:00 UTC")
        if self.window_count < 1:
            raise ValueError("need at least one window")
        last_start = self.start_minute + (self.window_count - 1) * self.minutes_per_window
        if self.end_minute < last_start:
            raise ValueError("calendar end precedes the final window's Monday")

    @property
    def start_minute(self) -> int:
        return self.start // 60

    @property
    def end_minute(self) -> int:
        return self.end // 60

    def window_bounds(self, window_id: int) -> tuple[int, int]:
        """Inclusive (first_minute, last_minute) covered by a window."""
        if not 0 <= window_id < self.window_count:
            raise IndexError(f"window {window_id} out of range")
        first = self.start_minute + window_id * self.minutes_per_window
        if window_id == self.window_count - 1:
            return first, self.end_minute
        return first, first + self.minutes_per_window - 1

    def window_start_date(self, window_id: int) -> dt.date:
        first, _ = self.window_bounds(window_id)
        return dt.datetime.fromtimestamp(first * 60, tz=UTC).date()


def build_calendar(start: int, end: int, window_count: int | None = None) -> WindowCalendar:
    """Build the weekly calendar covering ``[start, end]``.

    Without an explicit count, the span is cut into as many complete weeks
    as fit, and any sub-week remainder is merged into the final window
    (a span shorter than one week becomes a single short window).
    """
    if window_count is None:
        total = end // 60 - start // 60 + 1
        window_count = max(1, total // WEEK_MINUTES)
    return WindowCalendar(start=start, window_count=window_count, end=end)


@dataclass(frozen=True)
class ReturnSeries:
    """Continuous minute log returns for one asset.

    ``first_minute`` indexes the first return (the minute after the
    asset's first bar); ``values[i]`` is the return over minute
    ``first_minute + i``.
    """

    ticker: str
    first_minute: int
    values: np.ndarray
    first_trade: int  # Unix seconds of the first observed trade

    @property
    def last_minute(self) -> int:
        return self.first_minute + len(self.values) - 1


def returns_from_bars(ticker: str, bars: Sequence[MinuteBar], first_trade: int | None = None) -> ReturnSeries:
    values = log_returns(bars)
    if first_trade is None:
        first_trade = bars[0].minute_index * 60
    return ReturnSeries(
        ticker=ticker,
        first_minute=bars[0].minute_index + 1,
        values=values,
        first_trade=first_trade,
    )


@dataclass
class ReturnPanel:
    """Aligned log-return matrix for one window.

    Active columns are fully finite; inactive columns (asset not yet
    listed for the whole window) are NaN and excluded downstream.
    """

    window_id: int
    labels: tuple[str, ...]
    values: np.ndarray
    active: np.ndarray
    first_trade: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = check_labels(self.labels, self.values.shape[1])
        self.active = np.asarray(self.active, dtype=bool)
        if self.active.shape != (self.values.shape[1],):
            raise ValueError("active mask length must match column count")
        for j in np.flatnonzero(self.active):
            if not np.isfinite(self.values[:, j]).all():
                raise ValueError(f"active column {self.labels[j]} has non-finite entries")

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def active_labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, a in zip(self.labels, self.active) if a)


def window_rows(cal: WindowCalendar, window_id: int, earliest_return_minute: int) -> tuple[int, int]:
    """Inclusive return-minute range a window's panel covers.

    Normally the window's own minute range: each window's first return is
    computed against the preceding window's final price.  If no series has
    a return at the very first calendar minute (no bar exists before the
    calendar start), window 0 starts one minute late and is one row short.
    """
    first, last = cal.window_bounds(window_id)
    if window_id == 0 and earliest_return_minute > first:
        return first + 1, last
    return first, last


def iter_windows(
    series: Mapping[str, ReturnSeries] | Sequence[ReturnSeries],
    cal: WindowCalendar,
    meta: Mapping[str, AssetMeta] | None = None,
):
    """Yield one ReturnPanel per calendar window (see ``slice_windows``)."""
    if not isinstance(series, Mapping):
        series = {s.ticker: s for s in series}
    if not series:
        raise ValueError("no return series supplied")
    tickers = sorted(series)
    earliest = min(s.first_minute for s in series.values())

    # Assets that never become active in any window are dropped up front.
    last_row_starts = [
        window_rows(cal, w, earliest)[0] for w in range(cal.window_count)
    ]
    kept: list[str] = []
    for tick in tickers:
        s = series[tick]
        if any(
            s.first_minute <= row_start and s.last_minute >= cal.window_bounds(w)[1]
            for w, row_start in enumerate(last_row_starts)
        ):
            kept.append(tick)
        else:
            logger.warning("asset %s inactive in every window; excluded", tick)
    if meta is not None:
        for tick in kept:
            if tick not in meta:
                logger.warning("asset %s missing from metadata registry", tick)

    first_trade = {tick: series[tick].first_trade for tick in kept}
    for w in range(cal.window_count):
        row_first, row_last = window_rows(cal, w, earliest)
        T = row_last - row_first + 1
        values = np.full((T, len(kept)), np.nan)
        active = np.zeros(len(kept), dtype=bool)
        for j, tick in enumerate(kept):
            s = series[tick]
            if s.first_minute <= row_first and s.last_minute >= row_last:
                offset = row_first - s.first_minute
                values[:, j] = s.values[offset : offset + T]
                active[j] = True
        yield ReturnPanel(
            window_id=w,
            labels=tuple(kept),
            values=values,
            active=active,
            first_trade=first_trade,
        )


def slice_windows(
    series: Mapping[str, ReturnSeries] | Sequence[ReturnSeries],
    cal: WindowCalendar,
    meta: Mapping[str, AssetMeta] | None = None,
) -> list[ReturnPanel]:
    """Slice continuous return series into aligned per-window panels.

    Returns are taken from the continuous series, so a window's first
    return uses the final price of the preceding window.  An asset is
    active in a window when its first trade precedes the window's first
    return row and its series covers the window.
    """
    return list(iter_windows(series, cal, meta))


def load_registry(path) -> dict[str, AssetMeta]:
    """Load the ``ticker,class,first_day`` metadata registry CSV."""
    registry: dict[str, AssetMeta] = {}
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().lower()
        if header.split(",")[:3] != ["ticker", "class", "first_day"]:
            raise ValueError(f"{path}: expected header 'ticker,class,first_day'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            ticker, cls, first_day = line.split(",")[:3]
            if ticker in registry:
                raise ValueError(f"{path}:{lineno}: duplicate ticker {ticker}")
            day = dt.datetime.strptime(first_day, "%Y%m%d").date()
            registry[ticker] = AssetMeta(ticker=ticker, asset_class=cls, first_day=day)
    return registry


def write_panel_csv(path, panel: ReturnPanel) -> None:
    """Write a panel's active columns: ticker header plus T data rows."""
    idx = np.flatnonzero(panel.active)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(panel.labels[j] for j in idx) + "\n")
        for row in panel.values[:, idx]:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


_PANEL_NAME = re.compile(r"panel_(\d+)\.csv$")


def read_panel_csv(path, window_id: int | None = None) -> ReturnPanel:
    """Read a panel written by ``write_panel_csv``; all columns are active."""
    if window_id is None:
        match = _PANEL_NAME.search(str(path))
        if not match:
            raise ValueError(f"cannot infer window id from {path}")
        window_id = int(match.group(1))
    with open(path, "r", encoding="ascii") as fh:
        labels = tuple(fh.readline().strip().split(","))
        rows = [
            [float(v) for v in line.rstrip("\n").split(",")] for line in fh if line.strip()
        ]
    if not labels or labels == ("",):
        raise ValueError(f"{path}: no columns")
    values = np.array(rows, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != len(labels):
        raise ValueError(f"{path}: malformed panel data")
    return ReturnPanel(
        window_id=window_id,
        labels=labels,
        values=values,
        active=np.ones(len(labels), dtype=bool),
    )
