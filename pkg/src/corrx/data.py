"""Loading, transforming and aligning daily return and regressor panels.

Dates are held as ``numpy.datetime64[D]`` arrays.  Missing cells are stored
as NaN and flagged; nothing is filled unless :func:`forward_fill` is called
explicitly.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from corrx.exceptions import (
    DataError,
    DateMismatchError,
    DuplicateDateError,
    EmptyIntersectionError,
    MissingValueError,
    NonPositivePriceError,
    OverlappingIntervalsError,
    RaggedRowError,
    UnparseableDateError,
    UnreadableFileError,
    ZeroVarianceError,
)

MISSING_TOKENS = frozenset({"", "na", "nan", "n/a", "null", ".", "#n/a"})
SERIES_KINDS = ("return", "continuous", "dummy", "interaction")

# Republican administrations within and after the default sample.
DEFAULT_REGIMES: tuple[tuple[str, str | None], ...] = (
    ("2017-01-20", "2021-01-19"),
    ("2025-01-20", None),
)


def to_dates(values: Iterable) -> np.ndarray:
    """Convert ISO strings, ``datetime.date`` or datetime64 values to ``datetime64[D]``."""
    out = []
    for v in values:
        if isinstance(v, np.datetime64):
            out.append(v.astype("datetime64[D]"))
        elif isinstance(v, (dt.date, dt.datetime)):
            out.append(np.datetime64(v.isoformat()[:10], "D"))
        else:
            out.append(_parse_date(str(v)))
    return np.array(out, dtype="datetime64[D]")


def _parse_date(text: str) -> np.datetime64:
    try:
        return np.datetime64(dt.date.fromisoformat(text.strip()), "D")
    except ValueError:
        raise UnparseableDateError(f"cannot parse date {text!r} (expected YYYY-MM-DD)") from None


def _check_increasing(dates: np.ndarray, what: str) -> None:
    if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
        raise DataError(f"{what}: dates must be strictly increasing")


@dataclass(frozen=True)
class RawPanel:
    """Levels as read from disk; NaN marks a missing cell."""

    dates: np.ndarray
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        dates = to_dates(self.dates)
        values = np.asarray(self.values, dtype=float).reshape(dates.size, len(self.columns))
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))
        uniq, counts = np.unique(dates, return_counts=True)
        if np.any(counts > 1):
            raise DuplicateDateError(f"duplicate date {uniq[counts > 1][0]}")
        _check_increasing(dates, "RawPanel")

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise DataError(f"no column named {name!r}; have {list(self.columns)}") from None

    def series(self, name: str, kind: str = "continuous") -> "Series":
        """A column as a :class:`Series`, leading/trailing gaps trimmed."""
        lo, hi = _span(self.column(name), name)
        return Series(name, self.dates[lo:hi], self.column(name)[lo:hi], kind)


@dataclass(frozen=True)
class Series:
    """A dated real series.  ``kind`` is one of ``SERIES_KINDS``."""

    name: str
    dates: np.ndarray
    values: np.ndarray
    kind: str = "continuous"

    def __post_init__(self) -> None:
        dates = to_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.shape != dates.shape:
            raise DataError(f"{self.name}: {values.size} values for {dates.size} dates")
        if self.kind not in SERIES_KINDS:
            raise DataError(f"unknown series kind {self.kind!r}")
        _check_increasing(dates, self.name)
        if self.kind == "dummy" and not np.all((values == 0.0) | (values == 1.0)):
            raise DataError(f"{self.name}: dummy values must be 0 or 1")
        if self.kind == "continuous" and np.any(values < 0):
            raise DataError(f"{self.name}: uncertainty index values must be non-negative")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


ExogenousSeries = Series


@dataclass(frozen=True)
class ReturnPanel:
    dates: np.ndarray
    asset_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        dates = to_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != dates.size:
            raise DataError("returns must be a T x N matrix matching the date index")
        if values.shape[1] != len(self.asset_names):
            raise DataError("one asset name per column required")
        if values.shape[1] < 2 or values.shape[0] < 1:
            raise DataError("a return panel needs N >= 2 assets and T >= 1 dates")
        if not np.all(np.isfinite(values)):
            raise MissingValueError("return panel contains non-finite values")
        _check_increasing(dates, "ReturnPanel")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "asset_names", tuple(self.asset_names))

    @classmethod
    def from_series(cls, columns: Sequence[Series]) -> "ReturnPanel":
        """Stack return columns on the intersection of their dates."""
        common = _intersect([c.dates for c in columns])
        cols = [c.values[np.isin(c.dates, common)] for c in columns]
        return cls(common, tuple(c.name for c in columns), np.column_stack(cols))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class AlignedDataset:
    """Returns and exogenous regressors on one shared date index."""

    returns: ReturnPanel
    exog: tuple[Series, ...] = ()
    dropped: int = 0
    dropped_by_series: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "exog", tuple(self.exog))
        for s in self.exog:
            if not np.array_equal(s.dates, self.returns.dates):
                raise DateMismatchError(f"{s.name}: date index differs from the returns")

    @property
    def date_index(self) -> np.ndarray:
        return self.returns.dates

    @property
    def nobs(self) -> int:
        return self.returns.values.shape[0]

    @property
    def exog_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.exog)

    def exog_series(self, name: str) -> Series:
        for s in self.exog:
            if s.name == name:
                return s
        raise KeyError(name)

    def exog_matrix(self, names: Sequence[str]) -> np.ndarray:
        if not names:
            return np.empty((self.nobs, 0))
        return np.column_stack([self.exog_series(n).values for n in names])

    def slice(self, start: int, stop: int) -> "AlignedDataset":
        """Rows ``start:stop`` (positional)."""
        r = self.returns
        returns = ReturnPanel(r.dates[start:stop], r.asset_names, r.values[start:stop])
        exog = tuple(
            Series(s.name, s.dates[start:stop], s.values[start:stop], s.kind) for s in self.exog
        )
        return AlignedDataset(returns, exog)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(self.returns.dates.astype("int64").tobytes())
        h.update("|".join(self.returns.asset_names).encode())
        h.update(np.ascontiguousarray(self.returns.values).tobytes())
        for s in self.exog:
            h.update(s.name.encode())
            h.update(np.ascontiguousarray(s.values).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class StatsRow:
    mean: float
    std: float
    skewness: float
    kurtosis: float


# -- I/O -------------------------------------------------------------------------


def load_raw_panel(path, date_column: str = "date") -> RawPanel:
    """Read a comma-separated panel with an ISO date column and numeric columns."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise UnreadableFileError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if date_column not in header:
        raise DataError(f"{path}: no {date_column!r} column in header {header}")
    di = header.index(date_column)
    names = [h for i, h in enumerate(header) if i != di]
    dates, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise RaggedRowError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}"
            )
        dates.append(_parse_date(row[di]))
        vals = []
        for i, cell in enumerate(row):
            if i == di:
                continue
            vals.append(_parse_number(cell, path, lineno))
        values.append(vals)
    dates_arr = np.array(dates, dtype="datetime64[D]")
    vals_arr = np.array(values, dtype=float).reshape(len(dates), len(names))
    uniq, counts = np.unique(dates_arr, return_counts=True)
    if np.any(counts > 1):
        raise DuplicateDateError(f"{path}: duplicate date {uniq[counts > 1][0]}")
    order = np.argsort(dates_arr, kind="stable")
    return RawPanel(dates_arr[order], tuple(names), vals_arr[order])


def _parse_number(cell: str, path, lineno: int) -> float:
    text = cell.strip()
    if text.lower() in MISSING_TOKENS:
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: non-numeric value {cell!r}") from None


def write_panel_csv(path, dates: np.ndarray, names: Sequence[str], values: np.ndarray) -> None:
    """Write a panel in the same layout :func:`load_raw_panel` reads."""
    values = np.asarray(values, dtype=float).reshape(len(dates), len(names))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *names])
        for d, row in zip(to_dates(dates), values):
            w.writerow([str(d), *(repr(float(v)) if np.isfinite(v) else "" for v in row)])


def forward_fill(panel: RawPanel) -> RawPanel:
    """Carry the last observed value forward over interior gaps."""
    vals = panel.values.copy()
    for j in range(vals.shape[1]):
        col = vals[:, j]
        idx = np.where(np.isnan(col), 0, np.arange(col.size))
        np.maximum.accumulate(idx, out=idx)
        filled = col[idx]
        filled[np.isnan(col) & (np.cumsum(~np.isnan(col)) == 0)] = np.nan
        vals[:, j] = filled
    return RawPanel(panel.dates, panel.columns, vals)


# -- transforms --------------------------------------------------------------------


def _span(col: np.ndarray, name: str) -> tuple[int, int]:
    ok = np.flatnonzero(~np.isnan(col))
    if ok.size == 0:
        raise MissingValueError(f"{name}: column is entirely missing")
    lo, hi = int(ok[0]), int(ok[-1]) + 1
    if np.isnan(col[lo:hi]).any():
        bad = lo + int(np.flatnonzero(np.isnan(col[lo:hi]))[0])
        raise MissingValueError(f"{name}: missing value inside the sample at row {bad}")
    return lo, hi


def log_returns(panel: RawPanel, column: str, scale: float = 100.0) -> Series:
    """``scale * log(P_t / P_{t-1})`` dated at the later observation."""
    col = panel.column(column)
    lo, hi = _span(col, column)
    prices = col[lo:hi]
    if prices.size < 2:
        raise DataError(f"{column}: need at least two prices")
    if np.any(prices <= 0):
        raise NonPositivePriceError(f"{column}: prices must be strictly positive")
    return Series(column, panel.dates[lo + 1 : hi], scale * np.diff(np.log(prices)), "return")


def yield_changes(panel: RawPanel, column: str, scale: float = 1.0) -> Series:
    """``scale * (y_t - y_{t-1})``; ``scale=100`` expresses percent yields in basis points."""
    col = panel.column(column)
    lo, hi = _span(col, column)
    y = col[lo:hi]
    if y.size < 2:
        raise DataError(f"{column}: need at least two yields")
    return Series(column, panel.dates[lo + 1 : hi], scale * np.diff(y), "return")


def regime_dummy(
    dates: Sequence, intervals: Sequence[tuple], name: str = "Dummy"
) -> Series:
    """1 on dates inside any closed ``[start, end]`` interval (``end=None`` is open)."""
    dates = to_dates(dates)
    bounds = []
    for start, end in intervals:
        s = to_dates([start])[0]
        e = to_dates([end])[0] if end is not None else np.datetime64("9999-12-31", "D")
        if e < s:
            raise DataError(f"interval end {e} precedes start {s}")
        bounds.append((s, e))
    bounds.sort()
    for (s0, e0), (s1, _) in zip(bounds, bounds[1:]):
        if s1 <= e0:
            raise OverlappingIntervalsError(f"intervals starting {s0} and {s1} overlap")
    values = np.zeros(dates.size)
    for s, e in bounds:
        values[(dates >= s) & (dates <= e)] = 1.0
    return Series(name, dates, values, "dummy")


def interaction(x: Series, d: Series, name: str | None = None) -> Series:
    if d.kind != "dummy":
        raise DataError(f"{d.name} is not a dummy series")
    if not np.array_equal(x.dates, d.dates):
        raise DateMismatchError(f"{x.name} and {d.name} have different date indices")
    return Series(name or f"{x.name}x{d.name}", x.dates, x.values * d.values, "interaction")


def _intersect(indices: Sequence[np.ndarray]) -> np.ndarray:
    common = indices[0]
    for idx in indices[1:]:
        common = np.intersect1d(common, idx)
    return common


def align(returns: ReturnPanel, exog: Sequence[Series] = ()) -> AlignedDataset:
    """Restrict returns and regressors to their common dates."""
    common = _intersect([returns.dates, *(s.dates for s in exog)])
    if common.size == 0:
        raise EmptyIntersectionError("returns and regressors share no dates")
    keep = np.isin(returns.dates, common)
    new_returns = ReturnPanel(common, returns.asset_names, returns.values[keep])
    new_exog = []
    dropped_by = {}
    for s in exog:
        m = np.isin(s.dates, common)
        dropped_by[s.name] = int((~m).sum())
        new_exog.append(Series(s.name, common, s.values[m], s.kind))
    return AlignedDataset(new_returns, tuple(new_exog), int((~keep).sum()), dropped_by)


def descriptive_stats(values: np.ndarray) -> StatsRow:
    """Mean, sample standard deviation, skewness and (non-excess) kurtosis."""
    x = np.asarray(getattr(values, "values", values), dtype=float)
    if x.size < 4:
        raise DataError("descriptive statistics need at least 4 observations")
    dev = x - x.mean()
    m2 = np.mean(dev**2)
    if m2 <= 0.0:
        raise ZeroVarianceError("zero variance: skewness and kurtosis undefined")
    return StatsRow(
        mean=float(x.mean()),
        std=float(np.std(x, ddof=1)),
        skewness=float(np.mean(dev**3) / m2**1.5),
        kurtosis=float(np.mean(dev**4) / m2**2),
    )


def write_stats_csv(path, rows: dict[str, StatsRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "mean", "std", "skewness", "kurtosis"])
        for name, r in rows.items():
            w.writerow([name, *(f"{v:.6g}" for v in (r.mean, r.std, r.skewness, r.kurtosis))])
