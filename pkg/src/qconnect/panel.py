"""Price/return panels: CSV ingest, gap filling, log returns, date splits."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .io import write_csv_atomic


class PanelError(ValueError):
    pass


def _as_dates(dates) -> np.ndarray:
    return np.asarray(pd.to_datetime(pd.Index(dates)).values.astype("datetime64[D]"))


@dataclass(frozen=True)
class _Panel:
    dates: np.ndarray
    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.dates), len(self.labels)):
            raise PanelError(
                f"values shape {values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.labels)} labels"
            )
        if len(set(self.labels)) != len(self.labels):
            raise PanelError("series labels must be unique")
        if len(self.dates) > 1 and not np.all(np.diff(self.dates) > np.timedelta64(0, "D")):
            raise PanelError("dates must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def T(self) -> int:
        return len(self.dates)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=list(self.labels))
        frame.insert(0, "date", pd.to_datetime(self.dates).strftime("%Y-%m-%d"))
        return frame

    def to_csv(self, path) -> Path:
        return write_csv_atomic(self.to_frame(), path)

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]


@dataclass(frozen=True)
class PricePanel(_Panel):
    """Daily closes; NaN marks a missing observation."""

    def __post_init__(self):
        super().__post_init__()
        if self.T < 2:
            raise PanelError("a price panel needs at least two dates")


@dataclass(frozen=True)
class ReturnPanel(_Panel):
    """Log returns; no missing entries allowed."""

    def __post_init__(self):
        super().__post_init__()
        if np.isnan(self.values).any():
            raise PanelError("return panel contains missing entries")

    def rows(self, start: int, stop: int) -> "ReturnPanel":
        return ReturnPanel(self.dates[start:stop], self.labels, self.values[start:stop])


def load_csv(path, schema: dict | None = None) -> PricePanel:
    """Read a wide CSV: a date column followed by one numeric column per series.

    ``schema`` may map ``date`` to the name of the date column and ``columns``
    to a subset/order of series (optionally a dict renaming them).
    """
    schema = schema or {}
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise PanelError(f"cannot read {path}: {exc}") from exc
    if raw.shape[1] < 2:
        raise PanelError(f"{path}: need a date column and at least one series")
    date_col = schema.get("date", raw.columns[0])
    if date_col not in raw.columns:
        raise PanelError(f"{path}: date column {date_col!r} not found")
    series_cols = [c for c in raw.columns if c != date_col]
    rename = {}
    if "columns" in schema:
        wanted = schema["columns"]
        if isinstance(wanted, dict):
            rename = dict(wanted)
            wanted = list(wanted)
        missing = [c for c in wanted if c not in series_cols]
        if missing:
            raise PanelError(f"{path}: columns not found: {missing}")
        series_cols = list(wanted)

    dates = []
    for i, text in enumerate(raw[date_col]):
        try:
            dates.append(dt.date.fromisoformat(text.strip()))
        except ValueError as exc:
            # data row i sits on file line i + 2 (header is line 1)
            raise PanelError(f"{path}: unparseable date {text!r} at row {i}") from exc
    seen = {}
    for i, d in enumerate(dates):
        if d in seen:
            raise PanelError(f"{path}: duplicate date {d.isoformat()} at row {i} (first at row {seen[d]})")
        seen[d] = i

    values = np.full((len(dates), len(series_cols)), np.nan)
    for j, col in enumerate(series_cols):
        for i, text in enumerate(raw[col]):
            text = text.strip()
            if text == "" or text.upper() in ("NA", "NAN"):
                continue
            try:
                values[i, j] = float(text)
            except ValueError as exc:
                raise PanelError(f"{path}: non-numeric value {text!r} in column {col!r} at row {i}") from exc

    order = np.argsort(np.array(dates, dtype="datetime64[D]"), kind="stable")
    labels = [rename.get(c, c) for c in series_cols]
    return PricePanel(np.array(dates, dtype="datetime64[D]")[order], labels, values[order])


def align(panels: list[PricePanel]) -> PricePanel:
    """Outer-join panels on the union of their dates; absent rows become missing cells."""
    frames = []
    for p in panels:
        f = pd.DataFrame(p.values, index=pd.to_datetime(p.dates), columns=list(p.labels))
        frames.append(f)
    joined = pd.concat(frames, axis=1, join="outer").sort_index()
    return PricePanel(joined.index.values, list(joined.columns), joined.to_numpy())


def clean(panel: PricePanel) -> PricePanel:
    """Forward-fill gaps; leading gaps take the first observed value."""
    values = panel.values.copy()
    empty = [panel.labels[j] for j in range(panel.n) if np.isnan(values[:, j]).all()]
    if empty:
        raise PanelError(f"series with no observed values: {', '.join(empty)}")
    filled = pd.DataFrame(values).ffill().bfill().to_numpy()
    return PricePanel(panel.dates, panel.labels, filled)


def log_returns(panel: PricePanel) -> ReturnPanel:
    values = panel.values
    if np.isnan(values).any():
        raise PanelError("price panel has missing entries; clean it first")
    bad = np.argwhere(values <= 0)
    if len(bad):
        i, j = bad[0]
        raise PanelError(
            f"nonpositive price {values[i, j]} at row {i} ({panel.dates[i]}), series {panel.labels[j]!r}"
        )
    returns = np.log(values[1:] / values[:-1])
    return ReturnPanel(panel.dates[1:], panel.labels, returns)


def split(panel: ReturnPanel, break_date) -> tuple[ReturnPanel, ReturnPanel]:
    """Rows strictly before ``break_date`` and rows from it onward."""
    when = np.datetime64(pd.Timestamp(break_date).date(), "D")
    if panel.T == 0 or when < panel.dates[0] or when > panel.dates[-1]:
        raise PanelError(f"break date {when} outside panel range")
    cut = int(np.searchsorted(panel.dates, when, side="left"))
    return panel.rows(0, cut), panel.rows(cut, panel.T)


def returns_from_csv(path, schema: dict | None = None) -> ReturnPanel:
    """Load prices, clean them and convert to log returns in one go."""
    return log_returns(clean(load_csv(path, schema)))


def load_returns_csv(path) -> ReturnPanel:
    """Re-read an exported return panel (same wide layout, no gaps)."""
    frame = pd.read_csv(path, float_precision="round_trip")
    return ReturnPanel(frame.iloc[:, 0].to_numpy(), list(frame.columns[1:]), frame.iloc[:, 1:].to_numpy(float))
