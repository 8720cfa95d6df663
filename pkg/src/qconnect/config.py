"""Run configuration: YAML file keys, command-line overrides, validation."""
from __future__ import annotations

import datetime as dt
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .frequency import DEFAULT_BANDS, FrequencyBand
from .rolling import SURFACE_TAUS, RollingConfig


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


def _default_bands() -> list[dict]:
    return [{"label": b.label, "a": b.a, "b": b.b, "horizon_note": b.horizon_note} for b in DEFAULT_BANDS]


@dataclass
class RunConfig:
    input: str | None = None
    input_kind: str = "prices"  # prices | returns
    date_column: str = "date"
    break_date: str | None = None
    window: int = 200
    horizon: int = 20
    lag_policy: str = "fixed"  # fixed | bic
    p: int = 1
    p_max: int = 4
    reselect_each_window: bool = False
    bic_variant: str = "ols"  # ols | checkloss
    taus: list = field(default_factory=lambda: [0.05, 0.5, 0.95])
    surface_taus: list = field(default_factory=lambda: list(SURFACE_TAUS))
    bands: list = field(default_factory=_default_bands)
    grid_points: int = 500
    tci_denominator: str = "n"  # n | n-1
    sigma_estimator: str = "uncentered"  # uncentered | centered
    step: int = 1
    alpha: float = 0.05
    strategies: list = field(default_factory=lambda: ["mvp", "mcp", "mcop"])
    network_threshold: float = 0.0
    network_format: str = "csv"  # csv | json
    network_tau: float = 0.5
    network_band: str = "total"
    pairwise: bool = False
    surface: bool = False
    measure: str = "TCI"
    series: str = "ALL"
    output: str = "out"
    seed: int = 0
    n_series: int = 3
    n_obs: int = 400
    dgp: str = "factor"
    n_jobs: int = 1

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def band_objects(self) -> tuple[FrequencyBand, ...]:
        return tuple(
            FrequencyBand(str(b["label"]), parse_angle(b["a"]), parse_angle(b["b"]), str(b.get("horizon_note", "")))
            for b in self.bands
        )

    def rolling(self, taus=None) -> RollingConfig:
        return RollingConfig(
            window=self.window, horizon=self.horizon, p=self.p, lag_policy=self.lag_policy,
            p_max=self.p_max, reselect_each_window=self.reselect_each_window,
            bic_variant=self.bic_variant, taus=tuple(taus if taus is not None else self.taus),
            bands=self.band_objects(), step=self.step, grid_points=self.grid_points,
            denominator=self.tci_denominator, sigma_estimator=self.sigma_estimator,
            n_jobs=self.n_jobs,
        )

    def problems(self) -> list[str]:
        out = []
        checks = [
            (self.input_kind in ("prices", "returns"), f"input_kind must be prices or returns, got {self.input_kind!r}"),
            (isinstance(self.window, int) and self.window > 0, "window must be a positive integer"),
            (isinstance(self.horizon, int) and self.horizon >= 0, "horizon must be a nonnegative integer"),
            (self.lag_policy in ("fixed", "bic"), f"lag_policy must be fixed or bic, got {self.lag_policy!r}"),
            (isinstance(self.p, int) and self.p >= 1, "p must be an integer >= 1"),
            (isinstance(self.p_max, int) and self.p_max >= 1, "p_max must be an integer >= 1"),
            (self.bic_variant in ("ols", "checkloss"), f"bic_variant must be ols or checkloss, got {self.bic_variant!r}"),
            (self.tci_denominator in ("n", "n-1"), f"tci_denominator must be n or n-1, got {self.tci_denominator!r}"),
            (self.sigma_estimator in ("uncentered", "centered"),
             f"sigma_estimator must be uncentered or centered, got {self.sigma_estimator!r}"),
            (isinstance(self.step, int) and self.step >= 1, "step must be an integer >= 1"),
            (isinstance(self.grid_points, int) and self.grid_points >= 1, "grid_points must be a positive integer"),
            (0 < self.alpha < 1, "alpha must lie in (0, 1)"),
            (self.network_format in ("csv", "json"), f"network_format must be csv or json, got {self.network_format!r}"),
            (self.network_threshold >= 0, "network_threshold must be >= 0"),
            (isinstance(self.n_jobs, int) and self.n_jobs >= 1, "n_jobs must be an integer >= 1"),
        ]
        out.extend(msg for ok, msg in checks if not ok)
        for name in ("taus", "surface_taus"):
            vals = getattr(self, name)
            if not vals or any(not isinstance(t, (int, float)) or not 0 < t < 1 for t in vals):
                out.append(f"{name} must be a non-empty list of levels inside (0, 1)")
        if len(self.surface_taus) < 3:
            out.append("surface_taus needs at least three levels")
        bad = [s for s in self.strategies if s not in ("mvp", "mcp", "mcop")]
        if bad:
            out.append(f"unknown strategies: {bad}")
        try:
            self.band_objects()
        except (KeyError, TypeError, ValueError) as exc:
            out.append(f"bands: {exc}")
        if self.break_date is not None:
            try:
                dt.date.fromisoformat(str(self.break_date))
            except ValueError:
                out.append(f"break_date must be an ISO date, got {self.break_date!r}")
        if self.horizon is not None and self.grid_points is not None and isinstance(self.grid_points, int):
            if 2 * self.grid_points <= self.horizon:
                out.append("grid_points must exceed horizon / 2 for an exact band decomposition")
        return out

    def validate(self, need_input: bool = True) -> None:
        probs = self.problems()
        if need_input:
            if not self.input:
                probs.append("input path is required")
            elif not Path(self.input).exists():
                probs.append(f"input file not found: {self.input}")
        if probs:
            raise ConfigError(probs)

    def as_dict(self) -> dict:
        return asdict(self)


_ANGLE = re.compile(r"^\s*(?:(?P<num>[0-9.]+)\s*\*?\s*)?pi\s*(?:/\s*(?P<den>[0-9.]+))?\s*$")


def parse_angle(value) -> float:
    """Numbers, or strings such as 'pi', 'pi/5', '2*pi/5'."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower()
    m = _ANGLE.match(text)
    if m:
        num = float(m.group("num")) if m.group("num") else 1.0
        den = float(m.group("den")) if m.group("den") else 1.0
        return num * math.pi / den
    return float(text)


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    unknown = sorted(set(data) - set(RunConfig.keys()))
    if unknown:
        raise ConfigError([f"unknown config key: {k}" for k in unknown])
    if "break_date" in data and isinstance(data["break_date"], dt.date):
        data["break_date"] = data["break_date"].isoformat()
    return data


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    values = dict(file_values)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError([str(exc)]) from exc
