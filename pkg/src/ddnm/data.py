"""Price-table ingestion and run configuration.

Input tables are CSV with a ``date`` column of ISO dates followed by one
positive price column per series.  A column named ``BENCH`` is treated as the
benchmark index and a column named ``CTA`` as a reference track that is
reported but never modeled.  Run configuration is a small ``key = value``
format with ``#`` comments and an inclusive ``start:step:stop`` grid syntax.
"""

from __future__ import annotations

import csv
import datetime
import itertools
from dataclasses import dataclass, field, fields

import numpy as np

from .dlm import DiscountPair
from .errors import ConfigError, DataError

BENCH_NAME = "BENCH"
CTA_NAME = "CTA"

_MAX_FILL_GAP = 3


@dataclass(frozen=True)
class PriceFrame:
    """Aligned daily price table: one date per row, one column per name."""

    dates: tuple
    names: tuple
    values: np.ndarray

    @property
    def asset_names(self):
        return tuple(n for n in self.names if n not in (BENCH_NAME, CTA_NAME))

    @property
    def has_bench(self) -> bool:
        return BENCH_NAME in self.names

    @property
    def has_cta(self) -> bool:
        return CTA_NAME in self.names

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}")
        return self.values[:, j]


def _parse_date(token: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(token.strip())
    except ValueError:
        raise DataError(f"unparsable ISO date {token!r}")


def load_prices(path) -> PriceFrame:
    """Read and validate a CSV price table.

    Rejects non-increasing dates, missing or unparsable cells, nonpositive
    prices, and ragged rows.  Gaps in the calendar are allowed here; see
    :func:`forward_fill` for filling short runs of missing business days.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header and at least one data row")
    header = [c.strip() for c in rows[0]]
    if header[0] != "date":
        raise DataError(f"{path}: first column must be 'date', got {header[0]!r}")
    names = tuple(header[1:])
    if not names:
        raise DataError(f"{path}: no price columns")
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names")

    dates = []
    values = np.empty((len(rows) - 1, len(names)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(names) + 1:
            raise DataError(
                f"{path}: row {i + 2} has {len(row)} cells, expected {len(names) + 1}"
            )
        d = _parse_date(row[0])
        if dates and d <= dates[-1]:
            raise DataError(f"{path}: dates must be strictly increasing at {d}")
        dates.append(d)
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if not cell:
                raise DataError(f"{path}: missing value at row {i + 2}, column {names[j]}")
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}: bad number {cell!r} at row {i + 2}")
            if not np.isfinite(x) or x <= 0.0:
                raise DataError(
                    f"{path}: prices must be positive and finite, got {x} in {names[j]}"
                )
            values[i, j] = x
    return PriceFrame(tuple(dates), names, values)


def to_log_prices(frame: PriceFrame) -> PriceFrame:
    if np.any(frame.values <= 0.0):
        raise DataError("log transform needs strictly positive values")
    return PriceFrame(frame.dates, frame.names, np.log(frame.values))


def split_frame(frame: PriceFrame, split_date):
    """Split into (train, test); the boundary date belongs to train."""
    if isinstance(split_date, str):
        try:
            split_date = datetime.date.fromisoformat(split_date.strip())
        except ValueError:
            raise ConfigError(f"split_date: unparsable ISO date {split_date!r}")
    n_train = sum(1 for d in frame.dates if d <= split_date)
    if n_train == 0 or n_train == len(frame.dates):
        raise ConfigError(f"split date {split_date} leaves an empty train or test side")
    train = PriceFrame(frame.dates[:n_train], frame.names, frame.values[:n_train])
    test = PriceFrame(frame.dates[n_train:], frame.names, frame.values[n_train:])
    return train, test


def _business_days_between(d1: datetime.date, d2: datetime.date):
    out = []
    d = d1 + datetime.timedelta(days=1)
    while d < d2:
        if d.weekday() < 5:
            out.append(d)
        d += datetime.timedelta(days=1)
    return out


def forward_fill(frame: PriceFrame, max_gap: int = _MAX_FILL_GAP) -> PriceFrame:
    """Fill runs of up to ``max_gap`` missing business days with the prior row.

    Weekends never count as gaps.  A longer run of missing business days is
    treated as a data problem rather than silently bridged.
    """
    dates = [frame.dates[0]]
    rows = [frame.values[0]]
    for i in range(1, len(frame.dates)):
        missing = _business_days_between(frame.dates[i - 1], frame.dates[i])
        if len(missing) > max_gap:
            raise DataError(
                f"{len(missing)} business days missing between "
                f"{frame.dates[i - 1]} and {frame.dates[i]} (limit {max_gap})"
            )
        for d in missing:
            dates.append(d)
            rows.append(frame.values[i - 1])
        dates.append(frame.dates[i])
        rows.append(frame.values[i])
    return PriceFrame(tuple(dates), frame.names, np.array(rows))


def model_matrix(frame: PriceFrame, order=None):
    """Columns to model: assets in table (or requested) order, benchmark last.

    The CTA track is excluded; it is reported alongside results but never
    enters the model.  Returns (names, values).
    """
    assets = frame.asset_names
    if order is not None:
        unknown = [n for n in order if n not in assets]
        if unknown:
            raise ConfigError(f"series not in data: {', '.join(unknown)}")
        assets = tuple(order)
    cols = list(assets)
    if frame.has_bench:
        cols.append(BENCH_NAME)
    idx = [frame.names.index(n) for n in cols]
    return tuple(cols), frame.values[:, idx]


@dataclass(frozen=True)
class EngineConfig:
    """Everything a run needs beyond the price table itself."""

    delta_grid: tuple = (0.975, 0.98, 0.985, 0.99, 0.995)
    beta_grid: tuple = (0.975, 0.98, 0.985, 0.99, 0.995)
    alpha_grid: tuple = (0.95, 0.955, 0.96, 0.965, 0.97, 0.975, 0.98, 0.985, 0.99, 0.995, 1.0)
    max_lag: int = 2
    rho: float = 0.3
    prune_threshold: float = 0.001
    nmc: int = 10_000
    target_daily: float = 0.001
    target_period: float = 0.005
    n0: float = 5.0
    c0: float = 1.0
    trajectory_max_models: int = 64
    seed: int = 20260101
    split_date: str = ""
    series: tuple = ()
    # -1 leaves parent sets uncapped; 0 forbids parents entirely
    max_parents: int = -1

    def discount_pairs(self):
        return tuple(
            DiscountPair(d, b) for d, b in itertools.product(self.delta_grid, self.beta_grid)
        )


def _parse_grid(key: str, token: str):
    token = token.strip()
    if ":" in token:
        parts = token.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key}: grid syntax is start:step:stop, got {token!r}")
        a, s, b = (_parse_float(key, p) for p in parts)
        if s <= 0 or b < a:
            raise ConfigError(f"{key}: need step > 0 and stop >= start in {token!r}")
        # inclusive of b up to float dust; inexact steps truncate below b
        vals = []
        i = 0
        while a + i * s <= b + 1e-12:
            vals.append(round(a + i * s, 10))
            i += 1
    else:
        vals = [_parse_float(key, p) for p in token.split(",")]
    return tuple(vals)


def _parse_float(key, token):
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {token.strip()!r}")


def _parse_int(key, token):
    try:
        return int(token.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {token.strip()!r}")


def parse_config(text: str) -> EngineConfig:
    """Parse ``key = value`` lines into an :class:`EngineConfig`.

    Unknown keys and out-of-range values raise :class:`ConfigError` naming
    the offending key.
    """
    known = {f.name for f in fields(EngineConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in ("delta_grid", "beta_grid", "alpha_grid"):
            out[key] = _parse_grid(key, val)
        elif key in ("max_lag", "nmc", "seed", "max_parents", "trajectory_max_models"):
            out[key] = _parse_int(key, val)
        elif key in ("rho", "prune_threshold", "target_daily", "target_period", "n0", "c0"):
            out[key] = _parse_float(key, val)
        elif key == "split_date":
            try:
                datetime.date.fromisoformat(val)
            except ValueError:
                raise ConfigError(f"split_date: expected an ISO date, got {val!r}")
            out[key] = val
        elif key == "series":
            out[key] = tuple(s.strip() for s in val.split(",") if s.strip())
    cfg = EngineConfig(**out)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: EngineConfig) -> None:
    for key in ("delta_grid", "beta_grid", "alpha_grid"):
        grid = getattr(cfg, key)
        if not grid:
            raise ConfigError(f"{key}: must not be empty")
        for v in grid:
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"{key}: {v} outside (0, 1]")
        if len(set(grid)) != len(grid):
            raise ConfigError(f"{key}: duplicate values")
    if not 0.0 < cfg.rho < 1.0:
        raise ConfigError(f"rho: {cfg.rho} outside (0, 1)")
    if not 0.0 <= cfg.prune_threshold < 1.0:
        raise ConfigError(f"prune_threshold: {cfg.prune_threshold} outside [0, 1)")
    if cfg.nmc < 2:
        raise ConfigError(f"nmc: need at least 2 sample paths, got {cfg.nmc}")
    if cfg.max_lag < 0:
        raise ConfigError(f"max_lag: must be >= 0, got {cfg.max_lag}")
    if cfg.max_parents < -1:
        raise ConfigError(
            f"max_parents: must be >= -1 (-1 disables the cap), got {cfg.max_parents}"
        )
    if cfg.n0 <= 0 or cfg.c0 <= 0:
        raise ConfigError("n0 and c0 must be positive")
    if cfg.trajectory_max_models < 1:
        raise ConfigError("trajectory_max_models: must be >= 1")


def serialize_config(cfg: EngineConfig) -> str:
    """Render a config back to its text form; stable under re-parsing."""
    lines = []
    for f in fields(EngineConfig):
        v = getattr(cfg, f.name)
        if f.name in ("delta_grid", "beta_grid", "alpha_grid"):
            rendered = ",".join(repr(x) for x in v)
        elif f.name == "series":
            if not v:
                continue
            rendered = ",".join(v)
        elif f.name == "split_date":
            if not v:
                continue
            rendered = v
        else:
            rendered = repr(v)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"
