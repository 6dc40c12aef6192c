"""Data model and CSV ingestion for price panels and uncertainty-index tables.

File format: UTF-8, comma separated, one header row, first column an
ISO-8601 date (YYYY-MM-DD).  Scientific notation is accepted on input; the
writer emits 17 significant digits so a write/read round trip is bit exact.
Lines starting with ``#`` ahead of the header carry run metadata and are
skipped on load.

Loaded objects are immutable value objects (frozen dataclasses over
read-only arrays) and safe to share across threads.
"""

import csv
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import AlignmentError, InputError


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PricePanel:
    """N x T grid of strictly positive adjusted closing prices."""

    asset_ids: tuple
    timestamps: tuple
    prices: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "prices", _frozen(self.prices))
        n, t = self.prices.shape
        if len(self.asset_ids) != n or len(self.timestamps) != t:
            raise InputError("price grid shape does not match labels")
        if n < 2:
            raise InputError(f"need at least 2 assets, got {n}")
        if t < 2:
            raise InputError(f"need at least 2 dates, got {t}")
        if len(set(self.asset_ids)) != n:
            raise InputError("duplicate asset ids")
        _check_strictly_increasing(self.timestamps)
        if not np.all(self.prices > 0):
            i, j = map(int, np.argwhere(~(self.prices > 0))[0])
            raise InputError(
                f"non-positive price at asset {self.asset_ids[i]!r}, "
                f"date {self.timestamps[j]}"
            )

    @property
    def n_assets(self) -> int:
        return self.prices.shape[0]

    @property
    def n_dates(self) -> int:
        return self.prices.shape[1]


@dataclass(frozen=True)
class ReturnPanel:
    """N x (T-1) grid of gross returns; timestamps are the later date of
    each price ratio."""

    asset_ids: tuple
    timestamps: tuple
    returns: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "returns", _frozen(self.returns))
        n, t = self.returns.shape
        if len(self.asset_ids) != n or len(self.timestamps) != t:
            raise InputError("return grid shape does not match labels")
        if not np.all(self.returns > 0):
            raise InputError("non-positive return")

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_slices(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class SeriesTable:
    """K x T grid of named real-valued series on a shared date axis."""

    names: tuple
    timestamps: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        k, t = self.values.shape
        if len(self.names) != k or len(self.timestamps) != t:
            raise InputError("value grid shape does not match labels")
        if k < 2:
            raise InputError(f"need at least 2 series, got {k}")
        if len(set(self.names)) != k:
            raise InputError("duplicate series names")
        _check_strictly_increasing(self.timestamps)
        if not np.all(np.isfinite(self.values)):
            i, j = map(int, np.argwhere(~np.isfinite(self.values))[0])
            raise InputError(
                f"non-finite value in series {self.names[i]!r}, "
                f"date {self.timestamps[j]}"
            )

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def n_dates(self) -> int:
        return self.values.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"unknown series {name!r}; have {self.names}") from None


def _check_strictly_increasing(timestamps):
    for a, b in zip(timestamps, timestamps[1:]):
        if not a < b:
            raise InputError(f"timestamps not strictly increasing at {b}")


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _read_csv_grid(path):
    """Parse header labels, dates, and a float grid with located errors.

    Returns (labels, rows) where rows is a date-sorted list of
    (date, [floats]); rejects ragged rows, bad dates, bad numbers, and
    duplicate dates, naming the offending row/column.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = None
        lineno = 0
        rows = []
        for record in reader:
            lineno += 1
            if not record or (record[0].startswith("#") and header is None):
                continue  # metadata/comment lines ahead of the header
            if header is None:
                header = [cell.strip() for cell in record]
                if len(header) < 2:
                    raise InputError(f"{path}: header needs a date column plus data columns")
                continue
            if len(record) != len(header):
                raise InputError(
                    f"{path}:{lineno}: ragged row, expected {len(header)} fields, "
                    f"got {len(record)}"
                )
            try:
                stamp = date.fromisoformat(record[0].strip())
            except ValueError:
                raise InputError(
                    f"{path}:{lineno}: unparseable date {record[0]!r}"
                ) from None
            vals = []
            for label, cell in zip(header[1:], record[1:]):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}:{lineno}: unparseable number {cell!r} "
                        f"in column {label!r}"
                    ) from None
            rows.append((stamp, vals))
    if header is None:
        raise InputError(f"{path}: empty file")
    labels = header[1:]
    if len(set(labels)) != len(labels):
        raise InputError(f"{path}: duplicate column labels in header")
    rows.sort(key=lambda item: item[0])
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if a == b:
            raise InputError(f"{path}: duplicate date {a}")
    if not rows:
        raise InputError(f"{path}: no data rows")
    return labels, rows


def load_price_panel(path) -> PricePanel:
    """Load and validate a price panel; rows are date sorted on return."""
    labels, rows = _read_csv_grid(path)
    stamps = tuple(stamp for stamp, _ in rows)
    grid = np.array([vals for _, vals in rows], dtype=np.float64).T
    for i, j in zip(*np.nonzero(~(grid > 0))):
        raise InputError(
            f"{path}: non-positive price {grid[i, j]!r} at "
            f"(asset {labels[i]!r}, date {stamps[j]})"
        )
    return PricePanel(asset_ids=tuple(labels), timestamps=stamps, prices=grid)


def load_series_table(path) -> SeriesTable:
    """Load and validate a multivariate series table (K >= 2 columns)."""
    labels, rows = _read_csv_grid(path)
    if len(labels) < 2:
        raise InputError(f"{path}: need at least 2 series columns, got {len(labels)}")
    stamps = tuple(stamp for stamp, _ in rows)
    grid = np.array([vals for _, vals in rows], dtype=np.float64).T
    return SeriesTable(names=tuple(labels), timestamps=stamps, values=grid)


def write_series_table(table, path, date_label="date", metadata=None):
    """Write a SeriesTable (or FCIX-style table) at full precision.

    ``metadata``, when given, is emitted as a single leading ``#`` comment
    line that loaders skip.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if metadata is not None:
            fh.write(f"# {metadata}\n")
        fh.write(",".join([date_label, *table.names]) + "\n")
        for j, stamp in enumerate(table.timestamps):
            cells = ["%.17g" % v for v in table.values[:, j]]
            fh.write(",".join([str(stamp), *cells]) + "\n")


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def gross_returns(panel: PricePanel) -> ReturnPanel:
    """Gross returns r[i, t] = prices[i, t+1] / prices[i, t]."""
    if panel.n_dates < 2:
        raise InputError("need at least 2 dates to form returns")
    ratios = panel.prices[:, 1:] / panel.prices[:, :-1]
    return ReturnPanel(
        asset_ids=panel.asset_ids,
        timestamps=panel.timestamps[1:],
        returns=ratios,
    )


def log_transform(table: SeriesTable) -> SeriesTable:
    """Elementwise natural log; rejects non-positive values."""
    if not np.all(table.values > 0):
        i, j = map(int, np.argwhere(~(table.values > 0))[0])
        raise InputError(
            f"log transform needs positive values; series {table.names[i]!r} "
            f"at {table.timestamps[j]} is {table.values[i, j]!r}"
        )
    return SeriesTable(names=table.names, timestamps=table.timestamps,
                       values=np.log(table.values))


def first_difference(table: SeriesTable) -> SeriesTable:
    """First difference along time; drops the first date."""
    if table.n_dates < 3:
        raise InputError("need at least 3 dates to difference")
    return SeriesTable(
        names=table.names,
        timestamps=table.timestamps[1:],
        values=table.values[:, 1:] - table.values[:, :-1],
    )


def align_and_join(tables) -> SeriesTable:
    """Inner join on timestamps, union of columns, original column order."""
    tables = list(tables)
    if not tables:
        raise InputError("align_and_join needs at least one table")
    names = []
    for tbl in tables:
        for name in tbl.names:
            if name in names:
                raise InputError(f"column name collision on {name!r}")
            names.append(name)
    common = set(tables[0].timestamps)
    for tbl in tables[1:]:
        common &= set(tbl.timestamps)
    if not common:
        raise AlignmentError("no common timestamps across tables")
    stamps = tuple(sorted(common))
    blocks = []
    for tbl in tables:
        pos = {s: j for j, s in enumerate(tbl.timestamps)}
        idx = [pos[s] for s in stamps]
        blocks.append(tbl.values[:, idx])
    return SeriesTable(names=tuple(names), timestamps=stamps,
                       values=np.vstack(blocks))
