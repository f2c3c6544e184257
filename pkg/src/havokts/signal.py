"""Sequences, datasets, CSV ingestion/export and basic preprocessing."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from havokts.errors import (
    BoundsError,
    DataError,
    DegenerateSignalError,
    ParseError,
    SchemaError,
)

DT_RTOL = 1e-9
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class ExperimentParams:
    id: str
    attrs: Mapping[str, float | str] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Sequence:
    """One uniformly sampled scalar series.

    ``values`` is stored as a read-only float64 array.
    """

    values: np.ndarray
    dt: float
    params: ExperimentParams

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        # one-sample sequences only arise from split(); ingestion demands two
        if v.ndim != 1 or v.size < 1:
            raise DataError(f"sequence {self.params.id!r} has no samples")
        if not np.all(np.isfinite(v)):
            raise DataError(f"sequence {self.params.id!r} contains non-finite samples")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DataError(f"sequence {self.params.id!r}: dt must be positive, got {self.dt}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def id(self) -> str:
        return self.params.id

    def __len__(self) -> int:
        return self.values.size

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt

    def with_values(self, values) -> "Sequence":
        return Sequence(values, self.dt, self.params)


@dataclass(frozen=True, eq=False)
class Dataset:
    sequences: tuple[Sequence, ...]

    def __post_init__(self):
        seqs = tuple(self.sequences)
        if not seqs:
            raise DataError("dataset must contain at least one sequence")
        ids = [s.id for s in seqs]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise SchemaError(f"duplicate sequence ids: {dup}")
        dt0 = seqs[0].dt
        for s in seqs[1:]:
            if abs(s.dt - dt0) > DT_RTOL * abs(dt0):
                raise SchemaError(f"sequence {s.id!r} has dt={s.dt}, expected {dt0}")
        object.__setattr__(self, "sequences", seqs)

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, key):
        if isinstance(key, str):
            for s in self.sequences:
                if s.id == key:
                    return s
            raise KeyError(key)
        return self.sequences[key]

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.sequences]

    @property
    def dt(self) -> float:
        return self.sequences[0].dt


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for :func:`load_dataset`.

    ``layout`` is ``"wide"`` (header of ids, optional leading time column),
    ``"long"`` (``id,t,value`` rows) or ``"auto"``. ``dt`` is required when
    the file carries no time column.
    """

    layout: str = "auto"
    dt: float | None = None
    time_column: str = "t"
    id_column: str = "id"
    value_column: str = "value"


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: cannot parse {text!r} as a number") from None


def _infer_dt(t: np.ndarray, where: str) -> float:
    if t.size < 2:
        raise SchemaError(f"{where}: need at least two time stamps to infer dt")
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not dt > 0:
        raise SchemaError(f"{where}: time column must be increasing")
    if np.max(np.abs(steps - dt)) > DT_RTOL * abs(dt):
        raise SchemaError(f"{where}: non-uniform time step (tolerance {DT_RTOL:g} relative)")
    return float(dt)


def _resolve_dt(inferred: float | None, given: float | None, where: str) -> float:
    if inferred is None and given is None:
        raise SchemaError(f"{where}: no time column and no dt given in the schema")
    if inferred is not None and given is not None and abs(inferred - given) > DT_RTOL * abs(given):
        raise SchemaError(f"{where}: time column implies dt={inferred!r}, schema says {given!r}")
    return given if given is not None else inferred


def load_dataset(path, schema: CsvSchema | None = None) -> Dataset:
    """Read a wide or long CSV file into a :class:`Dataset`.

    Row numbers in error messages count data rows from 1 (the header is row 0).
    """
    schema = schema or CsvSchema()
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ParseError(f"{path}: expected a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    layout = schema.layout
    if layout == "auto":
        long_cols = {schema.id_column, schema.time_column, schema.value_column}
        layout = "long" if long_cols <= set(header) and len(header) == 3 else "wide"
    if layout == "long":
        return _load_long(rows, header, schema, path)
    if layout == "wide":
        return _load_wide(rows, header, schema, path)
    raise SchemaError(f"unknown layout {schema.layout!r}")


def _load_wide(rows, header, schema, path) -> Dataset:
    has_time = header[0] == schema.time_column
    ids = header[1:] if has_time else header
    if not ids:
        raise SchemaError(f"{path}: no sequence columns")
    width = len(header)
    columns: list[list[float]] = [[] for _ in header]
    ended = [False] * width
    for r, row in enumerate(rows[1:], start=1):
        if len(row) > width:
            raise ParseError(f"row {r}: {len(row)} fields, header has {width}")
        row = row + [""] * (width - len(row))
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                ended[c] = True
                continue
            if ended[c]:
                raise ParseError(f"row {r}, column {header[c]!r}: value after an empty cell")
            v = _parse_float(cell, r, header[c])
            if not math.isfinite(v):
                raise DataError(f"sequence {header[c]!r}: non-finite value at row {r}, column {header[c]!r}")
            columns[c].append(v)
    inferred = None
    if has_time:
        inferred = _infer_dt(np.asarray(columns[0]), f"{path}")
        columns = columns[1:]
    dt = _resolve_dt(inferred, schema.dt, str(path))
    for sid, col in zip(ids, columns):
        if len(col) < 2:
            raise DataError(f"sequence {sid!r} has fewer than 2 samples")
    return Dataset(tuple(
        Sequence(np.asarray(col), dt, ExperimentParams(sid)) for sid, col in zip(ids, columns)
    ))


def _load_long(rows, header, schema, path) -> Dataset:
    try:
        ci = header.index(schema.id_column)
        ct = header.index(schema.time_column)
        cv = header.index(schema.value_column)
    except ValueError:
        raise SchemaError(
            f"{path}: long layout needs columns {schema.id_column!r}, "
            f"{schema.time_column!r}, {schema.value_column!r}"
        ) from None
    groups: dict[str, tuple[list[float], list[float]]] = {}
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ParseError(f"row {r}: {len(row)} fields, header has {len(header)}")
        sid = row[ci].strip()
        t = _parse_float(row[ct].strip(), r, schema.time_column)
        v = _parse_float(row[cv].strip(), r, schema.value_column)
        if not math.isfinite(v):
            raise DataError(f"sequence {sid!r}: non-finite value at row {r}, column {schema.value_column!r}")
        ts, vs = groups.setdefault(sid, ([], []))
        ts.append(t)
        vs.append(v)
    seqs = []
    for sid, (ts, vs) in groups.items():
        if len(vs) < 2:
            raise DataError(f"sequence {sid!r} has fewer than 2 samples")
        inferred = _infer_dt(np.asarray(ts), f"sequence {sid!r}")
        dt = _resolve_dt(inferred, schema.dt, f"sequence {sid!r}")
        seqs.append(Sequence(np.asarray(vs), dt, ExperimentParams(sid)))
    return Dataset(tuple(seqs))


def export_dataset(dataset: Dataset, path, layout: str = "wide", with_time: bool = True) -> None:
    """Write ``dataset`` as CSV with 17 significant digits (lossless for doubles)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if layout == "long":
            w.writerow(["id", "t", "value"])
            for s in dataset:
                for i, v in enumerate(s.values):
                    w.writerow([s.id, FLOAT_FMT % (i * s.dt), FLOAT_FMT % v])
            return
        if layout != "wide":
            raise SchemaError(f"unknown layout {layout!r}")
        n = max(len(s) for s in dataset)
        w.writerow((["t"] if with_time else []) + dataset.ids)
        for i in range(n):
            row = [FLOAT_FMT % (i * dataset.dt)] if with_time else []
            row += [FLOAT_FMT % s.values[i] if i < len(s) else "" for s in dataset]
            w.writerow(row)


def standardize(s: Sequence) -> Sequence:
    """Zero mean, unit population standard deviation."""
    x = s.values
    mu = x.mean()
    sd = x.std()
    if sd == 0.0 or np.ptp(x) == 0.0:
        raise DegenerateSignalError(f"sequence {s.id!r} has zero variance")
    return s.with_values((x - mu) / sd)


def split(s: Sequence, split_index: int) -> tuple[Sequence, Sequence]:
    """Split into ``s[:split_index]`` and ``s[split_index:]``."""
    n = len(s)
    if not 1 <= split_index < n:
        raise BoundsError(f"split index {split_index} outside [1, {n - 1}]")
    return s.with_values(s.values[:split_index]), s.with_values(s.values[split_index:])

