"""CSV ingestion, one-hot encoding, z-score normalization, pool/test splits.

Conventions (documented because downstream numbers depend on them):

* normalization uses the population standard deviation (divide by N), so
  re-applying self-derived stats gives columns with mean 0 and std 1 exactly;
* constant columns normalize to all zeros;
* pool/test splits give the pool floor(fraction * n) rows, ties to the test
  set;
* missing values are a hard error -- the supported datasets are complete
  after standard cleaning.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class DatasetError(ValueError):
    """Raised for malformed CSV input or unresolvable registry entries."""


@dataclass
class RawDataset:
    """Parsed CSV prior to encoding: feature cells may be text."""

    name: str
    columns: list[tuple[str, str]]  # (name, "numeric" | "categorical")
    rows: list[list]
    target_column: str
    y: np.ndarray


@dataclass
class Dataset:
    """Fully numeric feature matrix aligned row-wise with its targets."""

    name: str
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]


@dataclass
class NormStats:
    means: np.ndarray
    stds: np.ndarray


@dataclass
class Split:
    pool_indices: np.ndarray
    test_indices: np.ndarray
    seed: int


def load_csv(path, target_column: str, categorical_columns=()) -> RawDataset:
    """Parse a comma-separated file with a header row into a RawDataset.

    Feature columns listed in ``categorical_columns`` keep their text values;
    all other cells (including the target) must parse as finite numbers.
    Errors name the offending 1-based data row.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    categorical = set(categorical_columns)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DatasetError(
                f"{path}: target column {target_column!r} not in header {header}")
        unknown = categorical - set(header)
        if unknown:
            raise DatasetError(
                f"{path}: categorical columns not in header: {sorted(unknown)}")
        t_pos = header.index(target_column)
        feat_pos = [i for i in range(len(header)) if i != t_pos]
        columns = [(header[i], CATEGORICAL if header[i] in categorical else NUMERIC)
                   for i in feat_pos]
        rows: list[list] = []
        targets: list[float] = []
        for rownum, cells in enumerate(reader, start=1):
            if not cells:
                continue  # tolerate trailing blank lines
            if len(cells) != len(header):
                raise DatasetError(
                    f"{path}: data row {rownum}: expected {len(header)} cells, "
                    f"got {len(cells)}")
            targets.append(_parse_number(cells[t_pos], path, rownum, target_column))
            parsed = []
            for i, (cname, kind) in zip(feat_pos, columns):
                cell = cells[i].strip()
                if kind == CATEGORICAL:
                    if not cell:
                        raise DatasetError(
                            f"{path}: data row {rownum}: missing value in "
                            f"column {cname!r}")
                    parsed.append(cell)
                else:
                    parsed.append(_parse_number(cell, path, rownum, cname))
            rows.append(parsed)
    if len(rows) < 2:
        raise DatasetError(f"{path}: need at least 2 data rows, got {len(rows)}")
    if not columns:
        raise DatasetError(f"{path}: no feature columns besides the target")
    return RawDataset(name=path.stem, columns=columns, rows=rows,
                      target_column=target_column,
                      y=np.asarray(targets, dtype=np.float64))


def _parse_number(cell: str, path, rownum: int, colname: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DatasetError(
            f"{path}: data row {rownum}: non-numeric value {cell!r} in "
            f"column {colname!r}") from None
    if not math.isfinite(value):
        raise DatasetError(
            f"{path}: data row {rownum}: non-finite value {cell!r} in "
            f"column {colname!r}")
    return value


def one_hot_encode(raw: RawDataset) -> Dataset:
    """Expand each categorical column into one binary column per level.

    Levels are sorted lexicographically; numeric columns pass through in
    their original positions.  A single-level categorical column becomes one
    constant column and triggers a warning.
    """
    n = len(raw.rows)
    out_cols: list[np.ndarray] = []
    names: list[str] = []
    for j, (cname, kind) in enumerate(raw.columns):
        cells = [row[j] for row in raw.rows]
        if kind == NUMERIC:
            out_cols.append(np.asarray(cells, dtype=np.float64))
            names.append(cname)
            continue
        levels = sorted(set(cells))
        if len(levels) == 1:
            warnings.warn(
                f"categorical column {cname!r} has a single level "
                f"{levels[0]!r}; emitting one constant column")
        for level in levels:
            col = np.fromiter((1.0 if c == level else 0.0 for c in cells),
                              dtype=np.float64, count=n)
            out_cols.append(col)
            names.append(f"{cname}={level}")
    X = np.column_stack(out_cols)
    if not np.isfinite(X).all():
        raise DatasetError(f"{raw.name}: non-finite entries after encoding")
    return Dataset(name=raw.name, X=X, y=raw.y.copy(), feature_names=names)


def normalize(X, stats: NormStats | None = None) -> tuple[np.ndarray, NormStats]:
    """Z-score columns; with given ``stats``, apply them (pool stats on test
    data).  Constant columns (std 0) map to all-zero columns."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        raise ValueError("cannot normalize an empty matrix")
    if stats is None:
        stats = NormStats(means=X.mean(axis=0), stds=X.std(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        Xn = np.where(stats.stds > 0.0, (X - stats.means) / stats.stds, 0.0)
    return Xn, stats


def split_pool_test(n: int, fraction: float, seed: int) -> Split:
    """Uniformly random disjoint pool/test partition, deterministic in seed.

    The pool receives floor(fraction * n) rows (ties to the test set),
    clamped so both sides keep at least one row.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 to split, got {n}")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    pool_size = min(max(int(math.floor(fraction * n)), 1), n - 1)
    return Split(pool_indices=np.sort(perm[:pool_size]),
                 test_indices=np.sort(perm[pool_size:]),
                 seed=seed)


# --- dataset registry -------------------------------------------------------

def default_registry_path() -> Path:
    return Path(__file__).parent / "data" / "registry.json"


@dataclass
class RegistryEntry:
    name: str
    path: Path
    target: str
    categorical: list[str] = field(default_factory=list)
    source: str = ""
    notes: str = ""


def load_registry(path=None) -> dict[str, RegistryEntry]:
    """Read a registry manifest mapping dataset names to CSV descriptions.

    Relative file paths are resolved against the registry file's directory.
    """
    path = Path(path) if path is not None else default_registry_path()
    if not path.is_file():
        raise DatasetError(f"registry manifest not found: {path}")
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    base = path.parent
    entries = {}
    for name, spec in doc["datasets"].items():
        csv_path = Path(spec["path"])
        if not csv_path.is_absolute():
            csv_path = base / csv_path
        entries[name] = RegistryEntry(
            name=name, path=csv_path, target=spec["target"],
            categorical=list(spec.get("categorical", [])),
            source=spec.get("source", ""), notes=spec.get("notes", ""))
    return entries


def load_dataset(name: str, registry=None) -> Dataset:
    """Resolve a registry entry, parse its CSV, and one-hot encode it.

    The returned dataset is NOT normalized; callers decide whether stats come
    from the full data or the pool.
    """
    if registry is None or isinstance(registry, (str, Path)):
        registry = load_registry(registry)
    if name not in registry:
        raise DatasetError(
            f"unknown dataset {name!r}; registry has {sorted(registry)}")
    entry = registry[name]
    if not entry.path.is_file():
        raise DatasetError(
            f"dataset {name!r}: file {entry.path} is missing. Supply the CSV "
            f"yourself (source: {entry.source or 'see README'}).")
    raw = load_csv(entry.path, entry.target, entry.categorical)
    raw.name = name
    ds = one_hot_encode(raw)
    ds.name = name
    return ds
