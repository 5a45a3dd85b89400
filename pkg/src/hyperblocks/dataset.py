"""Loading, normalization and fold assignment for tabular datasets."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, InputIOError

BUNDLED = {
    "iris": "iris.csv",
    "wbc": "wbc.csv",
    "mnist-2v7": "mnist_2v7_pooled.csv",
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RawDataset:
    rows: np.ndarray  # (N, n) float, raw scale
    labels: tuple[str, ...]
    attribute_names: tuple[str, ...]
    class_names: tuple[str, ...]

    @property
    def attribute_count(self) -> int:
        return len(self.attribute_names)

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "RawDataset":
        idx = np.asarray(idx, dtype=int)
        return RawDataset(
            rows=_frozen(self.rows[idx]),
            labels=tuple(self.labels[i] for i in idx),
            attribute_names=self.attribute_names,
            class_names=self.class_names,
        )

    def label_indices(self) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.class_names)}
        return np.array([lookup[c] for c in self.labels], dtype=int)


@dataclass(frozen=True)
class NormalizationParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = _frozen(np.asarray(self.mins, dtype=float))
        maxs = _frozen(np.asarray(self.maxs, dtype=float))
        if mins.shape != maxs.shape:
            raise DataError("normalization mins/maxs differ in length")
        if np.any(mins > maxs):
            i = int(np.argmax(mins > maxs))
            raise DataError(f"normalization min > max on attribute {i}")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    def __eq__(self, other):
        if not isinstance(other, NormalizationParams):
            return NotImplemented
        return np.array_equal(self.mins, other.mins) and np.array_equal(self.maxs, other.maxs)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Normalized points in [0, 1] with dense integer labels."""

    points: np.ndarray  # (N, n)
    labels: np.ndarray  # (N,) int in [0, K)
    attribute_names: tuple[str, ...]
    class_names: tuple[str, ...]
    norm: NormalizationParams = field(repr=False)

    def __post_init__(self):
        pts = _frozen(np.asarray(self.points, dtype=float))
        lab = _frozen(np.asarray(self.labels, dtype=int))
        if pts.ndim != 2 or pts.shape[0] != lab.shape[0]:
            raise DataError("points and labels disagree in row count")
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise DataError("normalized values must lie in [0, 1]")
        if lab.size and (lab.min() < 0 or lab.max() >= len(self.class_names)):
            raise DataError("label index out of range")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    @property
    def n_attributes(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.points[idx], self.labels[idx], self.attribute_names,
                       self.class_names, self.norm)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignments", _frozen(np.asarray(self.assignments, dtype=int)))

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("row_index,fold\n")
        for i, f in enumerate(self.assignments):
            buf.write(f"{i},{f}\n")
        return buf.getvalue()


def bundled_path(name: str) -> Path:
    """Path of one of the CSV files shipped with the package (iris, wbc, mnist-2v7)."""
    try:
        fname = BUNDLED[name]
    except KeyError:
        raise DataError(f"unknown bundled dataset {name!r}; choose from {sorted(BUNDLED)}") from None
    return Path(str(resources.files("hyperblocks") / "datasets" / fname))


def load_csv(path, has_header: bool = True, label_column: int | str = -1) -> RawDataset:
    """Read a comma-separated file of numeric attributes plus one label column.

    ``label_column`` is either a column index (negative counts from the end)
    or, when the file has a header, a column name.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            records = [(reader.line_num, r) for r in reader if r]
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason})") from exc
    except csv.Error as exc:
        raise DataError(f"{path}: {exc}") from exc

    if not records:
        raise DataError(f"{path}: empty file")
    header = records.pop(0)[1] if has_header else None
    if not records:
        raise DataError(f"{path}: no data rows")
    width = len(header) if header is not None else len(records[0][1])
    if width < 2:
        raise DataError(f"{path}: need at least one attribute and a label column")

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None:
            raise DataError("label column given by name but file has no header")
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        lc = header.index(label_column)
    else:
        lc = int(label_column)
        if not -width <= lc < width:
            raise DataError(f"{path}: label column index {lc} out of range for {width} columns")
        lc %= width

    attr_cols = [c for c in range(width) if c != lc]
    if header is not None:
        names = tuple(header[c].strip() for c in attr_cols)
    else:
        names = tuple(f"x{i + 1}" for i in range(len(attr_cols)))

    rows = np.empty((len(records), len(attr_cols)), dtype=float)
    labels = []
    for r, (line, rec) in enumerate(records):
        if len(rec) != width:
            raise DataError(f"{path}: line {line} has {len(rec)} fields, expected {width}")
        for j, c in enumerate(attr_cols):
            cell = rec[c].strip()
            if not cell:
                raise DataError(f"{path}: line {line}, column {c + 1}: empty cell")
            try:
                rows[r, j] = float(cell)
            except ValueError:
                raise DataError(f"{path}: line {line}, column {c + 1}: non-numeric value {cell!r}") from None
            if not np.isfinite(rows[r, j]):
                raise DataError(f"{path}: line {line}, column {c + 1}: non-finite value {cell!r}")
        label = rec[lc].strip()
        if not label:
            raise DataError(f"{path}: line {line}: empty label")
        labels.append(label)

    class_names = tuple(dict.fromkeys(labels))
    return RawDataset(_frozen(rows), tuple(labels), names, class_names)


def _affine(mins: np.ndarray, maxs: np.ndarray, values: np.ndarray) -> np.ndarray:
    span = maxs - mins
    safe = np.where(span > 0, span, 1.0)
    out = (values - mins) / safe
    return np.where(span > 0, out, 0.0)


def normalize(raw: RawDataset) -> Dataset:
    """Min-max scale every attribute to [0, 1] using the rows given."""
    mins = raw.rows.min(axis=0)
    maxs = raw.rows.max(axis=0)
    params = NormalizationParams(mins, maxs)
    # clip guards against rounding a hair outside [0, 1]
    pts = np.clip(_affine(params.mins, params.maxs, raw.rows), 0.0, 1.0)
    return Dataset(pts, raw.label_indices(), raw.attribute_names, raw.class_names, params)


def apply_normalization(params: NormalizationParams, raw_point) -> np.ndarray:
    """Map raw values (one point or a matrix of points) into the training scale, clamped to [0, 1]."""
    x = np.asarray(raw_point, dtype=float)
    if x.shape[-1] != params.mins.shape[0]:
        raise DataError(f"expected {params.mins.shape[0]} attributes, got {x.shape[-1]}")
    return np.clip(_affine(params.mins, params.maxs, x), 0.0, 1.0)


def normalize_with(params: NormalizationParams, raw: RawDataset) -> Dataset:
    """Scale a dataset (e.g. a held-out fold) with previously fitted parameters."""
    lookup = {c: i for i, c in enumerate(raw.class_names)}
    labels = np.array([lookup[c] for c in raw.labels], dtype=int)
    return Dataset(apply_normalization(params, raw.rows), labels, raw.attribute_names,
                   raw.class_names, params)


def stratified_folds(data, k: int, seed: int) -> FoldPlan:
    """Assign rows to ``k`` folds, shuffling within each class.

    Works on anything with a ``labels`` array (``Dataset``) or str labels
    (``RawDataset``).  Each class is dealt round-robin after a seeded shuffle,
    with the starting fold rotated per class so overall fold sizes stay within
    one of each other.
    """
    if k < 2:
        raise ConfigError("fold count must be at least 2")
    labels = data.label_indices() if isinstance(data, RawDataset) else np.asarray(data.labels)
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < k:
        small = classes[np.argmin(counts)]
        raise ConfigError(f"class {small} has {counts.min()} rows, fewer than {k} folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(len(labels), dtype=int)
    offset = 0
    for c in classes:
        rows = np.flatnonzero(labels == c)
        rng.shuffle(rows)
        assign[rows] = (np.arange(len(rows)) + offset) % k
        offset = (offset + len(rows)) % k
    return FoldPlan(k, assign, seed)


def attribute_std_devs(data: Dataset) -> np.ndarray:
    """Population standard deviation of each normalized attribute."""
    if len(data) == 0:
        raise DataError("standard deviation of an empty dataset")
    return data.points.std(axis=0, ddof=0)


def load_points(path, n_attributes: int, has_header: bool = True, label_column: int | str = -1):
    """Read points to classify; the label column is optional.

    A file with exactly ``n_attributes`` columns is all attributes.  With
    one extra column it is parsed like :func:`load_csv` and the labels are
    returned too.  Returns ``(rows, labels_or_None)``.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            lines = [(reader.line_num, r) for r in reader if r]
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if has_header:
        lines = lines[1:]
    if not lines:
        raise DataError(f"{path}: no data rows")
    width = len(lines[0][1])
    if width == n_attributes + 1:
        raw = load_csv(path, has_header, label_column)
        return raw.rows, raw.labels
    if width != n_attributes:
        raise DataError(f"{path}: {width} columns, model expects {n_attributes} (+1 optional label)")
    rows = np.empty((len(lines), n_attributes))
    for i, (line, rec) in enumerate(lines):
        if len(rec) != n_attributes:
            raise DataError(f"{path}: line {line} has {len(rec)} fields, expected {n_attributes}")
        for j, cell in enumerate(rec):
            try:
                rows[i, j] = float(cell)
            except ValueError:
                raise DataError(f"{path}: line {line}, column {j + 1}: non-numeric value {cell!r}") from None
    return rows, None
