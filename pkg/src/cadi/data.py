"""Datasets, projections, partitions and their CSV formats.

Dataset CSV::

    f0,f1,...,f{d-1},label
    0.5,1.25,...,ring_a

Projection CSV::

    x,y[,z][,label]

Everything is validated when it is constructed or loaded, so the metric code
downstream can assume finite coordinates and consistent shapes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import AlignmentError, ValidationError

FLOAT_FMT = "%.17g"
_PROJECTION_AXES = ("x", "y", "z")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def dense_labels(labels: Sequence) -> tuple[np.ndarray, tuple]:
    """Remap arbitrary labels to ``0..m-1`` in order of first appearance.

    Returns the dense integer array and the original label values, indexed by
    dense id.
    """
    ids: dict = {}
    out = np.empty(len(labels), dtype=np.int64)
    for pos, lab in enumerate(labels):
        if isinstance(lab, np.generic):
            lab = lab.item()
        out[pos] = ids.setdefault(lab, len(ids))
    return out, tuple(ids)


def _as_points(points, name: str) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise ValidationError(f"{name} needs at least one column")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0][0])
        raise ValidationError(f"{name} has a non-finite value in row {bad}")
    return arr


@dataclass(frozen=True)
class Partition:
    """Class assignment per point plus the per-class index sets."""

    class_of: np.ndarray
    classes: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.classes)

    @property
    def n(self) -> int:
        return len(self.class_of)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.classes], dtype=np.int64)


def partition_from_labels(labels: Sequence) -> Partition:
    """Build a :class:`Partition`; labels are densely remapped first.

    >>> p = partition_from_labels([5, 2, 5])
    >>> p.class_of.tolist(), p.m
    ([0, 1, 0], 2)
    """
    if len(labels) == 0:
        raise ValidationError("cannot build a partition from an empty label vector")
    dense, _ = dense_labels(labels)
    m = int(dense.max()) + 1
    order = np.argsort(dense, kind="stable")
    bounds = np.searchsorted(dense[order], np.arange(m + 1))
    classes = tuple(_frozen(order[bounds[c]:bounds[c + 1]]) for c in range(m))
    return Partition(class_of=_frozen(dense), classes=classes)


@dataclass(frozen=True)
class Dataset:
    """An ``n x d`` point cloud with one class label per row.

    ``label_names`` holds the original label value for each dense id, so the
    file labels survive a save/load cycle.
    """

    points: np.ndarray
    labels: np.ndarray
    label_names: tuple = ()

    def __post_init__(self):
        pts = _as_points(self.points, "dataset")
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or len(labels) != len(pts):
            raise ValidationError(
                f"labels length {labels.size} does not match {len(pts)} rows")
        if len(pts) < 3:
            raise ValidationError(f"a dataset needs at least 3 points, got {len(pts)}")
        dense, names = dense_labels(labels.tolist())
        if self.label_names:
            # names given for the incoming integer ids; follow the remap
            names = tuple(self.label_names[v] for v in names)
        object.__setattr__(self, "label_names", names)
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "labels", _frozen(dense))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def m(self) -> int:
        return len(self.label_names)

    def partition(self) -> Partition:
        return partition_from_labels(self.labels)


@dataclass(frozen=True)
class Projection:
    """An ``n x t`` embedding aligned row-for-row with a dataset."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(_as_points(self.points, "projection")))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def t(self) -> int:
        return self.points.shape[1]

    def check_aligned(self, ds: Dataset) -> None:
        if self.n != ds.n:
            raise AlignmentError(
                f"projection has {self.n} rows but the dataset has {ds.n}")


def check_aligned(X, Y) -> tuple[np.ndarray, np.ndarray]:
    """Return the raw matrices of ``X`` and ``Y`` after checking row counts."""
    xp = X.points if isinstance(X, (Dataset, Projection)) else np.asarray(X, dtype=np.float64)
    yp = Y.points if isinstance(Y, (Dataset, Projection)) else np.asarray(Y, dtype=np.float64)
    if xp.shape[0] != yp.shape[0]:
        raise AlignmentError(
            f"projection has {yp.shape[0]} rows but the dataset has {xp.shape[0]}")
    return xp, yp


@dataclass
class MetricResult:
    """One metric evaluation, serialisable to JSON.

    A value of ``None`` (JSON ``null``) marks a sentinel; ``params["status"]``
    then says why.
    """

    metric: str
    value: float | None
    params: dict[str, Any] = field(default_factory=dict)
    elapsed_seconds: float = 0.0

    def to_dict(self) -> dict:
        value = self.value
        if value is not None and not math.isfinite(value):
            value = None
        return {"metric": self.metric, "value": value,
                "params": dict(self.params), "elapsed_seconds": self.elapsed_seconds}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, obj: dict) -> MetricResult:
        return cls(obj["metric"], obj["value"], dict(obj.get("params", {})),
                   float(obj.get("elapsed_seconds", 0.0)))


# -- CSV I/O -----------------------------------------------------------------

def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text, newline="")) if r]
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
    return header, body


def _parse_float(s: str, path, lineno: int) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: cannot parse {s!r} as a number") from None
    if not math.isfinite(v):
        raise ValidationError(f"{path}:{lineno}: non-finite value {s!r}")
    return v


def load_dataset(path) -> Dataset:
    header, body = _read_rows(path)
    if header[-1] != "label":
        raise ValidationError(f"{path}: last column must be 'label', got {header[-1]!r}")
    feats = header[:-1]
    if feats != [f"f{c}" for c in range(len(feats))] or not feats:
        raise ValidationError(f"{path}: feature columns must be f0..f{{d-1}}, got {feats}")
    points = np.empty((len(body), len(feats)))
    raw_labels = []
    for r, row in enumerate(body):
        for c in range(len(feats)):
            points[r, c] = _parse_float(row[c], path, r + 2)
        raw_labels.append(row[-1].strip())
    labels, names = dense_labels(raw_labels)
    return Dataset(points, labels, names)


def save_dataset(ds: Dataset, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"f{c}" for c in range(ds.d)] + ["label"])
    for row, lab in zip(ds.points, ds.labels):
        w.writerow([FLOAT_FMT % v for v in row] + [ds.label_names[lab]])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _projection_header(t: int) -> list[str]:
    if t <= 3:
        return list(_PROJECTION_AXES[:t])
    return [f"c{c}" for c in range(t)]


def load_projection(path, dataset: Dataset | None = None) -> Projection:
    """Read a projection CSV; a trailing ``label`` column is ignored."""
    header, body = _read_rows(path)
    cols = header[:-1] if header and header[-1] == "label" else header
    t = len(cols)
    if t == 0 or cols != _projection_header(t):
        raise ValidationError(f"{path}: unexpected projection header {header}")
    points = np.empty((len(body), t))
    for r, row in enumerate(body):
        for c in range(t):
            points[r, c] = _parse_float(row[c], path, r + 2)
    proj = Projection(points)
    if dataset is not None:
        proj.check_aligned(dataset)
    return proj


def save_projection(proj: Projection, path, labels: Sequence | None = None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = _projection_header(proj.t)
    if labels is not None:
        if len(labels) != proj.n:
            raise AlignmentError("label vector does not match projection rows")
        header = header + ["label"]
    w.writerow(header)
    for r, row in enumerate(proj.points):
        out = [FLOAT_FMT % v for v in row]
        if labels is not None:
            out.append(labels[r])
        w.writerow(out)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_labels(path) -> np.ndarray:
    """Read a labeling (e.g. clustering output) from a CSV with a ``label`` column."""
    header, body = _read_rows(path)
    if "label" not in header:
        raise ValidationError(f"{path}: no 'label' column")
    col = header.index("label")
    labels, _ = dense_labels([row[col].strip() for row in body])
    return labels
