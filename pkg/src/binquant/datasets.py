"""Synthetic classification data and CSV loading.

Generation is bitwise-reproducible: all randomness flows through a PCG64
generator seeded from the spec, and the draw order (class blocks, then noise,
then the shuffle permutation) is fixed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from . import tensorfile

__all__ = ["DatasetSpec", "Dataset", "generate", "load_csv",
           "save_dataset_cache", "load_dataset_cache"]

KINDS = ("gaussian_blobs", "two_spirals", "file")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "gaussian_blobs"
    num_classes: int = 10
    dim: int = 20
    samples_per_class: int = 200
    class_separation: float = 4.0
    noise_sigma: float = 1.0
    seed: int = 11
    train_fraction: float = 0.8
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.num_classes < 2:
            raise ValidationError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.dim < 2:
            raise ValidationError(f"dim must be >= 2, got {self.dim}")
        if self.samples_per_class < 1:
            raise ValidationError(f"samples_per_class must be >= 1, got {self.samples_per_class}")
        if not self.class_separation > 0:
            raise ValidationError(f"class_separation must be > 0, got {self.class_separation}")
        if not self.noise_sigma > 0:
            raise ValidationError(f"noise_sigma must be > 0, got {self.noise_sigma}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.kind == "two_spirals" and self.num_classes != 2:
            raise ValidationError("two_spirals is a 2-class dataset")
        if self.kind == "file" and not self.path:
            raise ValidationError("kind 'file' needs a path")


@dataclass
class Dataset:
    inputs: np.ndarray    # (n, dim) float64
    labels: np.ndarray    # (n,) int64
    num_classes: int

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _blob_points(spec: DatasetSpec, rng: np.random.Generator):
    # class centers sit on the unit circle in the first two coordinates,
    # at equal angles, scaled by class_separation; other dims carry noise only
    k, d, n = spec.num_classes, spec.dim, spec.samples_per_class
    angles = 2.0 * np.pi * np.arange(k) / k
    centers = np.zeros((k, d))
    centers[:, 0] = np.cos(angles)
    centers[:, 1] = np.sin(angles)
    centers *= spec.class_separation
    labels = np.repeat(np.arange(k, dtype=np.int64), n)
    x = centers[labels] + spec.noise_sigma * rng.standard_normal((k * n, d))
    return x, labels


def _spiral_points(spec: DatasetSpec, rng: np.random.Generator):
    n, d = spec.samples_per_class, spec.dim
    t = (np.arange(n) + 1.0) / n
    radius = spec.class_separation * t
    xs, ys = [], []
    for c in (0, 1):
        theta = 3.5 * np.pi * t + c * np.pi
        pts = np.zeros((n, d))
        pts[:, 0] = radius * np.cos(theta)
        pts[:, 1] = radius * np.sin(theta)
        xs.append(pts)
        ys.append(np.full(n, c, dtype=np.int64))
    x = np.concatenate(xs) + spec.noise_sigma * rng.standard_normal((2 * n, d))
    return x, np.concatenate(ys)


def generate(spec: DatasetSpec) -> tuple[Dataset, Dataset]:
    """Build (train, test) per the spec: generate class blocks, shuffle with
    the seeded generator, split at floor(train_fraction * total)."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    if spec.kind == "gaussian_blobs":
        x, labels = _blob_points(spec, rng)
        k = spec.num_classes
    elif spec.kind == "two_spirals":
        x, labels = _spiral_points(spec, rng)
        k = 2
    else:
        full = load_csv(spec.path)
        x, labels, k = full.inputs, full.labels, full.num_classes
    perm = rng.permutation(x.shape[0])
    x, labels = x[perm], labels[perm]
    n_train = int(spec.train_fraction * x.shape[0])
    if n_train == 0 or n_train == x.shape[0]:
        raise ValidationError(
            f"train_fraction {spec.train_fraction} leaves an empty split for {x.shape[0]} samples")
    train = Dataset(x[:n_train], labels[:n_train], k)
    test = Dataset(x[n_train:], labels[n_train:], k)
    return train, test


def load_csv(path, has_header: bool = False) -> Dataset:
    """Read rows of d feature columns followed by one integer label column.

    Malformed rows raise ValidationError naming the 1-based line number.
    """
    path = Path(path)
    rows: list[list[float]] = []
    labels: list[int] = []
    width = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1 and has_header:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ValidationError(f"line {lineno}: need at least one feature and a label")
            if len(row) != width:
                raise ValidationError(f"line {lineno}: expected {width} columns, got {len(row)}")
            feats = []
            for col, cell in enumerate(row[:-1]):
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise ValidationError(
                        f"line {lineno}: column {col + 1} is not numeric: {cell!r}") from None
            try:
                label = int(row[-1].strip())
            except ValueError:
                raise ValidationError(
                    f"line {lineno}: label column is not an integer: {row[-1]!r}") from None
            if label < 0:
                raise ValidationError(f"line {lineno}: label out of range: {label}")
            rows.append(feats)
            labels.append(label)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    x = np.array(rows, dtype=np.float64)
    y = np.array(labels, dtype=np.int64)
    return Dataset(x, y, int(y.max()) + 1)


def save_dataset_cache(path, train: Dataset, test: Dataset) -> None:
    """Persist a generated split in the tensor container format."""
    tensorfile.write_tensors(path, {
        "train/inputs": train.inputs,
        "train/labels": train.labels.astype(np.float64),
        "test/inputs": test.inputs,
        "test/labels": test.labels.astype(np.float64),
    })


def load_dataset_cache(path) -> tuple[Dataset, Dataset]:
    t = tensorfile.read_tensors(path)
    def mk(prefix: str) -> Dataset:
        y = t[f"{prefix}/labels"].astype(np.int64)
        return Dataset(t[f"{prefix}/inputs"], y, int(y.max()) + 1)
    return mk("train"), mk("test")
