"""Classification datasets: IDX parsing, binarization, subsampling, label noise.

IDX is the big-endian container used by MNIST-family files: a 4-byte magic
``0x00 0x00 <dtype> <ndim>`` followed by ``ndim`` uint32 sizes and the raw
payload.  Only unsigned-byte payloads are accepted (magic 0x00000803 for
image stacks, 0x00000801 for label vectors).  Files ending in ``.gz`` are
read through gzip.

Nothing is downloaded.  The MD5 sums of the standard MNIST archives are
listed in :data:`MNIST_MD5` for use with :func:`verify_md5`.
"""
from __future__ import annotations

import gzip
import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadMagic, CountMismatch, EmptyResult, TruncatedFile
from .kr import as_generator

__all__ = [
    "ClassificationDataset",
    "GaussianAdditive",
    "LabelFlip",
    "IMAGES_MAGIC",
    "LABELS_MAGIC",
    "MNIST_MD5",
    "EVEN_ODD",
    "CIFAR10_ANIMALS_VEHICLES",
    "load_idx",
    "read_idx",
    "write_idx",
    "verify_md5",
    "binarize",
    "subsample",
    "inject_noise",
    "inject_labels",
    "encode_targets",
    "decode_predictions",
]

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

# gzip archives as distributed on the original MNIST site
MNIST_MD5 = {
    "train-images-idx3-ubyte.gz": "f68b3c2dcbeaaa9fbdd348bbdeb94873",
    "train-labels-idx1-ubyte.gz": "d53e105ee54ea40749a09fcbcd1e9432",
    "t10k-images-idx3-ubyte.gz": "9fb629c4189551a2d022fa330f9573f3",
    "t10k-labels-idx1-ubyte.gz": "ec29112dd5afa0611ce80d1b7f02629c",
}

EVEN_ODD = {d: d % 2 for d in range(10)}
# airplane automobile bird cat deer dog frog horse ship truck -> vehicles 1, animals 0
CIFAR10_ANIMALS_VEHICLES = {0: 1, 1: 1, 2: 0, 3: 0, 4: 0, 5: 0, 6: None, 7: None, 8: 1, 9: 1}


@dataclass(frozen=True)
class ClassificationDataset:
    inputs: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    num_classes: int
    provenance: str = ""

    def __post_init__(self):
        if len(self.inputs) == 0:
            raise EmptyResult("dataset has no samples")
        if len(self.inputs) != len(self.labels):
            raise CountMismatch(f"{len(self.inputs)} inputs vs {len(self.labels)} labels")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError("labels out of range")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs contain non-finite values")

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class GaussianAdditive:
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")


@dataclass(frozen=True)
class LabelFlip:
    p: float

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ValueError("flip probability must lie in [0, 1)")


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path, expected_magic: int) -> np.ndarray:
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: missing header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise TruncatedFile(f"{path}: header cut short")
    dims = struct.unpack(f">{ndim}I", raw[4:head])
    size = int(np.prod(dims, dtype=np.int64))
    if len(raw) - head < size:
        raise TruncatedFile(f"{path}: {len(raw) - head} payload bytes, header promises {size}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=head).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    a = np.asarray(array)
    if a.dtype != np.uint8:
        raise ValueError("only uint8 payloads are supported")
    magic = 0x00000800 | a.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{a.ndim}I", *a.shape))
        fh.write(a.tobytes())


def load_idx(images_path, labels_path, num_classes: int | None = None,
             provenance: str | None = None) -> ClassificationDataset:
    """Images flattened and scaled to [0, 1]; labels as int64."""
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images vs {labels.shape[0]} labels")
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    y = labels.astype(np.int64)
    k = num_classes if num_classes is not None else max(10, int(y.max()) + 1)
    return ClassificationDataset(x, y, k, provenance or f"idx:{Path(images_path).name}")


def verify_md5(path, expected: str) -> bool:
    h = hashlib.md5()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest() == expected


def binarize(dataset: ClassificationDataset, class_map: dict,
             drop_unmapped: bool = False) -> ClassificationDataset:
    """Relabel to {0, 1}; classes mapped to ``None`` are removed.

    Labels absent from ``class_map`` raise unless ``drop_unmapped``.
    """
    labels = dataset.labels
    new = np.full(len(labels), -1, dtype=np.int64)
    keep = np.zeros(len(labels), dtype=bool)
    for c in np.unique(labels):
        c = int(c)
        if c not in class_map:
            if not drop_unmapped:
                raise KeyError(f"class {c} has no mapping")
            continue
        target = class_map[c]
        if target is None:
            continue
        if target not in (0, 1):
            raise ValueError(f"class {c} mapped to {target}, expected 0 or 1")
        sel = labels == c
        new[sel] = target
        keep |= sel
    if not keep.any():
        raise EmptyResult("every sample was dropped")
    return ClassificationDataset(dataset.inputs[keep], new[keep], 2,
                                 f"{dataset.provenance} binarized")


def subsample(dataset: ClassificationDataset, n: int, seed=None) -> ClassificationDataset:
    if not 1 <= n <= dataset.n:
        raise ValueError(f"cannot draw {n} of {dataset.n} samples")
    idx = np.sort(as_generator(seed).choice(dataset.n, size=n, replace=False))
    return ClassificationDataset(dataset.inputs[idx], dataset.labels[idx],
                                 dataset.num_classes, f"{dataset.provenance} n={n}")


def inject_labels(labels, spec: LabelFlip, seed, num_classes: int) -> tuple:
    """Corrupt exactly round(p * n) labels; returns (copy, corrupted mask).

    Each corrupted label is redrawn uniformly from the other classes, so it
    never equals the original.
    """
    labels = np.asarray(labels)
    rng = as_generator(seed)
    n = len(labels)
    m = int(round(spec.p * n))
    mask = np.zeros(n, dtype=bool)
    out = labels.copy()
    if m:
        idx = rng.choice(n, size=m, replace=False)
        mask[idx] = True
        out[idx] = (labels[idx] + rng.integers(1, num_classes, size=m)) % num_classes
    return out, mask


def inject_noise(data, spec, seed=None, num_classes: int | None = None):
    """Noisy copy of a dataset or target vector plus the corrupted-index mask.

    ``LabelFlip`` needs integer labels (a :class:`ClassificationDataset` or an
    array with ``num_classes``).  ``GaussianAdditive`` adds N(0, variance) to
    real targets.  The input is never modified.
    """
    if isinstance(data, ClassificationDataset):
        if not isinstance(spec, LabelFlip):
            raise TypeError("classification datasets take LabelFlip noise")
        labels, mask = inject_labels(data.labels, spec, seed, data.num_classes)
        return (ClassificationDataset(data.inputs, labels, data.num_classes,
                                      f"{data.provenance} flip={spec.p:g}"), mask)
    if isinstance(spec, LabelFlip):
        if num_classes is None:
            raise ValueError("num_classes is required for raw label arrays")
        return inject_labels(data, spec, seed, num_classes)
    if isinstance(spec, GaussianAdditive):
        y = np.asarray(data, dtype=float)
        rng = as_generator(seed)
        noisy = y + np.sqrt(spec.variance) * rng.standard_normal(y.shape)
        return noisy, np.full(y.shape[0], spec.variance > 0)
    raise TypeError(f"unknown noise spec {spec!r}")


def encode_targets(labels, num_classes: int) -> np.ndarray:
    """+-1 for binary problems, one-hot columns otherwise."""
    labels = np.asarray(labels)
    if num_classes == 2:
        return np.where(labels == 1, 1.0, -1.0)
    return np.eye(num_classes)[labels]


def decode_predictions(pred: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred)
    if pred.ndim == 1:
        return (pred > 0).astype(np.int64)
    return np.argmax(pred, axis=1)
