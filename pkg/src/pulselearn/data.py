"""MNIST ingestion for the eight-class task, plus synthetic stand-ins.

The classifier reads three qubits, so it uses the eight digit classes
0, 2, 3, 4, 5, 6, 8, 9 (ascending digits map to labels 0..7). Pixels are
scaled to [0, 1] and a constant 1 is appended so the encoder's last
weight column acts as a bias.

Files are the classic IDX byte format: big-endian uint32 header
(magic 0x00000803 for image tensors, 0x00000801 for label vectors) then
raw uint8 payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DIGITS = (0, 2, 3, 4, 5, 6, 8, 9)
IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
IMAGE_SIDE = 28

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


class IdxFormatError(ValueError):
    """IDX parse failure; message carries the offending byte offset."""


@dataclass
class Dataset:
    """Bias-extended inputs with remapped labels and a provenance dict."""

    inputs: np.ndarray  # (N, input_dim) float64, last column all ones
    labels: np.ndarray  # (N,) int64 in 0..7
    digits: np.ndarray  # (N,) int64 original digit identities
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.labels)


def load_idx(path) -> np.ndarray:
    """Read one IDX file into a uint8 array of the declared shape."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 8:
        raise IdxFormatError(f"{path}: truncated header, {len(raw)} bytes (need >= 8)")
    magic, count = struct.unpack(">II", raw[:8])
    if magic == IMAGE_MAGIC:
        if len(raw) < 16:
            raise IdxFormatError(
                f"{path}: image header truncated at byte {len(raw)} (need 16)"
            )
        rows, cols = struct.unpack(">II", raw[8:16])
        if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
            raise IdxFormatError(
                f"{path}: expected {IMAGE_SIDE}x{IMAGE_SIDE} images, "
                f"header at byte 8 declares {rows}x{cols}"
            )
        expected = 16 + count * rows * cols
        if len(raw) != expected:
            raise IdxFormatError(
                f"{path}: payload ends at byte {len(raw)}, header implies {expected}"
            )
        return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)
    if magic == LABEL_MAGIC:
        expected = 8 + count
        if len(raw) != expected:
            raise IdxFormatError(
                f"{path}: payload ends at byte {len(raw)}, header implies {expected}"
            )
        return np.frombuffer(raw, dtype=np.uint8, offset=8)
    raise IdxFormatError(f"{path}: unknown magic {magic} at byte 0")


def write_idx(path, array: np.ndarray) -> None:
    """Inverse of load_idx: uint8 images (N,28,28) or labels (N,)."""
    path = Path(path)
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    if arr.ndim == 3:
        if arr.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE):
            raise ValueError(f"images must be (N, 28, 28), got {arr.shape}")
        header = struct.pack(">IIII", IMAGE_MAGIC, arr.shape[0], IMAGE_SIDE, IMAGE_SIDE)
    elif arr.ndim == 1:
        header = struct.pack(">II", LABEL_MAGIC, arr.shape[0])
    else:
        raise ValueError(f"expected 1-d labels or 3-d images, got ndim={arr.ndim}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + arr.tobytes())


def _filter_and_pack(images: np.ndarray, labels: np.ndarray, source: str) -> Dataset:
    if len(images) != len(labels):
        raise IdxFormatError(
            f"{source}: image count {len(images)} != label count {len(labels)}"
        )
    digit_to_label = {d: i for i, d in enumerate(DIGITS)}
    keep = np.isin(labels, DIGITS)
    digits = labels[keep].astype(np.int64)
    mapped = np.array([digit_to_label[d] for d in digits], dtype=np.int64)
    flat = images[keep].reshape(keep.sum(), -1).astype(np.float64) / 255.0
    inputs = np.concatenate([flat, np.ones((len(flat), 1))], axis=1)
    per_digit = {int(d): int(np.sum(digits == d)) for d in DIGITS}
    return Dataset(
        inputs=inputs,
        labels=mapped,
        digits=digits,
        meta={"source": source, "kept": int(keep.sum()), "total": len(labels),
              "per_digit": per_digit},
    )


def prepare(data_dir) -> tuple[Dataset, Dataset]:
    """Load the four canonical IDX files and build both splits."""
    data_dir = Path(data_dir)
    train = _filter_and_pack(
        load_idx(data_dir / TRAIN_IMAGES),
        load_idx(data_dir / TRAIN_LABELS),
        TRAIN_IMAGES,
    )
    test = _filter_and_pack(
        load_idx(data_dir / TEST_IMAGES),
        load_idx(data_dir / TEST_LABELS),
        TEST_IMAGES,
    )
    return train, test


def subset(ds: Dataset, per_class: int, seed: int = 0, total: int | None = None) -> Dataset:
    """Seeded stratified sample with ``per_class`` examples per label.

    ``total`` trims the stratified pick down to an exact overall count
    (still seeded) for protocols pinned to a round number.
    """
    rng = np.random.default_rng(seed)
    n_classes = int(ds.labels.max()) + 1 if len(ds.labels) else 0
    picks = []
    for label in range(n_classes):
        pool = np.flatnonzero(ds.labels == label)
        if len(pool) < per_class:
            raise ValueError(
                f"label {label} has only {len(pool)} samples, need {per_class}"
            )
        picks.append(rng.choice(pool, size=per_class, replace=False))
    idx = np.concatenate(picks)
    if total is not None:
        if total > len(idx):
            raise ValueError(f"total={total} exceeds stratified pick of {len(idx)}")
        idx = rng.choice(idx, size=total, replace=False)
    idx = np.sort(idx)
    return Dataset(
        inputs=ds.inputs[idx].copy(),
        labels=ds.labels[idx].copy(),
        digits=ds.digits[idx].copy(),
        meta={**ds.meta, "subset_per_class": per_class, "subset_seed": seed},
    )


def synthetic_dataset(
    n_per_class: int,
    input_dim: int = 16,
    n_classes: int = 8,
    seed: int = 0,
    spread: float = 0.25,
    center_seed: int = 12345,
) -> Dataset:
    """Gaussian blobs in [0, 1]^d, one center per class, bias appended.

    Shaped like the real pipeline output (last column all ones, labels
    0..n_classes-1) so any consumer runs unchanged on it. Class centers
    depend only on ``center_seed``; the point draws only on ``seed``, so
    two calls with different seeds give a train/test pair of the same
    task.
    """
    rng = np.random.default_rng(seed)
    centers = np.random.default_rng(center_seed).uniform(
        0.1, 0.9, size=(n_classes, input_dim)
    )
    rows, labels = [], []
    for c in range(n_classes):
        pts = centers[c] + spread * rng.standard_normal((n_per_class, input_dim))
        rows.append(np.clip(pts, 0.0, 1.0))
        labels.append(np.full(n_per_class, c, dtype=np.int64))
    flat = np.concatenate(rows)
    inputs = np.concatenate([flat, np.ones((len(flat), 1))], axis=1)
    labels = np.concatenate(labels)
    digits = np.array([DIGITS[c] if c < len(DIGITS) else c for c in labels])
    return Dataset(
        inputs=inputs,
        labels=labels,
        digits=digits,
        meta={"source": "synthetic", "seed": seed, "spread": spread},
    )


def export_csv(ds: Dataset, path) -> None:
    """Write label,digit,pixel... rows; floats exact via repr round-trip."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        cols = ["label", "digit"] + [f"x{i}" for i in range(ds.inputs.shape[1])]
        fh.write(",".join(cols) + "\n")
        for label, digit, row in zip(ds.labels, ds.digits, ds.inputs):
            vals = ",".join("%.17g" % v for v in row)
            fh.write(f"{label},{digit},{vals}\n")
