"""Dataset ingestion (IDX format), class-subset selection, and reduction.

Images travel as (N, 784) uint8 rows.  Dimensionality reduction is PCA fit
on the training split only, followed by per-feature min-max scaling to
[0, pi] with the training extrema; test features are clamped into range.

Because datasets are inputs (never downloaded), the module also ships a
deterministic synthetic digit-glyph corpus writer producing genuine IDX
files, so every pipeline stage can run offline end to end.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

MAGIC_IMAGES = 0x00000803
MAGIC_LABELS = 0x00000801


@dataclass
class RawDataset:
    images: np.ndarray   # (N, 784) uint8
    labels: np.ndarray   # (N,) uint8, values 0..9

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"image/label count mismatch: {self.images.shape[0]} vs "
                f"{self.labels.shape[0]}")


def _open_sniffed(path):
    """Open a file, transparently decompressing gzip by magic bytes."""
    with open(path, "rb") as probe:
        head = probe.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(handle, size, what):
    data = handle.read(size)
    if len(data) != size:
        raise ValueError(f"truncated {what}: wanted {size} bytes, got {len(data)}")
    return data


def load_idx(images_path, labels_path):
    """Load an IDX image/label file pair with full header validation."""
    with _open_sniffed(images_path) as f:
        magic, count, rows, cols = struct.unpack(
            ">iiii", _read_exact(f, 16, "image header"))
        if magic != MAGIC_IMAGES:
            raise ValueError(
                f"bad image magic 0x{magic:08x} in {images_path} "
                f"(expected 0x{MAGIC_IMAGES:08x})")
        if (rows, cols) != (28, 28):
            raise ValueError(f"expected 28x28 images, got {rows}x{cols}")
        payload = _read_exact(f, count * rows * cols, "image payload")
        images = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)
    with _open_sniffed(labels_path) as f:
        magic, label_count = struct.unpack(
            ">ii", _read_exact(f, 8, "label header"))
        if magic != MAGIC_LABELS:
            raise ValueError(
                f"bad label magic 0x{magic:08x} in {labels_path} "
                f"(expected 0x{MAGIC_LABELS:08x})")
        labels = np.frombuffer(
            _read_exact(f, label_count, "label payload"), dtype=np.uint8)
    if label_count != count:
        raise ValueError(f"count mismatch: {count} images vs {label_count} labels")
    if labels.size and labels.max() > 9:
        raise ValueError("labels outside 0..9")
    return RawDataset(images.copy(), labels.copy())


def save_idx(images, labels, images_path, labels_path):
    """Write an IDX image/label file pair (big-endian headers)."""
    images = np.asarray(images, dtype=np.uint8).reshape(len(labels), 784)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">iiii", MAGIC_IMAGES, images.shape[0], 28, 28))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">ii", MAGIC_LABELS, labels.shape[0]))
        f.write(labels.tobytes())


@dataclass
class SubsetDataset:
    images: np.ndarray       # (N, 784) uint8
    labels: np.ndarray       # (N,) int64 in [0, K)
    class_map: tuple         # class i <- original label class_map[i]


def select_classes(raw, k_classes, seed, per_class_cap=None):
    """Seeded choice of K distinct original labels, remapped to 0..K-1.

    Nesting: the subset for K+1 under the same seed is the K-subset plus
    one label, because classes are taken as a prefix of one seeded
    permutation.  ``per_class_cap`` keeps at most that many samples per
    class, in file order.
    """
    available = np.unique(raw.labels)
    if k_classes > available.size:
        raise ValueError(f"asked for {k_classes} classes, dataset has {available.size}")
    perm = np.random.default_rng(seed).permutation(available)
    chosen = perm[:k_classes]
    parts_x, parts_y = [], []
    for new_label, original in enumerate(chosen):
        idx = np.flatnonzero(raw.labels == original)
        if per_class_cap is not None:
            idx = idx[:per_class_cap]
        parts_x.append(raw.images[idx])
        parts_y.append(np.full(idx.size, new_label, dtype=np.int64))
    return SubsetDataset(np.concatenate(parts_x), np.concatenate(parts_y),
                         tuple(int(c) for c in chosen))


def one_hot(labels, k_classes):
    out = np.zeros((len(labels), k_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


@dataclass
class PixelTransform:
    """Fitted PCA + min-max map from raw pixels to features in [0, pi]."""

    mean: np.ndarray         # (784,)
    components: np.ndarray   # (784, F)
    feat_min: np.ndarray     # (F,)
    feat_max: np.ndarray     # (F,)

    def apply(self, images):
        x = images.astype(np.float64) / 255.0 - self.mean
        scores = x @ self.components
        span = np.maximum(self.feat_max - self.feat_min, 1e-12)
        scaled = math.pi * (scores - self.feat_min) / span
        return np.clip(scaled, 0.0, math.pi)

    def digest(self):
        h = hashlib.sha256()
        for arr in (self.mean, self.components, self.feat_min, self.feat_max):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def fit_pixel_transform(images, n_features):
    """PCA on centered pixels: top components of the covariance, with the
    deterministic sign convention that each component's largest-magnitude
    loading is positive."""
    if n_features > images.shape[1]:
        raise ValueError(f"cannot extract {n_features} components from "
                         f"{images.shape[1]} pixels")
    x = images.astype(np.float64) / 255.0
    mean = x.mean(axis=0)
    centered = x - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:n_features].T.copy()
    for c in range(components.shape[1]):
        lead = components[np.argmax(np.abs(components[:, c])), c]
        if lead < 0:
            components[:, c] = -components[:, c]
    scores = centered @ components
    return PixelTransform(mean, components,
                          scores.min(axis=0), scores.max(axis=0))


@dataclass
class ReducedDataset:
    train_x: np.ndarray      # (N, 2W) in [0, pi]
    train_labels: np.ndarray
    train_y: np.ndarray      # one-hot
    test_x: np.ndarray
    test_labels: np.ndarray
    test_y: np.ndarray
    class_map: tuple
    transform: PixelTransform


def reduce_and_scale(train_subset, test_subset, n_wires):
    """Fit the reducer on the training split only and map both splits to
    2W features in [0, pi] (test values clamped to range)."""
    k = len(train_subset.class_map)
    transform = fit_pixel_transform(train_subset.images, 2 * n_wires)
    return ReducedDataset(
        transform.apply(train_subset.images),
        train_subset.labels,
        one_hot(train_subset.labels, k),
        transform.apply(test_subset.images),
        test_subset.labels,
        one_hot(test_subset.labels, k),
        train_subset.class_map,
        transform,
    )


# --- cached reduced datasets ---------------------------------------------


def save_reduced(reduced, path, seed, k_classes):
    """Serialize a ReducedDataset to one flat binary file.

    A sorted-key JSON manifest line (seed, K, W, transform hash, array
    table) precedes the concatenated raw array bytes, so equal inputs give
    byte-identical files.
    """
    arrays = {
        "train_x": reduced.train_x, "train_labels": reduced.train_labels,
        "test_x": reduced.test_x, "test_labels": reduced.test_labels,
        "mean": reduced.transform.mean, "components": reduced.transform.components,
        "feat_min": reduced.transform.feat_min, "feat_max": reduced.transform.feat_max,
    }
    table = {name: {"dtype": str(a.dtype), "shape": list(a.shape)}
             for name, a in arrays.items()}
    manifest = {
        "arrays": table,
        "class_map": list(reduced.class_map),
        "k": int(k_classes),
        "seed": int(seed),
        "transform_hash": reduced.transform.digest(),
        "w": reduced.train_x.shape[1] // 2,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(manifest, sort_keys=True).encode() + b"\n")
        for name in sorted(arrays):
            f.write(np.ascontiguousarray(arrays[name]).tobytes())


def load_reduced(path):
    """Inverse of save_reduced; validates the recorded transform hash."""
    with open(path, "rb") as f:
        manifest = json.loads(f.readline().decode())
        arrays = {}
        for name in sorted(manifest["arrays"]):
            meta = manifest["arrays"][name]
            shape = tuple(meta["shape"])
            count = int(np.prod(shape)) if shape else 1
            dtype = np.dtype(meta["dtype"])
            data = _read_exact(f, count * dtype.itemsize, f"array {name}")
            arrays[name] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
    transform = PixelTransform(arrays["mean"], arrays["components"],
                               arrays["feat_min"], arrays["feat_max"])
    if transform.digest() != manifest["transform_hash"]:
        raise ValueError(f"transform hash mismatch in {path}")
    k = manifest["k"]
    return ReducedDataset(
        arrays["train_x"], arrays["train_labels"],
        one_hot(arrays["train_labels"], k),
        arrays["test_x"], arrays["test_labels"],
        one_hot(arrays["test_labels"], k),
        tuple(manifest["class_map"]), transform,
    )


# --- offline synthetic digit corpus ---------------------------------------

# Two stroke variants per digit, emulating handwriting style diversity.
_GLYPHS = {
    0: (("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
        ("00100", "01010", "01010", "01010", "01010", "01010", "00100")),
    1: (("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
        ("00010", "00110", "01010", "00010", "00010", "00010", "00010")),
    2: (("01110", "10001", "00001", "00110", "01000", "10000", "11111"),
        ("11110", "00001", "00001", "00010", "00100", "01000", "11111")),
    3: (("11110", "00001", "00001", "01110", "00001", "00001", "11110"),
        ("01110", "10001", "00001", "00110", "00001", "10001", "01110")),
    4: (("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
        ("01000", "01000", "01010", "01010", "11111", "00010", "00010")),
    5: (("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
        ("01111", "01000", "01110", "00001", "00001", "00001", "11110")),
    6: (("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
        ("01110", "10001", "10000", "11110", "10001", "10001", "01110")),
    7: (("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
        ("11111", "00010", "00100", "00100", "01000", "01000", "10000")),
    8: (("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
        ("00110", "01001", "01001", "00110", "01001", "01001", "00110")),
    9: (("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
        ("01110", "10001", "10001", "01111", "00001", "00001", "00001")),
}


def _render_digit(digit, rng):
    """One 28x28 uint8 glyph: a random stroke variant under seeded affine
    jitter, stroke-thickness change, blur, and pixel noise."""
    variant = _GLYPHS[digit][rng.integers(len(_GLYPHS[digit]))]
    glyph = np.array([[float(c) for c in row] for row in variant])
    base = ndimage.zoom(glyph, (20.0 / 7.0, 14.0 / 5.0), order=1)
    canvas = np.zeros((28, 28))
    top = (28 - base.shape[0]) // 2
    left = (28 - base.shape[1]) // 2
    canvas[top:top + base.shape[0], left:left + base.shape[1]] = base
    if rng.random() < 0.5:
        canvas = ndimage.grey_dilation(canvas, size=(2, 2))

    angle = rng.uniform(-0.3, 0.3)
    scale = rng.uniform(0.75, 1.25)
    shear = rng.uniform(-0.25, 0.25)
    shift = rng.uniform(-2.5, 2.5, size=2)
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    matrix = np.array([[cos_a, -sin_a], [sin_a, cos_a]]) @ \
        np.array([[1.0, shear], [0.0, 1.0]]) / scale
    center = np.array([13.5, 13.5])
    offset = center - matrix @ center + shift
    warped = ndimage.affine_transform(canvas, matrix, offset=offset, order=1)
    blurred = ndimage.gaussian_filter(warped, sigma=rng.uniform(0.5, 1.2))
    intensity = rng.uniform(160.0, 255.0)
    noisy = blurred * intensity + rng.normal(0.0, 10.0, size=(28, 28))
    return np.clip(noisy, 0.0, 255.0).astype(np.uint8)


def synthetic_digit_corpus(n_per_class, seed, split=0):
    """Deterministic labeled digit images, (N, 784) uint8 plus labels.

    Every image depends only on (seed, split, digit, index), so corpora are
    reproducible sample by sample.
    """
    images, labels = [], []
    for digit in range(10):
        for i in range(n_per_class):
            rng = np.random.default_rng((seed, split, digit, i))
            images.append(_render_digit(digit, rng).reshape(784))
            labels.append(digit)
    return np.stack(images), np.array(labels, dtype=np.uint8)


def write_synthetic_idx(directory, n_train_per_class, n_test_per_class,
                        seed=2024):
    """Write a full IDX file quartet of synthetic digits; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "train_images": directory / "train-images-idx3-ubyte",
        "train_labels": directory / "train-labels-idx1-ubyte",
        "test_images": directory / "t10k-images-idx3-ubyte",
        "test_labels": directory / "t10k-labels-idx1-ubyte",
    }
    train_x, train_y = synthetic_digit_corpus(n_train_per_class, seed, split=0)
    test_x, test_y = synthetic_digit_corpus(n_test_per_class, seed, split=1)
    save_idx(train_x, train_y, paths["train_images"], paths["train_labels"])
    save_idx(test_x, test_y, paths["test_images"], paths["test_labels"])
    return {name: str(p) for name, p in paths.items()}
