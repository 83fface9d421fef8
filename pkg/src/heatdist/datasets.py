"""IDX digit files, image-to-signal conversion and the clustered signal generator."""
from __future__ import annotations

import gzip
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diffuse import SignalSet

__all__ = [
    "ImageSet",
    "IdxError",
    "IdxMagicError",
    "IdxTruncatedError",
    "IdxShapeError",
    "IMAGES_MAGIC",
    "LABELS_MAGIC",
    "load_idx_images",
    "load_idx_labels",
    "write_idx_images",
    "write_idx_labels",
    "image_signal",
    "find_digit_files",
    "cluster_signals",
]

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    """Malformed IDX file; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class IdxMagicError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class IdxShapeError(IdxError):
    pass


@dataclass(frozen=True, eq=False)
class ImageSet:
    """Gray-scale images flattened row-major, intensities in [0, 1]."""

    pixels: np.ndarray
    rows: int
    cols: int
    labels: np.ndarray | None = None

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    def __len__(self) -> int:
        return self.count


def _read_bytes(path) -> bytes:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except EOFError as exc:
            raise IdxTruncatedError(f"gzip stream ends early: {exc}", len(raw)) from exc
        except (OSError, zlib.error) as exc:
            raise IdxError(f"unreadable gzip stream: {exc}", 0) from exc
    return raw


def _parse(raw: bytes, magic: int, ndims: int) -> tuple[tuple[int, ...], np.ndarray]:
    header = 4 * (1 + ndims)
    if len(raw) < 4:
        raise IdxTruncatedError("file shorter than the magic number", len(raw))
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise IdxMagicError(f"magic number 0x{found:08x}, expected 0x{magic:08x}", 0)
    if len(raw) < header:
        raise IdxTruncatedError("header cut short", len(raw))
    dims = struct.unpack(f">{ndims}I", raw[4:header])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = len(raw) - header
    if payload < expected:
        raise IdxTruncatedError(f"payload has {payload} of {expected} bytes", len(raw))
    if payload > expected:
        raise IdxShapeError(f"{payload - expected} bytes beyond the declared {dims} payload", header + expected)
    return dims, np.frombuffer(raw, dtype=np.uint8, offset=header)


def load_idx_images(path, labels_path=None) -> ImageSet:
    """Read an IDX image file (optionally gzipped) into an :class:`ImageSet`.

    If ``labels_path`` is given, the label file is read as well and its
    item count must match the image count.
    """
    (count, rows, cols), data = _parse(_read_bytes(path), IMAGES_MAGIC, 3)
    pixels = data.reshape(count, rows * cols).astype(float) / 255.0
    labels = None
    if labels_path is not None:
        labels = load_idx_labels(labels_path)
        if labels.shape[0] != count:
            raise IdxShapeError(f"{labels.shape[0]} labels for {count} images", 4)
    return ImageSet(pixels, rows, cols, labels)


def load_idx_labels(path) -> np.ndarray:
    (_count,), data = _parse(_read_bytes(path), LABELS_MAGIC, 1)
    return data.astype(np.int64)


def _write(path, raw: bytes):
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as fh:
        fh.write(raw)


def write_idx_images(path, images: ImageSet):
    """Write ``images`` as an IDX file; intensities are rounded to bytes."""
    data = np.clip(np.rint(np.asarray(images.pixels) * 255.0), 0, 255).astype(np.uint8)
    header = struct.pack(">4I", IMAGES_MAGIC, images.count, images.rows, images.cols)
    _write(path, header + data.tobytes())


def write_idx_labels(path, labels):
    lab = np.asarray(labels)
    if lab.size and (lab.min() < 0 or lab.max() > 255):
        raise ValueError("IDX labels must fit in one unsigned byte")
    _write(path, struct.pack(">2I", LABELS_MAGIC, lab.shape[0]) + lab.astype(np.uint8).tobytes())


def image_signal(images: ImageSet, index: int) -> np.ndarray:
    if not 0 <= index < images.count:
        raise IndexError(f"image index {index} outside [0, {images.count})")
    return images.pixels[index].copy()


_DIGIT_NAMES = [
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("train-images.idx3-ubyte", "train-labels.idx1-ubyte"),
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
]


def find_digit_files(directory=None):
    """Locate a local pair of digit image/label IDX files.

    Looks in ``directory`` or, when omitted, in ``$HEATDIST_DIGITS``.
    Returns ``(images_path, labels_path)`` or ``None``.
    """
    directory = directory or os.environ.get("HEATDIST_DIGITS")
    if not directory:
        return None
    root = Path(directory)
    for images, labels in _DIGIT_NAMES:
        for suffix in ("", ".gz"):
            ip, lp = root / (images + suffix), root / (labels + suffix)
            if ip.is_file() and lp.is_file():
                return ip, lp
    return None


def cluster_signals(node_labels, per_type: int = 10, rng: np.random.Generator | None = None) -> SignalSet:
    """Three-hot signals concentrated on one cluster each.

    For every cluster ``c`` and each of ``per_type`` draws, two distinct
    nodes of ``c`` and one node outside ``c`` are set to 1. The signal
    label is ``c``.
    """
    node_labels = np.asarray(node_labels)
    if rng is None:
        rng = np.random.default_rng()
    n = node_labels.shape[0]
    clusters = np.unique(node_labels)
    rows, labels = [], []
    for c in clusters:
        home = np.flatnonzero(node_labels == c)
        away = np.flatnonzero(node_labels != c)
        if home.size < 2 or away.size < 1:
            raise ValueError(f"cluster {c} needs two members and one outside node")
        for _ in range(per_type):
            x = np.zeros(n)
            x[rng.choice(home, size=2, replace=False)] = 1.0
            x[rng.choice(away)] = 1.0
            rows.append(x)
            labels.append(int(c))
    return SignalSet(np.array(rows).reshape(len(rows), n), np.array(labels, dtype=int))
