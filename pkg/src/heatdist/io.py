"""Plain-text file formats.

* graph: first line ``n m``, then ``m`` lines ``i j w`` (0-based);
  lines starting with ``#`` are comments
* labels: one integer per line
* signals CSV: one signal per row, optionally with a trailing integer label
* distance CSV: ``n`` header-less rows of ``n`` values
* samples CSV and coordinates CSV carry a header row
"""
from __future__ import annotations

import csv

import numpy as np

from .graph import Graph, GraphError, build_graph

__all__ = [
    "FormatError",
    "read_graph",
    "write_graph",
    "read_labels",
    "write_labels",
    "read_signals",
    "write_signals",
    "read_distances",
    "write_distances",
    "write_samples",
    "write_coordinates",
    "SAMPLE_FIELDS",
]

SAMPLE_FIELDS = ("e_norm", "dev_diff", "dev_sps", "norm_dev_diff", "norm_dev_sps")


class FormatError(ValueError):
    """A text file does not follow its expected layout."""


def _content_lines(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if text and not text.startswith("#"):
                yield lineno, text


def read_graph(path) -> Graph:
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError(f"{path}: empty graph file") from None
    try:
        n, m = (int(tok) for tok in header.split())
    except ValueError:
        raise FormatError(f"{path}:{lineno}: expected header 'n m', got {header!r}") from None
    edges = []
    for lineno, text in lines:
        parts = text.split()
        try:
            if len(parts) != 3:
                raise ValueError
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: expected 'i j w', got {text!r}") from None
    if len(edges) != m:
        raise FormatError(f"{path}: header declares {m} edges, found {len(edges)}")
    try:
        return build_graph(n, edges)
    except GraphError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_graph(path, g: Graph):
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.num_edges}\n")
        for i, j, w in g.edges:
            fh.write(f"{i} {j} {w!r}\n")


def read_labels(path) -> np.ndarray:
    try:
        return np.array([int(text) for _, text in _content_lines(path)], dtype=int)
    except ValueError as exc:
        raise FormatError(f"{path}: labels must be integers ({exc})") from None


def write_labels(path, labels):
    with open(path, "w") as fh:
        for lab in np.asarray(labels).tolist():
            fh.write(f"{int(lab)}\n")


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if row and not row[0].lstrip().startswith("#")]


def read_signals(path, labeled: bool = False):
    """Return ``(signals, labels)``; ``labels`` is ``None`` unless ``labeled``."""
    rows = _read_rows(path)
    try:
        if labeled:
            labels = np.array([int(float(row[-1])) for row in rows], dtype=int)
            rows = [row[:-1] for row in rows]
        else:
            labels = None
        widths = {len(row) for row in rows}
        if len(widths) > 1:
            raise FormatError(f"{path}: rows have differing lengths {sorted(widths)}")
        signals = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: non-numeric entry ({exc})") from None
    if not rows:
        signals = np.zeros((0, 0))
    return signals, labels


def write_signals(path, signals, labels=None):
    x = np.atleast_2d(np.asarray(signals, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for i, row in enumerate(x.tolist()):
            vals = [repr(v) for v in row]
            if labels is not None:
                vals.append(str(int(labels[i])))
            writer.writerow(vals)


def read_distances(path) -> np.ndarray:
    rows = _read_rows(path)
    try:
        d = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric entry ({exc})") from None
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise FormatError(f"{path}: distance table is not square")
    return d


def write_distances(path, d):
    write_signals(path, d)


def write_samples(path, samples):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SAMPLE_FIELDS)
        for s in samples:
            writer.writerow([repr(float(getattr(s, f))) for f in SAMPLE_FIELDS])


def write_coordinates(path, coords, labels=None):
    coords = np.asarray(coords, dtype=float)
    header = [f"x{k}" for k in range(coords.shape[1])]
    if labels is not None:
        header.append("label")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(coords.tolist()):
            vals = [repr(v) for v in row]
            if labels is not None:
                vals.append(str(int(labels[i])))
            writer.writerow(vals)
