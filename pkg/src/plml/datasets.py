"""Dataset file I/O and synthetic data generators.

Two file formats are understood: comma-separated rows with the class
label in the last column, and the sparse "label index:value ..." format
with 1-based feature indices. Parse problems raise DataError carrying
the file name and line number.
"""

from __future__ import annotations

import os

import numpy as np

from .core import Dataset
from .errors import ContractError, DataError

FORMATS = ("csv", "libsvm")


def detect_format(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".csv", ".data", ".tra", ".tes"):
        return "csv"
    if ext in (".libsvm", ".svm", ".sparse"):
        return "libsvm"
    raise ContractError(
        f"cannot infer a format from {path!r}; pass format='csv' or 'libsvm'"
    )


def load_dataset(path, format: str | None = None) -> Dataset:
    """Read a labeled dataset from disk.

    format=None infers from the extension. Labels are re-encoded to 1..c
    (numeric label names sort numerically); the original names are kept
    on the Dataset.
    """
    fmt = format or detect_format(path)
    if fmt not in FORMATS:
        raise ContractError(f"format must be one of {FORMATS}, got {fmt!r}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if fmt == "csv":
        X, labels = _parse_csv(path, lines)
    else:
        X, labels = _parse_libsvm(path, lines)
    if len(labels) == 0:
        raise DataError(f"{path}: no data rows")
    return Dataset.from_arrays(X, labels)


def _parse_csv(path, lines):
    # a first line whose feature cells are not numbers is taken as an
    # optional header and skipped; everything after must parse
    rows, labels = [], []
    width = None
    saw_line = False
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 2:
            raise DataError(
                f"{path}:{lineno}: expected features plus a label, "
                f"got {len(parts)} field(s)"
            )
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise DataError(
                f"{path}:{lineno}: expected {width} fields, got {len(parts)}"
            )
        try:
            feats = [float(p) for p in parts[:-1]]
        except ValueError as exc:
            if not saw_line:
                saw_line = True
                continue
            raise DataError(f"{path}:{lineno}: non-numeric feature: {exc}") from exc
        saw_line = True
        rows.append(feats)
        labels.append(parts[-1])
    return np.array(rows, dtype=float), labels


def _parse_libsvm(path, lines):
    entries, labels = [], []
    width = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        labels.append(parts[0])
        feats = {}
        for tok in parts[1:]:
            try:
                idx_s, val_s = tok.split(":", 1)
                idx = int(idx_s)
                val = float(val_s)
            except ValueError as exc:
                raise DataError(
                    f"{path}:{lineno}: malformed feature {tok!r}"
                ) from exc
            if idx < 1:
                raise DataError(
                    f"{path}:{lineno}: feature indices are 1-based, got {idx}"
                )
            feats[idx] = val
        entries.append(feats)
        if feats:
            width = max(width, max(feats))
    if width == 0 and entries:
        raise DataError(f"{path}: no features found in any row")
    X = np.zeros((len(entries), width))
    for r, feats in enumerate(entries):
        for idx, val in feats.items():
            X[r, idx - 1] = val
    return X, labels


def save_dataset(dataset: Dataset, path, format: str | None = None) -> None:
    """Write a dataset back to disk, labels as their original names."""
    fmt = format or detect_format(path)
    names = dataset.label_names
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "csv":
            for row, lab in zip(dataset.X, dataset.y):
                fh.write(
                    ",".join(repr(float(v)) for v in row)
                    + f",{names[lab - 1]}\n"
                )
        elif fmt == "libsvm":
            for row, lab in zip(dataset.X, dataset.y):
                toks = [str(names[lab - 1])]
                toks += [
                    f"{c + 1}:{float(v)!r}"
                    for c, v in enumerate(row) if v != 0.0
                ]
                fh.write(" ".join(toks) + "\n")
        else:
            raise ContractError(f"format must be one of {FORMATS}, got {fmt!r}")


def make_blobs(
    n: int,
    n_classes: int = 3,
    d: int = 2,
    *,
    spread: float = 1.0,
    center_scale: float = 6.0,
    seed: int = 0,
) -> Dataset:
    """Gaussian class clusters with random centers; labels 1..n_classes.

    Centers are redrawn until every pair sits at least four spreads
    apart, so the classes are separable for any seed.
    """
    if n < n_classes or n_classes < 1:
        raise ContractError("need at least one point per class")
    rng = np.random.default_rng(seed)
    min_gap = 4.0 * spread
    for _ in range(200):
        centers = rng.normal(scale=center_scale, size=(n_classes, d))
        gap = _min_center_gap(centers)
        if n_classes == 1 or gap >= min_gap:
            break
    else:
        if gap > 0.0:
            centers *= min_gap / gap
    counts = _split_counts(n, n_classes)
    X = np.concatenate([
        centers[c] + rng.normal(scale=spread, size=(counts[c], d))
        for c in range(n_classes)
    ])
    y = np.repeat(np.arange(1, n_classes + 1), counts)
    return Dataset(X, y, tuple(str(c + 1) for c in range(n_classes)))


def make_pinwheel(
    n: int = 600,
    n_classes: int = 3,
    *,
    seed: int = 0,
    warp: float = 8.0,
    radius_lo: float = 0.4,
    radius_hi: float = 1.75,
    angle_noise: float = 0.25,
    radial_noise: float = 0.08,
) -> Dataset:
    """Spiral-arm classes whose boundaries rotate with radius.

    Each class occupies an angular sector whose position advances by
    `warp` radians per unit radius, so the locally correct
    discriminative direction turns smoothly across the plane. This is
    the regime where per-instance metrics beat both one global metric
    and hard per-cluster metrics.
    """
    if n < n_classes or n_classes < 2:
        raise ContractError("need at least two classes and one point per class")
    rng = np.random.default_rng(seed)
    counts = _split_counts(n, n_classes)
    xs, ys = [], []
    for c in range(n_classes):
        k = counts[c]
        r = radius_lo + (radius_hi - radius_lo) * rng.random(k)
        r += radial_noise * rng.standard_normal(k)
        theta = (
            2.0 * np.pi * c / n_classes
            + warp * r
            + angle_noise * rng.standard_normal(k)
        )
        xs.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        ys.append(np.full(k, c + 1))
    X = np.concatenate(xs)
    y = np.concatenate(ys).astype(int)
    return Dataset(X, y, tuple(str(c + 1) for c in range(n_classes)))


def _min_center_gap(centers):
    diffs = centers[:, None, :] - centers[None, :, :]
    dists = np.linalg.norm(diffs, axis=-1)
    dists[np.diag_indices_from(dists)] = np.inf
    return float(dists.min())


def _split_counts(n, k):
    base = n // k
    counts = np.full(k, base, dtype=int)
    counts[: n - base * k] += 1
    return counts
