"""Unit-distance ellipses of 2-D local metrics, as CSV rows or an SVG map.

The ellipse of a metric M around a center x is {z : (z-x)^T M (z-x) = 1}.
Its semi-axes point along M's eigenvectors with length 1/sqrt(eigenvalue);
an eigenvalue at or below the degeneracy threshold means the boundary
runs off to infinity in that direction and the ellipse is flagged instead
of drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import combine_metric
from .errors import ContractError
from .predictor import PlmlModel

DEGENERATE_EIGENVALUE = 1e-12

_CSV_HEADER = (
    "instance,label,center_x,center_y,major_len,minor_len,"
    "major_ux,major_uy,minor_ux,minor_uy,eig_major,eig_minor,degenerate"
)

# Okabe-Ito palette: colorblind-safe class colors, reused cyclically.
_PALETTE = (
    "#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00",
    "#56b4e9", "#f0e442", "#000000", "#999999", "#8b4513",
)


@dataclass(frozen=True)
class EllipseSpec:
    center: np.ndarray        # (2,)
    axes: np.ndarray          # (2, 2), columns = unit axis directions
    lengths: np.ndarray       # (2,) semi-axis lengths, major first
    eigenvalues: np.ndarray   # (2,) metric eigenvalues, major axis first
    degenerate: bool
    label: int = 0
    instance: int = -1


def metric_ellipse(M, center, *, label: int = 0, instance: int = -1) -> EllipseSpec:
    """Unit-distance ellipse of one 2-D metric."""
    M = np.asarray(M, dtype=float)
    center = np.asarray(center, dtype=float)
    if M.shape != (2, 2) or center.shape != (2,):
        raise ContractError(
            f"ellipses need a (2, 2) metric and a (2,) center, got "
            f"{M.shape} and {center.shape}"
        )
    evals, evecs = np.linalg.eigh(0.5 * (M + M.T))
    # eigh sorts ascending: the smallest eigenvalue owns the major axis
    degenerate = bool(evals[0] <= DEGENERATE_EIGENVALUE)
    lengths = np.where(
        evals > DEGENERATE_EIGENVALUE, 1.0 / np.sqrt(np.maximum(evals, 1e-300)),
        np.inf,
    )
    return EllipseSpec(
        center=center, axes=evecs, lengths=lengths, eigenvalues=evals,
        degenerate=degenerate, label=label, instance=instance,
    )


def model_ellipses(model: PlmlModel, instances: Sequence[int]) -> List[EllipseSpec]:
    """Local-metric ellipses at the given training instances (2-D models)."""
    if model.d != 2:
        raise ContractError(
            f"ellipse export needs 2-D features, model has d={model.d}"
        )
    specs = []
    for i in instances:
        i = int(i)
        if not 0 <= i < model.n:
            raise ContractError(
                f"instance index {i} out of range [0, {model.n})"
            )
        M = combine_metric(model.W[i], model.basis)
        specs.append(
            metric_ellipse(
                M, model.train_X[i], label=int(model.train_y[i]), instance=i,
            )
        )
    return specs


def export_ellipses(model: PlmlModel, instances: Sequence[int], path) -> List[EllipseSpec]:
    """Write ellipses for the given instances; the extension picks the
    format (.csv or .svg), anything else writes both alongside."""
    specs = model_ellipses(model, instances)
    path = str(path)
    if path.endswith(".csv"):
        write_ellipse_csv(specs, path)
    elif path.endswith(".svg"):
        write_ellipse_svg(specs, path)
    else:
        write_ellipse_csv(specs, path + ".csv")
        write_ellipse_svg(specs, path + ".svg")
    return specs


def write_ellipse_csv(specs: Sequence[EllipseSpec], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_CSV_HEADER + "\n")
        for s in specs:
            values = [
                s.center[0], s.center[1], s.lengths[0], s.lengths[1],
                s.axes[0, 0], s.axes[1, 0], s.axes[0, 1], s.axes[1, 1],
                s.eigenvalues[0], s.eigenvalues[1],
            ]
            text = ",".join(repr(float(v)) for v in values)
            fh.write(f"{s.instance},{s.label},{text},{int(s.degenerate)}\n")


def write_ellipse_svg(
    specs: Sequence[EllipseSpec], path, *, width: int = 800,
    stroke_width: float = 1.0,
) -> None:
    """Standalone SVG: one outline per ellipse plus a center dot, colored
    by class label. Degenerate ellipses are drawn as dashed circles at
    the clamped radius so they stay visible without dominating."""
    if not specs:
        raise ContractError("nothing to draw: no ellipses given")
    centers = np.array([s.center for s in specs])
    finite = [
        ln for s in specs for ln in s.lengths if math.isfinite(ln)
    ]
    pad = max(finite) if finite else 1.0
    lo = centers.min(axis=0) - pad
    hi = centers.max(axis=0) + pad
    span = np.maximum(hi - lo, 1e-9)
    scale = (width - 20) / span.max()
    height = int(math.ceil(span[1] * scale)) + 20

    def to_px(p):
        # flip y so the data's up is the screen's up
        return (
            10 + (p[0] - lo[0]) * scale,
            height - 10 - (p[1] - lo[1]) * scale,
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    clamp = 0.5 * float(span.max())
    for s in specs:
        color = _PALETTE[(s.label - 1) % len(_PALETTE)]
        cx, cy = to_px(s.center)
        rx = min(s.lengths[0], clamp) * scale
        ry = min(s.lengths[1], clamp) * scale
        # screen y grows downward, so the rotation angle flips sign
        angle = -math.degrees(math.atan2(s.axes[1, 0], s.axes[0, 0]))
        dash = ' stroke-dasharray="4 3"' if s.degenerate else ""
        parts.append(
            f'<ellipse cx="0" cy="0" rx="{rx:.3f}" ry="{ry:.3f}" '
            f'fill="none" stroke="{color}" stroke-width="{stroke_width}"'
            f'{dash} transform="translate({cx:.3f} {cy:.3f}) '
            f'rotate({angle:.3f})"/>'
        )
        parts.append(
            f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="2" fill="{color}"/>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def ellipse_boundary_points(spec: EllipseSpec, count: int = 64) -> np.ndarray:
    """Sample the boundary; every point satisfies the unit-distance
    equation exactly (up to rounding). Degenerate ellipses raise."""
    if spec.degenerate:
        raise ContractError("a degenerate ellipse has no bounded boundary")
    t = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    circle = np.column_stack([
        spec.lengths[0] * np.cos(t), spec.lengths[1] * np.sin(t),
    ])
    return spec.center + circle @ spec.axes.T
