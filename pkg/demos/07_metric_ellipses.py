"""Drawing the learned metrics as unit-distance ellipses.

For 2-D data each instance's combined metric M defines an ellipse
{z : (z - x)^T M (z - x) = 1}. Short axes mark expensive directions.
Watching the ellipses reorient across the plane is the quickest sanity
check that the metrics really are local.
"""

from pathlib import Path

import numpy as np

from plml import (
    ExperimentConfig,
    ellipse_boundary_points,
    export_ellipses,
    make_pinwheel,
    model_ellipses,
    train_pipeline,
)

data = make_pinwheel(300, seed=1)
config = ExperimentConfig(
    variant="plml", m=12, alpha1_grid=(1.0,),
    use_pca=False, normalize=False, seed=0,
)
model = train_pipeline(config, dataset=data).model

# One ellipse per requested training instance.
every_fifth = range(0, model.n, 5)
specs = model_ellipses(model, every_fifth)
print(f"{len(specs)} ellipses")

s = specs[0]
print(f"first: center {np.round(s.center, 2)}, "
      f"axis lengths {np.round(s.lengths, 3)}, label {s.label}")

# Boundary points satisfy the metric quadratic within float error.
z = ellipse_boundary_points(s, count=8)
M = s.axes @ np.diag(s.eigenvalues) @ s.axes.T
quad = [(p - s.center) @ M @ (p - s.center) for p in z]
print("boundary residual:", f"{max(abs(q - 1.0) for q in quad):.2e}")

# Axis orientation varies across the plane; measure the spread of the
# major-axis angle. A global metric would give a single angle.
angles = np.array([np.degrees(np.arctan2(sp.axes[1, 0], sp.axes[0, 0]))
                   % 180.0 for sp in specs])
print(f"major-axis angles span {angles.min():.0f}..{angles.max():.0f} deg")

# Export: .svg for the eyes, .csv for downstream plotting.
out = Path(__file__).resolve().parent / "out"
out.mkdir(exist_ok=True)
export_ellipses(model, every_fifth, out / "pinwheel_ellipses.svg")
export_ellipses(model, every_fifth, out / "pinwheel_ellipses.csv")
print("wrote", out / "pinwheel_ellipses.svg")
print("wrote", out / "pinwheel_ellipses.csv")
