"""Learning the basis metrics from large-margin triplets.

Triplets say "instance i should sit closer to its same-class neighbor j
than to its other-class neighbor k, with unit margin". The primal over
PSD matrices is awkward; the box-constrained dual is smooth and low
dimensional, so that is what the solver climbs. Basis metrics come out
PSD by construction.
"""

import numpy as np

from plml import (
    Dataset,
    MetricProblem,
    WeightProblem,
    apply_preprocess,
    build_anchor_distances,
    build_laplacian,
    dual_objective,
    fit_preprocess,
    generate_triplets,
    kmeans,
    local_distance_sq,
    make_pinwheel,
    solve_basis_metrics,
    solve_weights,
)

# The pinwheel's class boundary rotates with radius, so plain Euclidean
# neighborhoods make real mistakes and the metrics have work to do.
# Standardizing first puts the unit margin on a sane scale.
raw = make_pinwheel(300, seed=2)
pre = fit_preprocess(raw, use_pca=False, normalize=False)
data = Dataset(apply_preprocess(pre, raw.X), raw.y, raw.label_names)

anchors = kmeans(data.X, m=8, seed=0)
graph = build_laplacian(data.X, knn_k=6)
W = solve_weights(WeightProblem(
    X=data.X, U=anchors.U,
    G=build_anchor_distances(anchors.U, data.X),
    L=graph.L, lambda1=1.0, lambda2=100.0,
))

# k1 same-class and k2 other-class neighbors per instance.
triplets = generate_triplets(data, k1=3, k2=3)
print(f"{triplets.count} triplets from {data.n} instances")

prob = MetricProblem(X=data.X, W=W, triplets=triplets,
                     alpha1=0.1, alpha2=1.0)
basis, gamma = solve_basis_metrics(prob, return_gamma=True)

active = int((gamma > 1e-8).sum())
print(f"basis shape {basis.shape}; {active} of {triplets.count} dual "
      f"variables active")

# The dual starts at zero and only improves.
print(f"dual objective {dual_objective(prob, np.zeros(triplets.count)):.2f}"
      f" -> {dual_objective(prob, gamma):.2f}")

# Every basis metric is PSD: min eigenvalue at worst a rounding hair
# below zero.
min_eig = min(float(np.linalg.eigvalsh(M).min()) for M in basis)
print("min eigenvalue over the basis:", f"{min_eig:.2e}")

# Did the geometry improve? Margins carry the metric's scale, so the
# scale-free score is the ordering: in how many triplets does the
# impostor k sit closer to i than the friend j does?
def ordering_errors(measure):
    bad = 0
    for i, j, k in zip(triplets.i, triplets.j, triplets.k):
        bad += measure(i, k) <= measure(i, j)
    return bad

euclid = ordering_errors(lambda i, j: float(
    np.sum((data.X[i] - data.X[j]) ** 2)))
learned = ordering_errors(lambda i, j: local_distance_sq(
    W[i], basis, data.X[i], data.X[j]))
print(f"misordered triplets: euclidean {euclid}, learned {learned}"
      f" (of {triplets.count})")

# The solver's own currency, unit margins, for the learned metrics:
slack = [
    local_distance_sq(W[i], basis, data.X[i], data.X[k])
    - local_distance_sq(W[i], basis, data.X[i], data.X[j])
    for i, j, k in zip(triplets.i, triplets.j, triplets.k)
]
print("margins >= 1:", int(np.sum(np.asarray(slack) >= 1.0)),
      f"of {triplets.count}")
