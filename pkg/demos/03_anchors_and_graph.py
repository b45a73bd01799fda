"""Anchor points and the similarity graph.

Anchors are k-means centers of the training cloud; each one will own a
basis metric. The graph Laplacian encodes which instances are close, so
the weight solver can ask nearby instances to blend their metrics from
similar anchor mixtures.
"""

import numpy as np

from plml import build_anchor_distances, build_laplacian, kmeans, make_blobs

data = make_blobs(300, n_classes=3, d=2, seed=5)

# Anchors: plain k-means with deterministic seeding. The assignment
# array maps each instance to its nearest anchor.
anchors = kmeans(data.X, m=6, seed=0)
print(f"{anchors.m} anchors, assignment counts:",
      np.bincount(anchors.assignment, minlength=anchors.m).tolist())

# The anchor-distance table feeds the weight objective: staying close
# to nearby anchors is cheap, leaning on far ones costly. One row per
# anchor, one column per instance.
G = build_anchor_distances(anchors.U, data.X)
print("anchor distance table:", G.shape)
nearest = G.argmin(axis=0)
print("instances agreeing with k-means assignment:",
      int((nearest == anchors.assignment).sum()), "/", data.n)

# The graph: union of k-nearest-neighbor edges with self-tuning Gaussian
# weights, stored sparse. L = D - S.
graph = build_laplacian(data.X, knn_k=6)
S = graph.S
print(f"\ngraph: {S.nnz} nonzeros in a {S.shape} similarity matrix "
      f"({100.0 * S.nnz / (data.n * data.n):.1f}% dense)")

# The Laplacian quadratic form tr(W^T L W) measures how much a signal
# wiggles across edges. A smooth signal (the x-coordinate) scores far
# lower than random noise of the same scale.
L = graph.L
smooth = data.X[:, :1] / np.linalg.norm(data.X[:, 0])
noise = np.random.default_rng(0).standard_normal((data.n, 1))
noise /= np.linalg.norm(noise)

def roughness(F):
    return float((F.T @ (L @ F)).item())

print(f"roughness of smooth signal: {roughness(smooth):8.4f}")
print(f"roughness of random signal: {roughness(noise):8.4f}")

# Row sums of L vanish: constants are perfectly smooth.
ones = np.ones((data.n, 1))
print("L @ 1 ~ 0:", abs(roughness(ones)) < 1e-9)
