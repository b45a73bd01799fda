"""Comparing local metrics against single-metric and per-cluster rivals.

Three learners share the same machinery and differ only in how weights
map instances to basis metrics:

  plml    smooth simplex weights over m anchors (the full method)
  sml     one global metric (m forced to 1)
  cblml   hard one-metric-per-anchor assignment

The pinwheel dataset rotates its class boundary with radius, so a
global metric underfits and hard cluster metrics fragment. The report
scores each pair with McNemar's test and ranking points (win 1,
tie 0.5, loss 0).
"""

from plml import ExperimentConfig, compare_methods, make_pinwheel
from plml.pipeline import stratified_holdout_indices

data = make_pinwheel(600, seed=0)
train_idx, test_idx = stratified_holdout_indices(data.y, 0.5, seed=0)
train, test = data.subset(train_idx), data.subset(test_idx)

config = ExperimentConfig(
    variant="plml",       # compare_methods overrides this per method
    m=20,
    alpha1_grid=(1.0,),
    use_pca=False,
    normalize=False,      # 2-D data: row normalization would collapse it
    seed=0,
)

report = compare_methods(
    config, methods=("plml", "sml", "cblml", "euclidean"),
    train=train, test=test,
)

print(report.render_text())

print("pairwise detail:")
for (a, b), res in report.pairwise.items():
    kind = "exact" if res.exact else "chi-square"
    print(f"  {a:>9} vs {b:<9} -> {res.outcome:<6} "
          f"(b={res.b}, c={res.c}, p={res.p_value:.4f}, {kind})")
