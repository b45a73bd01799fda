"""End to end: configure, train, persist, reload, predict.

Everything the CLI does is a thin wrapper over these calls, so this is
also a map of the library for anyone scripting their own experiment.
"""

import tempfile
from pathlib import Path

import numpy as np

from plml import (
    ExperimentConfig,
    apply_preprocess,
    leave_one_out_accuracy,
    load_model,
    make_blobs,
    predict,
    predict_batch,
    query_weights,
    save_model,
    train_pipeline,
)
from plml.pipeline import stratified_holdout_indices

data = make_blobs(320, n_classes=4, d=8, seed=9)
train_idx, test_idx = stratified_holdout_indices(data.y, 0.25, seed=9)
train, test = data.subset(train_idx), data.subset(test_idx)

# A config is a frozen dataclass; everything has a sensible default.
# alpha1 is selected on an inner stratified split when the grid has
# more than one candidate.
config = ExperimentConfig(
    variant="plml",
    m=8,
    alpha1_grid=(0.1, 1.0, 10.0),
    seed=0,
)

result = train_pipeline(config, dataset=train)
model = result.model

print(f"trained: n={model.n}, d={model.d} (after preprocessing), "
      f"m={model.m}")
print(f"alpha1 selected: {result.alpha1} "
      f"(scores {dict(sorted(result.alpha1_scores.items()))})")
print("stage timings (s):",
      {k: round(v, 3) for k, v in result.timings.items()})

print("leave-one-out accuracy:", f"{leave_one_out_accuracy(model):.4f}")

# Persistence: one JSON document, bit-exact floats.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.json"
    save_model(model, path)
    print(f"\nsaved {path.stat().st_size} bytes")
    reloaded = load_model(path)

# Prediction works on raw feature rows; the model carries its own
# preprocessing. Labels come back as the internal 1..c codes, with
# label_names giving the original strings. Train and test here share
# one label table, so the codes compare directly.
pred = predict_batch(reloaded, test.X)
print("test accuracy:", f"{float((pred == test.y).mean()):.4f}")

one = predict(reloaded, test.X[0])
print(f"single query -> class {one} "
      f"(label {reloaded.label_names[one - 1]!r})")

# Each query borrows the anchor weights of its nearest training
# instance, so its effective metric is available for inspection.
# query_weights speaks the model's internal coordinates, hence the
# explicit preprocessing step.
Xq = apply_preprocess(reloaded.preprocess, test.X[:1])
wq = query_weights(reloaded, Xq)
print("query weight row:", np.round(wq[0], 3))
