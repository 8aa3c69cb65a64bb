"""End-to-end hyperparameter tuning with the Kriging + EI loop.

Runs a small tuning experiment on a drifting stream: the default tree
configuration plus a Latin-hypercube initial design, then surrogate-model
proposals by expected improvement.  Afterwards pulls every analysis
artifact: progress series, default-vs-tuned table, importances, a
contour slice, parallel coordinates, and the best trial's confusion.
"""

import numpy as np

from omltune import (
    HorizonEvalConfig,
    TunerControl,
    WeightVector,
    builtin_space,
    generate_sea,
    run_tuning_loop,
    split_train_test,
)
from omltune.analysis import (
    compare_default_tuned,
    confusion_for_best,
    parallel_coordinates_data,
    progress_series,
    render_compare_table,
    surrogate_contour,
)
from omltune.dataspace import SplitSpec

stream = generate_sea(3000, [(0, 1500), (2, 1500)], noise_frac=0.1, seed=11)
train, test = split_train_test(stream, SplitSpec(test_size=0.3))

space = builtin_space("hoeffding_tree")
print("search space:", ", ".join(space.names()), "\n")

state = run_tuning_loop(
    space=space,
    control=TunerControl(
        max_time_minutes=5.0, fun_evals=12, init_size=6, seed=1, prefix="demo"
    ),
    train=train,
    test=test,
    eval_cfg=HorizonEvalConfig(horizon=90, metric="accuracy_score"),
    weights=WeightVector(1, 0, 0),
)

# progress: initial design first (the default config is always trial #1),
# then the surrogate proposals
series = progress_series(state)
for p in series.points:
    marker = "o" if p.phase == "initial_design" else "+"
    print(f" {marker} trial {p.index:>2}  objective={p.objective:+.4f}  "
          f"best={p.best_so_far:+.4f}")

print("\ndefault versus tuned:")
print(render_compare_table(compare_default_tuned(state)))

grid = surrogate_contour(state, i=0, j=2, resolution=8)
mean = np.array(grid.mean)
print(f"\nsurrogate slice {grid.name_i} x {grid.name_j}: "
      f"objective mean ranges {mean.min():.4f} .. {mean.max():.4f}")

coords = parallel_coordinates_data(state)
print(f"parallel coordinates: {len(coords['rows'])} trials, "
      f"normalized over {len(coords['dims'])} dims")

c = confusion_for_best(state)
print(f"best trial confusion: tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}")
