"""Hyperparameter tuning for online machine learning on streaming data.

The package evaluates incremental binary classifiers over a rolling
prediction horizon (metric quality, wall-time, model memory) and tunes
their mixed numeric/categorical hyperparameters with a Kriging surrogate
driven by expected improvement.  Human entry points are the ``omltune``
CLI, the HTTP service, and the bundled web UI.
"""

from .dataspace import (
    DataSchema,
    Dataset,
    DataSummary,
    DatasetRegistry,
    OnlineScaler,
    SplitSpec,
    display_sample,
    generate_sea,
    load_csv,
    split_train_test,
    summarize,
)
from .evaluation import (
    EvalResult,
    HorizonEvalConfig,
    WeightVector,
    WindowRecord,
    eval_oml_horizon,
    weighted_objective,
)
from .experiments import (
    DataOptions,
    ExperimentRegistry,
    ExperimentSpec,
    load_spec,
    save_spec,
)
from .kriging import (
    KrigingModel,
    expected_improvement,
    fit_kriging,
    latin_hypercube,
)
from .learners import (
    HoeffdingTreeModel,
    LogisticModel,
    ScaledClassifier,
    build_model,
    hoeffding_bound,
)
from .metrics import (
    METRIC_IDS,
    ConfusionCounts,
    MetricDirection,
    compute_metric,
    confusion,
    direction_of,
)
from .searchspace import (
    HyperParamDef,
    SearchSpace,
    apply_transform,
    builtin_space,
    decode,
    encode,
)
from .tuner import (
    ImportanceReport,
    TrialRecord,
    TunerControl,
    TunerState,
    importance,
    propose_next,
    run_tuning_loop,
)

__version__ = "0.1.0"
