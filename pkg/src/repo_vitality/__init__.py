"""repo-vitality: classify open-source repositories as unmaintained or under
maintenance from windowed activity features, and score how actively the
maintained ones are being kept up."""

from .dataset import CurationRules, LabeledProject, curate, label
from .evaluation import (
    ConfusionMatrix,
    MetricSet,
    baseline_all_unmaintained,
    baseline_random,
    compute_metrics,
    run_experiment,
    stratified_kfold,
)
from .features import (
    FEATURES,
    SCENARIOS,
    DataPointVector,
    FeatureTable,
    ScenarioConfig,
    Window,
    extract_feature,
    extract_vector,
    windows,
)
from .forest import (
    ForestModel,
    ForestParams,
    ImportanceTable,
    load_model,
    mda_importance,
    predict_label,
    predict_proba,
    save_model,
    train,
)
from .lma import LmaScore, lma, score_corpus
from .prune import CorrelationReport, cluster_and_select, correlation_matrix, prune_table
from .readme_scan import DEFAULT_SENTENCES, ScanResult, recall_against_ground_truth, scan
from .report import core_contributors, correlate, days_since_last_commit, emit_report
from .snapshot import Event, ProjectSnapshot, load_snapshot, store_snapshot
from .synth import DecayParams, SynthParams, generate_corpus, write_corpus

__version__ = "0.1.0"

__all__ = [
    "CurationRules",
    "LabeledProject",
    "curate",
    "label",
    "ConfusionMatrix",
    "MetricSet",
    "baseline_all_unmaintained",
    "baseline_random",
    "compute_metrics",
    "run_experiment",
    "stratified_kfold",
    "FEATURES",
    "SCENARIOS",
    "DataPointVector",
    "FeatureTable",
    "ScenarioConfig",
    "Window",
    "extract_feature",
    "extract_vector",
    "windows",
    "ForestModel",
    "ForestParams",
    "ImportanceTable",
    "load_model",
    "mda_importance",
    "predict_label",
    "predict_proba",
    "save_model",
    "train",
    "LmaScore",
    "lma",
    "score_corpus",
    "CorrelationReport",
    "cluster_and_select",
    "correlation_matrix",
    "prune_table",
    "DEFAULT_SENTENCES",
    "ScanResult",
    "recall_against_ground_truth",
    "scan",
    "core_contributors",
    "correlate",
    "days_since_last_commit",
    "emit_report",
    "Event",
    "ProjectSnapshot",
    "load_snapshot",
    "store_snapshot",
    "DecayParams",
    "SynthParams",
    "generate_corpus",
    "write_corpus",
    "__version__",
]
