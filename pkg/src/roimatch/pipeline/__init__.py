from .build import build_subject_graph
from .interpret import (
    ImportanceRow,
    ParameterError,
    feature_importance,
    slot_mask,
    topk_eval,
    write_importance_csv,
    write_topk_csv,
)
from .metrics import EvalReport, confusion, evaluate, metrics_from_counts
from .model import Model, derive_seed
from .protocol import ProtocolReport, run_once, run_protocol, summarize
from .sampling import DatasetError, pair_label, sample_pair_batch
from .sweep import (
    EdgeComparisonRow,
    SweepGrid,
    SweepRow,
    compare_edge_builders,
    sweep,
    write_edge_csv,
    write_sweep_csv,
)
from .training import TrainConfig, TrainingError, batch_loss, train
from .voting import (
    NEGATIVE,
    POSITIVE,
    EvaluationError,
    TemplateMatch,
    VoteTrace,
    compatible_templates,
    predict,
    predict_all,
    vote,
)
