"""Constraint-aware cluster workload analysis and group prediction.

The pipeline: parse or generate node/task traces, compact each task's
placement constraints to one canonical operator per attribute, count the
nodes suitable for every live task, bucket counts into difficulty groups
A-Z, one-hot encode the constraint categories into a sparse dataset, and
train a hard-voting classifier ensemble that predicts the group from the
constraints alone.
"""

from .constraints import (
    Between,
    CompactedConstraintSet,
    Equal,
    GreaterEqual,
    LessThan,
    NotEqualArray,
    canonical_label,
    compact,
    compact_normalized,
    matches,
    normalize,
    satisfies,
)
from .encoding import (
    ConstraintOneHotEncoder,
    DataRow,
    Dataset,
    EncodedRow,
    FeatureDictionary,
    build_dictionary,
    compress,
    decode,
    encode,
    read_dataset,
    write_dataset,
)
from .ensemble import (
    AggregateReport,
    EvaluationReport,
    SplitSpec,
    evaluate,
    predict_ensemble,
    render_confusion_matrix,
    run_protocol,
    train_ensemble,
    train_test_split,
)
from .matcher import (
    ClusterState,
    IntervalStats,
    brute_force_count,
    classify_group,
    replay,
    replay_with_stats,
)
from .synth import GeneratedTrace, SyntheticTraceConfig, generate_synthetic_trace
from .values import (
    EMPTY,
    Node,
    Op,
    RawConstraint,
    TaskSpec,
)

__version__ = "0.1.0"
