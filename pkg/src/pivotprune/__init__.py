"""Exact pivot-pruned similarity retrieval for process suffixes."""

from .bounds import BoundPair, Decision, bound_pair, decide, query_pivot_row
from .errors import (
    DimensionMismatchError,
    FingerprintMismatchError,
    IndexFormatError,
    MissingFeaturesError,
    PivotPruneError,
    SpecMismatchError,
    ZeroVectorError,
)
from .index import PivotTable, build_index, dataset_fingerprint, load_index, save_index
from .ingest import (
    EventLog,
    SuffixSpec,
    extract_suffixes,
    load_dataset,
    parse_csv,
    save_dataset,
)
from .metricspace import (
    Dataset,
    DistanceSpec,
    Metric,
    Suffix,
    check_metric_axioms,
    distance,
    featurize_bag_of_activities,
)
from .oracle import (
    VerificationReport,
    brute_force_knn,
    brute_force_range,
    corrupt_cell,
    verify,
)
from .pivots import PivotSet, brute_force_k_center, coverage_radius, greedy_farthest_point
from .query import (
    BatchQueryError,
    KnnMode,
    Match,
    PruneStats,
    QueryResult,
    RangeMode,
    batch_query,
    knn_query,
    range_query,
)

__version__ = "0.1.0"
