"""Priority-aware Shapley values: random-order values over precedence-constrained,
weight-biased distributions of player orderings."""

from ._errors import *  # noqa: F401,F403
from .estimators import PriorityShapley, PrioritySweep
from .order_model import (
    OrderDistribution,
    choice_factor,
    exact_pasv_distribution,
    pasv_log_weight,
    psv_distribution,
    wsv_probability,
)
from .poset import (
    OrderedPartition,
    Poset,
    antichain,
    build_poset,
    chain,
    detect_ordered_partition,
    enumerate_linear_extensions,
    extension_lower_bound,
    incomparable,
    initial_linear_extension,
    is_feasible,
    is_linear_extension,
    limit_poset_maximal,
    limit_poset_refine,
    maximal_elements,
)
from .sampler import (
    ChainStats,
    MhConfig,
    backward_sequential_sample,
    default_mh_config,
    exact_sample,
    local_ratio,
    mh_sample,
)
from .sweep import (
    SweepReport,
    SweepSpec,
    limit_mismatch_demo,
    limit_reference,
    limit_tv_ladder,
    run_sweep,
    tv_distance,
)
from .utility import (
    CachedUtility,
    ElementaryGame,
    ExternalUtility,
    FunctionUtility,
    KNNImputationUtility,
    LineageUtility,
    LogisticPredictor,
    TableUtility,
    TabularDataset,
    UtilityFn,
    cached,
    elementary_game,
    external_utility,
    knn_imputation_utility,
    lineage_utility,
)
from .valuation import (
    PositionCurve,
    ValueReport,
    exact_value,
    group_values,
    marginal_by_position,
    rov_estimate,
)

__version__ = "0.1.0"
