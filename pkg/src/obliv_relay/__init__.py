"""Workbench for rate regions of primitive multiuser relay networks.

The package evaluates achievable and capacity rate regions of discrete
memoryless multiple-access / interference networks aided by an oblivious
relay with out-of-band finite-capacity links, compares competing relaying
schemes, searches policy space for frontier points, checks strong-
interference conditions, and cross-validates the rate expressions with a
Monte Carlo implementation of the actual coding scheme.
"""

__version__ = "0.1.0"

from .channels import (
    BUILTIN_CHANNELS,
    Channel,
    GaussianIFRC,
    Policy,
    builtin_channel,
    channel_to_dict,
    channel_to_json,
    load_channel,
    load_policy,
    policy_to_dict,
    policy_to_json,
    random_policy,
    uniform_policy,
)
from .conditions import (
    ConditionReport,
    GaussianEquivalenceReport,
    condition_report_to_dict,
    condition_report_to_json,
    equivalence_report_to_dict,
    gaussian_equivalence_check,
    recompute_dmc_gap,
    strong_interference_dmc,
    strong_interference_gaussian,
)
from .dist import (
    JointDistribution,
    build_joint,
    cond_mutual_info,
    entropy,
    input_product_joint,
    marginalize,
)
from .errors import (
    NumericsError,
    ResourceLimitError,
    TopologyError,
    ValidationError,
    WorkbenchError,
)
from .regions import (
    Bound,
    CompareResult,
    ConstraintClass,
    FrontierResult,
    RateRegion,
    SearchConfig,
    cf_feasibility_gap,
    cf_region_pmarc,
    frontier_search,
    gcf_region_marc_m,
    gcf_region_multicast,
    gcf_region_pifrc,
    gcf_region_pmarc,
    iter_policy_grid,
    max_weighted_rate,
    nnc_region_pmarc,
    region_compare,
    region_for,
    region_to_csv,
    region_to_dict,
    region_to_json,
)
from .sim import (
    CodebookSet,
    CoveringFailure,
    DecodeResult,
    LemmaReport,
    SimConfig,
    SimReport,
    build_codebooks,
    is_typical,
    joint_decode,
    lemma_report_to_dict,
    lemma_report_to_json,
    relay_compress,
    sim_report_to_csv,
    sim_report_to_dict,
    sim_report_to_json,
    simulate,
    verify_lemma1,
)

__all__ = [name for name in dir() if not name.startswith("_")]
