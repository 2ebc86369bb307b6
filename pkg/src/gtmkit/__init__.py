"""gtmkit: differentially private generalized threshold testing.

A library and CLI for testing streams of black-box +/-1 mechanisms against
success-probability targets under a global privacy budget, plus the
calibration math behind it, purification of approximate-DP inputs, a
batch-to-continual-observation optimization reduction, prior-work baselines,
and an empirical audit harness.
"""

from .dist import (
    LamRight,
    OverheadSolution,
    RandomSource,
    WeightSequence,
    lam_left,
    lam_right,
    max_lambda_cap,
    overhead_c,
    poisson_cdf,
    sample_bernoulli,
    sample_exponential,
    sample_laplace,
    sample_pareto,
    sample_poisson,
    weight_sequence,
)
from .errors import ConfigError, ExperimentCheckError, MechanismStateError, ResourceCapError
from .gtm import (
    BinaryOracle,
    ExPostPreset,
    GlobalUtilityPreset,
    GtmState,
    StepOutcome,
    StepParams,
    Transcript,
    bernoulli_oracle,
    constant_oracle,
    ex_post_step_params,
    global_utility_step_params,
    gtm_init,
    gtm_step,
    init_from_preset,
    negate_oracle,
    run_stream,
)
from .purify import SmoothedOracle, crossover_probability, purify, purify_default
from .select import ScoredOracle, TSelectConfig, TSelectResult, t_select
from .co import (
    BatchAlgorithm,
    BatchGuarantee,
    CoConfig,
    CoRun,
    MonotoneProblem,
    exp_to_prob,
    make_scored_oracle,
    make_test_oracle,
    run_co,
)
from .audit import (
    AdversarialBound,
    LaplaceInstance,
    RatioEstimate,
    empirical_privacy_ratio,
    error_rate_experiment,
    laplace_oracle,
    lower_bound_lambda0,
    odds_ratio,
    sample_complexity_floor,
)
from .table import ResultTable, emit

__version__ = "0.1.0"
