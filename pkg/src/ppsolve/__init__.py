"""Fixed points of probabilistic min/max polynomial systems.

Greatest-fixed-point solving to arbitrary precision, qualitative value-0 /
value-1 analysis with witness policies, epsilon-optimal strategy synthesis,
reachability for branching MDPs and simple stochastic games, and a Monte
Carlo simulator for statistical cross-validation.
"""

from .system import (
    MAXOF,
    MAX_PLAYER,
    MINOF,
    MIN_PLAYER,
    SINGLE,
    Equation,
    MaxMinPps,
    Monomial,
    Policy,
    ProbPolynomial,
    ValueVector,
    apply_policy,
    encoding_size,
    polynomial,
    population_value,
    validate,
)
from .snf import (
    FormL,
    FormM,
    FormQ,
    SnfSystem,
    apply_policy_snf,
    dependency_graph,
    evaluate,
    jacobian,
    linearize,
    policy_from_original,
    policy_to_original,
    to_snf,
    value_iterate,
)
from .qualitative import (
    gfp_one_set,
    gfp_zero_set,
    is_ldf,
    lfp_one_set_pps,
    lfp_zero_set,
    remove_one_vars,
    remove_zero_vars,
)
from .gnm import (
    SolveOptions,
    SolveReport,
    certify_pair,
    gnm_operator,
    newton_step,
    round_down,
    solve_gfp,
    solve_gfp_maxpps,
    solve_gfp_minpps,
    solve_gfp_pps,
    solve_lfp,
)
from .policies import (
    QueenWorker,
    StaticDeterministic,
    StaticRandomized,
    ThresholdSwitch,
    almost_sure_reach_strategy,
    eps_optimal_deterministic_minpps,
    eps_optimal_policy_maxpps_gfp,
    eps_optimal_randomized_minpps,
    minpps_eps_policy1,
    mix_policies,
    nonstatic_threshold_strategy,
    optimal_max_policy_gfp,
)
from .bmdp import (
    Bssg,
    Population,
    Rule,
    build_simulation_strategy,
    qualitative_reach,
    reachability_values,
    to_nonreach_pps,
    validate_bssg,
)
from .sim import (
    QueenWorkerStrategy,
    ReachEstimate,
    RunConfig,
    RunOutcome,
    StaticStrategy,
    ThresholdStrategy,
    estimate_reach,
    simulate_run,
)
from .textio import (
    parse_bmdp,
    parse_policy,
    parse_pps,
    parse_strategy,
    serialize_bmdp,
    serialize_policy,
    serialize_pps,
    serialize_strategy,
)

__version__ = "0.1.0"
