"""CPT and expected-utility values of finite MCs and MDPs.

Evaluates weighted-reachability and mean-payoff objectives under cumulative
prospect theory to a chosen precision and extracts the optimizing memoryless
randomized strategy.
"""

from .errors import (
    CptMdpError,
    InfeasiblePointError,
    IterationLimitError,
    ParseError,
    ScopeError,
    SingularMatrixError,
    SolverError,
    ValidationError,
)
from .graph import Mec, Scc, bsccs, mecs, obtainset, sccs
from .mc import InducedProspect, absorption_probabilities, induced_prospect, mc_cpt_value, mc_eu_value
from .mdp import (
    CptSolveResult,
    Direction,
    Mode,
    QuotientResult,
    achievable_point,
    build_mo_query,
    extract_strategy,
    make_stopping,
    mdp_cpt_value,
    optimize_cpt_on_frontier,
    pareto_frontier,
    verify_strategy,
)
from .meanpayoff import (
    MecGain,
    bscc_mean_payoff,
    mec_gains,
    mec_optimal_gain,
    mp_cpt_value,
    weighted_mec_quotient,
)
from .model import (
    MeanPayoffObjective,
    Model,
    ModelKind,
    Strategy,
    StrategyScope,
    WeightedReachObjective,
    apply_strategy,
    model_to_json_dict,
    outcome_vector,
    parse_model,
    serialize_model,
    validate_objective,
)
from .numerics import LinearProgram, LinearSystem, LpSolution, solve_linear, solve_lp
from .prospects import (
    CptParams,
    LipSource,
    LossRanking,
    Prospect,
    UtilitySpec,
    WeightSpec,
    cpt,
    cpt_via_tails,
    decision_weights,
    eu,
    grid_estimate_weight_lipschitz,
    lipschitz_constant,
    params_from_json_dict,
    params_to_json_dict,
    utility,
    weight,
)
from .reachability import ParetoApprox, ReachabilityLp, pareto_extreme_points, sandwich_polytope

__version__ = "0.1.0"
