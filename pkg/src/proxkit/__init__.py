"""proxkit: proximal point methods for weakly convex optimization.

Implements the proximal point iteration on the Moreau envelope, the
proximally guided stochastic subgradient method, the prox-linear method
for composite problems, and Catalyst acceleration for regularized
finite-sum minimization, together with a synthetic problem zoo and a
benchmark harness.
"""

__version__ = "0.1.0"

from .bench import (
    ExperimentConfig,
    emit_summary,
    list_problems,
    list_solvers,
    load_config,
    parse_config_text,
    run_experiment,
)
from .catalyst import (
    FiniteSumProblem,
    InnerMethod,
    Subproblem,
    acceleration_ratio,
    catalyst_run,
    choose_kappa,
    gd_run,
    inner_method,
    momentum_update,
    prox_gd_run,
    svrg_run,
)
from .core import (
    check_adjoint_consistency,
    check_weak_convexity,
    finite_difference_gradient,
    operator_norm,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    EmptyInput,
    InvalidModulus,
    NonconvexSubproblem,
    OracleFailure,
    ProbeFailure,
    ProxkitError,
)
from .moreau import MoreauPoint, prox_map, proximal_point_run
from .oracles import (
    BoxIndicator,
    CompositeProblem,
    Identity,
    L1Mean,
    L1Norm,
    L2Norm,
    SmoothMap,
    SmoothPlusProx,
    SquaredL2,
    SubgradientOracle,
    Zero,
)
from .pgsg import PgsgSchedule, StochasticProblem, default_schedule, pgsg_run
from .problems import (
    GENERATORS,
    SyntheticInstance,
    load_instance,
    make_box_nls,
    make_erm_logistic,
    make_lasso,
    make_phase_retrieval,
    make_ridge,
    make_robust_pca,
    make_z2_sync,
    save_instance,
)
from .proxlinear import (
    RateEstimate,
    SurrogateGradient,
    estimate_local_rate,
    model_value,
    proxlinear_run,
    proxlinear_step,
)
from .report import SolverReport
from .rng import RandomStream
