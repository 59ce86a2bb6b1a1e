"""Weak functional inequalities for one-dimensional measures.

Rate functions and their conversions, capacity and Hardy criteria,
perturbation results, predicted entropy decay curves, and a Fokker-Planck
solver to measure the decay they describe.
"""

from .capacity import beta_from_capacity, cap_halfline, capacity_profile, check_necessary
from .decay import (
    BoundCurve,
    converse_beta_from_xi,
    entropy_split_bound,
    iterated_decay_curve,
    l2_membership,
    lo_decay_curve,
    royer_bounds,
    tv_bound_schedule,
    xi_from_beta,
)
from .estimators import CapacityRateEstimator, EmpiricalRateEstimator, RateExponentRegressor
from .exceptions import *  # noqa: F401,F403
from .hardy import (
    HardyBounds,
    fit_rate_exponents,
    hardy_bounds,
    poincare_constant_bounds,
    sufficient_condition_check,
)
from .measure import (
    GridFunction,
    Measure1D,
    Potential,
    build_measure,
    dirichlet,
    entropy,
    oscillation,
    tail_mass,
    variance,
)
from .perturbation import GoodPotentialReport, check_good, corollary_ts_check, wit_constants
from .rates import (
    Certificate,
    ConstantsPolicy,
    RateFunction,
    convert,
    detect_poincare,
    perturb_bounded,
    restricted_ls_constant,
    tensorize,
    wlsi_to_gbi,
    wlsi_to_spi,
    wlsi_to_swlsi,
    wlsi_to_wpi,
    wpi_to_wlsi,
)
from .semigroup import (
    DecayTrace,
    SolverConfig,
    euler_maruyama,
    evolve,
    explicit_density_doubleexp,
    overlay_bounds,
)
from .verifier import (
    FunctionFamily,
    check_gbi,
    check_wlsi,
    empirical_beta,
    make_family,
    probe_entropy_osc_ratio,
)

__version__ = "0.1.0"
