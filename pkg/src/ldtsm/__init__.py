"""Term-structure models scaled by Levy transition densities.

Bond prices are built as ratios of a driver's transition density at
time-shifted arguments, which keeps heavy-tailed drivers (Cauchy,
symmetric stable) inside an arbitrage-free state-price-density framework
where exponential scales fail.  The package also ships the classical
Gaussian forward-rate, quadratic Gaussian and finite-mark jump models for
comparison, plus the simulation and validation machinery to check every
pricing identity numerically.
"""

from .core import (
    CalibrationResult,
    LambdaSchedule,
    LdtsmFactor,
    LdtsmModel,
    StateSnapshot,
    bond_price,
    calibrate_lambda,
    cauchy_ldtsm_closed,
    forward_rate,
    forward_rate_info,
    gamma_ldtsm_closed,
    gaussian_ldtsm_closed,
    log_bond_price,
    short_rate,
)
from .density import (
    ClosedFormDensity,
    DensityEvaluator,
    InversionGrid,
    InvertedDensity,
    auto_grid,
    convolve_oracle,
    invert,
    required_cutoff,
)
from .errors import (
    AmbiguousRootError,
    AtomicDistributionError,
    CalibrationError,
    CutoffError,
    DensityDomainError,
    GridError,
    LdtsmError,
    NoClosedFormError,
    QuadratureError,
    ScenarioError,
    StateSupportError,
    UnattainableCurveError,
)
from .hjm import (
    BrownianPath,
    GaussHjmModel,
    HoLee,
    InitialCurve,
    QtsmSpec,
    ShirakawaSpec,
    Vasicek,
    VolFamily,
    gauss_bond,
    gauss_forward,
    qtsm_bond,
    qtsm_forward,
    qtsm_oracle,
    shirakawa_bond,
    shirakawa_forward,
)
from .levy import (
    CauchySpec,
    CompoundPoissonSpec,
    GammaSpec,
    GaussianSpec,
    LevySpec,
    LevySymbol,
    StableSpec,
    closed_form_density,
    symbol,
)
from .scenario import Scenario, parse_scenario
from .simulation import (
    PathGrid,
    SamplePath,
    brownian_path,
    path_rng,
    sample_increments,
    simulate,
    simulate_poisson_measure,
)
from .validation import (
    ValidationReport,
    conditional_martingale_test,
    default_suite,
    martingale_test,
    qtsm_audit,
    semigroup_oracle_test,
)

__version__ = "0.1.0"
