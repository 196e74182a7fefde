"""Pseudospectral toolkit for the compressible Navier-Stokes-Korteweg system
at a critical pressure state: exact Fourier-multiplier linear semigroup,
Lp-Lq decay-rate verification, and a small-data nonlinear solver."""

from ._version import __version__

from .analysis import (
    AblationResult,
    AblationScenario,
    DecayMeasurement,
    DecayReport,
    NormSeries,
    aggregate_N,
    divergence_form_ablation,
    edge_leakage,
    fit_decay,
    lp_norm,
    lp_time_norm,
    mass_radius,
    measure_semigroup_decay,
    pair_lp_norm,
    pair_sobolev_norm,
    predicted_decay_exponent,
    sobolev_norm,
    weighted_sup,
)
from .errors import (
    ConstraintViolation,
    CriticalityViolation,
    EmptyLowBand,
    GridMismatch,
    MissingConstituent,
    NonPositiveSeries,
    NsklabError,
    NumericsWarning,
    ParseError,
    RangeViolation,
    StepRejected,
    ValidationError,
    ValidityExceeded,
    WindowOutsideTrust,
    WindowUncovered,
)
from .fields import (
    curl_mixture_momentum_state,
    enveloped_random_tensor,
    gaussian_bump,
    nonlinear_initial_state,
    riesz_divergence_momentum_state,
    riesz_kernel_hat,
    riesz_momentum_pair,
    riesz_plain_momentum_state,
    scale_mixture_hat,
    transverse_packet,
)
from .model import (
    FluidParams,
    Grid,
    PressureLaw,
    SpectralState,
    State,
    critical_quadratic,
    make_params,
)
from .nonlinear import (
    Etd2Stepper,
    NonlinearScenario,
    RunResult,
    StepState,
    korteweg_tensor,
    nonlinearity_g,
    nonlinearity_g_hat,
    nonlinearity_tensor,
    pressure_remainder,
    run,
    step,
    viscous_tensor,
)
from .runner import ScenarioOutcome, run_scenario, run_sweep
from .scenario import ScenarioConfig, parse_config, parse_sweep_config, serialize_config
from .spectral import (
    CutoffSpec,
    apply_semigroup,
    conjugate_symmetry_defect,
    dealias,
    dealias_mask,
    default_cutoff,
    divergence_form_momentum,
    frequency_split,
    gradient,
    low_band_mode_count,
    set_fft_workers,
    spectral_derivative,
    to_real,
    to_spectral,
)
from .symbols import (
    Discriminant,
    Regime,
    discriminant,
    eigenvalues,
    generator_matrix,
    matexp_oracle,
    matexp_oracle_ode,
    phi_multiplier_tables,
    propagator_kernels,
    solution_symbol,
)

