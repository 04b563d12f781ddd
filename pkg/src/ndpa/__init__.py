"""Fluctuations and squeezing of a three-mode mechanical parametric
amplifier: steady states, noise spectral densities, collective-quadrature
variances below and above the instability threshold, and a stochastic
simulation oracle that every closed form is validated against.
"""

from .errors import (
    AboveThresholdError,
    AtOrAboveThresholdError,
    BelowThresholdError,
    ConfigFileError,
    DetunedAboveThresholdError,
    EliminationGuardError,
    InsufficientDurationError,
    InvalidParameterError,
    InvalidRangeError,
    LabelMismatchError,
    MarginallyStableError,
    NdpaError,
    PumpDetuningTooLargeError,
    SeedRequiredError,
    SingularAtFrequencyError,
    UnknownFigureError,
    UnstableStepError,
)
from .model import (
    AsymmetryParams,
    BOLTZMANN,
    DriveConfig,
    ELIMINATION_RATIO,
    ModeParams,
    SystemConfig,
    asymmetry,
    build_system,
    kappa,
    load_system_config,
    modes_from_asymmetry,
    susceptibility,
    thermal_variance,
    with_asymmetry,
)
from .steady_state import (
    Regime,
    SteadyState,
    critical_pump_amplitude,
    critical_pump_force,
    detuned_threshold,
    slow_flow_residual,
    solve_steady_state,
)
from .fluctuations import (
    CovarianceReport,
    FluctuationModel,
    Sector,
    SpectrumSeries,
    build_above,
    build_below,
    build_detuned,
    instability_threshold,
    spectral_density,
    spectrum_series,
    variance_integral,
    variance_lyapunov,
)
from .closed_form import (
    above_matched_spectra,
    above_matched_variances,
    below_matched_spectra,
    below_matched_variances,
    below_mismatched_variances,
    detuned_spectra,
    detuned_variances,
    marginal_finite_time_variance,
    peak_squeezing,
    peak_squeezing_detuned,
    phase_diffusion_msd_rate,
    phase_diffusion_variance,
    squeezing_curve,
    truncated_lorentzian,
    zero_frequency_squeezing_ratio,
)
from .langevin import (
    ComparisonVerdict,
    EnsembleStats,
    PhaseDiffusionResult,
    SimPlan,
    SpectrumEstimate,
    compare,
    phase_diffusion_measure,
    recommended_plan,
    simulate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
