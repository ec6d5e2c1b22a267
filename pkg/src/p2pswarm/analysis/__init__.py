"""Closed-form bounds, drift certificates, reduced models and their Monte-Carlo checks."""

from .instability import (
    AltSystemResult,
    ComparisonMoments,
    InstabilityConstants,
    alt_system_simulate,
    comparison_moments,
    instability_constants,
    simulate_comparison_jumps,
)
from .lyapunov import (
    DriftCertificate,
    DriftValue,
    LyapunovCoefficients,
    drift_bound,
    drift_qv,
    drift_region_check,
    lyapunov_coefficients,
    potential,
    sample_states,
)
from .queueing import (
    BusyPeriodMoments,
    DominanceResult,
    OccupancyPath,
    busy_period_moments,
    compound_poisson_bound,
    compound_poisson_exceedance,
    deterministic_service,
    empirical_dominance,
    exponential_service,
    gamma_service,
    kingman_bound,
    kingman_exceedance,
    kingman_mean_bound,
    mgi_infinity_bound,
    mginfty_exceedance,
    mginfty_simulate,
    moment_matched_jumps,
    simulate_busy_periods,
)
from .reduced import (
    ReducedChainState,
    ReducedTrajectory,
    borderline_death_rate,
    hitting_time_bound,
    mu_infinity_simulate,
    mu_o,
    mu_o_exact,
    reduced_rates,
    top_layer_hitting_times,
    top_layer_jumps,
)
from .uniformization import TransientResult, mm1_transient, tv_distance, uniformization_transient
