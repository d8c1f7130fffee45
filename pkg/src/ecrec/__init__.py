"""Bayesian sparse signal recovery with ensemble-aware expectation consistency.

Recovers Bernoulli-Gaussian signals from noisy linear observations by a
damped expectation-consistent fixed-point iteration whose matrix-ensemble
dependence enters through one scalar spectral function, and predicts the
asymptotic recovery error independently via the replica-symmetric saddle
point so the two can be compared trial by trial.
"""

from .denoiser import (
    QuadratureError,
    log_partition_z,
    partition_z,
    posterior_mean,
    posterior_moments,
    posterior_second_moment,
    scalar_mmse,
    tilted_gaussian_expect,
)
from .ec_solver import (
    DivergenceError,
    ECState,
    SolverParams,
    amp_baseline,
    ec_free_energy,
    ec_gibbs_objective,
    ec_solve,
    nmse,
)
from .ensembles import (
    EnsembleKind,
    EnsembleSpec,
    ObservationInstance,
    make_instance,
    observe,
    sample_matrix,
    sample_signal,
)
from .gfunc import (
    GFunction,
    GKind,
    effective_precision,
    load_spectrum,
    marchenko_pastur_spectrum,
    row_orthogonal_spectrum,
)
from .harness import (
    ExperimentConfig,
    SummaryRow,
    TrialRecord,
    attach_predictions,
    build_comparison_figure,
    derive_trial_seed,
    emit_outputs,
    exact_posterior_mean_enum,
    linear_mmse,
    load_config,
    parse_config,
    read_summary_csv,
    read_trials_csv,
    replica_curves,
    replica_predictions,
    rows_for_grid,
    run_experiment,
    summarize,
    write_summary_csv,
    write_trials_csv,
)
from .priors import PriorBG
from .replica import ReplicaFixedPoint, free_energy_density, mse_curve, replica_fixed_point

__version__ = "0.1.0"

__all__ = [
    "PriorBG",
    "QuadratureError",
    "log_partition_z",
    "partition_z",
    "posterior_mean",
    "posterior_moments",
    "posterior_second_moment",
    "scalar_mmse",
    "tilted_gaussian_expect",
    "GFunction",
    "GKind",
    "effective_precision",
    "load_spectrum",
    "marchenko_pastur_spectrum",
    "row_orthogonal_spectrum",
    "EnsembleKind",
    "EnsembleSpec",
    "ObservationInstance",
    "make_instance",
    "observe",
    "sample_matrix",
    "sample_signal",
    "DivergenceError",
    "ECState",
    "SolverParams",
    "amp_baseline",
    "ec_free_energy",
    "ec_gibbs_objective",
    "ec_solve",
    "nmse",
    "ReplicaFixedPoint",
    "free_energy_density",
    "mse_curve",
    "replica_fixed_point",
    "ExperimentConfig",
    "SummaryRow",
    "TrialRecord",
    "attach_predictions",
    "build_comparison_figure",
    "derive_trial_seed",
    "emit_outputs",
    "exact_posterior_mean_enum",
    "linear_mmse",
    "load_config",
    "parse_config",
    "read_summary_csv",
    "read_trials_csv",
    "replica_curves",
    "replica_predictions",
    "rows_for_grid",
    "run_experiment",
    "summarize",
    "write_summary_csv",
    "write_trials_csv",
    "__version__",
]
