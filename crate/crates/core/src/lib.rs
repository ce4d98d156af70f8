//! Simulation and estimation of integrated volatility for semimartingales
//! with infinite-variation jumps.
//!
//! - [`levy`]: tempered-stable jump and strictly stable increment samplers
//! - [`sv`]: constant-volatility and Heston paths with jumps
//! - [`estimators`]: truncated realized variance and its debiased variants
//! - [`harness`]: reproducible parallel Monte Carlo studies
//! - [`oracle`]: Fourier-inversion truncated moments and expansion checks

pub mod error;
pub mod estimators;
pub mod harness;
pub mod levy;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod sv;

pub use error::{Error, Result};
pub use estimators::{
    bias_term_a, bipower_sigma2, debias_step, estimate_daily_pooled, estimate_nb, estimate_pb, threshold, trqv, C0Mode,
    DebiasStep, EstimateFlags, EstimateResult, EstimatorConfig, TruncationProfile,
};
pub use harness::{
    ks_statistic, normalized_errors, run_experiment, EstimatorKind, ExperimentConfig, McSummary, NamedEstimator,
    SummaryRow,
};
pub use levy::{
    sample_cgmy_increment, sample_levy_path, sample_stable_increment, small_jump_variance, CgmySampler, GridSpec,
    LevyJumpSpec, StableParams,
};
pub use oracle::{
    density_fft, expansion_predicted, residual_order_check, truncated_moment_numeric, CharExponentSpec,
    ExpansionReport, OracleModel,
};
pub use rng::{stream, Stream};
pub use sv::{simulate_path, true_iv, DiffusionSpec, ModelSpec, PathSample};
