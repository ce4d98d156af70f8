//! Shared inputs for the benchmarks.

use trv_core::{stream, DiffusionSpec, GridSpec, LevyJumpSpec, ModelSpec, PathSample};

/// One year of one-minute returns.
pub const N_STEPS: usize = 252 * 390;

pub fn cgmy_spec() -> LevyJumpSpec {
    LevyJumpSpec { c_plus: 0.028, c_minus: 0.028, g_temper: 2.318, m_temper: 4.025, y_index: 1.25 }
}

pub fn model() -> ModelSpec {
    ModelSpec::new(DiffusionSpec::Constant { sigma: 0.2 }, Some(cgmy_spec()))
}

pub fn grid() -> GridSpec {
    GridSpec::new(1.0, N_STEPS).expect("valid grid")
}

/// A fixed simulated path split into 252 daily blocks.
pub fn sample_path(seed: u64) -> PathSample {
    trv_core::simulate_path(&model(), &grid(), 252, 1, 1e-3, &mut stream(seed, 0)).expect("simulate")
}
