//! Observed-process simulation: diffusion (constant or Heston) plus scaled
//! Lévy jumps, with the true integrated variance recorded per block.

use crate::error::{domain, Error, Result};
use crate::levy::{CgmySampler, GridSpec, LevyJumpSpec};
use crate::rng::Stream;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionSpec {
    Constant { sigma: f64 },
    Heston { kappa: f64, xi: f64, theta: f64, rho: f64, v0: f64 },
}

impl DiffusionSpec {
    /// Heston spec started at the long-run variance.
    pub fn heston_stationary(kappa: f64, xi: f64, theta: f64, rho: f64) -> Self {
        DiffusionSpec::Heston { kappa, xi, theta, rho, v0: theta }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DiffusionSpec::Constant { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(domain(format!("sigma must be positive, got {sigma}")));
                }
            }
            DiffusionSpec::Heston { kappa, xi, theta, rho, v0 } => {
                // xi = 0 is the deterministic-variance limit and is allowed.
                if !(kappa > 0.0 && theta > 0.0 && v0 > 0.0 && xi >= 0.0) {
                    return Err(domain("Heston needs kappa, theta, v0 > 0 and xi >= 0"));
                }
                if ![kappa, xi, theta, v0].iter().all(|v| v.is_finite()) {
                    return Err(domain("Heston parameters must be finite"));
                }
                if !(rho.abs() <= 1.0) {
                    return Err(domain(format!("rho must lie in [-1, 1], got {rho}")));
                }
            }
        }
        Ok(())
    }

    /// A representative volatility level (`sigma`, or `sqrt(theta)`).
    pub fn typical_vol(&self) -> f64 {
        match *self {
            DiffusionSpec::Constant { sigma } => sigma,
            DiffusionSpec::Heston { theta, .. } => theta.sqrt(),
        }
    }
}

/// `dX = b dt + sigma_t dW + chi dJ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub diffusion: DiffusionSpec,
    /// `None` switches the jump component off.
    pub jumps: Option<LevyJumpSpec>,
    pub chi: f64,
    pub drift_b: f64,
}

impl ModelSpec {
    pub fn new(diffusion: DiffusionSpec, jumps: Option<LevyJumpSpec>) -> Self {
        Self { diffusion, jumps, chi: 1.0, drift_b: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.diffusion.validate()?;
        if let Some(j) = &self.jumps {
            j.validate()?;
        }
        if !self.chi.is_finite() || !self.drift_b.is_finite() {
            return Err(domain("chi and drift_b must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub increments: Vec<f64>,
    pub block_iv: Vec<f64>,
    pub blocks: usize,
    pub seed: u64,
}

impl PathSample {
    pub fn total_iv(&self) -> f64 {
        crate::numeric::compensated_sum(self.block_iv.iter().copied())
    }

    /// Increments belonging to `block`.
    pub fn block_increments(&self, block: usize) -> Result<&[f64]> {
        if block >= self.blocks {
            return Err(Error::IndexOutOfRange { index: block, len: self.blocks });
        }
        let per = self.increments.len() / self.blocks;
        Ok(&self.increments[block * per..(block + 1) * per])
    }
}

/// Reusable path generator holding the jump tables for one model.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    model: ModelSpec,
    grid: GridSpec,
    blocks: usize,
    substeps: usize,
    jumps: Option<CgmySampler>,
}

impl PathSimulator {
    pub fn new(model: &ModelSpec, grid: &GridSpec, blocks: usize, substeps: usize, tau: f64) -> Result<Self> {
        model.validate()?;
        if blocks == 0 || grid.n_steps % blocks != 0 {
            return Err(Error::Config(format!("blocks ({blocks}) must divide the number of steps ({})", grid.n_steps)));
        }
        if substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        let jumps = match &model.jumps {
            Some(spec) => Some(CgmySampler::new(spec, tau)?),
            None => None,
        };
        Ok(Self { model: *model, grid: *grid, blocks, substeps, jumps })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn simulate(&self, seed: u64, rng: &mut Stream) -> PathSample {
        let n = self.grid.n_steps;
        let h = self.grid.h;
        let per_block = n / self.blocks;
        let mut increments = Vec::with_capacity(n);
        let mut block_iv = Vec::with_capacity(self.blocks);
        let b = self.model.drift_b;

        match self.model.diffusion {
            DiffusionSpec::Constant { sigma } => {
                let sd = sigma * h.sqrt();
                for _ in 0..n {
                    let z: f64 = StandardNormal.sample(rng);
                    increments.push(b * h + sd * z);
                }
                for _ in 0..self.blocks {
                    block_iv.push(sigma * sigma * h * per_block as f64);
                }
            }
            DiffusionSpec::Heston { kappa, xi, theta, rho, v0 } => {
                let m = self.substeps;
                let dt = h / m as f64;
                let sdt = dt.sqrt();
                let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
                let mut v = v0;
                for _ in 0..self.blocks {
                    let mut iv = crate::numeric::CompensatedSum::new();
                    for _ in 0..per_block {
                        let mut dx = 0.0;
                        for _ in 0..m {
                            let vp = v.max(0.0);
                            let z1: f64 = StandardNormal.sample(rng);
                            let z2: f64 = StandardNormal.sample(rng);
                            let vol = vp.sqrt();
                            dx += b * dt + vol * sdt * z1;
                            v += kappa * (theta - vp) * dt + xi * vol * sdt * (rho * z1 + rho_c * z2);
                            iv.add(0.5 * (vp + v.max(0.0)) * dt);
                        }
                        increments.push(dx);
                    }
                    block_iv.push(iv.value());
                }
            }
        }

        if let Some(j) = &self.jumps {
            let chi = self.model.chi;
            for x in increments.iter_mut() {
                *x += chi * j.sample_increment(h, rng);
            }
        }
        PathSample { increments, block_iv, blocks: self.blocks, seed }
    }
}

/// Simulates one path. `substeps` is the number of internal variance steps
/// per observation (ignored for constant volatility, whose step is exact).
pub fn simulate_path(
    model: &ModelSpec,
    grid: &GridSpec,
    blocks: usize,
    substeps: usize,
    tau: f64,
    rng: &mut Stream,
) -> Result<PathSample> {
    Ok(PathSimulator::new(model, grid, blocks, substeps, tau)?.simulate(0, rng))
}

pub fn true_iv(path: &PathSample, block: usize) -> Result<f64> {
    path.block_iv.get(block).copied().ok_or(Error::IndexOutOfRange { index: block, len: path.block_iv.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn heston(xi: f64, rho: f64, v0: f64) -> ModelSpec {
        ModelSpec::new(DiffusionSpec::Heston { kappa: 5.0, xi, theta: 0.16, rho, v0 }, None)
    }

    #[test]
    fn rejects_bad_configuration() {
        let m = ModelSpec::new(DiffusionSpec::Constant { sigma: 0.2 }, None);
        let g = GridSpec::new(1.0, 10).unwrap();
        assert!(matches!(simulate_path(&m, &g, 3, 1, 1e-3, &mut stream(0, 0)), Err(Error::Config(_))));
        assert!(matches!(simulate_path(&m, &g, 2, 0, 1e-3, &mut stream(0, 0)), Err(Error::Config(_))));
        let bad = ModelSpec::new(DiffusionSpec::Heston { kappa: 5.0, xi: 0.5, theta: 0.16, rho: 1.5, v0: 0.16 }, None);
        assert!(simulate_path(&bad, &g, 1, 1, 1e-3, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn constant_vol_blocks_are_equal() {
        let m = ModelSpec::new(DiffusionSpec::Constant { sigma: 0.2 }, None);
        let g = GridSpec::new(1.0, 252 * 4).unwrap();
        let p = simulate_path(&m, &g, 252, 1, 1e-3, &mut stream(1, 0)).unwrap();
        for b in 0..252 {
            let iv = true_iv(&p, b).unwrap();
            assert!((iv - 0.04 / 252.0).abs() < 1e-15);
        }
        assert!(matches!(true_iv(&p, 252), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn deterministic_variance_matches_ode() {
        let (kappa, theta, v0) = (5.0, 0.16, 0.09);
        let m = heston(0.0, -0.5, v0);
        let g = GridSpec::new(1.0, 98_280).unwrap();
        let p = simulate_path(&m, &g, 252, 50, 1e-3, &mut stream(2, 0)).unwrap();
        let integral = |t: f64| theta * t + (v0 - theta) * (1.0 - (-kappa * t).exp()) / kappa;
        for b in 0..252 {
            let (t0, t1) = (b as f64 / 252.0, (b + 1) as f64 / 252.0);
            let exact = integral(t1) - integral(t0);
            let iv = true_iv(&p, b).unwrap();
            assert!((iv / exact - 1.0).abs() < 1e-6, "block {b}: {iv} vs {exact}");
        }
    }

    #[test]
    fn block_iv_sums_to_total() {
        let m = heston(0.5, -0.5, 0.16);
        let g = GridSpec::new(1.0, 252 * 10).unwrap();
        let p = simulate_path(&m, &g, 252, 5, 1e-3, &mut stream(3, 0)).unwrap();
        let naive: f64 = p.block_iv.iter().sum();
        assert!((p.total_iv() - naive).abs() < 1e-12);
        assert!(p.block_iv.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn block_increments_partition_path() {
        let m = ModelSpec::new(DiffusionSpec::Constant { sigma: 0.2 }, None);
        let g = GridSpec::new(1.0, 12).unwrap();
        let p = simulate_path(&m, &g, 4, 1, 1e-3, &mut stream(4, 0)).unwrap();
        let joined: Vec<f64> = (0..4).flat_map(|b| p.block_increments(b).unwrap().to_vec()).collect();
        assert_eq!(joined, p.increments);
    }
}
