//! Truncated realized variance and its data-driven debiased variants.
//!
//! All threshold-indexed statistics are evaluated through a
//! [`TruncationProfile`], which sorts the absolute increments once so that
//! `C(eps)` for any `eps` is a binary search plus a prefix-sum lookup.

use crate::error::{input, Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// `sum_i d_i^2 1{|d_i| <= eps}`.
pub fn trqv(increments: &[f64], eps: f64) -> f64 {
    compensated_sum(increments.iter().filter(|d| d.abs() <= eps).map(|d| d * d))
}

/// Bipower variation `(π/2) sum_{i>=2} |d_{i-1}| |d_i|`.
pub fn bipower_sigma2(increments: &[f64]) -> Result<f64> {
    if increments.len() < 2 {
        return Err(input(format!("bipower variation needs at least 2 increments, got {}", increments.len())));
    }
    let s = compensated_sum(increments.windows(2).map(|w| w[0].abs() * w[1].abs()));
    Ok(FRAC_PI_2 * s)
}

/// `c0 * h^omega`.
pub fn threshold(c0: f64, h: f64, omega: f64) -> f64 {
    c0 * h.powf(omega)
}

/// Outcome of one second-difference debiasing step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebiasStep {
    pub value: f64,
    pub eta: f64,
    pub guarded: bool,
}

/// Removes a single power-law term from `f` observed at `eps`, `zeta*eps`
/// and `zeta^2*eps`.
pub fn debias_step(f_eps: f64, f_zeps: f64, f_z2eps: f64, guard: f64) -> DebiasStep {
    let diff = f_zeps - f_eps;
    // Difference of differences: both are exact when the inputs are close.
    let den = (f_z2eps - f_zeps) - diff;
    let scale = f_eps.abs().max(f_zeps.abs()).max(f_z2eps.abs()).max(f64::MIN_POSITIVE);
    if !(den.abs() >= guard * scale) {
        return DebiasStep { value: f_eps, eta: 0.0, guarded: true };
    }
    let eta = diff / den;
    DebiasStep { value: f_eps - eta * diff, eta, guarded: false }
}

/// Bias term `A(eps, h)` of the truncated realized variance:
/// `C̄/(2-Y) · χ_Y · eps^{2-Y} - C̄ (Y+1)(Y+2)/(2Y) · σ²_w · h · eps^{-Y}`.
pub fn bias_term_a(cbar: f64, chi_pow_y: f64, sigma2_weighted: f64, y: f64, eps: f64, h: f64) -> f64 {
    let jump = cbar / (2.0 - y) * chi_pow_y * eps.powf(2.0 - y);
    let cross = cbar * (y + 1.0) * (y + 2.0) / (2.0 * y) * sigma2_weighted * h * eps.powf(-y);
    jump - cross
}

/// Sorted absolute increments with prefix sums of squares.
#[derive(Debug, Clone)]
pub struct TruncationProfile {
    abs_sorted: Vec<f64>,
    /// `prefix[k]` is the sum of the `k` smallest squared increments.
    prefix: Vec<f64>,
}

impl TruncationProfile {
    pub fn new(increments: &[f64]) -> Result<Self> {
        if increments.iter().any(|d| !d.is_finite()) {
            return Err(input("increments must be finite"));
        }
        let mut abs_sorted: Vec<f64> = increments.iter().map(|d| d.abs()).collect();
        abs_sorted.sort_unstable_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(abs_sorted.len() + 1);
        let mut acc = CompensatedSum::new();
        prefix.push(0.0);
        for a in &abs_sorted {
            acc.add(a * a);
            prefix.push(acc.value());
        }
        Ok(Self { abs_sorted, prefix })
    }

    pub fn len(&self) -> usize {
        self.abs_sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abs_sorted.is_empty()
    }

    /// Truncated realized variance at `eps`.
    pub fn trqv(&self, eps: f64) -> f64 {
        self.prefix[self.abs_sorted.partition_point(|&a| a <= eps)]
    }

    /// Untruncated realized variance.
    pub fn realized_variance(&self) -> f64 {
        *self.prefix.last().expect("prefix has a leading zero")
    }
}

/// How the threshold base `c0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C0Mode {
    /// `c0` is the bipower volatility of the data, annualized per block.
    Bipower,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub omega: f64,
    pub c0_mode: C0Mode,
    pub zeta1: f64,
    pub zeta2: f64,
    pub p1: f64,
    pub p2: f64,
    pub retry_shrink: f64,
    pub max_retries: u32,
    pub denom_guard: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            omega: 5.0 / 12.0,
            c0_mode: C0Mode::Bipower,
            zeta1: 1.2,
            zeta2: 1.2,
            p1: 0.65,
            p2: 0.75,
            retry_shrink: 2.0 / 3.0,
            max_retries: 3,
            denom_guard: 1e-12,
        }
    }
}

impl EstimatorConfig {
    /// Default configuration with the four debiasing tunings replaced.
    pub fn tuned(zeta1: f64, zeta2: f64, p1: f64, p2: f64) -> Self {
        Self { zeta1, zeta2, p1, p2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if let C0Mode::Fixed(c0) = self.c0_mode {
            if !(c0 > 0.0 && c0.is_finite()) {
                return bad(format!("fixed c0 must be positive, got {c0}"));
            }
        }
        if !(self.zeta1 > 1.0 && self.zeta1.is_finite()) || !(self.zeta2 > 1.0 && self.zeta2.is_finite()) {
            return bad(format!("zeta1, zeta2 must exceed 1, got {}, {}", self.zeta1, self.zeta2));
        }
        if !(self.p1 > 0.0 && self.p1 <= 1.0) || !(self.p2 > 0.0 && self.p2 <= 1.0) {
            return bad(format!("p1, p2 must lie in (0, 1], got {}, {}", self.p1, self.p2));
        }
        if !(self.retry_shrink > 0.0 && self.retry_shrink < 1.0) {
            return bad(format!("retry_shrink must lie in (0, 1), got {}", self.retry_shrink));
        }
        if !(self.denom_guard >= 0.0 && self.denom_guard.is_finite()) {
            return bad(format!("denom_guard must be non-negative, got {}", self.denom_guard));
        }
        Ok(())
    }

    /// Admissible open interval for `omega` given the jump index `y`.
    pub fn theory_window(y: f64) -> (f64, f64) {
        let lo = (1.0 / (4.0 - y)).max(1.0 / (2.0 + y / 2.0));
        (lo, 4.0 / (8.0 + y))
    }

    /// Errors if `omega` lies outside the theory window for `y`.
    pub fn check_theory_window(&self, y: f64) -> Result<()> {
        let (lo, hi) = Self::theory_window(y);
        if self.omega > lo && self.omega < hi {
            Ok(())
        } else {
            Err(Error::Config(format!("omega {} outside ({lo:.6}, {hi:.6}) for Y = {y}", self.omega)))
        }
    }

    /// Threshold base for `increments` observed at spacing `h`.
    pub fn c0(&self, increments: &[f64], h: f64) -> Result<f64> {
        match self.c0_mode {
            C0Mode::Fixed(c0) => Ok(c0),
            C0Mode::Bipower => {
                let bv = bipower_sigma2(increments)?;
                let c0 = (bv / (increments.len() as f64 * h)).sqrt();
                if c0 > 0.0 && c0.is_finite() {
                    Ok(c0)
                } else {
                    Err(input("bipower variation is zero, threshold base undefined"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateFlags {
    pub negative_clamped: bool,
    pub denom_guarded: bool,
    pub retry_exhausted: bool,
}

impl EstimateFlags {
    fn merge(&mut self, other: EstimateFlags) {
        self.negative_clamped |= other.negative_clamped;
        self.denom_guarded |= other.denom_guarded;
        self.retry_exhausted |= other.retry_exhausted;
    }

    pub fn any(&self) -> bool {
        self.negative_clamped || self.denom_guarded || self.retry_exhausted
    }

    /// Compact `|`-separated label, empty when no flag is set.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.negative_clamped {
            parts.push("negative_clamped");
        }
        if self.denom_guarded {
            parts.push("denom_guarded");
        }
        if self.retry_exhausted {
            parts.push("retry_exhausted");
        }
        parts.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub eps_used: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub retries: u32,
    pub flags: EstimateFlags,
}

/// Profiles and base thresholds of a set of blocks sharing the debiasing
/// factors.
struct Pool<'a> {
    profiles: Vec<TruncationProfile>,
    eps: Vec<f64>,
    cfg: &'a EstimatorConfig,
}

/// Per-block one-step values at one threshold scale.
struct Stage {
    values: Vec<f64>,
    eta: f64,
    retries: u32,
    flags: EstimateFlags,
}

impl<'a> Pool<'a> {
    fn new(blocks: &[&[f64]], cfg: &'a EstimatorConfig, h: f64) -> Result<Self> {
        cfg.validate()?;
        if blocks.is_empty() {
            return Err(input("at least one block is required"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(input(format!("time step must be positive, got {h}")));
        }
        let mut profiles = Vec::with_capacity(blocks.len());
        let mut eps = Vec::with_capacity(blocks.len());
        for b in blocks {
            if b.is_empty() {
                return Err(input("blocks must be non-empty"));
            }
            eps.push(threshold(cfg.c0(b, h)?, h, cfg.omega));
            profiles.push(TruncationProfile::new(b)?);
        }
        Ok(Self { profiles, eps, cfg })
    }

    fn c_sum(&self, scale: f64) -> f64 {
        compensated_sum(self.profiles.iter().zip(&self.eps).map(|(p, e)| p.trqv(scale * e)))
    }

    fn pooled_eta<F: Fn(f64) -> f64>(&self, f: F, base: f64, zeta: f64) -> DebiasStep {
        debias_step(f(base), f(base * zeta), f(base * zeta * zeta), self.cfg.denom_guard)
    }

    /// One-step values at threshold `scale * eps_b` for every block.
    fn one_step(&self, scale: f64) -> Stage {
        let cfg = self.cfg;
        let base: Vec<f64> = self.profiles.iter().zip(&self.eps).map(|(p, e)| p.trqv(scale * e)).collect();
        let diff: Vec<f64> = self
            .profiles
            .iter()
            .zip(&self.eps)
            .zip(&base)
            .map(|((p, e), c)| p.trqv(cfg.zeta1 * scale * e) - c)
            .collect();
        let mut flags = EstimateFlags::default();
        let mut eta_scale = scale;
        for retries in 0..=cfg.max_retries {
            let step = self.pooled_eta(|s| self.c_sum(s), cfg.p1 * eta_scale, cfg.zeta1);
            flags.denom_guarded |= step.guarded;
            if step.eta < 0.0 {
                flags.negative_clamped = true;
            }
            let eta = step.eta.max(0.0);
            let values: Vec<f64> = base.iter().zip(&diff).map(|(c, d)| c - eta * d).collect();
            if values.iter().all(|v| *v >= 0.0) {
                return Stage { values, eta, retries, flags };
            }
            eta_scale *= cfg.retry_shrink;
        }
        flags.retry_exhausted = true;
        Stage { values: base, eta: 0.0, retries: cfg.max_retries, flags }
    }

    fn one_step_sum(&self, scale: f64) -> (f64, EstimateFlags) {
        let st = self.one_step(scale);
        (compensated_sum(st.values.iter().copied()), st.flags)
    }

    fn one_step_results(&self) -> Vec<EstimateResult> {
        let st = self.one_step(1.0);
        st.values
            .iter()
            .zip(&self.eps)
            .map(|(v, e)| EstimateResult {
                value: *v,
                eps_used: *e,
                eta1: st.eta,
                eta2: 0.0,
                retries: st.retries,
                flags: st.flags,
            })
            .collect()
    }

    fn two_step_results(&self) -> Vec<EstimateResult> {
        let cfg = self.cfg;
        let base = self.one_step(1.0);
        let up = self.one_step(cfg.zeta2);
        let mut flags = base.flags;
        flags.merge(up.flags);
        let inner: Vec<f64> = up.values.iter().zip(&base.values).map(|(u, b)| (u - b).max(0.0)).collect();

        let mut eta_scale = 1.0;
        let mut outcome = None;
        for retries in 0..=cfg.max_retries {
            let mut stage_flags = EstimateFlags::default();
            let f = |s: f64| self.one_step_sum(s);
            let b0 = cfg.p2 * eta_scale;
            let (f0, fl0) = f(b0);
            let (f1, fl1) = f(b0 * cfg.zeta2);
            let (f2, fl2) = f(b0 * cfg.zeta2 * cfg.zeta2);
            for fl in [fl0, fl1, fl2] {
                stage_flags.merge(fl);
            }
            let step = debias_step(f0, f1, f2, cfg.denom_guard);
            stage_flags.denom_guarded |= step.guarded;
            if step.eta > 0.0 {
                stage_flags.negative_clamped = true;
            }
            let eta2 = step.eta.min(0.0);
            let values: Vec<f64> = base.values.iter().zip(&inner).map(|(c, d)| c - eta2 * d).collect();
            if values.iter().all(|v| *v >= 0.0) {
                flags.merge(stage_flags);
                outcome = Some((values, eta2, retries));
                break;
            }
            flags.merge(stage_flags);
            eta_scale *= cfg.retry_shrink;
        }
        let (values, eta2, retries) = outcome.unwrap_or_else(|| {
            flags.retry_exhausted = true;
            (base.values.clone(), 0.0, cfg.max_retries)
        });
        values
            .iter()
            .zip(&self.eps)
            .map(|(v, e)| EstimateResult {
                value: *v,
                eps_used: *e,
                eta1: base.eta,
                eta2,
                retries: base.retries + retries,
                flags,
            })
            .collect()
    }
}

/// One-step estimator removing the positive jump bias of TRQV.
pub fn estimate_pb(increments: &[f64], cfg: &EstimatorConfig, h: f64) -> Result<EstimateResult> {
    Ok(Pool::new(&[increments], cfg, h)?.one_step_results()[0])
}

/// Two-step estimator: the one-step estimator with its residual negative
/// bias removed by a second debiasing pass.
pub fn estimate_nb(increments: &[f64], cfg: &EstimatorConfig, h: f64) -> Result<EstimateResult> {
    Ok(Pool::new(&[increments], cfg, h)?.two_step_results()[0])
}

/// One-step estimates per block with debiasing factors pooled across blocks.
pub fn estimate_daily_pooled_pb(blocks: &[&[f64]], cfg: &EstimatorConfig, h: f64) -> Result<Vec<EstimateResult>> {
    Ok(Pool::new(blocks, cfg, h)?.one_step_results())
}

/// Two-step estimates per block. Bias differences use each block's own
/// data, while both debiasing factors are ratios of sums over all blocks.
pub fn estimate_daily_pooled(blocks: &[&[f64]], cfg: &EstimatorConfig, h: f64) -> Result<Vec<EstimateResult>> {
    Ok(Pool::new(blocks, cfg, h)?.two_step_results())
}
