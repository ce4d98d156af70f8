//! Reproducible parallel Monte Carlo experiments.
//!
//! Path `i` always draws from stream `(master_seed, i)`, and results are
//! reduced in path order, so outputs do not depend on the worker count.

use crate::error::{input, Error, Result};
use crate::estimators::{
    estimate_daily_pooled, estimate_daily_pooled_pb, estimate_nb, estimate_pb, threshold, EstimateFlags,
    EstimatorConfig, TruncationProfile,
};
use crate::levy::{default_tau, GridSpec};
use crate::numeric::{compensated_sum, norm_cdf};
use crate::rng::stream;
use crate::sv::{ModelSpec, PathSample, PathSimulator};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Truncated realized variance at the configured threshold.
    Trqv,
    /// One-step debiased estimator.
    Pb,
    /// Two-step debiased estimator.
    Nb,
    /// Untruncated realized variance.
    Rv,
    /// The true integrated variance itself (a zero-error reference).
    TrueIv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedEstimator {
    pub name: String,
    pub kind: EstimatorKind,
    #[serde(default)]
    pub config: EstimatorConfig,
}

impl NamedEstimator {
    pub fn new(name: impl Into<String>, kind: EstimatorKind, config: EstimatorConfig) -> Self {
        Self { name: name.into(), kind, config }
    }
}

/// Small-jump cutoff used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// `min(eps/10, h^{1/Y})` with `eps = vol * h^{5/12}` from the model's
    /// typical volatility.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub blocks: usize,
    pub paths: usize,
    pub estimators: Vec<NamedEstimator>,
    pub master_seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub substeps: usize,
    pub tau: TauRule,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        if self.grid.n_steps == 0 || !(self.grid.h > 0.0) {
            return Err(Error::Config("grid must have at least one positive step".into()));
        }
        if self.blocks == 0 || self.grid.n_steps % self.blocks != 0 {
            return Err(Error::Config(format!(
                "blocks ({}) must divide the number of steps ({})",
                self.blocks, self.grid.n_steps
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("at least one estimator is required".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for e in &self.estimators {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Config(format!("duplicate estimator name `{}`", e.name)));
            }
            e.config.validate().map_err(|err| Error::Config(format!("estimator `{}`: {err}", e.name)))?;
        }
        if let TauRule::Fixed(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tau must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// The small-jump cutoff this configuration simulates with.
    pub fn resolved_tau(&self) -> f64 {
        match self.tau {
            TauRule::Fixed(t) => t,
            TauRule::Auto => {
                let h = self.grid.h;
                let eps = self.model.diffusion.typical_vol() * h.powf(5.0 / 12.0);
                let y = self.model.jumps.map(|j| j.y_index).unwrap_or(1.5);
                default_tau(eps, h, y)
            }
        }
    }

    fn simulator(&self) -> Result<PathSimulator> {
        PathSimulator::new(&self.model, &self.grid, self.blocks, self.substeps, self.resolved_tau())
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }
}

/// Whole-horizon estimates of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path: u64,
    pub truth: f64,
    pub estimates: Vec<f64>,
    pub flags: Vec<EstimateFlags>,
}

fn apply(est: &NamedEstimator, increments: &[f64], truth: f64, h: f64) -> Result<(f64, EstimateFlags)> {
    let none = EstimateFlags::default();
    match est.kind {
        EstimatorKind::Trqv => {
            let eps = threshold(est.config.c0(increments, h)?, h, est.config.omega);
            Ok((TruncationProfile::new(increments)?.trqv(eps), none))
        }
        EstimatorKind::Pb => estimate_pb(increments, &est.config, h).map(|r| (r.value, r.flags)),
        EstimatorKind::Nb => estimate_nb(increments, &est.config, h).map(|r| (r.value, r.flags)),
        EstimatorKind::Rv => Ok((compensated_sum(increments.iter().map(|d| d * d)), none)),
        EstimatorKind::TrueIv => Ok((truth, none)),
    }
}

fn with_path(path: u64, e: Error) -> Error {
    Error::Path { path: path as usize, source: Box::new(e) }
}

/// Runs the ordered map `f` over `range` on the configured pool. The first
/// error by path index is returned.
fn par_paths<T: Send>(
    cfg: &ExperimentConfig,
    range: std::ops::Range<u64>,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let pool = cfg.thread_pool()?;
    let out: Vec<Result<T>> =
        pool.install(|| range.into_par_iter().map(|i| f(i).map_err(|e| with_path(i, e))).collect());
    out.into_iter().collect()
}

fn draw(sim: &PathSimulator, cfg: &ExperimentConfig, i: u64) -> PathSample {
    let mut rng = stream(cfg.master_seed, i);
    sim.simulate(i, &mut rng)
}

/// Whole-horizon estimates for the paths in `range`.
pub fn run_paths(cfg: &ExperimentConfig, range: std::ops::Range<u64>) -> Result<Vec<PathRecord>> {
    cfg.validate()?;
    let sim = cfg.simulator()?;
    let h = cfg.grid.h;
    par_paths(cfg, range, |i| {
        let path = draw(&sim, cfg, i);
        let truth = path.total_iv();
        let mut estimates = Vec::with_capacity(cfg.estimators.len());
        let mut flags = Vec::with_capacity(cfg.estimators.len());
        for est in &cfg.estimators {
            let (v, f) = apply(est, &path.increments, truth, h)?;
            estimates.push(v);
            flags.push(f);
        }
        Ok(PathRecord { path: i, truth, estimates, flags })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: String,
    pub sample_mean: f64,
    pub sample_sd: f64,
    pub rel_err_mean: f64,
    pub rel_err_sd: f64,
    pub mse: f64,
    pub mad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub rows: Vec<SummaryRow>,
    pub paths: usize,
    pub seed: u64,
    pub tau: f64,
    /// Seconds; excluded from CSV output so files stay reproducible.
    pub wall_time: f64,
}

impl McSummary {
    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.estimator == name)
    }
}

fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` divisor; NaN for one value.
fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (compensated_sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64).sqrt()
}

/// Exact median by selection.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    let n = v.len();
    let (_, hi, _) = v.select_nth_unstable_by(n / 2, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Summary statistics of `estimates` against per-path `truths`.
pub fn summarize_estimates(name: &str, estimates: &[f64], truths: &[f64]) -> SummaryRow {
    let rel: Vec<f64> = estimates.iter().zip(truths).map(|(e, t)| (e - t) / t).collect();
    let sq: Vec<f64> = estimates.iter().zip(truths).map(|(e, t)| (e - t) * (e - t)).collect();
    let abs: Vec<f64> = estimates.iter().zip(truths).map(|(e, t)| (e - t).abs()).collect();
    SummaryRow {
        estimator: name.to_string(),
        sample_mean: mean(estimates),
        sample_sd: sample_sd(estimates),
        rel_err_mean: mean(&rel),
        rel_err_sd: sample_sd(&rel),
        mse: mean(&sq),
        mad: median(&abs),
    }
}

/// Aggregates path records (in the given order) into summary rows.
pub fn summarize(cfg: &ExperimentConfig, records: &[PathRecord]) -> McSummary {
    let truths: Vec<f64> = records.iter().map(|r| r.truth).collect();
    let rows = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(k, est)| {
            let values: Vec<f64> = records.iter().map(|r| r.estimates[k]).collect();
            summarize_estimates(&est.name, &values, &truths)
        })
        .collect();
    McSummary { rows, paths: records.len(), seed: cfg.master_seed, tau: cfg.resolved_tau(), wall_time: 0.0 }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<McSummary> {
    let start = Instant::now();
    let records = run_paths(cfg, 0..cfg.paths as u64)?;
    let mut summary = summarize(cfg, &records);
    summary.wall_time = start.elapsed().as_secs_f64();
    Ok(summary)
}

/// Like [`run_experiment`] but also returns the per-path records.
pub fn run_experiment_with_records(cfg: &ExperimentConfig) -> Result<(McSummary, Vec<PathRecord>)> {
    let start = Instant::now();
    let records = run_paths(cfg, 0..cfg.paths as u64)?;
    let mut summary = summarize(cfg, &records);
    summary.wall_time = start.elapsed().as_secs_f64();
    Ok((summary, records))
}

/// `sqrt(n) (est - truth) / sqrt(2 truth^2)` per estimate.
pub fn normalized_errors(estimates: &[f64], truth: f64, n_steps: usize) -> Result<Vec<f64>> {
    if !(truth > 0.0) {
        return Err(input(format!("truth must be positive, got {truth}")));
    }
    let scale = (n_steps as f64).sqrt() / (2.0f64.sqrt() * truth);
    Ok(estimates.iter().map(|e| (e - truth) * scale).collect())
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `sample` and
/// the continuous CDF `cdf`.
pub fn ks_statistic_against<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(input("KS statistic needs a non-empty sample"));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(input("KS sample contains NaN"));
    }
    let mut xs = sample.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Kolmogorov-Smirnov distance to the standard normal.
pub fn ks_statistic(sample: &[f64]) -> Result<f64> {
    ks_statistic_against(sample, norm_cdf)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(input("KS statistic needs non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Per-block estimates of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyPathRecord {
    pub path: u64,
    pub truth: Vec<f64>,
    /// `estimates[k][day]` for estimator `k`.
    pub estimates: Vec<Vec<f64>>,
    pub flags: Vec<EstimateFlags>,
}

/// Per-day error statistics across paths for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyStats {
    pub estimator: String,
    pub mse: Vec<f64>,
    pub mad: Vec<f64>,
    pub mean_mse: f64,
    pub mean_mad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySummary {
    pub stats: Vec<DailyStats>,
    pub paths: usize,
    pub seed: u64,
    pub tau: f64,
    pub wall_time: f64,
}

fn apply_daily(est: &NamedEstimator, path: &PathSample, h: f64) -> Result<(Vec<f64>, EstimateFlags)> {
    let blocks: Vec<&[f64]> = (0..path.blocks).map(|b| path.block_increments(b)).collect::<Result<_>>()?;
    let merge = |rs: &[crate::estimators::EstimateResult]| {
        let mut f = EstimateFlags::default();
        for r in rs {
            f.negative_clamped |= r.flags.negative_clamped;
            f.denom_guarded |= r.flags.denom_guarded;
            f.retry_exhausted |= r.flags.retry_exhausted;
        }
        f
    };
    match est.kind {
        EstimatorKind::Pb => {
            let rs = estimate_daily_pooled_pb(&blocks, &est.config, h)?;
            Ok((rs.iter().map(|r| r.value).collect(), merge(&rs)))
        }
        EstimatorKind::Nb => {
            let rs = estimate_daily_pooled(&blocks, &est.config, h)?;
            Ok((rs.iter().map(|r| r.value).collect(), merge(&rs)))
        }
        _ => {
            let mut out = Vec::with_capacity(blocks.len());
            for (b, inc) in blocks.iter().enumerate() {
                out.push(apply(est, inc, path.block_iv[b], h)?.0);
            }
            Ok((out, EstimateFlags::default()))
        }
    }
}

/// Per-block estimates for the paths in `range`. Debiased estimators pool
/// their factors over all blocks of a path.
pub fn run_daily_paths(cfg: &ExperimentConfig, range: std::ops::Range<u64>) -> Result<Vec<DailyPathRecord>> {
    cfg.validate()?;
    let sim = cfg.simulator()?;
    let h = cfg.grid.h;
    par_paths(cfg, range, |i| {
        let path = draw(&sim, cfg, i);
        let mut estimates = Vec::with_capacity(cfg.estimators.len());
        let mut flags = Vec::with_capacity(cfg.estimators.len());
        for est in &cfg.estimators {
            let (v, f) = apply_daily(est, &path, h)?;
            estimates.push(v);
            flags.push(f);
        }
        Ok(DailyPathRecord { path: i, truth: path.block_iv.clone(), estimates, flags })
    })
}

pub fn summarize_daily(cfg: &ExperimentConfig, records: &[DailyPathRecord]) -> DailySummary {
    let stats = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(k, est)| {
            let mut mse = Vec::with_capacity(cfg.blocks);
            let mut mad = Vec::with_capacity(cfg.blocks);
            for day in 0..cfg.blocks {
                let err: Vec<f64> = records.iter().map(|r| r.estimates[k][day] - r.truth[day]).collect();
                mse.push(mean(&err.iter().map(|e| e * e).collect::<Vec<_>>()));
                mad.push(median(&err.iter().map(|e| e.abs()).collect::<Vec<_>>()));
            }
            DailyStats { estimator: est.name.clone(), mean_mse: mean(&mse), mean_mad: mean(&mad), mse, mad }
        })
        .collect();
    DailySummary { stats, paths: records.len(), seed: cfg.master_seed, tau: cfg.resolved_tau(), wall_time: 0.0 }
}

pub fn run_daily(cfg: &ExperimentConfig) -> Result<(DailySummary, Vec<DailyPathRecord>)> {
    let start = Instant::now();
    let records = run_daily_paths(cfg, 0..cfg.paths as u64)?;
    let mut summary = summarize_daily(cfg, &records);
    summary.wall_time = start.elapsed().as_secs_f64();
    Ok((summary, records))
}

/// Summary CSV with columns
/// `estimator,sample_mean,sample_sd,rel_err_mean,rel_err_sd,mse,mad`.
pub fn write_summary_csv<W: Write>(out: W, summary: &McSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &summary.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format per-path CSV with columns `path,estimator,value`.
pub fn write_paths_csv<W: Write>(out: W, cfg: &ExperimentConfig, records: &[PathRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "estimator", "value"])?;
    for r in records {
        for (est, v) in cfg.estimators.iter().zip(&r.estimates) {
            w.write_record([r.path.to_string(), est.name.clone(), format!("{v:?}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON mirror of the summary and (optionally) the per-path records.
pub fn write_json<W: Write>(out: W, summary: &McSummary, records: Option<&[PathRecord]>) -> Result<()> {
    #[derive(Serialize)]
    struct Mirror<'a> {
        rows: &'a [SummaryRow],
        paths: usize,
        seed: u64,
        tau: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        records: Option<&'a [PathRecord]>,
    }
    let m = Mirror { rows: &summary.rows, paths: summary.paths, seed: summary.seed, tau: summary.tau, records };
    serde_json::to_writer_pretty(out, &m)?;
    Ok(())
}
