//! Subcommand implementations. Each writes CSV files into the output
//! directory and reports which files it produced.

use crate::config::{self, Cell, RunConfig};
use crate::manifest::{self, RunManifest};
use crate::{Common, Status};
use anyhow::{bail, Context};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use trv_core::harness::{
    ks_statistic, normalized_errors, run_daily, run_experiment_with_records, DailyPathRecord, DailySummary, McSummary,
    PathRecord,
};
use trv_core::oracle::{residual_order_check_scaled, ExpansionReport, Regime};
use trv_core::sv::PathSimulator;
use trv_core::{stream, EstimateFlags};

/// What a command produced.
pub struct Outcome {
    pub status: Status,
    pub outputs: Vec<String>,
    pub errors: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { status: Status::Ok, outputs: Vec::new(), errors: Vec::new() }
    }

    fn cell_failed(&mut self, cell: &str, e: impl std::fmt::Display) {
        self.errors.push(format!("cell `{cell}`: {e}"));
        if self.status == Status::Ok {
            self.status = Status::Partial;
        }
    }
}

/// Loads and resolves the configuration, applies command-line overrides,
/// runs `f` and writes the manifest.
pub fn run(
    command: &str,
    args: &Common,
    f: impl FnOnce(&RunConfig, &[Cell], &Path) -> anyhow::Result<Outcome>,
) -> anyhow::Result<Status> {
    if !args.out.is_dir() {
        bail!("output directory {} does not exist", args.out.display());
    }
    let mut cfg = config::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.experiment.seed = s;
    }
    if let Some(p) = args.paths {
        cfg.experiment.paths = p;
    }
    if let Some(t) = args.threads {
        cfg.experiment.threads = t;
    }
    let cfg = cfg.resolve()?;
    let cells = cfg.cells()?;

    let started = chrono::Utc::now();
    let mut outcome = f(&cfg, &cells, &args.out)?;
    let finished = chrono::Utc::now();
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    let m = RunManifest {
        command,
        config_path: args.config.display().to_string(),
        resolved_config: &cfg,
        git_describe: manifest::GIT_DESCRIBE,
        seed: cfg.experiment.seed,
        threads: cfg.experiment.threads,
        started: manifest::timestamp(started),
        finished: manifest::timestamp(finished),
        outputs: std::mem::take(&mut outcome.outputs),
        errors: std::mem::take(&mut outcome.errors),
    };
    let name = manifest::write(&args.out, &m)?;
    for o in &m.outputs {
        println!("wrote {}", args.out.join(o).display());
    }
    println!("wrote {}", args.out.join(name).display());
    Ok(outcome.status)
}

type CellRuns<'a, T> = Vec<(&'a Cell, Result<T, String>)>;

fn csv_file(dir: &Path, name: &str, outcome: &mut Outcome) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    outcome.outputs.push(name.to_string());
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Shortest round-trip form, with an exponent for very small or large
/// magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn mc_table(_cfg: &RunConfig, cells: &[Cell], out: &Path, per_path: bool) -> anyhow::Result<Outcome> {
    let mut outcome = Outcome::new();
    let mut results: CellRuns<(McSummary, Vec<PathRecord>)> = Vec::new();
    for cell in cells {
        let r = run_experiment_with_records(&cell.experiment).map_err(|e| e.to_string());
        if let Err(e) = &r {
            outcome.cell_failed(&cell.name, e);
        }
        results.push((cell, r));
    }

    let mut w = csv_file(out, "mc_table.csv", &mut outcome)?;
    w.write_record([
        "cell",
        "estimator",
        "sample_mean",
        "sample_sd",
        "rel_err_mean",
        "rel_err_sd",
        "mse",
        "mad",
        "error",
    ])?;
    for (cell, r) in &results {
        match r {
            Ok((s, _)) => {
                for row in &s.rows {
                    w.write_record([
                        cell.name.clone(),
                        row.estimator.clone(),
                        num(row.sample_mean),
                        num(row.sample_sd),
                        num(row.rel_err_mean),
                        num(row.rel_err_sd),
                        num(row.mse),
                        num(row.mad),
                        String::new(),
                    ])?;
                }
            }
            Err(e) => {
                let mut rec = vec![cell.name.clone()];
                rec.extend(vec![String::new(); 7]);
                rec.push(e.clone());
                w.write_record(rec)?;
            }
        }
    }
    w.flush()?;

    #[derive(serde::Serialize)]
    struct CellJson<'a> {
        cell: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        rows: Option<&'a [trv_core::SummaryRow]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        paths: Option<usize>,
        seed: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<&'a str>,
    }
    let json: Vec<CellJson> = results
        .iter()
        .map(|(cell, r)| match r {
            Ok((s, _)) => CellJson {
                cell: &cell.name,
                rows: Some(&s.rows),
                paths: Some(s.paths),
                seed: s.seed,
                tau: Some(s.tau),
                error: None,
            },
            Err(e) => CellJson {
                cell: &cell.name,
                rows: None,
                paths: None,
                seed: cell.experiment.master_seed,
                tau: None,
                error: Some(e),
            },
        })
        .collect();
    let file = File::create(out.join("mc_table.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &json)?;
    outcome.outputs.push("mc_table.json".into());

    if per_path {
        let mut w = csv_file(out, "mc_paths.csv", &mut outcome)?;
        w.write_record(["cell", "path", "estimator", "truth", "value", "flags"])?;
        for (cell, r) in &results {
            if let Ok((_, recs)) = r {
                for rec in recs {
                    for (k, est) in cell.experiment.estimators.iter().enumerate() {
                        w.write_record([
                            cell.name.clone(),
                            rec.path.to_string(),
                            est.name.clone(),
                            num(rec.truth),
                            num(rec.estimates[k]),
                            rec.flags[k].label(),
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
    }
    Ok(outcome)
}

/// Normalized error of each path against its own integrated variance.
fn path_errors(recs: &[PathRecord], k: usize, n_steps: usize) -> trv_core::Result<Vec<f64>> {
    recs.iter().map(|r| normalized_errors(&[r.estimates[k]], r.truth, n_steps).map(|z| z[0])).collect()
}

pub fn clt_hist(cfg: &RunConfig, cells: &[Cell], out: &Path) -> anyhow::Result<Outcome> {
    let name = cfg.clt.estimator.clone().unwrap_or_default();
    let k = cfg
        .estimators
        .iter()
        .position(|e| e.name == name)
        .with_context(|| format!("[clt] estimator `{name}` is not configured"))?;
    if cfg.clt.bins == 0 || !(cfg.clt.range > 0.0) {
        bail!("[clt] bins and range must be positive");
    }
    let mut outcome = Outcome::new();
    let mut results = Vec::new();
    for cell in cells {
        let r = run_experiment_with_records(&cell.experiment)
            .and_then(|(_, recs)| {
                let z = path_errors(&recs, k, cell.experiment.grid.n_steps)?;
                let ks = ks_statistic(&z)?;
                Ok((recs, z, ks))
            })
            .map_err(|e| e.to_string());
        if let Err(e) = &r {
            outcome.cell_failed(&cell.name, e);
        }
        results.push((cell, r));
    }

    let mut w = csv_file(out, "clt_errors.csv", &mut outcome)?;
    w.write_record(["cell", "path", "estimator", "z"])?;
    for (cell, r) in &results {
        if let Ok((recs, z, _)) = r {
            for (rec, z) in recs.iter().zip(z) {
                w.write_record([cell.name.clone(), rec.path.to_string(), name.clone(), num(*z)])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv_file(out, "clt_ks.csv", &mut outcome)?;
    w.write_record(["cell", "estimator", "paths", "ks", "error"])?;
    for (cell, r) in &results {
        match r {
            Ok((_, z, ks)) => {
                w.write_record([cell.name.clone(), name.clone(), z.len().to_string(), num(*ks), String::new()])?
            }
            Err(e) => w.write_record([cell.name.clone(), name.clone(), String::new(), String::new(), e.clone()])?,
        }
    }
    w.flush()?;

    let (bins, range) = (cfg.clt.bins, cfg.clt.range);
    let width = 2.0 * range / bins as f64;
    let mut w = csv_file(out, "clt_hist.csv", &mut outcome)?;
    w.write_record(["cell", "bin_lo", "bin_hi", "count", "density", "normal_density"])?;
    for (cell, r) in &results {
        let Ok((_, z, _)) = r else { continue };
        let mut counts = vec![0usize; bins];
        for x in z {
            let b = ((x + range) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            } else if *x == range {
                counts[bins - 1] += 1;
            }
        }
        for (b, c) in counts.iter().enumerate() {
            let lo = -range + b as f64 * width;
            let hi = lo + width;
            let mid = 0.5 * (lo + hi);
            let phi = (-0.5 * mid * mid).exp() / (2.0 * std::f64::consts::PI).sqrt();
            w.write_record([
                cell.name.clone(),
                num(lo),
                num(hi),
                c.to_string(),
                num(*c as f64 / (z.len() as f64 * width)),
                num(phi),
            ])?;
        }
    }
    w.flush()?;
    Ok(outcome)
}

fn report_passes(r: &ExpansionReport, band: f64) -> bool {
    match r.regime {
        Regime::Exponential => true,
        Regime::Algebraic => (r.fitted_order - r.theoretical_order).abs() <= band,
    }
}

pub fn oracle_check(cfg: &RunConfig, out: &Path, coef_scale: f64) -> anyhow::Result<Outcome> {
    let mut outcome = Outcome::new();
    let band = cfg.oracle.band;
    let mut rows = Vec::new();
    let mut band_failed = false;
    for case in &cfg.oracle.cases {
        let name = case.name.clone().unwrap_or_default();
        match residual_order_check_scaled(&case.model(), case.k, &case.h_values, case.omega, coef_scale) {
            Ok(r) => {
                let file = File::create(out.join(format!("oracle_{name}.json")))?;
                r.write_json(BufWriter::new(file))?;
                outcome.outputs.push(format!("oracle_{name}.json"));
                let file = File::create(out.join(format!("oracle_{name}.csv")))?;
                r.write_csv(BufWriter::new(file))?;
                outcome.outputs.push(format!("oracle_{name}.csv"));
                let pass = report_passes(&r, band);
                band_failed |= !pass;
                rows.push((name, case, Ok(r), pass));
            }
            Err(e) => {
                outcome.errors.push(format!("case `{name}`: {e}"));
                rows.push((name, case, Err(e.to_string()), false));
            }
        }
    }

    let mut w = csv_file(out, "oracle_summary.csv", &mut outcome)?;
    w.write_record([
        "case",
        "k",
        "y",
        "sigma",
        "omega",
        "regime",
        "fitted_order",
        "theoretical_order",
        "jump_term_order",
        "grid_certificate",
        "pass",
        "error",
    ])?;
    for (name, case, r, pass) in &rows {
        let mut rec = vec![name.clone(), case.k.to_string(), num(case.y), num(case.sigma), num(case.omega)];
        match r {
            Ok(r) => {
                let regime = match r.regime {
                    Regime::Algebraic => "algebraic",
                    Regime::Exponential => "exponential",
                };
                rec.extend([
                    regime.to_string(),
                    num(r.fitted_order),
                    num(r.theoretical_order),
                    num(r.jump_term_order),
                    num(r.grid_certificate),
                    pass.to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                rec.extend(vec![String::new(); 5]);
                rec.extend(["false".to_string(), e.clone()]);
            }
        }
        w.write_record(rec)?;
    }
    w.flush()?;

    for (name, _, r, pass) in &rows {
        if let (Ok(r), false) = (r, pass) {
            eprintln!("case `{name}`: fitted order {} outside {} ± {band}", r.fitted_order, r.theoretical_order);
        }
    }
    outcome.status = if band_failed {
        Status::Band
    } else if !outcome.errors.is_empty() {
        Status::Partial
    } else {
        Status::Ok
    };
    Ok(outcome)
}

pub fn daily_iv(cfg: &RunConfig, cells: &[Cell], out: &Path) -> anyhow::Result<Outcome> {
    let blocks = cfg.experiment.blocks;
    if let Some(d) = cfg.daily.days.iter().find(|d| **d == 0 || **d > blocks) {
        bail!("[daily] day {d} is outside 1..={blocks}");
    }
    let days: Vec<usize> =
        if cfg.daily.days.is_empty() { (0..blocks).collect() } else { cfg.daily.days.iter().map(|d| d - 1).collect() };

    let mut outcome = Outcome::new();
    let mut results: CellRuns<(DailySummary, Vec<DailyPathRecord>)> = Vec::new();
    for cell in cells {
        let r = run_daily(&cell.experiment).map_err(|e| e.to_string());
        if let Err(e) = &r {
            outcome.cell_failed(&cell.name, e);
        }
        results.push((cell, r));
    }

    let mut w = csv_file(out, "daily.csv", &mut outcome)?;
    w.write_record(["cell", "path", "day", "estimator", "truth", "estimate", "flags"])?;
    for (cell, r) in &results {
        let Ok((_, recs)) = r else { continue };
        for rec in recs {
            for &d in &days {
                for (k, est) in cell.experiment.estimators.iter().enumerate() {
                    let flags: &EstimateFlags = &rec.flags[k];
                    w.write_record([
                        cell.name.clone(),
                        rec.path.to_string(),
                        (d + 1).to_string(),
                        est.name.clone(),
                        num(rec.truth[d]),
                        num(rec.estimates[k][d]),
                        flags.label(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;

    let mut w = csv_file(out, "daily_summary.csv", &mut outcome)?;
    w.write_record(["cell", "estimator", "day", "mse", "mad", "error"])?;
    for (cell, r) in &results {
        match r {
            Ok((s, _)) => {
                for st in &s.stats {
                    for &d in &days {
                        w.write_record([
                            cell.name.clone(),
                            st.estimator.clone(),
                            (d + 1).to_string(),
                            num(st.mse[d]),
                            num(st.mad[d]),
                            String::new(),
                        ])?;
                    }
                    // Average over every day, not only the reported ones.
                    w.write_record([
                        cell.name.clone(),
                        st.estimator.clone(),
                        "mean".into(),
                        num(st.mean_mse),
                        num(st.mean_mad),
                        String::new(),
                    ])?;
                }
            }
            Err(e) => w.write_record([
                cell.name.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ])?,
        }
    }
    w.flush()?;
    Ok(outcome)
}

pub fn simulate(_cfg: &RunConfig, cells: &[Cell], out: &Path) -> anyhow::Result<Outcome> {
    let mut outcome = Outcome::new();
    let mut inc = csv_file(out, "simulate_increments.csv", &mut outcome)?;
    inc.write_record(["cell", "path", "step", "increment"])?;
    let mut iv = csv_file(out, "simulate_iv.csv", &mut outcome)?;
    iv.write_record(["cell", "path", "block", "iv"])?;
    for cell in cells {
        let e = &cell.experiment;
        let sim = match PathSimulator::new(&e.model, &e.grid, e.blocks, e.substeps, e.resolved_tau()) {
            Ok(s) => s,
            Err(err) => {
                outcome.cell_failed(&cell.name, err);
                continue;
            }
        };
        // Same streams as the estimation commands, so path `i` here is path
        // `i` there.
        for i in 0..e.paths as u64 {
            let p = sim.simulate(i, &mut stream(e.master_seed, i));
            for (j, d) in p.increments.iter().enumerate() {
                inc.write_record([cell.name.clone(), i.to_string(), j.to_string(), num(*d)])?;
            }
            for (b, v) in p.block_iv.iter().enumerate() {
                iv.write_record([cell.name.clone(), i.to_string(), b.to_string(), num(*v)])?;
            }
        }
    }
    inc.flush()?;
    iv.flush()?;
    Ok(outcome)
}
