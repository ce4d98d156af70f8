//! Run configuration: TOML sections with defaults, resolved into a fully
//! explicit form that is echoed into every manifest.

use serde::{Deserialize, Serialize};
use std::path::Path;
use trv_core::harness::{EstimatorKind, ExperimentConfig, NamedEstimator, TauRule};
use trv_core::oracle::OracleModel;
use trv_core::{DiffusionSpec, EstimatorConfig, GridSpec, LevyJumpSpec, ModelSpec};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSection,
    pub model: ModelSection,
    #[serde(rename = "cell")]
    pub cells: Vec<CellSection>,
    #[serde(rename = "estimator")]
    pub estimators: Vec<NamedEstimator>,
    pub clt: CltSection,
    pub daily: DailySection,
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub horizon: f64,
    pub n_steps: usize,
    pub blocks: usize,
    pub paths: usize,
    pub seed: u64,
    pub substeps: usize,
    pub tau: TauRule,
    /// Worker threads; 0 uses all cores. Never affects results.
    pub threads: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            n_steps: 252 * 390,
            blocks: 1,
            paths: 200,
            seed: 1,
            substeps: 10,
            tau: TauRule::Auto,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub diffusion: DiffusionSpec,
    pub jumps: LevyJumpSpec,
    pub jump_free: bool,
    pub chi: f64,
    pub drift_b: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            diffusion: DiffusionSpec::Constant { sigma: 0.2 },
            jumps: LevyJumpSpec { c_plus: 0.028, c_minus: 0.028, g_temper: 2.318, m_temper: 4.025, y_index: 1.25 },
            jump_free: false,
            chi: 1.0,
            drift_b: 0.0,
        }
    }
}

impl ModelSection {
    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            diffusion: self.diffusion,
            jumps: if self.jump_free { None } else { Some(self.jumps) },
            chi: self.chi,
            drift_b: self.drift_b,
        }
    }
}

/// One experiment cell. Unset fields inherit from `[model]`; `y` and
/// `sigma` are shorthands for the jump index and a constant volatility.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jumps: Option<LevyJumpSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_free: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltSection {
    /// Estimator whose errors are normalized; defaults to the last one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    pub bins: usize,
    /// Histogram covers `[-range, range]`.
    pub range: f64,
}

impl Default for CltSection {
    fn default() -> Self {
        Self { estimator: None, bins: 40, range: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DailySection {
    /// One-based days reported individually; empty reports every day.
    pub days: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Allowed distance between fitted and theoretical order.
    pub band: f64,
    #[serde(rename = "case")]
    pub cases: Vec<OracleCase>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { band: 0.25, cases: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCase {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub c_plus: f64,
    pub c_minus: f64,
    pub y: f64,
    pub sigma: f64,
    pub k: u32,
    pub omega: f64,
    pub h_values: Vec<f64>,
}

impl Default for OracleCase {
    fn default() -> Self {
        Self {
            name: None,
            c_plus: 0.5,
            c_minus: 0.5,
            y: 1.5,
            sigma: 0.3,
            k: 1,
            omega: 5.0 / 12.0,
            h_values: (14..=22).map(|e| 2f64.powi(-e)).collect(),
        }
    }
}

impl OracleCase {
    pub fn model(&self) -> OracleModel {
        OracleModel { c_plus: self.c_plus, c_minus: self.c_minus, y: self.y, sigma: self.sigma }
    }
}

/// Fully resolved experiment cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub name: String,
    pub experiment: ExperimentConfig,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Reads a TOML config, or the resolved config inside a JSON manifest.
pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Replay {
            resolved_config: RunConfig,
        }
        let r: Replay =
            serde_json::from_str(&text).map_err(|e| err(format!("{}: not a run manifest: {e}", path.display())))?;
        Ok(r.resolved_config)
    } else {
        toml::from_str(&text).map_err(|e| err(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    /// Fills every default so the result can be replayed on its own.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        if self.estimators.is_empty() {
            self.estimators = vec![
                NamedEstimator::new("trqv", EstimatorKind::Trqv, EstimatorConfig::default()),
                NamedEstimator::new("pb", EstimatorKind::Pb, EstimatorConfig::default()),
                NamedEstimator::new("nb", EstimatorKind::Nb, EstimatorConfig::default()),
            ];
        }
        if self.cells.is_empty() {
            self.cells.push(CellSection { name: Some("default".into()), ..Default::default() });
        }
        let mut names = std::collections::BTreeSet::new();
        let mut cells = Vec::with_capacity(self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            let m = self.cell_model(i, c)?;
            let name = c.name.clone().unwrap_or_else(|| format!("cell{}", i + 1));
            if !names.insert(name.clone()) {
                return Err(err(format!("cell {}: duplicate name `{name}`", i + 1)));
            }
            cells.push(CellSection {
                name: Some(name),
                y: None,
                sigma: None,
                diffusion: Some(m.diffusion),
                jumps: Some(m.jumps),
                jump_free: Some(m.jump_free),
            });
        }
        self.cells = cells;
        if self.clt.estimator.is_none() {
            self.clt.estimator = self.estimators.last().map(|e| e.name.clone());
        }
        if self.oracle.cases.is_empty() {
            self.oracle.cases.push(OracleCase::default());
        }
        for (i, c) in self.oracle.cases.iter_mut().enumerate() {
            if c.name.is_none() {
                c.name = Some(format!("case{}", i + 1));
            }
        }
        Ok(self)
    }

    fn cell_model(&self, i: usize, c: &CellSection) -> Result<ModelSection, ConfigError> {
        let mut m = self.model.clone();
        if let Some(d) = c.diffusion {
            m.diffusion = d;
        }
        if let Some(j) = c.jumps {
            m.jumps = j;
        }
        if let Some(y) = c.y {
            m.jumps.y_index = y;
        }
        if let Some(s) = c.sigma {
            match m.diffusion {
                DiffusionSpec::Constant { .. } => m.diffusion = DiffusionSpec::Constant { sigma: s },
                DiffusionSpec::Heston { .. } => {
                    return Err(err(format!("cell {}: `sigma` needs a constant diffusion", i + 1)));
                }
            }
        }
        if let Some(f) = c.jump_free {
            m.jump_free = f;
        }
        Ok(m)
    }

    /// Experiment configurations of every cell; `self` must be resolved.
    pub fn cells(&self) -> Result<Vec<Cell>, ConfigError> {
        let e = &self.experiment;
        let grid = GridSpec::new(e.horizon, e.n_steps).map_err(|x| err(format!("[experiment]: {x}")))?;
        self.cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let name = c.name.clone().unwrap_or_default();
                let model = self.cell_model(i, c)?.spec();
                let experiment = ExperimentConfig {
                    model,
                    grid,
                    blocks: e.blocks,
                    paths: e.paths,
                    estimators: self.estimators.clone(),
                    master_seed: e.seed,
                    workers: e.threads,
                    substeps: e.substeps,
                    tau: e.tau,
                };
                experiment.validate().map_err(|x| err(format!("cell `{name}`: {x}")))?;
                Ok(Cell { name, experiment })
            })
            .collect()
    }
}
