//! Run manifest written next to every command's outputs.

use crate::config::RunConfig;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub config_path: String,
    /// Every default filled in; `--config` accepts this file to replay the run.
    pub resolved_config: &'a RunConfig,
    pub git_describe: &'static str,
    pub seed: u64,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    pub errors: Vec<String>,
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub const GIT_DESCRIBE: &str = env!("TRV_GIT_DESCRIBE");

pub fn write(dir: &Path, manifest: &RunManifest<'_>) -> anyhow::Result<String> {
    let name = format!("{}_manifest.json", manifest.command);
    let file = std::fs::File::create(dir.join(&name))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), manifest)?;
    Ok(name)
}
