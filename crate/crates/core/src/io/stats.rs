use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CliError, RawConfig};
use crate::trajectory::EnsembleStats;

pub const STATS_SCHEMA: &str = "collapse-lab.stats/1";

/// Contents of the `.summary.json` sidecar written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSummary {
    pub schema: String,
    pub seed: u64,
    pub config: RawConfig,
    pub n_trajectories: usize,
    pub n_collapsed: usize,
    pub mean_collapse_time: Option<f64>,
}

/// `<path>.summary.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".summary.json");
    path.with_file_name(name)
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn write_json_line<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn write_stats_csv<W: Write>(stats: &EnsembleStats, w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    out.write_record(["outcome_index", "count", "frequency"])?;
    for (i, (count, freq)) in stats.outcome_counts.iter().zip(stats.frequencies()).enumerate() {
        out.write_record([i.to_string(), count.to_string(), fmt_f64(freq)])?;
    }
    let dim = stats.outcome_counts.len();
    let header: Vec<String> =
        std::iter::once("time".to_string()).chain((0..dim).map(|i| format!("mean_pop_{i}"))).collect();
    out.write_record(&header)?;
    for (t, pops) in stats.times.iter().zip(&stats.mean_population_series) {
        out.write_record(std::iter::once(fmt_f64(*t)).chain(pops.iter().map(|&p| fmt_f64(p))))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the two-section CSV (outcomes, then mean populations over time) and
/// the summary sidecar.
pub fn write_stats(stats: &EnsembleStats, config: &RawConfig, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_stats_csv(stats, BufWriter::new(file))
        .map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    let summary = StatsSummary {
        schema: STATS_SCHEMA.to_string(),
        seed: stats.base_seed,
        config: config.clone(),
        n_trajectories: stats.n_trajectories,
        n_collapsed: stats.n_collapsed(),
        mean_collapse_time: stats.mean_collapse_time,
    };
    write_json_line(&summary, &sidecar_path(path))
}
