use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{CliError, RawConfig};
use crate::measurement::Readout;
use crate::qstate::{BasisKind, GridSpec, QuantumState};
use crate::reconstruction::TrajectorySample;
use crate::trajectory::TrajectoryRecord;
use crate::{Tolerances, C64};

pub const TRAJECTORY_SCHEMA: &str = "collapse-lab.trajectory/1";

/// First line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryHeader {
    pub schema: String,
    pub seed: u64,
    pub config: RawConfig,
    /// Present when amplitudes live on a position grid.
    pub grid: Option<GridSpec>,
    pub outcome: Option<usize>,
}

/// One time step. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRow {
    pub t: f64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub r: Option<f64>,
    #[serde(rename = "dH")]
    pub dh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerializedTrajectory {
    pub header: TrajectoryHeader,
    pub rows: Vec<TrajectoryRow>,
}

impl SerializedTrajectory {
    /// Rows carry `dH` when the record has been reconstructed.
    pub fn from_record(record: &TrajectoryRecord, config: &RawConfig) -> Self {
        let grid = record.samples.first().and_then(|s| match s.state.basis() {
            BasisKind::PositionGrid(g) => Some(g),
            BasisKind::Level => None,
        });
        let rows = record
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let a = s.state.amplitudes();
                TrajectoryRow {
                    t: s.t,
                    re: a.iter().map(|z| z.re).collect(),
                    im: a.iter().map(|z| z.im).collect(),
                    r: s.readout.map(|r| r.r),
                    dh: record.reconstructions.as_ref().map(|rs| rs[k].dh),
                }
            })
            .collect();
        let header = TrajectoryHeader {
            schema: TRAJECTORY_SCHEMA.to_string(),
            seed: record.seed,
            config: config.clone(),
            grid,
            outcome: record.outcome,
        };
        Self { header, rows }
    }

    /// Rebuilds the record; reconstructions are left for recomputation.
    pub fn to_record(&self) -> crate::Result<TrajectoryRecord> {
        let basis = self.header.grid.map_or(BasisKind::Level, BasisKind::PositionGrid);
        let samples = self
            .rows
            .iter()
            .map(|row| {
                let amps =
                    DVector::from_iterator(row.re.len(), row.re.iter().zip(&row.im).map(|(&a, &b)| C64::new(a, b)));
                let deviation = amps.norm_squared() - 1.0;
                if deviation.abs() > Tolerances::DEFAULT.stored_norm {
                    return Err(crate::Error::NotNormalized(deviation));
                }
                Ok(TrajectorySample {
                    t: row.t,
                    state: QuantumState::with_basis(amps, basis)?,
                    readout: row.r.map(|r| Readout::new(r, row.t)),
                })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        Ok(TrajectoryRecord { seed: self.header.seed, samples, reconstructions: None, outcome: self.header.outcome })
    }
}

fn line_error(line: usize, message: impl std::fmt::Display) -> String {
    format!("line {line}: {message}")
}

/// Parses a JSON-lines trajectory. A trailing newline is allowed; blank lines
/// elsewhere are not.
pub fn parse_trajectory<R: BufRead>(reader: R) -> Result<SerializedTrajectory, String> {
    let mut lines = reader.lines();
    let first = lines.next().ok_or("empty input")?.map_err(|e| line_error(1, e))?;
    let header: TrajectoryHeader = serde_json::from_str(&first).map_err(|e| line_error(1, e))?;
    if header.schema != TRAJECTORY_SCHEMA {
        return Err(line_error(1, format!("unsupported schema `{}`", header.schema)));
    }
    let mut rows: Vec<TrajectoryRow> = Vec::new();
    for (k, line) in lines.enumerate() {
        let n = k + 2;
        let line = line.map_err(|e| line_error(n, e))?;
        let row: TrajectoryRow = serde_json::from_str(&line).map_err(|e| line_error(n, e))?;
        if row.re.len() != row.im.len() || row.re.is_empty() {
            return Err(line_error(n, "re and im must be non-empty and of equal length"));
        }
        if let Some(prev) = rows.last() {
            if prev.re.len() != row.re.len() {
                return Err(line_error(n, "dimension changes between rows"));
            }
        }
        if let Some(g) = header.grid {
            if g.n != row.re.len() {
                return Err(line_error(n, "row dimension does not match the grid"));
            }
        }
        rows.push(row);
    }
    Ok(SerializedTrajectory { header, rows })
}

pub fn read_trajectory(path: &Path) -> Result<SerializedTrajectory, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_trajectory(BufReader::new(file)).map_err(|message| CliError::Parse { path: path.to_path_buf(), message })
}

/// Writes header and rows, one JSON object per line.
pub fn write_trajectory_to<W: Write>(traj: &SerializedTrajectory, mut w: W) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &traj.header)?;
    w.write_all(b"\n")?;
    for row in &traj.rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_trajectory(traj: &SerializedTrajectory, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_trajectory_to(traj, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}
