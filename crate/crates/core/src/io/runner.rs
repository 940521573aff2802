use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{Emit, ModeConfig, RawConfig, RunConfig};
use super::record::{read_trajectory, write_trajectory_to, SerializedTrajectory};
use super::stats::{fmt_f64, sidecar_path, write_json_line, write_stats};
use super::CliError;
use crate::control::{counter_hamiltonian_check, effective_hamiltonian_mpp, most_probable_path, run_freeze};
use crate::qstate::HermitianOperator;
use crate::reconstruction::kernel_space_basis;
use crate::trajectory::{
    dual_axis_trajectory, oscillator_trajectory, position_variance_law, run_ensemble, run_trajectory, TrajectoryRecord,
};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Human-readable notes for stderr.
    pub notes: Vec<String>,
}

struct Sink<'a> {
    out: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    summary: RunSummary,
}

impl Sink<'_> {
    /// Writes the primary artifact to `--out`, or to stdout.
    fn primary(&mut self, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        match self.out.clone() {
            Some(path) => {
                self.file(&path, write)?;
            }
            None => write(self.stdout).map_err(|e| CliError::io("<stdout>", e))?,
        }
        Ok(())
    }

    fn file(&mut self, path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        write(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
        self.summary.files.push(path.to_path_buf());
        Ok(())
    }

    /// Secondary artifact at `<out><suffix>`; skipped with a note without `--out`.
    fn secondary(
        &mut self,
        suffix: &str,
        write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<Option<PathBuf>, CliError> {
        let Some(out) = self.out.clone() else {
            self.summary.notes.push(format!("`{suffix}` output needs --out; skipped"));
            return Ok(None);
        };
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(suffix);
        let path = out.with_file_name(name);
        self.file(&path, write)?;
        Ok(Some(path))
    }

    fn sidecar(&mut self, csv: &Path, value: &serde_json::Value) -> Result<(), CliError> {
        let path = sidecar_path(csv);
        write_json_line(value, &path)?;
        self.summary.files.push(path);
        Ok(())
    }
}

fn csv_line(w: &mut dyn Write, fields: &[String]) -> std::io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn header_json(cfg: &RunConfig, schema: &str) -> serde_json::Value {
    json!({ "schema": schema, "seed": cfg.seed, "config": cfg.echo })
}

fn write_record(sink: &mut Sink, record: &TrajectoryRecord, echo: &RawConfig) -> Result<(), CliError> {
    let traj = SerializedTrajectory::from_record(record, echo);
    sink.primary(|w| write_trajectory_to(&traj, w))
}

fn population_plot(
    sink: &mut Sink,
    cfg: &RunConfig,
    record: &TrajectoryRecord,
    x_readouts: Option<&[f64]>,
) -> Result<(), CliError> {
    let dim = record.samples.first().map_or(0, |s| s.state.dim());
    let written = sink.secondary(".plot.csv", |w| {
        let mut head = vec!["t".to_string(), "r".to_string()];
        if x_readouts.is_some() {
            head.push("r_x".into());
        }
        head.extend((0..dim).map(|i| format!("pop_{i}")));
        csv_line(w, &head)?;
        for (k, s) in record.samples.iter().enumerate() {
            let mut row = vec![fmt_f64(s.t), opt(s.readout.map(|r| r.r))];
            if let Some(xr) = x_readouts {
                row.push(opt(k.checked_sub(1).and_then(|j| xr.get(j).copied())));
            }
            row.extend(s.state.populations().into_iter().map(fmt_f64));
            csv_line(w, &row)?;
        }
        Ok(())
    })?;
    if let Some(path) = written {
        sink.sidecar(&path, &header_json(cfg, "collapse-lab.plot/1"))?;
    }
    Ok(())
}

/// Executes a parsed configuration. The primary output goes to `--out` or,
/// without it, to `stdout`.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<RunSummary, CliError> {
    let mut sink = Sink { out: cfg.out.clone(), stdout, summary: RunSummary::default() };
    match &cfg.params {
        ModeConfig::Simulate { measurement, initial, stop } => {
            let mut record = run_trajectory(initial, measurement, cfg.seed, *stop)?;
            if cfg.emits(Emit::Reconstruction) {
                record.reconstruct()?;
            }
            if cfg.emits(Emit::Trajectory) || cfg.emits(Emit::Reconstruction) {
                write_record(&mut sink, &record, &cfg.echo)?;
            }
            if cfg.emits(Emit::Plotdata) {
                population_plot(&mut sink, cfg, &record, None)?;
            }
            sink.summary.notes.push(match record.outcome {
                Some(i) => format!("collapsed to {i} at t = {}", record.duration()),
                None => format!("no collapse by t = {}", record.duration()),
            });
        }
        ModeConfig::Ensemble { measurement, initial, stop, trajectories } => {
            let stats = run_ensemble(initial, measurement, *trajectories, cfg.seed, *stop)?;
            let path = cfg.out.as_ref().expect("validated: ensemble needs --out");
            write_stats(&stats, &cfg.echo, path)?;
            sink.summary.files.push(path.clone());
            sink.summary.files.push(sidecar_path(path));
            sink.summary.notes.push(format!("frequencies {:?}", stats.frequencies()));
        }
        ModeConfig::Reconstruct { input } => {
            let source = read_trajectory(input)?;
            let mut record = source.to_record()?;
            record.reconstruct()?;
            let traj = SerializedTrajectory::from_record(&record, &source.header.config);
            sink.primary(|w| write_trajectory_to(&traj, w))?;
        }
        ModeConfig::Oscillator(osc) => {
            let run = oscillator_trajectory(osc)?;
            let v0 = osc.grid.ground_variance();
            let max_rel = run
                .moments
                .iter()
                .map(|m| (m.variance / position_variance_law(v0, osc.tau, m.t) - 1.0).abs())
                .fold(0.0, f64::max);
            let write_plot = |w: &mut dyn Write| {
                csv_line(w, &["t", "mean", "variance", "variance_law", "excess_kurtosis"].map(String::from))?;
                for m in &run.moments {
                    let law = position_variance_law(v0, osc.tau, m.t);
                    csv_line(w, &[m.t, m.mean, m.variance, law, m.excess_kurtosis].map(fmt_f64))?;
                }
                Ok(())
            };
            sink.primary(write_plot)?;
            if let Some(path) = cfg.out.clone() {
                let mut side = header_json(cfg, "collapse-lab.oscillator/1");
                side["max_relative_variance_error"] = json!(max_rel);
                sink.sidecar(&path, &side)?;
            }
            if cfg.emits(Emit::Trajectory) {
                let traj = SerializedTrajectory::from_record(&run.record, &cfg.echo);
                sink.secondary(".trajectory.jsonl", |w| write_trajectory_to(&traj, w))?;
            }
            sink.summary.notes.push(format!("max relative deviation from the variance law {max_rel:e}"));
        }
        ModeConfig::Mpp { params, dt, integrator } => {
            let steps = (params.duration / dt).round().max(1.0) as usize;
            let worked = effective_hamiltonian_mpp(params, 0.0).is_ok();
            let mut rows = Vec::with_capacity(steps + 1);
            for k in 0..=steps {
                let t = (k as f64 * params.duration / steps as f64).min(params.duration);
                let v = most_probable_path(params, t)?;
                let variance = if worked { Some(effective_hamiltonian_mpp(params, t)?.variance) } else { None };
                rows.push([fmt_f64(t), fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z), opt(variance)]);
            }
            sink.primary(|w| {
                csv_line(w, &["t", "x", "y", "z", "variance"].map(String::from))?;
                rows.iter().try_for_each(|r| csv_line(w, r))
            })?;
            let mut side = header_json(cfg, "collapse-lab.mpp/1");
            side["mean_readout"] = json!(params.mean_readout()?);
            if worked {
                let report = counter_hamiltonian_check(params, *dt, *integrator)?;
                side["counter"] = serde_json::to_value(&report).expect("plain data");
            }
            if let Some(path) = cfg.out.clone() {
                sink.sidecar(&path, &side)?;
            }
        }
        ModeConfig::Freeze { measurement, initial, steps, control } => {
            let h_s = HermitianOperator::zeros(initial.dim());
            let run = run_freeze(initial, &h_s, measurement, cfg.seed, *steps, *control)?;
            let a = run.final_state.amplitudes();
            let mut doc = header_json(cfg, "collapse-lab.freeze/1");
            doc["max_drift"] = json!(run.max_drift);
            doc["max_population"] = json!(run.max_population);
            doc["collapsed"] = json!(run.collapsed);
            doc["steps"] = json!(run.steps);
            doc["final_re"] = json!(a.iter().map(|z| z.re).collect::<Vec<_>>());
            doc["final_im"] = json!(a.iter().map(|z| z.im).collect::<Vec<_>>());
            sink.primary(|w| {
                serde_json::to_writer(&mut *w, &doc)?;
                w.write_all(b"\n")
            })?;
        }
        ModeConfig::Kernel { initial } => {
            let space = kernel_space_basis(initial)?;
            let basis: Vec<serde_json::Value> = space
                .basis
                .iter()
                .map(|t| {
                    let m = t.matrix();
                    let rows = |f: fn(&crate::C64) -> f64| -> Vec<Vec<f64>> {
                        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
                    };
                    json!({ "re": rows(|z| z.re), "im": rows(|z| z.im) })
                })
                .collect();
            let mut doc = header_json(cfg, "collapse-lab.kernel/1");
            doc["dimension"] = json!(space.dimension);
            doc["claimed_dimension"] = json!(space.claimed_dimension);
            doc["basis"] = json!(basis);
            sink.primary(|w| {
                serde_json::to_writer(&mut *w, &doc)?;
                w.write_all(b"\n")
            })?;
            sink.summary.notes.push(format!(
                "kernel dimension {} (parameter count n^2 - n = {})",
                space.dimension, space.claimed_dimension
            ));
        }
        ModeConfig::Dualaxis { measurement, x_measurement, initial, t_max } => {
            let dual = dual_axis_trajectory(initial, measurement, x_measurement.as_ref(), cfg.seed, *t_max)?;
            if cfg.emits(Emit::Trajectory) {
                write_record(&mut sink, &dual.record, &cfg.echo)?;
            }
            if cfg.emits(Emit::Plotdata) {
                let xr: Vec<f64> = dual.x_readouts.iter().map(|r| r.r).collect();
                population_plot(&mut sink, cfg, &dual.record, x_measurement.as_ref().map(|_| xr.as_slice()))?;
            }
        }
    }
    if cfg.emits(Emit::Stats) && !matches!(cfg.params, ModeConfig::Ensemble { .. }) {
        sink.summary.notes.push("`stats` output only applies to ensemble mode; ignored".into());
    }
    Ok(sink.summary)
}
