use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_with_rng, StopCondition};
use crate::measurement::GaussianMeasurementConfig;
use crate::qstate::QuantumState;
use crate::rng::substream;
use crate::Result;

// Trajectories simulated per parallel batch; batches are reduced in index order.
const BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub base_seed: u64,
    pub n_trajectories: usize,
    /// Collapses per basis index.
    pub outcome_counts: Vec<usize>,
    pub times: Vec<f64>,
    /// `mean_population_series[k][i]` = ensemble mean of `|a_i|^2` at `times[k]`.
    /// Trajectories that stopped early contribute their final populations.
    pub mean_population_series: Vec<Vec<f64>>,
    /// Mean collapse time over collapsed trajectories, if any collapsed.
    pub mean_collapse_time: Option<f64>,
}

impl EnsembleStats {
    pub fn n_collapsed(&self) -> usize {
        self.outcome_counts.iter().sum()
    }

    /// Outcome frequencies among collapsed trajectories (all zero if none collapsed).
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.n_collapsed();
        self.outcome_counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect()
    }
}

struct Summary {
    populations: Vec<Vec<f64>>,
    outcome: Option<usize>,
    end_time: f64,
}

/// Runs `n` trajectories on substreams `0..n` of `base_seed` and aggregates
/// them. Uses the ambient rayon pool; the result does not depend on its size.
pub fn run_ensemble(
    initial: &QuantumState,
    cfg: &GaussianMeasurementConfig,
    n: usize,
    base_seed: u64,
    stop: StopCondition,
) -> Result<EnsembleStats> {
    if n == 0 {
        return Err(crate::Error::InvalidConfig("ensemble needs at least one trajectory".into()));
    }
    let dim = initial.dim();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    // tail[k] collects final populations of trajectories whose last sample is k - 1.
    let mut tail: Vec<Vec<f64>> = Vec::new();
    let mut outcome_counts = vec![0usize; dim];
    let mut collapse_time_sum = 0.0;

    for start in (0..n).step_by(BATCH) {
        let end = (start + BATCH).min(n);
        let batch: Vec<Result<Summary>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(base_seed, i as u64);
                let rec = run_with_rng(initial, cfg, base_seed, stop, &mut rng)?;
                Ok(Summary {
                    populations: rec.samples.iter().map(|s| s.state.populations()).collect(),
                    outcome: rec.outcome,
                    end_time: rec.duration(),
                })
            })
            .collect();
        for summary in batch {
            let summary = summary?;
            let len = summary.populations.len();
            if sums.len() < len {
                sums.resize(len, vec![0.0; dim]);
            }
            if tail.len() < len + 1 {
                tail.resize(len + 1, vec![0.0; dim]);
            }
            for (acc, p) in sums.iter_mut().zip(&summary.populations) {
                acc.iter_mut().zip(p).for_each(|(a, b)| *a += b);
            }
            let last = summary.populations.last().expect("non-empty");
            tail[len].iter_mut().zip(last).for_each(|(a, b)| *a += b);
            if let Some(i) = summary.outcome {
                outcome_counts[i] += 1;
                collapse_time_sum += summary.end_time;
            }
        }
    }

    let mut running = vec![0.0; dim];
    let mean_population_series = sums
        .iter()
        .enumerate()
        .map(|(k, s)| {
            running.iter_mut().zip(&tail[k]).for_each(|(a, b)| *a += b);
            s.iter().zip(&running).map(|(a, b)| (a + b) / n as f64).collect()
        })
        .collect();
    let times = (0..sums.len()).map(|k| k as f64 * cfg.dt()).collect();
    let n_collapsed: usize = outcome_counts.iter().sum();
    Ok(EnsembleStats {
        base_seed,
        n_trajectories: n,
        outcome_counts,
        times,
        mean_population_series,
        mean_collapse_time: (n_collapsed > 0).then(|| collapse_time_sum / n_collapsed as f64),
    })
}
