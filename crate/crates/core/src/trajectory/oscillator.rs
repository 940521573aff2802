use serde::{Deserialize, Serialize};

use super::{StopCondition, TrajectoryRecord};
use crate::measurement::{GaussianMeasurementConfig, PositionGridConfig};
use crate::qstate::{GridSpec, QuantumState};
use crate::{rng, Error, Result};

// Largest allowed fractional variance change per step.
const MAX_STEP_SHRINK: f64 = 0.1;
// Population at either grid edge above which the posterior counts as truncated.
const EDGE_POPULATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorRunConfig {
    pub grid: PositionGridConfig,
    pub x0: f64,
    pub tau: f64,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
}

impl OscillatorRunConfig {
    /// 512-point grid spanning `x0 +- 8` with `m = omega = 1`.
    pub fn standard(x0: f64, tau: f64, dt: f64, t_max: f64, seed: u64) -> Self {
        Self { grid: PositionGridConfig::centered(x0, 8.0, 512, 1.0, 1.0), x0, tau, dt, t_max, seed }
    }

    fn validate(&self) -> Result<()> {
        let outside = self.grid.mass_outside(self.x0);
        self.grid.validate(self.x0).map_err(|e| match e {
            Error::InvalidConfig(msg) if msg.contains("span") => Error::GridTooNarrow(outside),
            other => other,
        })?;
        if outside > EDGE_POPULATION {
            return Err(Error::GridTooNarrow(outside));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidConfig("t_max must be non-negative".into()));
        }
        let shrink = self.dt * self.grid.ground_variance() / self.tau;
        if !(shrink <= MAX_STEP_SHRINK) {
            return Err(Error::InvalidConfig(format!(
                "dt * variance / tau = {shrink} exceeds {MAX_STEP_SHRINK}; reduce dt"
            )));
        }
        Ok(())
    }
}

/// Position moments of `|psi(x)|^2` on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    pub excess_kurtosis: f64,
}

impl GaussianMoments {
    pub fn of(state: &QuantumState, grid: &GridSpec, t: f64) -> Self {
        let p = state.populations();
        let xs = grid.points();
        let mean: f64 = p.iter().zip(&xs).map(|(p, x)| p * x).sum();
        let central = |k: i32| p.iter().zip(&xs).map(|(p, x)| p * (x - mean).powi(k)).sum::<f64>();
        let variance = central(2);
        Self { t, mean, variance, excess_kurtosis: central(4) / (variance * variance) - 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorRun {
    pub record: TrajectoryRecord,
    pub moments: Vec<GaussianMoments>,
}

/// `Var X(t) = v0 tau / (v0 t + tau)` for continuous position measurement of
/// a Gaussian with initial variance `v0` and no dynamics.
pub fn position_variance_law(v0: f64, tau: f64, t: f64) -> f64 {
    v0 * tau / (v0 * t + tau)
}

/// Repeated position measurement of the oscillator ground state centered on
/// `x0`, discretized on the configured grid.
pub fn oscillator_trajectory(cfg: &OscillatorRunConfig) -> Result<OscillatorRun> {
    cfg.validate()?;
    let spec = cfg.grid.spec();
    let mcfg = GaussianMeasurementConfig::for_grid(cfg.tau, cfg.dt, &spec)?;
    let initial = cfg.grid.ground_state(cfg.x0)?;
    let record = super::run_with_rng(
        &initial,
        &mcfg,
        cfg.seed,
        StopCondition::fixed_time(cfg.t_max),
        &mut rng::stream(cfg.seed),
    )?;
    let mut moments = Vec::with_capacity(record.samples.len());
    for sample in &record.samples {
        let p = sample.state.populations();
        let edge = p[0].max(p[p.len() - 1]);
        if edge > EDGE_POPULATION {
            return Err(Error::GridTooNarrow(edge));
        }
        moments.push(GaussianMoments::of(&sample.state, &spec, sample.t));
    }
    Ok(OscillatorRun { record, moments })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_moments() {
        let cfg = OscillatorRunConfig::standard(0.0, 1.0, 1e-3, 0.0, 1);
        let run = oscillator_trajectory(&cfg).unwrap();
        assert_eq!(run.moments.len(), 1);
        let m = run.moments[0];
        assert!((m.variance - 0.5).abs() < 1e-10);
        assert!(m.mean.abs() < 1e-12);
        assert!(m.excess_kurtosis.abs() < 1e-8);
    }

    #[test]
    fn variance_follows_law() {
        let cfg = OscillatorRunConfig::standard(0.0, 1.0, 1e-3, 2.0, 11);
        let run = oscillator_trajectory(&cfg).unwrap();
        for m in &run.moments {
            let law = position_variance_law(0.5, 1.0, m.t);
            assert!((m.variance / law - 1.0).abs() < 0.01, "t={} var={} law={}", m.t, m.variance, law);
            assert!(m.excess_kurtosis.abs() < 0.01);
        }
        let at_one = run.moments.iter().find(|m| (m.t - 1.0).abs() < 1e-9).unwrap();
        assert!((at_one.variance - 1.0 / 3.0).abs() < 1.0 / 300.0);
    }

    #[test]
    fn narrow_grid_rejected() {
        let mut cfg = OscillatorRunConfig::standard(0.0, 1.0, 1e-3, 1.0, 1);
        cfg.grid = PositionGridConfig::centered(0.0, 3.0, 512, 1.0, 1.0);
        assert!(matches!(oscillator_trajectory(&cfg), Err(Error::GridTooNarrow(_))));
        cfg.grid = PositionGridConfig::centered(0.0, 8.0, 512, 1.0, 1.0);
        cfg.x0 = 6.0;
        assert!(matches!(oscillator_trajectory(&cfg), Err(Error::GridTooNarrow(_))));
    }

    #[test]
    fn coarse_step_rejected() {
        let cfg = OscillatorRunConfig::standard(0.0, 1.0, 0.5, 1.0, 1);
        assert!(matches!(oscillator_trajectory(&cfg), Err(Error::InvalidConfig(_))));
    }
}
