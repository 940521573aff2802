use crate::measurement::{apply_measurement, log_sum_exp, readout_log_likelihood, sample_readout};
use crate::measurement::{GaussianMeasurementConfig, Readout};
use crate::qstate::{normalize, QuantumState};
use crate::{rng, Error, Result, Tolerances};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Observer's description of a state prepared by mixing pure members.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedEnsemble {
    weights: Vec<f64>,
    states: Vec<QuantumState>,
}

impl MixedEnsemble {
    /// Validates weights (non-negative, summing to one) and orthonormal members.
    pub fn new(members: Vec<(f64, QuantumState)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidConfig("mixed ensemble needs at least one member".into()));
        }
        let (weights, states): (Vec<f64>, Vec<QuantumState>) = members.into_iter().unzip();
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidConfig("ensemble weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidConfig(format!("ensemble weights sum to {total}, not 1")));
        }
        let dim = states[0].dim();
        for (i, a) in states.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.dim() });
            }
            if !a.is_normalized() {
                return Err(Error::InvalidConfig(format!("member {i} is not normalized")));
            }
            for (j, b) in states.iter().enumerate().skip(i + 1) {
                if a.inner(b).norm() > ORTHOGONALITY_TOL {
                    return Err(Error::InvalidConfig(format!("members {i} and {j} are not orthogonal")));
                }
            }
        }
        Ok(Self { weights, states })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[QuantumState] {
        &self.states
    }

    /// `Tr rho^2` of `rho = sum_i p_i |psi_i><psi_i|`.
    pub fn purity(&self) -> f64 {
        let mut total = 0.0;
        for (i, a) in self.states.iter().enumerate() {
            for (j, b) in self.states.iter().enumerate() {
                total += self.weights[i] * self.weights[j] * a.inner(b).norm_sqr();
            }
        }
        total
    }

    /// Index and value of the largest weight.
    pub fn leading(&self) -> (usize, f64) {
        self.weights.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }
}

/// Updates every member with the shared readout and reweights by
/// `p_i' ∝ p_i P(r | psi_i)`. Members whose branch vanishes keep their state
/// and get weight zero.
pub fn bayesian_mixed_update(
    ensemble: &MixedEnsemble,
    r: &Readout,
    cfg: &GaussianMeasurementConfig,
) -> Result<MixedEnsemble> {
    let mut log_w = Vec::with_capacity(ensemble.weights.len());
    let mut states = Vec::with_capacity(ensemble.states.len());
    for (&p, state) in ensemble.weights.iter().zip(&ensemble.states) {
        let ll = readout_log_likelihood(state, r.r, cfg)?;
        log_w.push(if p > 0.0 { p.ln() + ll } else { f64::NEG_INFINITY });
        states.push(match apply_measurement(state, r, cfg) {
            Ok(s) => s,
            Err(Error::VanishingBranch { .. }) => {
                *log_w.last_mut().expect("just pushed") = f64::NEG_INFINITY;
                state.clone()
            }
            Err(e) => return Err(e),
        });
    }
    let log_total = log_sum_exp(&log_w);
    if !(log_total >= Tolerances::DEFAULT.zero_norm.ln()) {
        return Err(Error::AllWeightsVanish { r: r.r });
    }
    let weights = log_w.iter().map(|l| (l - log_total).exp()).collect();
    Ok(MixedEnsemble { weights, states })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedRun {
    /// Member actually realized, drawn once from the initial weights.
    pub true_index: usize,
    /// Observer weights after each step, starting with the initial weights.
    pub weight_series: Vec<Vec<f64>>,
    pub final_ensemble: MixedEnsemble,
}

/// Simulates `steps` readouts drawn from the true member and tracks the
/// observer's ensemble.
pub fn run_mixed(
    ensemble: &MixedEnsemble,
    cfg: &GaussianMeasurementConfig,
    seed: u64,
    steps: usize,
) -> Result<MixedRun> {
    let mut rng = rng::stream(seed);
    let true_index = rng::categorical(&mut rng, &ensemble.weights);
    let mut truth = normalize(&ensemble.states[true_index])?;
    let mut current = ensemble.clone();
    let mut weight_series = vec![current.weights.clone()];
    for k in 1..=steps {
        let r = sample_readout(&truth, cfg, k as f64 * cfg.dt(), &mut rng);
        truth = apply_measurement(&truth, &r, cfg)?;
        current = bayesian_mixed_update(&current, &r, cfg)?;
        weight_series.push(current.weights.clone());
    }
    Ok(MixedRun { true_index, weight_series, final_ensemble: current })
}
