use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::linalg::{rk4_step, trace_distance, unitary};
use crate::qstate::HermitianOperator;
use crate::{Error, Result, Tolerances, C64};

/// Boundary data for the most probable path of a qubit monitored along z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MostProbablePathParams {
    pub x_i: f64,
    pub y_i: f64,
    pub z_i: f64,
    pub z_f: f64,
    /// Path duration `T`.
    pub duration: f64,
    /// `sigma_z` drive strength.
    pub epsilon: f64,
    pub tau: f64,
    /// `sigma_x` drive; the closed forms require it to vanish.
    pub delta: f64,
}

impl MostProbablePathParams {
    /// Starts on `(1, 0, 0)`.
    pub fn from_equator(z_f: f64, duration: f64, epsilon: f64, tau: f64) -> Self {
        Self { x_i: 1.0, y_i: 0.0, z_i: 0.0, z_f, duration, epsilon, tau, delta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let r = (self.x_i * self.x_i + self.y_i * self.y_i + self.z_i * self.z_i).sqrt();
        let checks = [
            (self.duration > 0.0, "duration must be positive"),
            (self.tau > 0.0, "tau must be positive"),
            (self.z_f.abs() < 1.0, "|z_F| must be below 1"),
            (r <= 1.0 + 1e-12, "initial Bloch vector must lie in the unit ball"),
            (self.delta == 0.0, "closed forms require delta = 0"),
            (self.epsilon.is_finite(), "epsilon must be finite"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidConfig((*msg).into())),
            None => Ok(()),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::InvalidConfig(format!("t = {t} outside [0, {}]", self.duration)));
        }
        Ok(())
    }

    /// Mean readout along the path, `(tau/T) atanh((z_I - z_F)/(z_I z_F - 1))`.
    pub fn mean_readout(&self) -> Result<f64> {
        let denom = self.z_i * self.z_f - 1.0;
        if denom.abs() < Tolerances::DEFAULT.degenerate_endpoint {
            return Err(Error::DegenerateEndpoint);
        }
        let arg = (self.z_i - self.z_f) / denom;
        if !(arg.abs() < 1.0) {
            return Err(Error::DegenerateEndpoint);
        }
        Ok(self.tau / self.duration * arg.atanh())
    }
}

/// Bloch vector of the most probable path at time `t`.
pub fn most_probable_path(params: &MostProbablePathParams, t: f64) -> Result<Vector3<f64>> {
    params.validate()?;
    params.check_time(t)?;
    let p = params;
    let big_r = p.mean_readout()? * t / p.tau;
    let (ch, sh) = (big_r.cosh(), big_r.sinh());
    let d = ch + p.z_i * sh;
    let (c, s) = ((p.epsilon * t).cos(), (p.epsilon * t).sin());
    Ok(Vector3::new((p.x_i * c - p.y_i * s) / d, (p.y_i * c + p.x_i * s) / d, (p.z_i * ch + sh) / d))
}

/// `(I + x sigma_x + y sigma_y + z sigma_z) / 2`.
pub fn bloch_density(v: &Vector3<f64>) -> DMatrix<C64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.5 * (1.0 + v.z), 0.0),
            C64::new(0.5 * v.x, -0.5 * v.y),
            C64::new(0.5 * v.x, 0.5 * v.y),
            C64::new(0.5 * (1.0 - v.z), 0.0),
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonianSample {
    pub t: f64,
    pub h_eff: HermitianOperator,
    /// Energy variance of `h_eff` on the path state at `t`.
    pub variance: f64,
}

fn is_equator_start(p: &MostProbablePathParams) -> bool {
    (p.x_i - 1.0).abs() <= 1e-12 && p.y_i.abs() <= 1e-12 && p.z_i.abs() <= 1e-12
}

// Unchecked evaluation; callers validate params and t.
fn h_eff_matrix(p: &MostProbablePathParams, t: f64) -> DMatrix<C64> {
    let big_t = p.duration;
    let a = p.z_f.atanh();
    let alpha = t / big_t * a;
    let sech = 1.0 / alpha.cosh();
    let diag = 0.5 * p.epsilon * sech * sech;
    let phase = C64::from_polar(1.0, -p.epsilon * t);
    let h12 = C64::new(0.0, 1.0) * phase / (2.0 * big_t) * C64::new(a, big_t * p.epsilon * alpha.tanh()) * sech;
    DMatrix::from_row_slice(2, 2, &[C64::new(diag, 0.0), h12, h12.conj(), C64::new(-diag, 0.0)])
}

/// Effective Hamiltonian that generates the most probable path from `(1, 0, 0)`:
/// `H11 = -H22 = (eps/2) sech^2 alpha`,
/// `H12 = (i e^{-i eps t} / 2T)(atanh z_F + i T eps tanh alpha) sech alpha`,
/// with `alpha = (t/T) atanh z_F`.
pub fn effective_hamiltonian_mpp(params: &MostProbablePathParams, t: f64) -> Result<EffectiveHamiltonianSample> {
    params.validate()?;
    params.check_time(t)?;
    if !is_equator_start(params) {
        return Err(Error::OutsideWorkedCase);
    }
    let big_t = params.duration;
    let a = params.z_f.atanh();
    let sech = 1.0 / (t / big_t * a).cosh();
    let variance = (big_t * big_t * params.epsilon * params.epsilon + a * a) * sech * sech / (4.0 * big_t * big_t);
    Ok(EffectiveHamiltonianSample { t, h_eff: HermitianOperator::new(h_eff_matrix(params, t))?, variance })
}

/// Variance of `h` in the state with Bloch vector `v`, computed from the
/// density matrix.
pub fn numerical_variance(h: &HermitianOperator, v: &Vector3<f64>) -> Result<f64> {
    let rho = HermitianOperator::new(bloch_density(v))?;
    let mean = (rho.matrix() * h.matrix()).trace().re;
    let sq = (rho.matrix() * h.matrix() * h.matrix()).trace().re;
    Ok(sq - mean * mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta on the density matrix.
    Rk4,
    /// Midpoint exponential `U = exp(-i H(t + dt/2) dt)`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterReport {
    /// Max trace distance from the initial state under `H_eff - H_eff`.
    pub stationary_distance: f64,
    /// Max trace distance between the `H_eff`-propagated state and the path.
    pub tracking_distance: f64,
    /// Bloch vector of the `H_eff`-propagated state at `T`.
    pub endpoint: [f64; 3],
    pub steps: usize,
}

fn bloch_of(rho: &DMatrix<C64>) -> [f64; 3] {
    [2.0 * rho[(1, 0)].re, 2.0 * rho[(1, 0)].im, (rho[(0, 0)] - rho[(1, 1)]).re]
}

fn advance<F>(integrator: Integrator, h: &F, rho: &DMatrix<C64>, t: f64, dt: f64) -> Result<DMatrix<C64>>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    Ok(match integrator {
        Integrator::Rk4 => rk4_step(h, rho, t, dt),
        Integrator::Exponential => {
            let u = unitary(&HermitianOperator::new(h(t + 0.5 * dt))?, dt);
            &u * rho * u.adjoint()
        }
    })
}

/// Propagates the path's initial state twice: under `H_eff + (-H_eff)`, which
/// must leave it fixed, and under `H_eff` alone, which must follow the path.
pub fn counter_hamiltonian_check(
    params: &MostProbablePathParams,
    dt: f64,
    integrator: Integrator,
) -> Result<CounterReport> {
    params.validate()?;
    if !is_equator_start(params) {
        return Err(Error::OutsideWorkedCase);
    }
    if !(dt > 0.0 && dt <= params.duration) {
        return Err(Error::InvalidConfig(format!("dt = {dt} must lie in (0, T]")));
    }
    let big_t = params.duration;
    let clamp = |t: f64| t.clamp(0.0, big_t);
    let driven = |t: f64| h_eff_matrix(params, clamp(t));
    let cancelled = |t: f64| {
        let h = h_eff_matrix(params, clamp(t));
        &h + (-&h)
    };
    let rho0 = bloch_density(&most_probable_path(params, 0.0)?);
    let (mut frozen, mut moving) = (rho0.clone(), rho0.clone());
    let steps = (big_t / dt).round() as usize;
    let step = big_t / steps as f64;
    let (mut stationary_distance, mut tracking_distance): (f64, f64) = (0.0, 0.0);
    for k in 0..steps {
        let t = k as f64 * step;
        frozen = advance(integrator, &cancelled, &frozen, t, step)?;
        moving = advance(integrator, &driven, &moving, t, step)?;
        let target = bloch_density(&most_probable_path(params, clamp((k + 1) as f64 * step))?);
        stationary_distance = stationary_distance.max(trace_distance(&frozen, &rho0));
        tracking_distance = tracking_distance.max(trace_distance(&moving, &target));
    }
    Ok(CounterReport { stationary_distance, tracking_distance, endpoint: bloch_of(&moving), steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked(z_f: f64, epsilon: f64) -> MostProbablePathParams {
        MostProbablePathParams::from_equator(z_f, 1.0, epsilon, 1.0)
    }

    #[test]
    fn midpoint_value() {
        let z = most_probable_path(&worked(0.8, 0.0), 0.5).unwrap().z;
        assert!((z - 0.5).abs() < 1e-12, "z {z}");
    }

    #[test]
    fn degenerate_endpoints() {
        let mut p = worked(0.5, 0.0);
        p.x_i = 0.0;
        p.z_i = 1.0;
        assert_eq!(most_probable_path(&p, 0.1), Err(Error::DegenerateEndpoint));
        p.z_f = 0.999_999_999_999_9;
        assert_eq!(most_probable_path(&p, 0.1), Err(Error::DegenerateEndpoint));
    }

    #[test]
    fn invalid_params() {
        let mut p = worked(0.5, 0.0);
        p.delta = 0.1;
        assert!(most_probable_path(&p, 0.1).is_err());
        assert!(most_probable_path(&worked(1.0, 0.0), 0.1).is_err());
        assert!(most_probable_path(&worked(0.5, 0.0), 1.5).is_err());
    }

    #[test]
    fn stationary_path_has_zero_hamiltonian() {
        let s = effective_hamiltonian_mpp(&worked(0.0, 0.0), 0.3).unwrap();
        assert_eq!(s.h_eff.max_abs(), 0.0);
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn initial_variance() {
        let s = effective_hamiltonian_mpp(&worked(0.8, 0.0), 0.0).unwrap();
        let ln3 = 3f64.ln();
        assert!((s.variance - ln3 * ln3 / 4.0).abs() < 1e-14);
        assert!((s.variance - 0.30174).abs() < 1e-5);
    }

    #[test]
    fn worked_case_only() {
        let mut p = worked(0.5, 0.0);
        p.x_i = 0.6;
        p.z_i = 0.8;
        assert_eq!(effective_hamiltonian_mpp(&p, 0.0), Err(Error::OutsideWorkedCase));
        assert!(counter_hamiltonian_check(&p, 1e-3, Integrator::Rk4).is_err());
        assert!(most_probable_path(&p, 0.5).is_ok());
    }

    #[test]
    fn counter_hamiltonian_rk4() {
        let report = counter_hamiltonian_check(&worked(0.8, 0.0), 1e-4, Integrator::Rk4).unwrap();
        assert_eq!(report.stationary_distance, 0.0);
        assert!(report.tracking_distance < 1e-4);
        assert!((report.endpoint[2] - 0.8).abs() < 1e-4);
    }

    #[test]
    fn counter_hamiltonian_exponential() {
        let report = counter_hamiltonian_check(&worked(-0.6, 2.0), 1e-3, Integrator::Exponential).unwrap();
        assert_eq!(report.stationary_distance, 0.0);
        assert!(report.tracking_distance < 1e-4, "{}", report.tracking_distance);
    }

    #[test]
    fn larmor_rotation() {
        let p = worked(0.8, 1.0);
        let report = counter_hamiltonian_check(&p, 1e-4, Integrator::Rk4).unwrap();
        let azimuth = report.endpoint[1].atan2(report.endpoint[0]);
        assert!((azimuth - 1.0).abs() < 1e-4, "azimuth {azimuth}");
        let v = most_probable_path(&p, 0.25).unwrap();
        assert!((v.y.atan2(v.x) - 0.25).abs() < 1e-12);
    }

    fn valid_params() -> impl Strategy<Value = MostProbablePathParams> {
        (
            0.0..std::f64::consts::TAU,
            -1.0..1.0f64,
            0.0..0.999f64,
            -0.95..0.95f64,
            0.2..3.0f64,
            -2.0..2.0f64,
            0.2..3.0f64,
        )
            .prop_map(|(phi, cos_theta, radius, z_f, duration, epsilon, tau)| {
                let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
                MostProbablePathParams {
                    x_i: radius * sin_theta * phi.cos(),
                    y_i: radius * sin_theta * phi.sin(),
                    z_i: radius * cos_theta,
                    z_f,
                    duration,
                    epsilon,
                    tau,
                    delta: 0.0,
                }
            })
    }

    proptest! {
        #[test]
        fn boundary_identities(p in valid_params()) {
            let start = most_probable_path(&p, 0.0).unwrap();
            prop_assert_eq!(start, Vector3::new(p.x_i, p.y_i, p.z_i));
            let end = most_probable_path(&p, p.duration).unwrap();
            prop_assert!((end.z - p.z_f).abs() < 1e-12, "end {} vs {}", end.z, p.z_f);
        }

        #[test]
        fn heff_drives_path(z_f in -0.95..0.95f64, eps in -2.0..2.0f64, duration in 0.3..3.0f64, frac in 0.05..0.95f64) {
            let p = MostProbablePathParams::from_equator(z_f, duration, eps, 1.0);
            let t = frac * duration;
            let h = 1e-5;
            let d = (bloch_density(&most_probable_path(&p, t + h).unwrap())
                - bloch_density(&most_probable_path(&p, t - h).unwrap())) / C64::new(2.0 * h, 0.0);
            let rho = bloch_density(&most_probable_path(&p, t).unwrap());
            let hm = effective_hamiltonian_mpp(&p, t).unwrap().h_eff;
            let rhs = crate::linalg::von_neumann_rhs(hm.matrix(), &rho);
            prop_assert!((d - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-6);
        }

        #[test]
        fn variance_matches_density(z_f in -0.95..0.95f64, eps in -2.0..2.0f64, duration in 0.3..3.0f64, frac in 0.0..1.0f64) {
            let p = MostProbablePathParams::from_equator(z_f, duration, eps, 1.0);
            let t = frac * duration;
            let s = effective_hamiltonian_mpp(&p, t).unwrap();
            let numeric = numerical_variance(&s.h_eff, &most_probable_path(&p, t).unwrap()).unwrap();
            prop_assert!((numeric - s.variance).abs() <= 1e-8 * s.variance.max(1e-300) + 1e-15);
        }
    }
}
