//! Acceptance gate. Each criterion prints one PASS/FAIL line with the
//! observed figure and the pinned tolerance; the process exits non-zero if
//! any gating criterion fails. Lines marked INFO are reported, not gated.

use std::path::Path;
use std::process::{Command, ExitCode};

use nalgebra::DVector;
use rand::Rng;

use collapse_lab::control::{
    counter_hamiltonian_check, effective_hamiltonian_mpp, freeze_feedback_step, most_probable_path, numerical_variance,
    run_freeze, Integrator, MostProbablePathParams,
};
use collapse_lab::io::{write_stats, write_trajectory_to, RawConfig, SerializedTrajectory};
use collapse_lab::linalg::propagate;
use collapse_lab::measurement::{GaussianMeasurementConfig, PositionGridConfig, Readout};
use collapse_lab::qstate::{bloch_decompose, density_from_pure, expectation, gellmann_basis};
use collapse_lab::reconstruction::{
    closed_form_nlevel_h, closed_form_position_h, closed_form_qubit_h, energy_uncertainty_position,
    energy_variance_nlevel, equivalent_hamiltonian, kernel_space_basis, measurement_step_hamiltonian,
    power_identity_check, reconstruct_hamiltonian,
};
use collapse_lab::rng::{standard_normal, stream, StreamRng};
use collapse_lab::trajectory::{
    oscillator_trajectory, position_variance_law, run_ensemble, run_trajectory, OscillatorRunConfig, StopCondition,
};
use collapse_lab::{HermitianOperator, QuantumState, C64};

// Tolerances, one block per criterion.
const C1_PIPELINE_DT: f64 = 1e-6;
const C1_ELEMENT_TOL: f64 = 1e-6;
const C2_DOT_TOL: f64 = 1e-10;
const C3_REL_TOL: f64 = 1e-6;
const C3_EXACT_TOL: f64 = 1e-12;
const C4_CUBE_TOL: f64 = 1e-10;
const C5_BORN_BAND: f64 = 0.031;
const C5_MARTINGALE_TOL: f64 = 0.025;
const C6_LAW_REL_TOL: f64 = 0.01;
const C6_KURTOSIS_TOL: f64 = 0.01;
const C6_DELTA_H_TOL: f64 = 1e-3;
const C7_LEAK_TOL: f64 = 1e-10;
const C7_OVERLAP_TOL: f64 = 1e-8;
const C8_EXACT_TOL: f64 = 1e-12;
const C8_TRACK_TOL: f64 = 1e-4;
const C8_VARIANCE_TOL: f64 = 1e-8;
const C9_DRIFT_TOL: f64 = 1e-5;
// Spread allowed in drift / (N dt^2) across three refinements.
const C9_ORDER_SPREAD: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn random_state(rng: &mut StreamRng, n: usize) -> QuantumState {
    let amps = (0..n).map(|_| C64::new(standard_normal(rng), standard_normal(rng))).collect();
    QuantumState::normalized(amps).unwrap()
}

fn random_vector(rng: &mut StreamRng, n: usize) -> DVector<C64> {
    DVector::from_fn(n, |_, _| C64::new(standard_normal(rng), standard_normal(rng)))
}

fn random_lambdas(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn criterion_1() -> Outcome {
    let mut rng = stream(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let psi = random_state(&mut rng, 2);
        let r = rng.random_range(-3.0..3.0);
        let tau = rng.random_range(0.5..2.0);
        let cfg = GaussianMeasurementConfig::new(tau, C1_PIPELINE_DT, vec![1.0, -1.0]).unwrap();
        let a = psi.amplitudes();
        let closed = closed_form_qubit_h(a[0], a[1], r, tau);
        let pipeline = measurement_step_hamiltonian(&psi, r, &cfg).unwrap().h;
        worst = worst.max(closed.max_abs_diff(&pipeline));
    }
    let qubit = worst;
    for n in [3, 5] {
        for _ in 0..100 {
            let psi = random_state(&mut rng, n);
            let lambdas = random_lambdas(&mut rng, n);
            let r = rng.random_range(-3.0..3.0);
            let tau = rng.random_range(0.5..2.0);
            let cfg = GaussianMeasurementConfig::new(tau, C1_PIPELINE_DT, lambdas.clone()).unwrap();
            let closed = closed_form_nlevel_h(&psi, &lambdas, r, tau).unwrap();
            let pipeline = measurement_step_hamiltonian(&psi, r, &cfg).unwrap().h;
            worst = worst.max(closed.max_abs_diff(&pipeline));
        }
    }
    Outcome::new(
        worst < C1_ELEMENT_TOL,
        format!("max |dH_ij| qubit {qubit:.2e}, n in {{2,3,5}} {worst:.2e} (tol {C1_ELEMENT_TOL:.0e})"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = stream(102);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 2..=5 {
        let basis = gellmann_basis(n).unwrap();
        for k in 0..250 {
            let psi = random_state(&mut rng, n);
            let h = if k % 2 == 0 {
                let d = random_vector(&mut rng, n);
                let psi_v = psi.amplitudes();
                let d = &d - psi_v * psi_v.dotc(&d);
                reconstruct_hamiltonian(&psi, &d, 0.0).unwrap().h
            } else {
                let lambdas = random_lambdas(&mut rng, n);
                closed_form_nlevel_h(&psi, &lambdas, rng.random_range(-3.0..3.0), 1.0).unwrap()
            };
            let v_rho = bloch_decompose(&density_from_pure(&psi), &basis).unwrap();
            let v_h = bloch_decompose(&h, &basis).unwrap();
            worst = worst.max(v_rho.dot(&v_h).abs());
            count += 1;
        }
    }
    Outcome::new(
        worst < C2_DOT_TOL,
        format!("max |v_rho . v_H| = {worst:.2e} over {count} states (tol {C2_DOT_TOL:.0e})"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = stream(103);
    let mut rel: f64 = 0.0;
    let mut mean_h: f64 = 0.0;
    for n in 2..=5 {
        for _ in 0..50 {
            let psi = random_state(&mut rng, n);
            let lambdas = random_lambdas(&mut rng, n);
            let r = rng.random_range(-3.0..3.0);
            let cfg = GaussianMeasurementConfig::new(1.0, C1_PIPELINE_DT, lambdas.clone()).unwrap();
            let delta_h = energy_variance_nlevel(&psi, &lambdas, r, 1.0).unwrap().sqrt();
            let speed = measurement_step_hamiltonian(&psi, r, &cfg).unwrap().dh;
            rel = rel.max((delta_h - speed).abs() / speed.max(1e-300));
            let h = closed_form_nlevel_h(&psi, &lambdas, r, 1.0).unwrap();
            mean_h = mean_h.max(expectation(&h, &psi).unwrap().abs());
        }
    }
    let mut qubit: f64 = 0.0;
    for _ in 0..200 {
        let psi = random_state(&mut rng, 2);
        let r = rng.random_range(-3.0..3.0);
        let tau = rng.random_range(0.2..2.0);
        let p = psi.populations();
        let expected = p[0] * p[1] * r * r / (tau * tau);
        let got = energy_variance_nlevel(&psi, &[1.0, -1.0], r, tau).unwrap();
        qubit = qubit.max((got - expected).abs() / expected.max(1.0));
    }
    Outcome::new(
        rel < C3_REL_TOL && qubit < C3_EXACT_TOL && mean_h < C3_EXACT_TOL,
        format!(
            "Delta H vs |d psi| rel {rel:.2e} (tol {C3_REL_TOL:.0e}); qubit reduction {qubit:.2e}, \
             |<H>| {mean_h:.2e} (tol {C3_EXACT_TOL:.0e})"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = stream(104);
    let mut worst: f64 = 0.0;
    for n in 2..=16 {
        for _ in 0..20 {
            let psi = random_state(&mut rng, n);
            let d = random_vector(&mut rng, n);
            worst = worst.max(power_identity_check(&psi, &d).unwrap().cube_defect);
        }
    }
    Outcome::new(worst < C4_CUBE_TOL, format!("max |H^3 - w^2 H| = {worst:.2e} for n <= 16 (tol {C4_CUBE_TOL:.0e})"))
}

fn max_martingale_deviation(series: &[Vec<f64>], p0: f64) -> f64 {
    series.iter().map(|p| (p[0] - p0).abs()).fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let cfg = GaussianMeasurementConfig::qubit_z(0.2, 1e-3).unwrap();
    let initial = QuantumState::from_real(&[0.3f64.sqrt(), 0.7f64.sqrt()]).unwrap();
    let stats = run_ensemble(&initial, &cfg, 2000, 1, StopCondition::for_tau(0.2)).unwrap();
    let freq = stats.frequencies()[0];
    let dev = max_martingale_deviation(&stats.mean_population_series, 0.3);
    let collapsed = stats.n_collapsed();
    Outcome::new(
        (freq - 0.3).abs() <= C5_BORN_BAND && dev < C5_MARTINGALE_TOL && collapsed == 2000,
        format!(
            "P(0) = {freq:.4} (0.300 +/- {C5_BORN_BAND}); max |<p0>(t) - 0.3| = {dev:.4} (tol {C5_MARTINGALE_TOL}); \
             {collapsed}/2000 collapsed"
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = OscillatorRunConfig::standard(0.0, 1.0, 1e-3, 2.0, 6);
    let run = oscillator_trajectory(&cfg).unwrap();
    let v0 = run.moments[0].variance;
    let mut law: f64 = 0.0;
    let mut kurt: f64 = 0.0;
    for m in &run.moments {
        let expected = position_variance_law(v0, cfg.tau, m.t);
        law = law.max((m.variance - expected).abs() / expected);
        kurt = kurt.max(m.excess_kurtosis.abs());
    }
    let grid = PositionGridConfig::centered(0.0, 8.0, 512, 1.0, 1.0);
    let ground = grid.ground_state(0.0).unwrap();
    let h = closed_form_position_h(&ground, 0.0, 0.0, 1.0, &grid).unwrap();
    let numeric = h.variance(&ground).sqrt();
    let closed = energy_uncertainty_position(0.5f64.sqrt(), 0.0, 0.0, 1.0);
    let target = 1.0 / (4.0 * 2f64.sqrt());
    let dh = (numeric - target).abs().max((closed - target).abs());
    Outcome::new(
        law < C6_LAW_REL_TOL && kurt < C6_KURTOSIS_TOL && dh < C6_DELTA_H_TOL,
        format!(
            "variance law rel {law:.2e} (tol {C6_LAW_REL_TOL}); |excess kurtosis| {kurt:.2e} (tol {C6_KURTOSIS_TOL}); \
             Delta H grid {numeric:.6} closed {closed:.6} vs {target:.6} (tol {C6_DELTA_H_TOL:.0e})"
        ),
    )
}

fn criterion_7() -> (Outcome, String) {
    let mut rng = stream(107);
    let mut leak: f64 = 0.0;
    let mut overlap_gap: f64 = 0.0;
    let mut dims = Vec::new();
    for n in 2..=5 {
        let mut observed = None;
        for _ in 0..25 {
            let psi = random_state(&mut rng, n);
            let space = kernel_space_basis(&psi).unwrap();
            observed = Some((space.dimension, space.claimed_dimension));
            let d = random_vector(&mut rng, n);
            let psi_v = psi.amplitudes();
            let h = reconstruct_hamiltonian(&psi, &(&d - psi_v * psi_v.dotc(&d)), 0.0).unwrap().h;
            for t in &space.basis {
                leak = leak.max(t.apply_state(&psi).norm());
                let coeff = rng.random_range(-2.0..2.0);
                let h2 = equivalent_hamiltonian(&psi, &h, &t.scale(coeff)).unwrap();
                let a = propagate(&h, psi_v, 1e-3);
                let b = propagate(&h2, psi_v, 1e-3);
                overlap_gap = overlap_gap.max(1.0 - a.dotc(&b).norm());
            }
        }
        let (dim, claimed) = observed.unwrap();
        dims.push(format!("n={n}: {dim} (n^2-n = {claimed})"));
    }
    let info = format!("kernel dimension observed {}", dims.join(", "));
    (
        Outcome::new(
            leak < C7_LEAK_TOL && overlap_gap <= C7_OVERLAP_TOL,
            format!(
                "max |T psi| = {leak:.2e} (tol {C7_LEAK_TOL:.0e}); max 1 - |<psi_H|psi_H+T>| = {overlap_gap:.2e} \
                 (tol {C7_OVERLAP_TOL:.0e})"
            ),
        ),
        info,
    )
}

fn criterion_8() -> Outcome {
    let mut rng = stream(108);
    let mut boundary: f64 = 0.0;
    let mut variance: f64 = 0.0;
    for _ in 0..1000 {
        let z_f = rng.random_range(-0.95..0.95);
        let p = MostProbablePathParams::from_equator(
            z_f,
            rng.random_range(0.2..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.2..3.0),
        );
        let start = most_probable_path(&p, 0.0).unwrap();
        let end = most_probable_path(&p, p.duration).unwrap();
        boundary = boundary.max((start - nalgebra::Vector3::new(1.0, 0.0, 0.0)).norm()).max((end.z - z_f).abs());
        for k in 0..=4 {
            let t = p.duration * k as f64 / 4.0;
            let s = effective_hamiltonian_mpp(&p, t).unwrap();
            let v = most_probable_path(&p, t).unwrap();
            let num = numerical_variance(&s.h_eff, &v).unwrap();
            variance = variance.max((s.variance - num).abs() / s.variance.max(1e-300));
        }
    }
    let half = MostProbablePathParams::from_equator(0.8, 1.0, 0.0, 1.0);
    let mid = (most_probable_path(&half, 0.5).unwrap().z - 0.5).abs();
    let report = counter_hamiltonian_check(&half, 1e-4, Integrator::Rk4).unwrap();
    let detuned = MostProbablePathParams::from_equator(0.6, 1.5, 0.7, 1.0);
    let report2 = counter_hamiltonian_check(&detuned, 1e-4, Integrator::Rk4).unwrap();
    let tracking = report.tracking_distance.max(report2.tracking_distance);
    let stationary = report.stationary_distance.max(report2.stationary_distance);
    Outcome::new(
        boundary <= C8_EXACT_TOL
            && mid <= C8_EXACT_TOL
            && tracking < C8_TRACK_TOL
            && variance < C8_VARIANCE_TOL
            && stationary == 0.0,
        format!(
            "boundaries {boundary:.1e}, |z(T/2) - 0.5| {mid:.1e} (tol {C8_EXACT_TOL:.0e}); RK4 tracking {tracking:.2e} \
             (tol {C8_TRACK_TOL:.0e}); variance rel {variance:.2e} (tol {C8_VARIANCE_TOL:.0e}); counter run {stationary:e}"
        ),
    )
}

// Drives the freeze protocol with a prescribed readout record and returns the
// largest |psi(t) - psi(0)|.
fn freeze_drift(initial: &QuantumState, h_s: &HermitianOperator, tau: f64, dt: f64, readouts: &[f64]) -> f64 {
    let cfg = GaussianMeasurementConfig::qubit_z(tau, dt).unwrap();
    let mut state = initial.clone();
    let mut drift: f64 = 0.0;
    for (k, r) in readouts.iter().enumerate() {
        state = freeze_feedback_step(&state, h_s, &Readout::new(*r, (k + 1) as f64 * dt), &cfg).unwrap().state;
        drift = drift.max((state.amplitudes() - initial.amplitudes()).norm());
    }
    drift
}

fn criterion_9() -> (Outcome, String) {
    let h_s = HermitianOperator::pauli_x().scale(0.3);
    let plus = QuantumState::from_real(&[1.0, 1.0]).unwrap();
    let mut rng = stream(109);
    let record: Vec<f64> = (0..10_000).map(|_| rng.random_range(-3.0..3.0)).collect();
    let drift = freeze_drift(&plus, &h_s, 1.0, 1e-4, &record);

    let generic = QuantumState::from_real(&[0.6, 0.8]).unwrap();
    let smooth = |t: f64| 1.0 + 0.5 * (5.0 * t).sin();
    let constants: Vec<f64> = [1e-3f64, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| {
            let n = (1.0 / dt).round() as usize;
            let rs: Vec<f64> = (1..=n).map(|k| smooth(k as f64 * dt)).collect();
            freeze_drift(&generic, &h_s, 1.0, dt, &rs) / (n as f64 * dt * dt)
        })
        .collect();
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / hi;

    let cfg = GaussianMeasurementConfig::qubit_z(1.0, 1e-4).unwrap();
    let sampled = run_freeze(&plus, &h_s, &cfg, 9, 10_000, true).unwrap();
    let info = format!(
        "freeze with readouts sampled from the state (variance tau/dt): max drift {:.2e} at (1,1)/sqrt2; \
         the 1e-5 bound is met only for bounded readout records",
        sampled.max_drift
    );
    (
        Outcome::new(
            drift < C9_DRIFT_TOL && spread < C9_ORDER_SPREAD,
            format!(
                "bounded-readout drift {drift:.2e} over 1e4 steps (tol {C9_DRIFT_TOL:.0e}); drift/(N dt^2) = \
                 [{:.4}, {:.4}, {:.4}] spread {spread:.3} (tol {C9_ORDER_SPREAD})",
                constants[0], constants[1], constants[2]
            ),
        ),
        info,
    )
}

fn ensemble_bytes(threads: usize, dir: &Path) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let cfg = GaussianMeasurementConfig::qubit_z(0.2, 1e-3).unwrap();
    let initial = QuantumState::from_real(&[0.3f64.sqrt(), 0.7f64.sqrt()]).unwrap();
    let stats = pool.install(|| run_ensemble(&initial, &cfg, 600, 42, StopCondition::for_tau(0.2)).unwrap());
    let path = dir.join(format!("ensemble-{threads}.csv"));
    write_stats(&stats, &RawConfig::default(), &path).unwrap();
    std::fs::read(path).unwrap()
}

fn trajectory_bytes() -> Vec<u8> {
    let cfg = GaussianMeasurementConfig::new(0.5, 1e-3, vec![1.0, 0.0, -1.0]).unwrap();
    let initial = QuantumState::from_real(&[1.0, 1.0, 1.0]).unwrap();
    let mut record = run_trajectory(&initial, &cfg, 77, StopCondition::for_tau(0.5)).unwrap();
    record.reconstruct().unwrap();
    let traj = SerializedTrajectory::from_record(&record, &RawConfig::default());
    let mut out = Vec::new();
    write_trajectory_to(&traj, &mut out).unwrap();
    out
}

fn cli_bytes(dir: &Path, name: &str, threads: &str) -> Vec<u8> {
    let out = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_collapse-lab"))
        .env("COLLAPSE_LAB_THREADS", threads)
        .args(["ensemble", "--lambda", "1,-1", "--tau", "0.2", "--dt", "1e-3"])
        .args(["--state", "0.5477225575051661,0.8366600265340756", "--trajectories", "300", "--seed", "5"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out).unwrap()
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let traj_same = trajectory_bytes() == trajectory_bytes();
    let e1 = ensemble_bytes(1, dir.path());
    let lib_same = [2, 4, 8].iter().all(|&t| ensemble_bytes(t, dir.path()) == e1);
    let c1 = cli_bytes(dir.path(), "a.csv", "1");
    let cli_same = cli_bytes(dir.path(), "b.csv", "1") == c1 && cli_bytes(dir.path(), "c.csv", "6") == c1;
    Outcome::new(
        traj_same && lib_same && cli_same,
        format!(
            "trajectory rerun identical: {traj_same}; ensemble across 1/2/4/8 threads identical: {lib_same}; \
             CLI rerun and 1 vs 6 threads identical: {cli_same}"
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut infos = Vec::new();
    results.push((1, "closed form vs reconstruction pipeline", criterion_1()));
    results.push((2, "Bloch orthogonality", criterion_2()));
    results.push((3, "energy variance identities", criterion_3()));
    results.push((4, "power identities", criterion_4()));
    results.push((5, "Born rule and martingale", criterion_5()));
    results.push((6, "oscillator variance law", criterion_6()));
    let (o7, i7) = criterion_7();
    results.push((7, "kernel space", o7));
    infos.push(i7);
    results.push((8, "most probable path", criterion_8()));
    let (o9, i9) = criterion_9();
    results.push((9, "freeze control", o9));
    infos.push(i9);
    results.push((10, "determinism", criterion_10()));

    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("[{tag}] {id:>2} {name}: {}", o.detail);
    }
    for info in &infos {
        println!("[INFO] {info}");
    }
    println!("{}/{} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
