#![allow(dead_code)]

use std::path::PathBuf;

use carl::analytic::{beta_steady, steady_velocity, Participation};
use carl::dynamics::{photon_transfer_rate, rhs, weighted_phasor_sum, Simulation};
use carl::params::recoil_parameter;
use carl::{EnsembleState, SystemParams, SystemState};
use num_complex::Complex64;
use rand::Rng;

pub fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn load_params(name: &str) -> SystemParams {
    SystemParams::load(&configs().join(name)).unwrap()
}

pub fn load_scenario(name: &str) -> carl::ScenarioConfig {
    carl::ScenarioConfig::load(&configs().join(name)).unwrap()
}

/// Locked cavity with friction and a pump strong enough to matter.
pub fn molasses() -> SystemParams {
    load_params("fig3.params")
}

/// Random ensemble with phases in [-20, 20] and velocities up to `2 kappa`,
/// and a probe of up to 3% of the pump.
pub fn random_state<R: Rng>(rng: &mut R, n: usize, p: &SystemParams) -> SystemState {
    let phases = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
    let vels = (0..n).map(|_| rng.random_range(-2.0..2.0) * p.kappa).collect();
    let ens = EnsembleState::with_atom_number(phases, vels, p.n_atoms).unwrap();
    let a = p.derived().alpha_plus.norm() * 0.03;
    let alpha = Complex64::new(rng.random_range(-a..a), rng.random_range(-a..a));
    SystemState::new(alpha, ens)
}

/// Relative residual of `sum w (du/dt + gamma u) = 2 eps * (photon transfer rate)
/// = -4 eps U0 eta_+ Im[(alpha_- / chi^*) sum w e^{-i phi}]`, measured against
/// the summed magnitude of the individual force terms.
pub fn bookkeeping_residual(state: &SystemState, p: &SystemParams) -> f64 {
    let eps = recoil_parameter(p);
    let chi = p.derived().chi;
    let w = state.ensemble.weight();
    let d = rhs(state, p);
    let net_force: f64 = d
        .scaled_velocities
        .iter()
        .zip(state.ensemble.scaled_velocities())
        .map(|(du, u)| w * (du + p.gamma_fric * u))
        .sum();
    let transfer = 2.0 * eps * photon_transfer_rate(state, p);
    let s = weighted_phasor_sum(state);
    let explicit = -4.0 * eps * p.u0 * p.eta_plus * (state.probe.alpha_minus / chi.conj() * s.conj()).im;
    let scale = 4.0 * eps * (p.u0 * p.eta_plus).abs() * (state.probe.alpha_minus / chi).norm()
        * w
        * state.ensemble.len() as f64;
    (net_force - transfer).abs().max((explicit - transfer).abs()) / scale
}

fn advance(state: SystemState, p: &SystemParams, dt: f64, steps: u64) -> SystemState {
    let mut sim = Simulation::new(*p, state, dt, 256);
    sim.advance(steps).unwrap();
    sim.state().clone()
}

/// Largest relative mismatch between a run and the run of its translate
/// (`phi -> phi + psi`, `alpha_- -> alpha_- e^{i psi}`). Needs `eta_- = 0`.
pub fn translation_residual(state: &SystemState, p: &SystemParams, psi: f64, dt: f64, steps: u64) -> f64 {
    let shifted_phases: Vec<f64> = state.ensemble.phases().iter().map(|x| x + psi).collect();
    let shifted = SystemState::new(
        state.probe.alpha_minus * Complex64::cis(psi),
        EnsembleState::new(
            shifted_phases,
            state.ensemble.scaled_velocities().to_vec(),
            state.ensemble.weight(),
        )
        .unwrap(),
    );
    let a = advance(state.clone(), p, dt, steps);
    let b = advance(shifted, p, dt, steps);
    let rel = |x: f64, y: f64, scale: f64| (x - y).abs() / scale;
    let phase_scale = a.ensemble.phases().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let vel_scale = a.ensemble.scaled_velocities().iter().fold(p.kappa, |m, x| m.max(x.abs()));
    let mut worst = (a.probe.alpha_minus * Complex64::cis(psi) - b.probe.alpha_minus).norm()
        / a.probe.alpha_minus.norm().max(f64::MIN_POSITIVE);
    for (x, y) in a.ensemble.phases().iter().zip(b.ensemble.phases()) {
        worst = worst.max(rel(x + psi, *y, phase_scale));
    }
    for (x, y) in a.ensemble.scaled_velocities().iter().zip(b.ensemble.scaled_velocities()) {
        worst = worst.max(rel(*x, *y, vel_scale));
    }
    worst
}

/// Distance between two states: probe relative to `|alpha_+|`, phases in rad,
/// velocities relative to kappa.
pub fn state_distance(a: &SystemState, b: &SystemState, p: &SystemParams) -> f64 {
    let mut d = (a.probe.alpha_minus - b.probe.alpha_minus).norm() / p.derived().alpha_plus.norm();
    for (x, y) in a.ensemble.phases().iter().zip(b.ensemble.phases()) {
        d = d.max((x - y).abs());
    }
    for (x, y) in a.ensemble.scaled_velocities().iter().zip(b.ensemble.scaled_velocities()) {
        d = d.max((x - y).abs() / p.kappa);
    }
    d
}

/// `err(dt) / err(dt/2)` at a fixed end time against a `dt/32` reference.
pub fn rk4_error_ratio(state: &SystemState, p: &SystemParams, t_end: f64, steps: u64) -> f64 {
    let dt = t_end / steps as f64;
    let reference = advance(state.clone(), p, dt / 32.0, steps * 32);
    let coarse = advance(state.clone(), p, dt, steps);
    let fine = advance(state.clone(), p, dt / 2.0, steps * 2);
    state_distance(&coarse, &reference, p) / state_distance(&fine, &reference, p)
}

/// One macro-particle drifting at the friction-limited steady velocity with
/// the probe in its comoving steady state: an exact stationary drift.
pub fn steady_drift(p: &SystemParams) -> SystemState {
    let kv = steady_velocity(p, Participation::FULL).unwrap().exact;
    let beta = beta_steady(kv, p, Participation::FULL);
    let ens = EnsembleState::with_atom_number(vec![0.0], vec![kv], p.n_atoms).unwrap();
    SystemState::new(beta, ens)
}
