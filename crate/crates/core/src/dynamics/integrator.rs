use num_complex::Complex64;

use super::kernel::{Coupling, Kernel};
use super::state::SystemState;
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Largest dimensionless rate-times-step the fixed-step integrator is run at.
pub const STEP_BOUND: f64 = 0.05;

/// Classical fourth-order Runge-Kutta with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    kernel: Kernel,
    k_phi: [Vec<f64>; 4],
    k_u: [Vec<f64>; 4],
    y_phi: Vec<f64>,
    y_u: Vec<f64>,
}

impl Rk4 {
    pub fn new(particles: usize, chunk_size: usize) -> Self {
        let z = || vec![0.0; particles];
        Rk4 {
            kernel: Kernel::new(chunk_size),
            k_phi: [z(), z(), z(), z()],
            k_u: [z(), z(), z(), z()],
            y_phi: z(),
            y_u: z(),
        }
    }

    /// Advances `state` by `dt` in place. Returns `false` if any component
    /// became non-finite.
    pub fn step(&mut self, state: &mut SystemState, c: &Coupling, dt: f64) -> bool {
        let weight = state.ensemble.weight();
        let alpha0 = state.probe.alpha_minus;
        let (phi, u) = state.ensemble.parts_mut();
        let n = phi.len();
        if self.y_phi.len() != n {
            *self = Rk4::new(n, self.kernel.chunk_size());
        }
        let Rk4 {
            kernel,
            k_phi,
            k_u,
            y_phi,
            y_u,
        } = self;

        let mut ka = [Complex64::new(0.0, 0.0); 4];
        ka[0] = kernel.eval(c, weight, alpha0, phi, u, &mut k_phi[0], &mut k_u[0]);
        for (stage, h) in [(1usize, 0.5 * dt), (2, 0.5 * dt), (3, dt)] {
            let prev = stage - 1;
            for i in 0..n {
                y_phi[i] = phi[i] + h * k_phi[prev][i];
                y_u[i] = u[i] + h * k_u[prev][i];
            }
            let a = alpha0 + h * ka[prev];
            ka[stage] = kernel.eval(c, weight, a, y_phi, y_u, &mut k_phi[stage], &mut k_u[stage]);
        }
        let w = dt / 6.0;
        for i in 0..n {
            phi[i] += w * (k_phi[0][i] + 2.0 * k_phi[1][i] + 2.0 * k_phi[2][i] + k_phi[3][i]);
            u[i] += w * (k_u[0][i] + 2.0 * k_u[1][i] + 2.0 * k_u[2][i] + k_u[3][i]);
        }
        state.probe.alpha_minus = alpha0 + w * (ka[0] + 2.0 * ka[1] + 2.0 * ka[2] + ka[3]);
        state.is_finite()
    }
}

/// One RK4 step of length `dt`.
pub fn step(state: &SystemState, p: &SystemParams, dt: f64) -> Result<SystemState> {
    let mut next = state.clone();
    let mut rk = Rk4::new(next.ensemble.len(), super::kernel::DEFAULT_CHUNK_SIZE);
    if rk.step(&mut next, &Coupling::new(p), dt) {
        Ok(next)
    } else {
        Err(Error::Blowup {
            t: dt,
            what: "non-finite state after one step".into(),
        })
    }
}

/// `max(|chi| dt, max|2u| dt, gamma dt)`; the integrator is accurate while
/// this stays below [`STEP_BOUND`].
pub fn step_stiffness(state: &SystemState, p: &SystemParams, dt: f64) -> f64 {
    let c = Coupling::new(p);
    let umax = state
        .ensemble
        .scaled_velocities()
        .iter()
        .fold(0.0f64, |m, u| m.max(u.abs()));
    (c.chi.norm() * dt).max(2.0 * umax * dt).max(p.gamma_fric * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::state::EnsembleState;

    #[test]
    fn linear_decay_without_coupling() {
        let mut p = SystemParams::default();
        p.u0 = 0.0;
        p.delta_c = 0.3 * p.kappa;
        let chi = crate::params::susceptibility(&p);
        let a0 = Complex64::new(1.0, 2.0);
        let dt = 0.01 / chi.norm();
        let ens = EnsembleState::with_atom_number(vec![0.1, 0.2], vec![0.0, 0.0], p.n_atoms).unwrap();
        let mut s = SystemState::new(a0, ens);
        let mut rk = Rk4::new(2, 4);
        let c = Coupling::new(&p);
        // t = 1/|chi|; the per-step relative error is (chi dt)^5 / 120.
        let steps = 100;
        for _ in 0..steps {
            assert!(rk.step(&mut s, &c, dt));
        }
        let exact = a0 * (-chi * (steps as f64 * dt)).exp();
        assert!((s.probe.alpha_minus - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn free_flight_is_exact() {
        let mut p = SystemParams::default();
        p.eta_plus = 0.0;
        let phases = vec![0.0, 1.0, -2.0];
        let vels = vec![1e5, -3e4, 0.0];
        let ens = EnsembleState::with_atom_number(phases.clone(), vels.clone(), p.n_atoms).unwrap();
        let mut s = SystemState::new(Complex64::new(0.0, 0.0), ens);
        let dt = 1e-8;
        let mut rk = Rk4::new(3, 2);
        let c = Coupling::new(&p);
        for _ in 0..1000 {
            rk.step(&mut s, &c, dt);
        }
        for i in 0..3 {
            let expected = phases[i] + 2.0 * vels[i] * 1000.0 * dt;
            assert!((s.ensemble.phases()[i] - expected).abs() < 1e-12 * expected.abs().max(1.0));
            assert_eq!(s.ensemble.scaled_velocities()[i], vels[i]);
        }
        assert_eq!(s.probe.alpha_minus, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn blowup_is_reported() {
        let p = SystemParams::default();
        let ens = EnsembleState::with_atom_number(vec![f64::NAN], vec![0.0], p.n_atoms).unwrap();
        let s = SystemState::new(Complex64::new(0.0, 0.0), ens);
        assert!(matches!(step(&s, &p, 1e-8), Err(Error::Blowup { .. })));
    }
}
