//! Right-hand side of the coupled probe/atom equations.
//!
//! ```text
//! d alpha_-/dt = -chi alpha_- + eta_- - (i U0 eta_+ / chi) sum_n w e^{i phi_n}
//! d phi_n/dt   = 2 u_n
//! d u_n/dt     = -4 eps U0 eta_+ Im[(alpha_- / chi*) e^{-i phi_n}] - gamma u_n
//! ```

use num_complex::Complex64;
use rayon::prelude::*;

use super::state::{Derivative, SystemState};
use crate::params::{recoil_parameter, susceptibility, SystemParams};

/// Particle count above which the per-particle pass runs on the rayon pool.
const PARALLEL_MIN_PARTICLES: usize = 4096;

pub const DEFAULT_CHUNK_SIZE: usize = 256;

/// Constants of the equations of motion for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub chi: Complex64,
    inv_chi_conj: Complex64,
    source: Complex64,
    force: f64,
    gamma: f64,
    eta_minus: f64,
}

impl Coupling {
    pub fn new(p: &SystemParams) -> Self {
        let chi = susceptibility(p);
        let eps = recoil_parameter(p);
        Coupling {
            chi,
            inv_chi_conj: chi.conj().inv(),
            source: Complex64::new(0.0, -p.u0 * p.eta_plus) / chi,
            force: -4.0 * eps * p.u0 * p.eta_plus,
            gamma: p.gamma_fric,
            eta_minus: p.eta_minus,
        }
    }

    /// Coefficient of the weighted phasor sum in the field equation.
    pub fn source(&self) -> Complex64 {
        self.source
    }
}

/// Evaluates derivatives with a fixed-order chunked phasor reduction, so the
/// result is bit-identical whether or not chunks run in parallel.
#[derive(Debug, Clone)]
pub struct Kernel {
    chunk_size: usize,
    partials: Vec<Complex64>,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::new(DEFAULT_CHUNK_SIZE)
    }
}

impl Kernel {
    pub fn new(chunk_size: usize) -> Self {
        Kernel {
            chunk_size: chunk_size.max(1),
            partials: Vec::new(),
        }
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    /// Writes `d phi/dt` and `d u/dt` into the output slices and returns
    /// `d alpha_-/dt`.
    #[allow(clippy::too_many_arguments)]
    pub fn eval(
        &mut self,
        c: &Coupling,
        weight: f64,
        alpha: Complex64,
        phases: &[f64],
        vels: &[f64],
        d_phases: &mut [f64],
        d_vels: &mut [f64],
    ) -> Complex64 {
        let drag = alpha * c.inv_chi_conj;
        let n = phases.len();
        let cs = self.chunk_size;
        let run = |(((ph, v), dph), dv): (((&[f64], &[f64]), &mut [f64]), &mut [f64])| {
            let mut sum = Complex64::new(0.0, 0.0);
            for i in 0..ph.len() {
                let (s, co) = ph[i].sin_cos();
                sum.re += co;
                sum.im += s;
                dph[i] = 2.0 * v[i];
                dv[i] = c.force * (drag.im * co - drag.re * s) - c.gamma * v[i];
            }
            sum
        };
        let chunks = phases
            .chunks(cs)
            .zip(vels.chunks(cs))
            .zip(d_phases.chunks_mut(cs))
            .zip(d_vels.chunks_mut(cs));
        let phasor_sum = if n >= PARALLEL_MIN_PARTICLES {
            self.partials.clear();
            let par = phases
                .par_chunks(cs)
                .zip(vels.par_chunks(cs))
                .zip(d_phases.par_chunks_mut(cs))
                .zip(d_vels.par_chunks_mut(cs));
            par.map(run).collect_into_vec(&mut self.partials);
            self.partials.iter().fold(Complex64::new(0.0, 0.0), |acc, z| acc + z)
        } else {
            chunks.map(run).fold(Complex64::new(0.0, 0.0), |acc, z| acc + z)
        };
        -c.chi * alpha + c.eta_minus + c.source * (weight * phasor_sum)
    }
}

/// Time derivatives of the full state.
pub fn rhs(state: &SystemState, p: &SystemParams) -> Derivative {
    let n = state.ensemble.len();
    let mut out = Derivative {
        alpha_minus: Complex64::new(0.0, 0.0),
        phases: vec![0.0; n],
        scaled_velocities: vec![0.0; n],
    };
    out.alpha_minus = Kernel::default().eval(
        &Coupling::new(p),
        state.ensemble.weight(),
        state.probe.alpha_minus,
        state.ensemble.phases(),
        state.ensemble.scaled_velocities(),
        &mut out.phases,
        &mut out.scaled_velocities,
    );
    out
}

/// `sum_n w e^{i phi_n}`, accumulated in index order.
pub fn weighted_phasor_sum(state: &SystemState) -> Complex64 {
    let s = state
        .ensemble
        .phases()
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &ph| acc + Complex64::from_polar(1.0, ph));
    s * state.ensemble.weight()
}

/// Net rate at which atomic scattering feeds photons into the probe,
/// `2 Re[alpha_-^* S]` where `S` is the scattering source term of the field
/// equation.
pub fn photon_transfer_rate(state: &SystemState, p: &SystemParams) -> f64 {
    let c = Coupling::new(p);
    let src = c.source * weighted_phasor_sum(state);
    2.0 * (state.probe.alpha_minus.conj() * src).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::state::EnsembleState;
    use std::f64::consts::{PI, TAU};

    fn params() -> SystemParams {
        SystemParams::default()
    }

    fn state(alpha: Complex64, phases: Vec<f64>, vels: Vec<f64>, n: f64) -> SystemState {
        SystemState::new(alpha, EnsembleState::with_atom_number(phases, vels, n).unwrap())
    }

    #[test]
    fn no_probe_means_no_force() {
        let p = params();
        let s = state(Complex64::new(0.0, 0.0), vec![0.3, 1.0, 2.0], vec![1.0, -2.0, 5.0], p.n_atoms);
        let d = rhs(&s, &p);
        assert!(d.scaled_velocities.iter().all(|&x| x == 0.0));
        let sum = weighted_phasor_sum(&s);
        let src = Complex64::new(0.0, -p.u0 * p.eta_plus) / susceptibility(&p) * sum;
        assert!((d.alpha_minus - src).norm() <= 1e-12 * src.norm());
        assert_eq!(d.phases, vec![2.0, -4.0, 10.0]);
    }

    #[test]
    fn antibunched_ensemble_only_decays() {
        let p = params();
        let alpha = Complex64::new(3.0, -1.0);
        let phases = (0..8).map(|i| i as f64 * TAU / 8.0).collect();
        let s = state(alpha, phases, vec![0.0; 8], p.n_atoms);
        let d = rhs(&s, &p);
        let expected = -susceptibility(&p) * alpha;
        assert!((d.alpha_minus - expected).norm() < 1e-9 * expected.norm());
    }

    #[test]
    fn single_particle_source_term() {
        let p = params();
        let s = state(Complex64::new(0.0, 0.0), vec![0.0], vec![0.0], p.n_atoms);
        let d = rhs(&s, &p);
        let expected = Complex64::new(0.0, -p.n_atoms * p.u0 * p.eta_plus / p.kappa);
        assert!((d.alpha_minus - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn force_matches_two_term_form() {
        let mut p = params();
        p.gamma_fric = 1e5;
        p.delta_c += 0.7 * p.kappa;
        let chi = susceptibility(&p);
        let eps = recoil_parameter(&p);
        let alpha = Complex64::new(1.2e3, -4.5e2);
        let phases = vec![0.1, 1.7, -2.2, PI];
        let vels = vec![1e4, -3e3, 0.0, 5e5];
        let s = state(alpha, phases.clone(), vels.clone(), p.n_atoms);
        let d = rhs(&s, &p);
        for i in 0..phases.len() {
            let e = Complex64::from_polar(1.0, phases[i]);
            let bracket = alpha / chi.conj() * e.conj() - alpha.conj() / chi * e;
            let f = Complex64::new(0.0, 2.0 * eps * p.u0 * p.eta_plus) * bracket;
            assert!(f.im.abs() < 1e-9 * f.re.abs().max(1.0));
            let expected = f.re - p.gamma_fric * vels[i];
            assert!((d.scaled_velocities[i] - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn parallel_reduction_is_bit_identical() {
        let p = params();
        let n = 3 * PARALLEL_MIN_PARTICLES + 17;
        let phases: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 9.0).collect();
        let vels: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos() * 1e5).collect();
        let alpha = Complex64::new(2e3, 7e2);
        let c = Coupling::new(&p);
        let mut dphi = vec![0.0; n];
        let mut du = vec![0.0; n];
        let mut kernel = Kernel::new(64);
        let par = kernel.eval(&c, 2.0, alpha, &phases, &vels, &mut dphi, &mut du);
        // Chunk partial sums folded in index order.
        let acc = phases
            .chunks(64)
            .map(|ph| {
                ph.iter().fold(Complex64::new(0.0, 0.0), |a, &x| {
                    let (s, co) = x.sin_cos();
                    a + Complex64::new(co, s)
                })
            })
            .fold(Complex64::new(0.0, 0.0), |a, z| a + z);
        let serial = -c.chi * alpha + c.eta_minus + c.source * (2.0 * acc);
        assert_eq!(par, serial);
    }
}
