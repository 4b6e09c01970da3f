//! Initial macro-particle phase-space samples.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::state::EnsembleState;
use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Largest trap depth over thermal energy the bunched sampler accepts.
pub const MAX_DEPTH_OVER_KT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDistribution {
    /// Boltzmann-distributed in the symmetric standing wave of pump plus an
    /// equal reverse field.
    BunchedThermal { temperature: f64 },
    /// Uniform phases.
    HomogeneousThermal { temperature: f64 },
}

impl InitialDistribution {
    pub fn temperature(&self) -> f64 {
        match *self {
            InitialDistribution::BunchedThermal { temperature }
            | InitialDistribution::HomogeneousThermal { temperature } => temperature,
        }
    }
}

/// Concentration `V0 / (2 kB T)` of the von Mises law `exp(a cos phi)` that
/// the Boltzmann weight of the symmetric standing wave reduces to.
pub fn trap_concentration(p: &SystemParams, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    let ratio = p.symmetric_trap_depth()? / (BOLTZMANN * temperature);
    if !ratio.is_finite() || ratio > MAX_DEPTH_OVER_KT {
        return Err(Error::invalid(format!(
            "trap depth / kB T = {ratio:e} overflows the Boltzmann weight"
        )));
    }
    Ok(0.5 * ratio)
}

/// Draws from `exp(a cos phi)` on `[-pi, pi)` by Best and Fisher's
/// wrapped-Cauchy envelope rejection.
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    if a < 1e-8 {
        return rng.random::<f64>() * TAU - PI;
    }
    let tau = 1.0 + (1.0 + 4.0 * a * a).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * a);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = ((1.0 + r * z) / (r + z)).clamp(-1.0, 1.0);
        let c = a * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.acos();
            return if rng.random::<f64>() < 0.5 { -theta } else { theta };
        }
    }
}

/// Samples `particles` macro-particles representing `p.n_atoms` atoms.
///
/// Velocities are Maxwell-Boltzmann in one dimension. Bunched samples are
/// centred on the potential minimum: the antinode (`phi = 0`) for `U0 < 0`,
/// the node for `U0 > 0`.
pub fn sample_ensemble<R: Rng + ?Sized>(
    rng: &mut R,
    dist: InitialDistribution,
    particles: usize,
    p: &SystemParams,
) -> Result<EnsembleState> {
    if particles == 0 {
        return Err(Error::invalid("need at least one macro-particle"));
    }
    let temperature = dist.temperature();
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    let phases: Vec<f64> = match dist {
        InitialDistribution::HomogeneousThermal { .. } => {
            (0..particles).map(|_| rng.random::<f64>() * TAU).collect()
        }
        InitialDistribution::BunchedThermal { temperature } => {
            let a = trap_concentration(p, temperature)?;
            let centre = if p.u0 > 0.0 { PI } else { 0.0 };
            (0..particles).map(|_| centre + sample_von_mises(rng, a)).collect()
        }
    };
    let sigma_u = p.wavenumber() * (BOLTZMANN * temperature / p.mass).sqrt();
    let normal = Normal::new(0.0, sigma_u).map_err(|e| Error::invalid(e.to_string()))?;
    let vels = (0..particles).map(|_| normal.sample(rng)).collect();
    EnsembleState::with_atom_number(phases, vels, p.n_atoms)
}
