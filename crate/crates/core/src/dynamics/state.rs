use num_complex::Complex64;

use crate::error::{Error, Result};

/// Macro-particles in the reduced coordinates `phi = 2 k x` and `u = k v`.
///
/// Each macro-particle stands for `weight` physical atoms; the field sees
/// `weight * len()` atoms in total.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    phases: Vec<f64>,
    scaled_velocities: Vec<f64>,
    weight: f64,
}

impl EnsembleState {
    pub fn new(phases: Vec<f64>, scaled_velocities: Vec<f64>, weight: f64) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::invalid("ensemble needs at least one macro-particle"));
        }
        if phases.len() != scaled_velocities.len() {
            return Err(Error::invalid(format!(
                "{} phases but {} velocities",
                phases.len(),
                scaled_velocities.len()
            )));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::invalid(format!("weight must be non-negative, got {weight}")));
        }
        Ok(EnsembleState {
            phases,
            scaled_velocities,
            weight,
        })
    }

    /// Builds an ensemble representing `n_atoms` physical atoms.
    pub fn with_atom_number(phases: Vec<f64>, scaled_velocities: Vec<f64>, n_atoms: f64) -> Result<Self> {
        let weight = n_atoms / phases.len().max(1) as f64;
        Self::new(phases, scaled_velocities, weight)
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn scaled_velocities(&self) -> &[f64] {
        &self.scaled_velocities
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn atom_number(&self) -> f64 {
        self.weight * self.len() as f64
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.phases, &mut self.scaled_velocities)
    }

    /// Fails unless `weight * len()` equals `n_atoms` to rounding.
    pub fn check_atom_number(&self, n_atoms: f64) -> Result<()> {
        let total = self.atom_number();
        if (total - n_atoms).abs() > 1e-9 * n_atoms.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "ensemble holds {} x {} = {total} atoms but n_atoms = {n_atoms}",
                self.len(),
                self.weight
            )));
        }
        Ok(())
    }
}

/// The backscattered probe amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeField {
    pub alpha_minus: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub probe: ProbeField,
    pub ensemble: EnsembleState,
}

impl SystemState {
    pub fn new(alpha_minus: Complex64, ensemble: EnsembleState) -> Self {
        SystemState {
            probe: ProbeField { alpha_minus },
            ensemble,
        }
    }

    pub fn is_finite(&self) -> bool {
        let a = self.probe.alpha_minus;
        a.re.is_finite()
            && a.im.is_finite()
            && self.ensemble.phases.iter().all(|x| x.is_finite())
            && self.ensemble.scaled_velocities.iter().all(|x| x.is_finite())
    }
}

/// Time derivative of a [`SystemState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub alpha_minus: Complex64,
    pub phases: Vec<f64>,
    pub scaled_velocities: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_invariants() {
        assert!(EnsembleState::new(vec![], vec![], 1.0).is_err());
        assert!(EnsembleState::new(vec![0.0], vec![0.0, 1.0], 1.0).is_err());
        assert!(EnsembleState::new(vec![0.0], vec![0.0], -1.0).is_err());
        let e = EnsembleState::with_atom_number(vec![0.0; 100], vec![0.0; 100], 1e6).unwrap();
        assert_eq!(e.weight(), 1e4);
        assert!(e.check_atom_number(1e6).is_ok());
        assert!(e.check_atom_number(2e6).is_err());
    }
}
