//! Physical parameters of the ring cavity, the atoms and the drive.
//!
//! All angular rates are in rad/s. Field amplitudes are normalised to the
//! field per photon, so `|alpha|^2` is an intracavity photon number.

use std::path::Path;

use num_complex::Complex64;

use crate::config::Document;
use crate::constants::{AMU, BOLTZMANN, C, HBAR, RB85_MASS_AMU};
use crate::error::{Error, Result};

/// Keys accepted in a parameter file.
pub const PARAM_KEYS: [&str; 11] = [
    "kappa",
    "fsr",
    "lambda",
    "mirror_T",
    "u0",
    "delta_c",
    "n_atoms",
    "mass_amu",
    "eta_plus",
    "eta_minus",
    "gamma_fric",
];

/// Cavity round-trip length of the apparatus, m.
pub const CAVITY_LENGTH: f64 = 0.085;

/// Intracavity pump power assumed when no `eta_plus` is given, W.
pub const DEFAULT_PUMP_POWER: f64 = 2.0;

/// Default one-photon light shift, rad/s.
///
/// Chosen so that a 200 uK cloud sits at 1/5 of the standing-wave depth
/// `4 hbar |U0| |alpha_+|^2` for 2 W of intracavity power.
pub const DEFAULT_U0: f64 = -0.01436;

/// Where a field power is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Intracavity,
    /// Behind one cavity mirror, scaled by its transmission.
    Outcoupled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    /// Free spectral range, Hz.
    pub fsr: f64,
    /// Wavelength, m.
    pub lambda: f64,
    /// Optical angular frequency, derived from `lambda`.
    pub omega: f64,
    /// Mirror intensity transmission.
    pub mirror_t: f64,
    /// One-photon light shift; negative for red detuning.
    pub u0: f64,
    pub delta_c: f64,
    /// Physical atom number.
    pub n_atoms: f64,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Pump rate of the forward mode, 1/s.
    pub eta_plus: f64,
    /// Pump rate of the reverse mode, 1/s.
    pub eta_minus: f64,
    pub gamma_fric: f64,
}

/// Quantities that follow from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub chi: Complex64,
    pub alpha_plus: Complex64,
    pub epsilon: f64,
    pub k: f64,
}

impl Default for SystemParams {
    /// Apparatus values: 8.5 cm ring, kappa = 2pi x 22 kHz, T = 1.8e-6,
    /// 797 nm, 10^6 rubidium-85 atoms, 2 W intracavity pump, cavity locked
    /// to the atom-shifted resonance.
    fn default() -> Self {
        let mut p = SystemParams {
            kappa: std::f64::consts::TAU * 22e3,
            fsr: C / CAVITY_LENGTH,
            lambda: 797.0e-9,
            omega: 0.0,
            mirror_t: 1.8e-6,
            u0: DEFAULT_U0,
            delta_c: 0.0,
            n_atoms: 1e6,
            mass: RB85_MASS_AMU * AMU,
            eta_plus: 0.0,
            eta_minus: 0.0,
            gamma_fric: 0.0,
        };
        p.omega = optical_frequency(p.lambda);
        p.delta_c = p.n_atoms * p.u0;
        p.eta_plus = susceptibility(&p).norm() * amplitude_from_power(DEFAULT_PUMP_POWER, &p, Port::Intracavity);
        p
    }
}

impl SystemParams {
    /// Reads a parameter file. Missing keys take their [`Default`] values;
    /// a missing `delta_c` locks the cavity (`delta_c = n_atoms * u0`) and a
    /// missing `eta_plus` gives 2 W intracavity at the resulting `chi`.
    pub fn from_document(doc: &Document) -> Result<Self> {
        doc.check_keys(&PARAM_KEYS)?;
        let d = SystemParams::default();
        let mut p = SystemParams {
            kappa: doc.number_or("kappa", d.kappa)?,
            fsr: doc.number_or("fsr", d.fsr)?,
            lambda: doc.number_or("lambda", d.lambda)?,
            omega: 0.0,
            mirror_t: doc.number_or("mirror_T", d.mirror_t)?,
            u0: doc.number_or("u0", d.u0)?,
            delta_c: 0.0,
            n_atoms: doc.number_or("n_atoms", d.n_atoms)?,
            mass: doc.number_or("mass_amu", RB85_MASS_AMU)? * AMU,
            eta_plus: 0.0,
            eta_minus: doc.number_or("eta_minus", d.eta_minus)?,
            gamma_fric: doc.number_or("gamma_fric", d.gamma_fric)?,
        };
        p.omega = optical_frequency(p.lambda);
        p.delta_c = doc.number_or("delta_c", p.n_atoms * p.u0)?;
        p.eta_plus = match doc.number("eta_plus")? {
            Some(x) => x,
            None => {
                susceptibility(&p).norm()
                    * amplitude_from_power(DEFAULT_PUMP_POWER, &p, Port::Intracavity)
            }
        };
        p.validate().map_err(|e| match e {
            Error::Invalid(msg) => {
                // Point at the offending line when the key was given.
                let key = msg.split_whitespace().next().unwrap_or_default();
                match doc.get(key) {
                    Some(entry) => Error::Config(entry.bad(msg.clone())),
                    None => Error::Invalid(msg),
                }
            }
            other => other,
        })?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_document(&Document::read(path)?)
    }

    /// Renders the parameters in the file format read by [`Self::load`].
    pub fn to_config_string(&self) -> String {
        format!(
            "kappa = {}\nfsr = {}\nlambda = {}\nmirror_T = {}\nu0 = {}\ndelta_c = {}\n\
             n_atoms = {}\nmass_amu = {}\neta_plus = {}\neta_minus = {}\ngamma_fric = {}\n",
            self.kappa,
            self.fsr,
            self.lambda,
            self.mirror_t,
            self.u0,
            self.delta_c,
            self.n_atoms,
            self.mass / AMU,
            self.eta_plus,
            self.eta_minus,
            self.gamma_fric
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa),
            ("fsr", self.fsr),
            ("lambda", self.lambda),
            ("mass_amu", self.mass),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.mirror_t > 0.0 && self.mirror_t < 1.0) {
            return Err(Error::invalid(format!(
                "mirror_T must lie in (0, 1), got {}",
                self.mirror_t
            )));
        }
        if !(self.n_atoms >= 0.0 && self.n_atoms.is_finite()) {
            return Err(Error::invalid(format!(
                "n_atoms must be non-negative, got {}",
                self.n_atoms
            )));
        }
        if !(self.gamma_fric >= 0.0 && self.gamma_fric.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma_fric must be non-negative, got {}",
                self.gamma_fric
            )));
        }
        for (name, x) in [
            ("u0", self.u0),
            ("delta_c", self.delta_c),
            ("eta_plus", self.eta_plus),
            ("eta_minus", self.eta_minus),
        ] {
            if !x.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {x}")));
            }
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        std::f64::consts::TAU / self.lambda
    }

    /// Power carried by one intracavity photon per round trip, `hbar omega delta`, W.
    pub fn photon_power(&self) -> f64 {
        HBAR * self.omega * self.fsr
    }

    /// Sets `delta_c = n_atoms * u0`, which makes `chi` real.
    pub fn lock_cavity(&mut self) {
        self.delta_c = self.n_atoms * self.u0;
    }

    /// Sets `eta_plus` so that the intracavity pump power equals `power`.
    pub fn set_pump_power(&mut self, power: f64) {
        self.eta_plus = susceptibility(self).norm() * amplitude_from_power(power, self, Port::Intracavity);
    }

    pub fn derived(&self) -> DerivedParams {
        let chi = susceptibility(self);
        DerivedParams {
            chi,
            alpha_plus: Complex64::new(self.eta_plus, 0.0) / chi,
            epsilon: recoil_parameter(self),
            k: self.wavenumber(),
        }
    }

    /// Depth `4 hbar |U0| |alpha_+|^2` of the standing wave formed by the pump
    /// and an equal reverse field, J.
    pub fn symmetric_trap_depth(&self) -> Result<f64> {
        let a = stationary_pump(self)?;
        Ok(4.0 * HBAR * self.u0.abs() * a.norm_sqr())
    }

    /// Temperature equivalent of an energy, K.
    pub fn energy_to_temperature(energy: f64) -> f64 {
        energy / BOLTZMANN
    }
}

fn optical_frequency(lambda: f64) -> f64 {
    std::f64::consts::TAU * C / lambda
}

/// `chi = kappa + i N U0 - i Delta_c`.
pub fn susceptibility(p: &SystemParams) -> Complex64 {
    Complex64::new(p.kappa, p.n_atoms * p.u0 - p.delta_c)
}

/// Stationary pump amplitude `alpha_+ = eta_+ / chi`.
pub fn stationary_pump(p: &SystemParams) -> Result<Complex64> {
    let chi = susceptibility(p);
    if chi.norm_sqr() == 0.0 {
        return Err(Error::invalid("susceptibility vanishes; kappa must be positive"));
    }
    Ok(Complex64::new(p.eta_plus, 0.0) / chi)
}

/// `hbar omega delta |alpha|^2`, times the mirror transmission when outcoupled.
pub fn power_from_amplitude(alpha: Complex64, p: &SystemParams, port: Port) -> f64 {
    let cav = p.photon_power() * alpha.norm_sqr();
    match port {
        Port::Intracavity => cav,
        Port::Outcoupled => p.mirror_t * cav,
    }
}

/// Inverse of [`power_from_amplitude`]: the amplitude modulus `|alpha|`.
pub fn amplitude_from_power(power: f64, p: &SystemParams, port: Port) -> f64 {
    let cav = match port {
        Port::Intracavity => power,
        Port::Outcoupled => power / p.mirror_t,
    };
    (cav / p.photon_power()).sqrt()
}

/// `epsilon = hbar k^2 / m`, twice the recoil shift.
pub fn recoil_parameter(p: &SystemParams) -> f64 {
    let k = p.wavenumber();
    HBAR * k * k / p.mass
}

/// `eta = sqrt(delta kappa) alpha_in`.
pub fn pump_rate_from_input(alpha_in: f64, p: &SystemParams) -> f64 {
    (p.fsr * p.kappa).sqrt() * alpha_in
}

/// Pump-probe frequency difference `2kv` for an atomic velocity, rad/s.
pub fn beat_from_velocity(v: f64, p: &SystemParams) -> f64 {
    2.0 * p.wavenumber() * v
}

/// Atomic velocity for a pump-probe frequency difference, m/s.
pub fn velocity_from_beat(delta_omega: f64, p: &SystemParams) -> f64 {
    delta_omega / (2.0 * p.wavenumber())
}
