//! Perfect-bunching mean-field reduction.
//!
//! With all atoms at a common position `x` and the comoving ansatz
//! `alpha_- = beta e^{2ikx}`, a stationary `beta` gives
//!
//! ```text
//! beta  = -i N U0 eta_+ / (chi (chi + 2ikv))
//! d(kv)/dt = (4 eps N U0^2 eta_+^2 / |chi|^2) Re[1 / (chi + 2ikv)] - gamma kv
//! ```
//!
//! For a locked cavity (`chi = kappa`) the frictionless equation integrates
//! to a depressed cubic in `kv`, and the friction-limited fixed point is the
//! root of another. Both are solved in closed form.
//!
//! Every function takes a [`Participation`]: only that fraction of the atoms
//! is counted, both in the drive and in `chi`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{recoil_parameter, SystemParams};

/// Fraction of the atoms taking part in the collective dynamics.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Participation(f64);

impl Participation {
    pub const FULL: Participation = Participation(1.0);

    pub fn new(fraction: f64) -> Result<Self> {
        if fraction > 0.0 && fraction <= 1.0 {
            Ok(Participation(fraction))
        } else {
            Err(Error::invalid(format!("participation must lie in (0, 1], got {fraction}")))
        }
    }

    pub fn fraction(&self) -> f64 {
        self.0
    }
}

impl Default for Participation {
    fn default() -> Self {
        Participation::FULL
    }
}

/// Centre-of-mass velocity and comoving probe envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    /// rad/s
    pub kv: f64,
    pub beta: Complex64,
}

fn effective_atoms(p: &SystemParams, part: Participation) -> f64 {
    part.0 * p.n_atoms
}

fn effective_chi(p: &SystemParams, part: Participation) -> Complex64 {
    Complex64::new(p.kappa, effective_atoms(p, part) * p.u0 - p.delta_c)
}

/// `eps N_eff U0^2 eta_+^2`, rad^4/s^4.
pub fn drive_strength(p: &SystemParams, part: Participation) -> f64 {
    recoil_parameter(p) * effective_atoms(p, part) * p.u0 * p.u0 * p.eta_plus * p.eta_plus
}

/// Real root of `x^3 + a x = b` for `a > 0` (the only one).
///
/// Cardano's root `cbrt(b/2 + s) + cbrt(b/2 - s)`, `s = sqrt((b/2)^2 + (a/3)^3)`,
/// rewritten as `b / (A^2 + a/3 + (a/(3A))^2)` with `A = cbrt(b/2 + s)`. The
/// second cube root comes from the product identity and no two terms of
/// opposite sign are ever added, so the result is accurate for all `b`.
pub fn solve_depressed_cubic(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0);
    if b == 0.0 {
        return 0.0;
    }
    let half = 0.5 * b.abs();
    let s = half.hypot((a / 3.0).powf(1.5));
    let big = (half + s).cbrt();
    let small = a / (3.0 * big);
    (b / (big * big + a / 3.0 + small * small)).copysign(b)
}

/// Stationary comoving probe envelope at centre-of-mass velocity `kv`.
pub fn beta_steady(kv: f64, p: &SystemParams, part: Participation) -> Complex64 {
    let chi = effective_chi(p, part);
    let num = Complex64::new(0.0, -effective_atoms(p, part) * p.u0 * p.eta_plus);
    num / (chi * (chi + Complex64::new(0.0, 2.0 * kv)))
}

pub fn meanfield_state(kv: f64, p: &SystemParams, part: Participation) -> MeanFieldState {
    MeanFieldState {
        kv,
        beta: beta_steady(kv, p, part),
    }
}

/// `d(kv)/dt` of the centre of mass with the probe adiabatically following.
pub fn meanfield_rhs(kv: f64, p: &SystemParams, part: Participation) -> f64 {
    let chi = effective_chi(p, part);
    let gain = 4.0 * drive_strength(p, part) / chi.norm_sqr();
    gain * (chi + Complex64::new(0.0, 2.0 * kv)).inv().re - p.gamma_fric * kv
}

/// Frictionless velocity after time `t` from rest, assuming the lock
/// `delta_c = N_eff U0`: the root of
/// `(kv)^3 + (3 kappa^2 / 4) kv = 3 eps N_eff U0^2 eta_+^2 t / kappa`.
pub fn cubic_chirp(t: f64, p: &SystemParams, part: Participation) -> f64 {
    let k2 = p.kappa * p.kappa;
    solve_depressed_cubic(0.75 * k2, 3.0 * drive_strength(p, part) * t / p.kappa)
}

/// Long-time cube-root law of the frictionless chirp.
pub fn cubic_chirp_asymptote(t: f64, p: &SystemParams, part: Participation) -> f64 {
    (3.0 * drive_strength(p, part) * t / p.kappa).cbrt()
}

/// Friction-limited steady velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyVelocity {
    /// Root of `(kv)^3 + (kappa^2/4) kv = eps N_eff U0^2 eta_+^2 / (kappa gamma)`,
    /// the fixed point of [`meanfield_rhs`] for a locked cavity.
    pub exact: f64,
    /// `cbrt(eps N_eff U0^2 eta_+^2 / (kappa gamma))`, valid for `2kv >> kappa`.
    pub asymptotic: f64,
}

impl SteadyVelocity {
    /// `(asymptotic - exact) / exact`.
    pub fn approximation_error(&self) -> f64 {
        (self.asymptotic - self.exact) / self.exact
    }
}

pub fn steady_velocity(p: &SystemParams, part: Participation) -> Result<SteadyVelocity> {
    if !(p.gamma_fric > 0.0) {
        return Err(Error::invalid(format!(
            "steady state needs gamma_fric > 0, got {}",
            p.gamma_fric
        )));
    }
    let rhs = drive_strength(p, part) / (p.kappa * p.gamma_fric);
    Ok(SteadyVelocity {
        exact: solve_depressed_cubic(0.25 * p.kappa * p.kappa, rhs),
        asymptotic: rhs.cbrt(),
    })
}

/// RK4 integration of [`meanfield_rhs`] from `kv0` over `steps` equal steps.
/// Returns `(t, kv)` including the initial point.
pub fn integrate_meanfield(
    kv0: f64,
    t_end: f64,
    steps: usize,
    p: &SystemParams,
    part: Participation,
) -> Vec<(f64, f64)> {
    let h = t_end / steps as f64;
    let f = |x: f64| meanfield_rhs(x, p, part);
    let mut out = Vec::with_capacity(steps + 1);
    let mut kv = kv0;
    out.push((0.0, kv));
    for i in 1..=steps {
        let k1 = f(kv);
        let k2 = f(kv + 0.5 * h * k1);
        let k3 = f(kv + 0.5 * h * k2);
        let k4 = f(kv + h * k3);
        kv += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push((i as f64 * h, kv));
    }
    out
}

/// Largest relative change of `kappa + |kv|` per step of [`meanfield_at`].
const STEP_FRACTION: f64 = 1e-3;

/// Integrates [`meanfield_rhs`] from `kv0` at `t = 0` and returns `kv` at
/// each of `times` (ascending, non-negative). Steps are sized so that `kv`
/// moves by at most a small fraction of `kappa + |kv|` and stay well inside
/// the friction time, so strong drives are resolved from the first instant.
pub fn meanfield_at(times: &[f64], kv0: f64, p: &SystemParams, part: Participation) -> Vec<f64> {
    let f = |x: f64| meanfield_rhs(x, p, part);
    let friction_step = if p.gamma_fric > 0.0 { 0.05 / p.gamma_fric } else { f64::INFINITY };
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut kv) = (0.0, kv0);
    for &target in times {
        while t < target {
            let k1 = f(kv);
            let scale = p.kappa + kv.abs();
            let h = (STEP_FRACTION * scale / k1.abs().max(f64::MIN_POSITIVE))
                .min(friction_step)
                .min(target - t);
            let k2 = f(kv + 0.5 * h * k1);
            let k3 = f(kv + 0.5 * h * k2);
            let k4 = f(kv + h * k3);
            kv += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = if target - t <= h { target } else { t + h };
        }
        out.push(kv);
    }
    out
}
