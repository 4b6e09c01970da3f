//! Measured quantities: beat and probe powers, bunching, centre of mass and
//! the instantaneous beat frequency.
//!
//! Two frequency estimators are provided. The phase-slope estimator uses the
//! complex probe amplitude, which only a simulation has; the zero-crossing
//! estimator uses only the beat power a photodiode would record.

use num_complex::Complex64;

use crate::dynamics::{EnsembleState, SystemState};
use crate::error::{Error, Result};
use crate::params::{power_from_amplitude, Port, SystemParams};

/// Default length of the trailing analysis window, s.
pub const DEFAULT_WINDOW: f64 = 100e-6;

/// Default contrast floor as a fraction of the bare pump beat level
/// `T hbar omega delta |alpha_+|^2`.
pub const DEFAULT_CONTRAST_FLOOR: f64 = 0.01;

/// One sampled row of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub alpha_minus: Complex64,
    /// W
    pub p_beat: f64,
    /// W
    pub p_probe_out: f64,
    pub bunching: f64,
    /// m
    pub x_cm: f64,
    /// m/s
    pub v_cm: f64,
    /// Hz; absent until a full analysis window has been recorded.
    pub beat_freq: Option<f64>,
}

impl TimeSeriesRecord {
    pub fn capture(t: f64, state: &SystemState, p: &SystemParams, alpha_plus: Complex64) -> Self {
        let a = state.probe.alpha_minus;
        let (x_cm, v_cm) = center_of_mass(&state.ensemble, p);
        TimeSeriesRecord {
            t,
            alpha_minus: a,
            p_beat: beat_power(alpha_plus, a, p),
            p_probe_out: power_from_amplitude(a, p, Port::Outcoupled),
            bunching: bunching(&state.ensemble),
            x_cm,
            v_cm,
            beat_freq: None,
        }
    }
}

/// `T hbar omega delta |alpha_+ + alpha_-|^2`.
pub fn beat_power(alpha_plus: Complex64, alpha_minus: Complex64, p: &SystemParams) -> f64 {
    power_from_amplitude(alpha_plus + alpha_minus, p, Port::Outcoupled)
}

/// `|<e^{i phi}>|` over macro-particles. All macro-particles carry the same
/// weight, so this equals `N^-1 |sum_n e^{2ikx_n}|`.
pub fn bunching(ens: &EnsembleState) -> f64 {
    let s = ens
        .phases()
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &ph| acc + Complex64::from_polar(1.0, ph));
    (s.norm() / ens.len() as f64).min(1.0)
}

/// Centre-of-mass position (m) and velocity (m/s) from unwrapped phases.
pub fn center_of_mass(ens: &EnsembleState, p: &SystemParams) -> (f64, f64) {
    let n = ens.len() as f64;
    let k = p.wavenumber();
    let phi: f64 = ens.phases().iter().sum::<f64>() / n;
    let u: f64 = ens.scaled_velocities().iter().sum::<f64>() / n;
    (phi / (2.0 * k), u / k)
}

/// Unwraps `arg(alpha)` along the series.
pub fn unwrap_phase(alphas: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(alphas.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for a in alphas {
        let raw = a.arg();
        if let Some(last) = prev {
            let mut d = raw - last;
            while d > std::f64::consts::PI {
                d -= std::f64::consts::TAU;
                offset -= std::f64::consts::TAU;
            }
            while d < -std::f64::consts::PI {
                d += std::f64::consts::TAU;
                offset += std::f64::consts::TAU;
            }
        }
        prev = Some(raw);
        out.push(raw + offset);
    }
    out
}

/// Index of the first sample of the closed trailing window ending at `i`,
/// or `None` if the series does not yet span a full window.
fn window_start(times: &[f64], i: usize, window: f64) -> Option<usize> {
    let tol = 1e-9 * window;
    if times[i] - times[0] < window - tol {
        return None;
    }
    let lo = times[i] - window - tol;
    Some(times[..=i].partition_point(|&t| t < lo))
}

fn check_window(times: &[f64], window: f64) -> Result<()> {
    if !(window > 0.0) {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    if times.len() >= 2 && window < (times[1] - times[0]) * (1.0 - 1e-9) {
        return Err(Error::invalid(format!(
            "window {window:e} s is shorter than two samples ({:e} s apart)",
            times[1] - times[0]
        )));
    }
    Ok(())
}

/// Beat frequency from the least-squares slope of the unwrapped probe phase
/// over a trailing window, `slope / 2pi`.
///
/// The probe field is `alpha_- e^{-i omega_+ t}`, so a probe red-detuned from
/// the pump by `2kv` has a phase growing at `+2kv` and gives a positive value.
pub fn beat_frequency_phase_slope(
    times: &[f64],
    alphas: &[Complex64],
    window: f64,
) -> Result<Vec<Option<f64>>> {
    if times.len() != alphas.len() {
        return Err(Error::invalid("times and amplitudes differ in length"));
    }
    check_window(times, window)?;
    let phase = unwrap_phase(alphas);
    Ok((0..times.len())
        .map(|i| {
            let j = window_start(times, i, window)?;
            let ts = &times[j..=i];
            let ps = &phase[j..=i];
            if ts.len() < 2 {
                return None;
            }
            let n = ts.len() as f64;
            let tm = ts.iter().sum::<f64>() / n;
            let pm = ps.iter().sum::<f64>() / n;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (t, ph) in ts.iter().zip(ps) {
                sxy += (t - tm) * (ph - pm);
                sxx += (t - tm) * (t - tm);
            }
            Some(sxy / sxx / std::f64::consts::TAU)
        })
        .collect())
}

/// Beat frequency from mean crossings of the beat power over a trailing
/// window, `crossings / (2 window)`. Windows whose peak-to-peak excursion is
/// below `contrast_floor` (W) yield `None`.
pub fn beat_frequency_zero_crossing(
    times: &[f64],
    p_beat: &[f64],
    window: f64,
    contrast_floor: f64,
) -> Vec<Option<f64>> {
    if times.len() != p_beat.len() || check_window(times, window).is_err() {
        return vec![None; times.len()];
    }
    (0..times.len())
        .map(|i| {
            let j = window_start(times, i, window)?;
            let w = &p_beat[j..=i];
            if w.len() < 2 {
                return None;
            }
            let (lo, hi) = w
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            if hi - lo < contrast_floor {
                return None;
            }
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            let crossings = w
                .windows(2)
                .filter(|pair| (pair[0] >= mean) != (pair[1] >= mean))
                .count();
            Some(crossings as f64 / (2.0 * window))
        })
        .collect()
}

/// Absolute contrast floor for a relative `fraction` of the bare pump beat level.
pub fn contrast_floor_watts(fraction: f64, p: &SystemParams) -> Result<f64> {
    let a = crate::params::stationary_pump(p)?;
    Ok(fraction * power_from_amplitude(a, p, Port::Outcoupled))
}
