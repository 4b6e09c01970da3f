//! Declarative experiment runs with parameter switching events.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::integrator::{step_stiffness, Rk4, STEP_BOUND};
use super::kernel::{Coupling, DEFAULT_CHUNK_SIZE};
use super::sampling::{sample_ensemble, InitialDistribution};
use super::state::{EnsembleState, SystemState};
use crate::config::Document;
use crate::error::{ConfigError, Error, Result};
use crate::observables::{
    beat_frequency_phase_slope, TimeSeriesRecord, DEFAULT_CONTRAST_FLOOR, DEFAULT_WINDOW,
};
use crate::params::{stationary_pump, SystemParams};

pub const SCENARIO_KEYS: [&str; 17] = [
    "initial",
    "temperature",
    "seed",
    "t_end",
    "dt",
    "sample_every",
    "probe_seed_amplitude",
    "particles",
    "weight",
    "chunk_size",
    "window",
    "participation",
    "protocol",
    "contrast_floor",
    "tolerance",
    "adiabatic_limit",
    "settle_fraction",
];

/// Threshold on `|alpha_-| / |alpha_+|` above which a run is flagged.
const BLOWUP_WARNING_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    SetEtaMinus(f64),
    SetGammaFric(f64),
}

impl EventKind {
    pub fn apply(&self, p: &mut SystemParams) {
        match *self {
            EventKind::SetEtaMinus(x) => p.eta_minus = x,
            EventKind::SetGammaFric(x) => p.gamma_fric = x,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SetEtaMinus(_) => "set_eta_minus",
            EventKind::SetGammaFric(_) => "set_gamma_fric",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            EventKind::SetEtaMinus(x) | EventKind::SetGammaFric(x) => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// s
    pub time: f64,
    pub kind: EventKind,
}

/// The canonical experiment a scenario reproduces; selects the analytic
/// oracle used by comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Reverse pump cut with no friction; compared against the cubic chirp.
    SwitchOff,
    /// One-sided pumping with friction; compared against the steady state.
    Molasses,
    Custom,
}

impl Protocol {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "switch_off" => Some(Protocol::SwitchOff),
            "molasses" => Some(Protocol::Molasses),
            "custom" => Some(Protocol::Custom),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::SwitchOff => "switch_off",
            Protocol::Molasses => "molasses",
            Protocol::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub initial: InitialDistribution,
    pub seed: u64,
    /// Sorted by time.
    pub events: Vec<Event>,
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
    /// Initial probe noise in units of `|alpha_+| / sqrt(particles)`.
    pub probe_seed_amplitude: f64,
    pub particles: usize,
    /// Atoms per macro-particle; `None` means `n_atoms / particles`.
    pub weight: Option<f64>,
    pub chunk_size: usize,
    /// Trailing window of the beat-frequency estimators, s.
    pub window: f64,
    /// Fraction of atoms the analytic oracle counts.
    pub participation: f64,
    pub protocol: Protocol,
    /// Zero-crossing contrast floor, as a fraction of the bare pump beat level.
    pub contrast_floor: f64,
    /// Relative tolerance used by comparisons.
    pub tolerance: f64,
    /// Switch-off comparisons are judged only while `2kv < adiabatic_limit * kappa`.
    pub adiabatic_limit: f64,
    /// Trailing fraction of a run used for steady-state statistics.
    pub settle_fraction: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            initial: InitialDistribution::HomogeneousThermal { temperature: 200e-6 },
            seed: 0,
            events: Vec::new(),
            t_end: 1e-3,
            dt: 2e-8,
            sample_every: 10,
            probe_seed_amplitude: 1e-3,
            particles: 100,
            weight: None,
            chunk_size: DEFAULT_CHUNK_SIZE,
            window: DEFAULT_WINDOW,
            participation: 1.0,
            protocol: Protocol::Custom,
            contrast_floor: DEFAULT_CONTRAST_FLOOR,
            tolerance: 0.1,
            adiabatic_limit: 0.5,
            settle_fraction: 0.25,
        }
    }
}

fn parse_event(text: &str, line: usize) -> Result<Event, ConfigError> {
    let syntax = |message: String| ConfigError::Syntax { line, message };
    let fields: Vec<&str> = text.split_whitespace().collect();
    let [time, name, value] = fields[..] else {
        return Err(syntax(format!("expected `time_s event_name value`, found `{text}`")));
    };
    let time = crate::config::parse_number(time).map_err(syntax)?;
    let value = crate::config::parse_number(value).map_err(syntax)?;
    let kind = match name {
        "set_eta_minus" => EventKind::SetEtaMinus(value),
        "set_gamma_fric" => EventKind::SetGammaFric(value),
        other => return Err(syntax(format!("unknown event `{other}`"))),
    };
    Ok(Event { time, kind })
}

impl ScenarioConfig {
    pub fn from_document(doc: &Document) -> Result<Self> {
        doc.check_keys(&SCENARIO_KEYS)?;
        let d = ScenarioConfig::default();
        let temperature = doc.number_or("temperature", d.initial.temperature())?;
        let initial = match doc.get("initial") {
            None => InitialDistribution::HomogeneousThermal { temperature },
            Some(e) => match e.value.as_str() {
                "bunched_thermal" => InitialDistribution::BunchedThermal { temperature },
                "homogeneous_thermal" => InitialDistribution::HomogeneousThermal { temperature },
                other => return Err(e.bad(format!("unknown distribution `{other}`")).into()),
            },
        };
        let int_or = |key: &str, default: u64| -> Result<u64, ConfigError> {
            doc.get(key).map(|e| e.integer()).transpose().map(|v| v.unwrap_or(default))
        };
        let protocol = match doc.get("protocol") {
            None => Protocol::Custom,
            Some(e) => Protocol::parse(&e.value)
                .ok_or_else(|| e.bad(format!("unknown protocol `{}`", e.value)))?,
        };
        let mut events = Vec::with_capacity(doc.events.len());
        for ev in &doc.events {
            events.push(parse_event(&ev.text, ev.line)?);
        }
        if let Some(w) = events.windows(2).position(|w| w[1].time < w[0].time) {
            return Err(ConfigError::Syntax {
                line: doc.events[w + 1].line,
                message: "events must be sorted by time".into(),
            }
            .into());
        }
        let cfg = ScenarioConfig {
            initial,
            seed: int_or("seed", d.seed)?,
            events,
            t_end: doc.number_or("t_end", d.t_end)?,
            dt: doc.number_or("dt", d.dt)?,
            sample_every: int_or("sample_every", d.sample_every as u64)? as usize,
            probe_seed_amplitude: doc.number_or("probe_seed_amplitude", d.probe_seed_amplitude)?,
            particles: int_or("particles", d.particles as u64)? as usize,
            weight: doc.number("weight")?,
            chunk_size: int_or("chunk_size", d.chunk_size as u64)? as usize,
            window: doc.number_or("window", d.window)?,
            participation: doc.number_or("participation", d.participation)?,
            protocol,
            contrast_floor: doc.number_or("contrast_floor", d.contrast_floor)?,
            tolerance: doc.number_or("tolerance", d.tolerance)?,
            adiabatic_limit: doc.number_or("adiabatic_limit", d.adiabatic_limit)?,
            settle_fraction: doc.number_or("settle_fraction", d.settle_fraction)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_document(&Document::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("window", self.window),
            ("temperature", self.initial.temperature()),
            ("tolerance", self.tolerance),
            ("adiabatic_limit", self.adiabatic_limit),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {x}")));
            }
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every must be at least 1"));
        }
        if self.particles == 0 {
            return Err(Error::invalid("particles must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(Error::invalid("chunk_size must be at least 1"));
        }
        if !(self.probe_seed_amplitude >= 0.0 && self.probe_seed_amplitude.is_finite()) {
            return Err(Error::invalid("probe_seed_amplitude must be non-negative"));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(Error::invalid(format!(
                "participation must lie in (0, 1], got {}",
                self.participation
            )));
        }
        if !(self.contrast_floor >= 0.0) {
            return Err(Error::invalid("contrast_floor must be non-negative"));
        }
        if !(self.settle_fraction > 0.0 && self.settle_fraction <= 1.0) {
            return Err(Error::invalid("settle_fraction must lie in (0, 1]"));
        }
        if self.window < 2.0 * self.dt * self.sample_every as f64 {
            return Err(Error::invalid(format!(
                "window {:e} s holds fewer than two samples",
                self.window
            )));
        }
        if self.events.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::invalid("events must be sorted by time"));
        }
        if let Some(ev) = self.events.iter().find(|e| !(e.time >= 0.0 && e.kind.value().is_finite())) {
            return Err(Error::invalid(format!("bad event at t = {}", ev.time)));
        }
        if let Some(ev) = self
            .events
            .iter()
            .find(|e| matches!(e.kind, EventKind::SetGammaFric(g) if g < 0.0))
        {
            return Err(Error::invalid(format!("negative friction at t = {}", ev.time)));
        }
        Ok(())
    }

    /// Checks the macro-particle decomposition against `n_atoms`.
    pub fn check_params(&self, p: &SystemParams) -> Result<()> {
        if let Some(w) = self.weight {
            let total = w * self.particles as f64;
            if (total - p.n_atoms).abs() > 1e-9 * p.n_atoms.max(1.0) {
                return Err(Error::invalid(format!(
                    "scenario has {} particles x weight {w} = {total} atoms but params give n_atoms = {}",
                    self.particles, p.n_atoms
                )));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

/// Samples the initial ensemble for a scenario; deterministic in `cfg.seed`.
pub fn sample_initial(cfg: &ScenarioConfig, p: &SystemParams) -> Result<EnsembleState> {
    cfg.check_params(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_ensemble(&mut rng, cfg.initial, cfg.particles, p)
}

/// A fixed-step integration of the coupled system under mutable parameters.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: SystemParams,
    coupling: Coupling,
    state: SystemState,
    stepper: Rk4,
    dt: f64,
    steps: u64,
}

impl Simulation {
    pub fn new(params: SystemParams, state: SystemState, dt: f64, chunk_size: usize) -> Self {
        let n = state.ensemble.len();
        Simulation {
            coupling: Coupling::new(&params),
            params,
            state,
            stepper: Rk4::new(n, chunk_size),
            dt,
            steps: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn set_params(&mut self, params: SystemParams) {
        self.params = params;
        self.coupling = Coupling::new(&params);
    }

    pub fn apply(&mut self, event: EventKind) {
        let mut p = self.params;
        event.apply(&mut p);
        self.set_params(p);
    }

    pub fn step(&mut self) -> Result<()> {
        let ok = self.stepper.step(&mut self.state, &self.coupling, self.dt);
        self.steps += 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Blowup {
                t: self.time(),
                what: "non-finite probe amplitude or particle coordinate".into(),
            })
        }
    }

    pub fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

/// A diagnostic raised during a run that did not abort it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunWarning {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TimeSeriesRecord>,
    pub warnings: Vec<RunWarning>,
    pub final_state: SystemState,
}

/// Initial probe amplitude: the adiabatic value for `ensemble` at rest,
/// `(eta_- + source * w Sum e^{i phi}) / chi`, plus a random-phase seed.
pub fn initial_probe(cfg: &ScenarioConfig, p: &SystemParams, ensemble: &EnsembleState) -> Result<Complex64> {
    let alpha_plus = stationary_pump(p)?;
    let c = Coupling::new(p);
    let backscatter = c.source() * ensemble_phasor(ensemble);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    let seed = cfg.probe_seed_amplitude * alpha_plus.norm() / (cfg.particles as f64).sqrt();
    Ok((Complex64::new(p.eta_minus, 0.0) + backscatter) / c.chi + Complex64::from_polar(seed, theta))
}

fn ensemble_phasor(ensemble: &EnsembleState) -> Complex64 {
    let sum: Complex64 = ensemble.phases().iter().map(|&phi| Complex64::cis(phi)).sum();
    sum * ensemble.weight()
}

/// Runs a scenario from its sampled initial state.
///
/// Events are snapped to the nearest step and applied before that step.
/// The series is sampled at `t = 0` and every `sample_every` steps after.
pub fn run_scenario(cfg: &ScenarioConfig, p: &SystemParams) -> Result<RunOutput> {
    cfg.validate()?;
    p.validate()?;
    let ensemble = sample_initial(cfg, p)?;
    let alpha0 = initial_probe(cfg, p, &ensemble)?;
    run_from_state(cfg, p, SystemState::new(alpha0, ensemble))
}

/// Runs a scenario from a given initial state (the sampling in `cfg` is ignored).
pub fn run_from_state(cfg: &ScenarioConfig, p: &SystemParams, initial: SystemState) -> Result<RunOutput> {
    let alpha_plus = stationary_pump(p)?;
    let mut warnings = Vec::new();
    let stiffness = step_stiffness(&initial, p, cfg.dt);
    if stiffness > STEP_BOUND {
        let w = RunWarning {
            t: 0.0,
            message: format!("dt = {:e} s gives rate x dt = {stiffness:.3} > {STEP_BOUND}", cfg.dt),
        };
        log::warn!("{}", w.message);
        warnings.push(w);
    }

    let steps = cfg.steps();
    let mut events: Vec<(u64, EventKind)> = cfg
        .events
        .iter()
        .map(|e| ((e.time / cfg.dt).round() as u64, e.kind))
        .collect();
    if let Some((idx, kind)) = events.iter().find(|(idx, _)| *idx >= steps) {
        warnings.push(RunWarning {
            t: *idx as f64 * cfg.dt,
            message: format!("{} after t_end is never applied", kind.name()),
        });
    }
    events.retain(|(idx, _)| *idx < steps);

    let mut sim = Simulation::new(*p, initial, cfg.dt, cfg.chunk_size);
    let mut records = Vec::with_capacity((steps / cfg.sample_every as u64 + 1) as usize);
    records.push(TimeSeriesRecord::capture(0.0, sim.state(), p, alpha_plus));
    let limit = BLOWUP_WARNING_RATIO * alpha_plus.norm();
    let mut over_limit = false;
    let mut next_event = 0;
    for i in 0..steps {
        while next_event < events.len() && events[next_event].0 == i {
            sim.apply(events[next_event].1);
            next_event += 1;
        }
        sim.step()?;
        if (i + 1) % cfg.sample_every as u64 == 0 {
            let rec = TimeSeriesRecord::capture(sim.time(), sim.state(), sim.params(), alpha_plus);
            let above = alpha_plus.norm() > 0.0 && rec.alpha_minus.norm() > limit;
            if above && !over_limit {
                let w = RunWarning {
                    t: rec.t,
                    message: format!(
                        "|alpha_-| = {:e} exceeds {BLOWUP_WARNING_RATIO} |alpha_+|",
                        rec.alpha_minus.norm()
                    ),
                };
                log::warn!("t = {:e} s: {}", w.t, w.message);
                warnings.push(w);
            }
            over_limit = above;
            records.push(rec);
        }
    }
    fill_beat_frequency(&mut records, cfg.window)?;
    Ok(RunOutput {
        records,
        warnings,
        final_state: sim.state,
    })
}

/// Sets each record's `beat_freq` from the phase-slope estimator.
pub fn fill_beat_frequency(records: &mut [TimeSeriesRecord], window: f64) -> Result<()> {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let alphas: Vec<Complex64> = records.iter().map(|r| r.alpha_minus).collect();
    let freqs = beat_frequency_phase_slope(&times, &alphas, window)?;
    for (r, f) in records.iter_mut().zip(freqs) {
        r.beat_freq = f;
    }
    Ok(())
}
