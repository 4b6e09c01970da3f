//! Parameter sweeps over steady states and simulation-vs-oracle comparisons.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analytic::{cubic_chirp, steady_velocity, Participation};
use crate::config::{parse_number, Document};
use crate::dynamics::{run_scenario, Protocol, RunOutput, RunWarning, ScenarioConfig};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, fmt_opt, write_atomic, write_records};
use crate::observables::{
    beat_frequency_phase_slope, beat_frequency_zero_crossing, contrast_floor_watts, TimeSeriesRecord,
};
use crate::params::SystemParams;

pub const SWEEP_KEYS: [&str; 5] = ["parameter", "values", "params", "scenario", "output"];

/// Caps the number of sweep points run at once.
pub const THREADS_ENV: &str = "CARL_SIM_THREADS";

/// Relative spread (std/mean) below which a beat-frequency tail is steady.
pub const STEADY_SPREAD: f64 = 0.05;

/// Header of a sweep's `summary.csv`.
pub const SUMMARY_HEADER: [&str; 7] = [
    "value",
    "steady_beat_hz",
    "spread",
    "converged",
    "exact_beat_hz",
    "asymptotic_beat_hz",
    "error",
];

/// Header of a comparison report.
pub const COMPARISON_HEADER: [&str; 5] = ["t", "kv_sim_rad_s", "kv_oracle_rad_s", "rel_dev", "judged"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    EtaPlus,
    NAtoms,
    GammaFric,
}

impl SweepParameter {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eta_plus" => Some(SweepParameter::EtaPlus),
            "n_atoms" => Some(SweepParameter::NAtoms),
            "gamma_fric" => Some(SweepParameter::GammaFric),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::EtaPlus => "eta_plus",
            SweepParameter::NAtoms => "n_atoms",
            SweepParameter::GammaFric => "gamma_fric",
        }
    }

    /// Sets the swept value. A locked cavity stays locked when `n_atoms` changes.
    pub fn apply(self, p: &mut SystemParams, value: f64) {
        match self {
            SweepParameter::EtaPlus => p.eta_plus = value,
            SweepParameter::GammaFric => p.gamma_fric = value,
            SweepParameter::NAtoms => {
                let locked = p.delta_c == p.n_atoms * p.u0;
                p.n_atoms = value;
                if locked {
                    p.lock_cavity();
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Base parameters; the swept one is overwritten per point.
    pub params: SystemParams,
    pub scenario: ScenarioConfig,
    pub output: PathBuf,
}

impl SweepSpec {
    /// Parses a sweep file. The `params`, `scenario` and `output` paths are
    /// taken relative to `base`.
    pub fn from_document(doc: &Document, base: &Path) -> Result<Self> {
        doc.check_keys(&SWEEP_KEYS)?;
        let get = |key: &str| {
            doc.get(key)
                .ok_or_else(|| Error::Config(crate::ConfigError::MissingKey(key.into())))
        };
        let entry = get("parameter")?;
        let parameter = SweepParameter::parse(&entry.value).ok_or_else(|| {
            entry.bad(format!(
                "unknown sweep parameter `{}`; expected eta_plus, n_atoms or gamma_fric",
                entry.value
            ))
        })?;
        let entry = get("values")?;
        let values = entry
            .value
            .split(',')
            .map(|v| parse_number(v).map_err(|m| entry.bad(m)))
            .collect::<Result<Vec<f64>, _>>()?;
        let spec = SweepSpec {
            parameter,
            values,
            params: SystemParams::load(&base.join(&get("params")?.value))?,
            scenario: ScenarioConfig::load(&base.join(&get("scenario")?.value))?,
            output: base.join(&get("output")?.value),
        };
        spec.validate().map_err(|e| match e {
            Error::Invalid(msg) => Error::Config(entry.bad(msg)),
            other => other,
        })?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_document(&Document::read(path)?, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::invalid(format!(
                "a sweep needs at least 2 values, got {}",
                self.values.len()
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("sweep values must be positive, got {v}")));
        }
        if self.parameter == SweepParameter::NAtoms && self.scenario.weight.is_some() {
            return Err(Error::invalid("an n_atoms sweep needs a scenario without a fixed weight"));
        }
        for &v in &self.values {
            self.point_params(v).validate()?;
        }
        Ok(())
    }

    pub fn point_params(&self, value: f64) -> SystemParams {
        let mut p = self.params;
        self.parameter.apply(&mut p, value);
        p
    }
}

/// Worker count for sweeps: [`THREADS_ENV`] when set, otherwise every core.
pub fn sweep_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(rayon::current_num_threads()),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
    }
}

/// Statistics of the beat-frequency column over the tail of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyBeat {
    /// Hz
    pub mean: f64,
    /// Hz
    pub std: f64,
    pub samples: usize,
}

impl SteadyBeat {
    pub fn spread(&self) -> f64 {
        self.std / self.mean.abs()
    }

    pub fn converged(&self) -> bool {
        self.mean > 0.0 && self.spread() < STEADY_SPREAD
    }
}

/// Mean and standard deviation of `beat_freq` over records with
/// `t >= t_last * (1 - settle_fraction)`. `None` if any of them lacks an
/// estimate.
pub fn steady_beat(records: &[TimeSeriesRecord], settle_fraction: f64) -> Option<SteadyBeat> {
    let t_last = records.last()?.t;
    let start = t_last * (1.0 - settle_fraction);
    let tail: Vec<f64> = records
        .iter()
        .filter(|r| r.t >= start)
        .map(|r| r.beat_freq)
        .collect::<Option<_>>()?;
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let var = tail.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some(SteadyBeat {
        mean,
        std: var.sqrt(),
        samples: tail.len(),
    })
}

/// Least-squares slope of `ln y` against `ln x`; `None` for fewer than two
/// points or non-positive data.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let xm = logs.iter().map(|l| l.0).sum::<f64>() / n;
    let ym = logs.iter().map(|l| l.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - xm).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub steady: Option<SteadyBeat>,
    /// Beat frequency `kv / pi` of the exact steady root, Hz.
    pub exact_hz: Option<f64>,
    /// Same for the asymptotic cube root, Hz.
    pub asymptotic_hz: Option<f64>,
    pub error: Option<String>,
    pub output: PathBuf,
}

impl SweepPoint {
    pub fn converged(&self) -> bool {
        self.steady.is_some_and(|s| s.converged())
    }
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
    /// Log-log slope of the simulated steady beat over converged points.
    pub slope: Option<f64>,
    /// Log-log slope of the exact-root prediction.
    pub exact_slope: Option<f64>,
}

fn run_point(spec: &SweepSpec, index: usize, value: f64) -> SweepPoint {
    let p = spec.point_params(value);
    let output = spec.output.join(format!("point_{index:03}.csv"));
    let prediction = Participation::new(spec.scenario.participation)
        .and_then(|part| steady_velocity(&p, part))
        .ok();
    let mut point = SweepPoint {
        value,
        steady: None,
        exact_hz: prediction.map(|s| s.exact / std::f64::consts::PI),
        asymptotic_hz: prediction.map(|s| s.asymptotic / std::f64::consts::PI),
        error: None,
        output,
    };
    let result = run_scenario(&spec.scenario, &p).and_then(|run| {
        let mut bytes = Vec::new();
        write_records(&mut bytes, &run.records)?;
        write_atomic(&point.output, &bytes)?;
        Ok(run)
    });
    match result {
        Ok(run) => point.steady = steady_beat(&run.records, spec.scenario.settle_fraction),
        Err(e) => {
            log::warn!("{} = {value:e}: {e}", spec.parameter.name());
            point.error = Some(e.to_string());
        }
    }
    point
}

/// Runs every sweep point on up to `threads` workers, writing one dynamics
/// CSV per point and `summary.csv` into the output directory. A failing
/// point is recorded in its row and the others still run.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepSummary> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.output).map_err(|source| Error::File {
        path: spec.output.clone(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        spec.values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| run_point(spec, i, v))
            .collect()
    });
    let measured: Vec<(f64, f64)> = points
        .iter()
        .filter(|pt| pt.converged())
        .filter_map(|pt| Some((pt.value, pt.steady?.mean)))
        .collect();
    let predicted: Option<Vec<(f64, f64)>> =
        points.iter().map(|pt| Some((pt.value, pt.exact_hz?))).collect();
    let summary = SweepSummary {
        parameter: spec.parameter,
        slope: loglog_slope(&measured),
        exact_slope: predicted.and_then(|v| loglog_slope(&v)),
        points,
    };
    let mut bytes = Vec::new();
    write_summary(&mut bytes, &summary)?;
    write_atomic(&spec.output.join("summary.csv"), &bytes)?;
    Ok(summary)
}

pub fn write_summary<W: Write>(out: W, summary: &SweepSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for pt in &summary.points {
        w.write_record([
            fmt_f64(pt.value),
            fmt_opt(pt.steady.map(|s| s.mean)),
            fmt_opt(pt.steady.map(|s| s.spread())),
            (pt.converged() as u8).to_string(),
            fmt_opt(pt.exact_hz),
            fmt_opt(pt.asymptotic_hz),
            pt.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    /// `k v_cm` of the simulation, rad/s.
    pub kv_sim: f64,
    pub kv_oracle: f64,
    /// `(kv_sim - kv_oracle) / kv_oracle`; `None` where the oracle is zero.
    pub rel_dev: Option<f64>,
    /// Whether the row counts towards pass/fail.
    pub judged: bool,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub protocol: Protocol,
    pub rows: Vec<ComparisonRow>,
    pub tolerance: f64,
    /// Largest `|rel_dev|` over judged rows.
    pub max_deviation: Option<f64>,
    pub judged: usize,
    pub passed: bool,
    pub warnings: Vec<RunWarning>,
}

/// Runs the scenario and compares it with its oracle.
pub fn compare(p: &SystemParams, cfg: &ScenarioConfig) -> Result<Comparison> {
    oracle_params(p, cfg)?;
    let run = run_scenario(cfg, p)?;
    compare_run(p, cfg, &run)
}

/// Parameters after every scenario event, and the protocol check.
fn oracle_params(p: &SystemParams, cfg: &ScenarioConfig) -> Result<SystemParams> {
    let mut q = *p;
    for ev in &cfg.events {
        ev.kind.apply(&mut q);
    }
    match cfg.protocol {
        Protocol::SwitchOff if q.gamma_fric != 0.0 => Err(Error::invalid(
            "switch_off comparison needs gamma_fric = 0 after the events",
        )),
        Protocol::SwitchOff | Protocol::Molasses => Ok(q),
        Protocol::Custom => Err(Error::invalid(
            "compare needs protocol = switch_off or protocol = molasses",
        )),
    }
}

/// Compares a finished run of `cfg` with its oracle.
///
/// * `switch_off`: the frictionless cubic chirp, judged where
///   `2 kv_oracle < adiabatic_limit * kappa`.
/// * `molasses`: the exact steady root, judged over the trailing
///   `settle_fraction` of the run.
pub fn compare_run(p: &SystemParams, cfg: &ScenarioConfig, run: &RunOutput) -> Result<Comparison> {
    let q = oracle_params(p, cfg)?;
    let part = Participation::new(cfg.participation)?;
    let k = p.wavenumber();
    let t_last = run.records.last().map_or(0.0, |r| r.t);
    let steady = match cfg.protocol {
        Protocol::Molasses => Some(steady_velocity(&q, part)?.exact),
        _ => None,
    };
    let rows: Vec<ComparisonRow> = run
        .records
        .iter()
        .map(|r| {
            let kv_oracle = steady.unwrap_or_else(|| cubic_chirp(r.t, &q, part));
            let rel_dev = (kv_oracle != 0.0).then(|| (k * r.v_cm - kv_oracle) / kv_oracle);
            let in_window = match steady {
                Some(_) => r.t >= t_last * (1.0 - cfg.settle_fraction),
                None => 2.0 * kv_oracle < cfg.adiabatic_limit * q.kappa,
            };
            ComparisonRow {
                t: r.t,
                kv_sim: k * r.v_cm,
                kv_oracle,
                rel_dev,
                judged: in_window && rel_dev.is_some(),
            }
        })
        .collect();
    let judged: Vec<f64> = rows
        .iter()
        .filter(|r| r.judged)
        .filter_map(|r| r.rel_dev.map(f64::abs))
        .collect();
    let max_deviation = judged.iter().copied().reduce(f64::max);
    Ok(Comparison {
        protocol: cfg.protocol,
        tolerance: cfg.tolerance,
        passed: max_deviation.is_some_and(|d| d < cfg.tolerance),
        judged: judged.len(),
        max_deviation,
        rows,
        warnings: run.warnings.clone(),
    })
}

pub fn write_comparison<W: Write>(out: W, cmp: &Comparison) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_HEADER)?;
    for r in &cmp.rows {
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.kv_sim),
            fmt_f64(r.kv_oracle),
            fmt_opt(r.rel_dev),
            (r.judged as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Both beat-frequency estimates for every record.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub phase_slope: Vec<Option<f64>>,
    pub zero_crossing: Vec<Option<f64>>,
}

/// Runs both estimators over a dynamics series. `contrast_floor` is relative
/// to the bare pump beat level of `p`.
pub fn estimate(
    records: &[TimeSeriesRecord],
    p: &SystemParams,
    window: f64,
    contrast_floor: f64,
) -> Result<Estimates> {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let alphas: Vec<_> = records.iter().map(|r| r.alpha_minus).collect();
    let beats: Vec<f64> = records.iter().map(|r| r.p_beat).collect();
    Ok(Estimates {
        phase_slope: beat_frequency_phase_slope(&times, &alphas, window)?,
        zero_crossing: beat_frequency_zero_crossing(
            &times,
            &beats,
            window,
            contrast_floor_watts(contrast_floor, p)?,
        ),
    })
}
