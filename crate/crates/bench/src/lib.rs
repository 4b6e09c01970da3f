//! Shared fixtures for the criterion benchmarks.

use carl::dynamics::{initial_probe, sample_initial, InitialDistribution, ScenarioConfig};
use carl::{SystemParams, SystemState};

/// Molasses-like parameters: locked cavity, friction on.
pub fn molasses_params() -> SystemParams {
    let mut p = SystemParams::default();
    p.gamma_fric = 9.0 * p.kappa;
    p
}

/// A homogeneous thermal state with `particles` macro-particles.
pub fn thermal_state(p: &SystemParams, particles: usize) -> SystemState {
    let cfg = ScenarioConfig {
        initial: InitialDistribution::HomogeneousThermal { temperature: 200e-6 },
        particles,
        seed: 1,
        ..ScenarioConfig::default()
    };
    let ens = sample_initial(&cfg, p).expect("valid fixture");
    let alpha = initial_probe(&cfg, p, &ens).expect("valid fixture");
    SystemState::new(alpha, ens)
}
