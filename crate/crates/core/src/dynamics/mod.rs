//! Integration of the coupled probe-field and macro-particle equations.

mod integrator;
mod kernel;
mod sampling;
mod scenario;
mod state;

pub use integrator::{step, step_stiffness, Rk4, STEP_BOUND};
pub use kernel::{photon_transfer_rate, rhs, weighted_phasor_sum, Coupling, Kernel, DEFAULT_CHUNK_SIZE};
pub use sampling::{
    sample_ensemble, sample_von_mises, trap_concentration, InitialDistribution, MAX_DEPTH_OVER_KT,
};
pub use scenario::{
    fill_beat_frequency, initial_probe, run_from_state, run_scenario, sample_initial, Event, EventKind,
    Protocol, RunOutput, RunWarning, ScenarioConfig, Simulation, SCENARIO_KEYS,
};
pub use state::{Derivative, EnsembleState, ProbeField, SystemState};
