//! Collective atomic recoil lasing in a unidirectionally pumped ring cavity.
//!
//! * [`params`]: physical constants, unit conversions, `chi` and `alpha_+`.
//! * [`dynamics`]: the coupled probe/macro-particle equations, RK4 stepping
//!   and scenario runs with switching events.
//! * [`observables`]: beat and probe powers, bunching, centre of mass and two
//!   beat-frequency estimators.
//! * [`analytic`]: the perfect-bunching mean-field layer (cubic chirp and
//!   friction-limited steady state) used as an oracle for the simulation.
//! * [`harness`]: parameter sweeps and simulation-vs-oracle comparisons.

pub mod analytic;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod io;
pub mod observables;
pub mod params;

pub use analytic::{MeanFieldState, Participation, SteadyVelocity};
pub use dynamics::{EnsembleState, ProbeField, ScenarioConfig, SystemState};
pub use error::{ConfigError, Error, Result};
pub use observables::TimeSeriesRecord;
pub use params::{DerivedParams, SystemParams};
