//! Model-free control of a fleet of identical buildings whose HVAC units
//! regulate room temperature while their combined draw follows a PV
//! generation profile.
//!
//! - [`mfc`]: ultra-local model, iP controller and the windowed estimators of `F`.
//! - [`plant`]: three-state RC building model and its RK4 integration.
//! - [`coordinator`]: PV band, per-building bounds and the fleet step.
//! - [`scenario`]: configuration, synthetic profiles and CSV profiles.
//! - [`sim`]: scenario runner, metrics and trace files.

pub mod coordinator;
pub mod error;
pub mod mfc;
pub mod plant;
pub mod scenario;
pub mod sim;

pub use coordinator::{
    clamp_to_bounds, coordinator_step, per_building_bounds, power_band, Building, BuildingBounds,
    FleetConfig, PowerBand, StepRecord,
};
pub use error::{Error, Result};
pub use mfc::{
    estimate_f_algebraic, estimate_f_closed_loop, ip_control, Estimator, IpController, Reference,
    Sample, SampleWindow,
};
pub use plant::{
    build_matrices, plant_derivative, plant_step, BuildingParams, BuildingState, DisturbanceSample,
    StateSpace,
};
pub use scenario::{
    load_config, load_profile_csv, parse_config, synth_disturbances, synth_pv, Profile,
    ProfileKind, ScenarioConfig,
};
pub use sim::{
    compute_metrics, read_trace, run_simulation, write_trace, MetricsReport, SimulationTrace,
};
