//! Breakthrough detection, Lipschitz tracking and the armed gradient bounds.

mod bounds;
mod pressure;
mod scan;
mod scenario;
mod trace;

pub use bounds::{arm_bound, BoundFormula, BoundKind};
pub use pressure::{
    pressure_lemma_check, random_solenoidal, PressureCheckOptions, PressureLemmaReport,
};
pub use scan::{
    breakthrough_scan, empirical_modulus, holder_seminorm, increment_profile, increment_scan,
    Breakthrough, ScanOptions, ScanResult, ShiftIncrement,
};
pub use scenario::{registry, run_experiment, ExperimentConfig, Scenario, ScenarioRegistry, Setup};
pub use trace::{BlowupEvent, BoundExceedance, BoundTrace, SimulationTrace};
