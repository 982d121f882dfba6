//! Experiment orchestration: regularizer rules, regret records, horizon
//! sweeps with exponent fits, and result files.

mod adversary;
mod config;
mod diagnose;
mod fit;
mod regret;
mod run;

pub use adversary::{simulate_against_learner, Adversary};
pub use config::{
    choose_mu, EllRule, ExperimentConfig, JordanSystem, MuRule, Setting, StructuralConstants, SystemSource,
};
pub use diagnose::{diagnose, DiagnoseOptions, DiagnosticsReport, OutlierSummary};
pub use fit::{exponent_fit, ExponentFit, REGRET_FLOOR};
pub use regret::{max_regressor_norm, regret_full, regret_partial, RegretRecord};
pub use run::{
    run_experiment, steady_state_for, trial_system, CellDiagnostics, CellResult, Experiment, ExperimentOutput, HorizonSummary, OrrCheck,
    OrrSummary, OutputFormat, PredictionRun, Summary, OUTLIER_HORIZON_LIMIT,
};
