use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adversary::simulate_against_learner;
use super::config::{choose_mu, EllRule, ExperimentConfig, Setting};
use super::fit::{exponent_fit, ExponentFit};
use super::regret::{max_regressor_norm, regret_full, regret_partial, RegretRecord};
use crate::error::{Error, Result};
use crate::kalman::{solve_dare, sufficient_length, KalmanSteadyState};
use crate::linalg::Matrix;
use crate::predictors::{orr_regret_bound, run_online, ArConfig, ArLearner, LdsLearner};
use crate::rng::derive_seed;
use crate::structural::{ch_noise_bound, ch_recurrence_residual, char_poly, leverage_diagnostics, outlier_indices};
use crate::systems::{
    counterexample_instance, initial_mean, random_sign, simulate_full, simulate_partial, NoiseKind, SystemSpec,
    Trajectory,
};

/// Outlier sets are only computed up to this horizon.
pub const OUTLIER_HORIZON_LIMIT: usize = 1024;

/// Both sides of the online least squares regret inequality for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrrCheck {
    pub regret: f64,
    pub bound: f64,
    pub holds: bool,
}

impl OrrCheck {
    pub fn new(regret: f64, bound: f64) -> Self {
        OrrCheck {
            regret,
            bound,
            holds: regret <= bound * (1.0 + 1e-9) + 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CellDiagnostics {
    /// `max_t Σ_{s<t} x_sᵀΣ_t⁻¹x_s / d`, at most 1.
    pub leverage_ratio: Option<f64>,
    /// `(|I_T|, d log₂ max‖x‖)`.
    pub outliers: Option<(usize, f64)>,
    /// `(max residual, d 2^d C_A C_ξ)` of the Cayley–Hamilton recurrence.
    pub cayley_hamilton: Option<(f64, f64)>,
}

/// One `(T, trial)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub horizon: usize,
    pub trial: usize,
    pub mu: f64,
    pub ell: Option<usize>,
    pub regret: f64,
    pub max_pred_err: f64,
    pub orr: Option<OrrCheck>,
    pub diagnostics: Option<CellDiagnostics>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub horizon: usize,
    pub mu: f64,
    pub mean_regret: f64,
    pub min_regret: f64,
    pub max_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrrSummary {
    pub checked: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub name: Option<String>,
    pub setting: Setting,
    pub trials: usize,
    pub delta: f64,
    pub ell: Option<usize>,
    pub horizons: Vec<HorizonSummary>,
    /// Fit of mean regret against `T`; absent with fewer than 3 horizons.
    pub fit: Option<ExponentFit>,
    pub orr: OrrSummary,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub cells: Vec<CellResult>,
    pub summary: Summary,
}

impl ExperimentOutput {
    /// 0 on success, 2 when any invariant was violated.
    pub fn exit_code(&self) -> i32 {
        if self.summary.violations.is_empty() {
            0
        } else {
            2
        }
    }

    pub fn runs_csv(&self) -> String {
        let s = &self.summary;
        let group = s.name.clone().unwrap_or_else(|| s.setting.to_string());
        let mut out = String::from("config_hash,setting,T,trial,mu,ell,regret,max_pred_err,slope_group\n");
        for c in &self.cells {
            let ell = c.ell.map(|l| l.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{:?},{},{:?},{:?},{}",
                s.config_hash, s.setting, c.horizon, c.trial, c.mu, ell, c.regret, c.max_pred_err, group
            )
            .expect("write to string");
        }
        out
    }

    /// Writes `runs.csv` (or `runs.json`) and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        match format {
            OutputFormat::Csv => write("runs.csv", self.runs_csv())?,
            OutputFormat::Json => write("runs.json", serde_json::to_string_pretty(&self.cells)? + "\n")?,
        }
        write("summary.json", serde_json::to_string_pretty(&self.summary)? + "\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A system instance for one trial: the noise seed is mixed with the
/// experiment seed and trial index, and the same trial shares its noise
/// across horizons.
pub fn trial_system(sys: &SystemSpec, seed: u64, trial: usize) -> (SystemSpec, u64) {
    let mut s = sys.clone();
    s.noise.seed = derive_seed(&[sys.noise.seed, seed, trial as u64]);
    (s, derive_seed(&[seed, trial as u64]))
}

/// A validated configuration with its system, steady-state filter and
/// lag length built once for all cells.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: Option<SystemSpec>,
    pub kalman: Option<KalmanSteadyState>,
    pub ell: Option<usize>,
}

/// The learner's predictions on one simulated `(T, trial)` cell.
#[derive(Debug, Clone)]
pub struct PredictionRun {
    pub horizon: usize,
    pub trial: usize,
    pub mu: f64,
    pub ell: Option<usize>,
    /// The trial's system (noise seed mixed in).
    pub system: SystemSpec,
    pub trajectory: Trajectory,
    /// `x̂_1..x̂_T` in the full settings, `ŷ_0..ŷ_T` in the partial one.
    pub predictions: Vec<Vec<f64>>,
    pub record: RegretRecord,
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let system = config.system.as_ref().map(|s| s.build()).transpose()?;
        let kalman = match (&system, config.setting) {
            (Some(sys), Setting::PartialStochastic) => Some(steady_state_for(sys)?),
            _ => None,
        };
        let ell = match (&kalman, config.ell.unwrap_or_default()) {
            (Some(kf), EllRule::SufficientLength { eps }) => Some(sufficient_length(kf, eps)?.length),
            (Some(_), EllRule::Explicit { value }) => Some(value),
            (None, _) => None,
        };
        Ok(Experiment {
            config: config.clone(),
            system,
            kalman,
            ell,
        })
    }

    /// Simulates one cell and runs the setting's learner over it.
    pub fn predict(&self, horizon: usize, trial: usize) -> Result<PredictionRun> {
        let cfg = &self.config;
        let base = self
            .system
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("setting {} has no simulated system", cfg.setting)))?;
        let (mut sys, sim_seed) = trial_system(base, cfg.seed, trial);
        let (d, m) = (sys.state_dim(), sys.input_dim());
        if let (Some(kf), Some(ell)) = (&self.kalman, self.ell) {
            let n = kf.c_kf.rows();
            let ar = ArConfig {
                ell,
                input_dim: m,
                obs_dim: n,
            };
            let mu = choose_mu(cfg.mu, cfg.setting, horizon, sys.r, ar.feature_dim(), cfg.constants.as_ref())?;
            let traj = simulate_partial(&sys, &cfg.inputs, horizon, sim_seed)?;
            let x0 = initial_mean(&sys, sim_seed)?;
            let mut learner = ArLearner::new(ar, mu)?;
            let mut preds = vec![vec![0.0; n]];
            for t in 0..horizon {
                preds.push(learner.step(&traj, t)?);
            }
            let record = regret_partial(&traj, &preds, kf, &x0, ell)?;
            return Ok(PredictionRun {
                horizon,
                trial,
                mu,
                ell: Some(ell),
                system: sys,
                trajectory: traj,
                predictions: preds,
                record,
            });
        }
        let mu = choose_mu(cfg.mu, cfg.setting, horizon, sys.r, d + m, cfg.constants.as_ref())?;
        if let NoiseKind::AdversarialLeastExplored { regularizer, .. } = &mut sys.noise.kind {
            regularizer.get_or_insert(mu);
        }
        let (traj, preds) = match cfg.adversary {
            Some(adv) => simulate_against_learner(&sys, &cfg.inputs, adv, horizon, sim_seed, mu)?,
            None => {
                let traj = simulate_full(&sys, &cfg.inputs, horizon, sim_seed)?;
                let mut learner = LdsLearner::new(d, m, mu)?;
                let preds = (0..horizon).map(|t| learner.step(&traj, t)).collect::<Result<Vec<_>>>()?;
                (traj, preds)
            }
        };
        let record = regret_full(&traj, &preds, &sys.a, &sys.b)?;
        Ok(PredictionRun {
            horizon,
            trial,
            mu,
            ell: None,
            system: sys,
            trajectory: traj,
            predictions: preds,
            record,
        })
    }

    /// Runs every `(T, trial)` cell, in parallel across cells and merged in
    /// `(T, trial)` order.
    pub fn run(&self) -> Result<ExperimentOutput> {
        let cfg = &self.config;
        let cells: Vec<(usize, usize)> = cfg
            .horizons
            .iter()
            .flat_map(|&t| (0..cfg.trials).map(move |k| (t, k)))
            .collect();
        let results: Vec<Result<CellResult>> = cells
            .par_iter()
            .map(|&(t, k)| match cfg.setting {
                Setting::OlsLowerBound => lower_bound_cell(cfg, t, k),
                _ => self.cell(t, k),
            })
            .collect();
        let cells = results.into_iter().collect::<Result<Vec<_>>>()?;
        let summary = summarize(cfg, self.ell, &cells);
        Ok(ExperimentOutput { cells, summary })
    }

    fn cell(&self, horizon: usize, trial: usize) -> Result<CellResult> {
        let run = self.predict(horizon, trial)?;
        let mut violations = Vec::new();
        let mut orr = None;
        let mut diagnostics = None;
        if self.config.setting.is_full() {
            let sys = &run.system;
            let (d, m) = (sys.state_dim(), sys.input_dim());
            let fro = sys.a.frobenius_norm().powi(2) + sys.b.frobenius_norm().powi(2);
            let bound = orr_regret_bound(
                run.mu,
                fro,
                run.record.max_err_sq(),
                d + m,
                horizon,
                max_regressor_norm(&run.trajectory),
            );
            let check = OrrCheck::new(run.record.regret, bound);
            if !check.holds {
                violations.push(format!(
                    "T={horizon} trial={trial}: regret {} exceeds least squares bound {}",
                    check.regret, check.bound
                ));
            }
            orr = Some(check);
            if self.config.diagnostics {
                let c_xi = self.config.adversary.map(|a| a.bound());
                diagnostics = Some(diagnose_cell(sys, &run.trajectory, run.mu, c_xi, horizon, trial, &mut violations)?);
            }
        }
        Ok(CellResult {
            horizon,
            trial,
            mu: run.mu,
            ell: run.ell,
            regret: run.record.regret,
            max_pred_err: run.record.max_pred_err,
            orr,
            diagnostics,
            violations,
        })
    }
}

/// [`Experiment::new`] followed by [`Experiment::run`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    Experiment::new(cfg)?.run()
}

/// Steady-state filter of a system with an observation matrix and gaussian
/// noise.
pub fn steady_state_for(sys: &SystemSpec) -> Result<KalmanSteadyState> {
    let c = sys.c.as_ref().ok_or(Error::RequiresObservationMatrix)?;
    match &sys.noise.kind {
        NoiseKind::Gaussian { sigma_x, sigma_y } => {
            let sy = sigma_y.clone().unwrap_or_else(|| Matrix::zeros(c.rows(), c.rows()));
            solve_dare(&sys.a, &sys.b, c, sigma_x, &sy)
        }
        _ => Err(Error::InvalidParameter("partial observation needs gaussian noise".into())),
    }
}

fn diagnose_cell(
    sys: &SystemSpec,
    traj: &Trajectory,
    mu: f64,
    adversary_bound: Option<f64>,
    horizon: usize,
    trial: usize,
    violations: &mut Vec<String>,
) -> Result<CellDiagnostics> {
    let d = sys.state_dim();
    let tag = format!("T={horizon} trial={trial}");
    let mut diag = CellDiagnostics::default();

    let lev = leverage_diagnostics(&traj.states[..horizon], mu, 0)?;
    let worst = lev.iter().map(|r| r.quad_sum).fold(0.0, f64::max) / d as f64;
    if worst > 1.0 + 1e-10 {
        violations.push(format!("{tag}: leverage sum ratio {worst} exceeds 1"));
    }
    diag.leverage_ratio = Some(worst);

    let max_norm = traj.max_state_norm();
    if horizon <= OUTLIER_HORIZON_LIMIT && max_norm >= 2.0 {
        let set = outlier_indices(&traj.states)?;
        let bound = d as f64 * max_norm.log2();
        if set.indices.len() as f64 > bound {
            violations.push(format!("{tag}: {} outliers exceed d log2 max |x| = {bound}", set.indices.len()));
        }
        diag.outliers = Some((set.indices.len(), bound));
    }

    let inputs_zero = traj.inputs.iter().flatten().all(|&u| u == 0.0);
    if let (Some(c_xi), true) = (adversary_bound.or(sys.noise.bound()), inputs_zero) {
        let cp = char_poly(&sys.a)?;
        let res = ch_recurrence_residual(&traj.states, cp.recurrence())?;
        let worst = res.iter().copied().fold(0.0, f64::max);
        let bound = ch_noise_bound(d, sys.c_a, c_xi);
        let slack = 1e-9 * (1.0 + max_norm);
        if worst > bound + slack {
            violations.push(format!("{tag}: recurrence residual {worst} exceeds {bound}"));
        }
        diag.cayley_hamilton = Some((worst, bound));
    }
    Ok(diag)
}

fn lower_bound_cell(cfg: &ExperimentConfig, horizon: usize, trial: usize) -> Result<CellResult> {
    let mu = choose_mu(cfg.mu, cfg.setting, horizon, 1, 1, cfg.constants.as_ref())?;
    let sign = random_sign(cfg.seed, trial as u64);
    let seq = counterexample_instance(horizon, sign)?;
    let comparator = Matrix::from_rows(&[[sign]]);
    let run = run_online(&seq.xs, &seq.ys, mu, Some(&comparator))?;
    let regret = run.regret().expect("comparator given");
    let bound = orr_regret_bound(mu, 1.0, run.max_err_sq, 1, horizon, run.max_x_norm);
    let orr = OrrCheck::new(regret, bound);
    let mut violations = Vec::new();
    if !orr.holds {
        violations.push(format!("T={horizon} trial={trial}: regret {regret} exceeds bound {bound}"));
    }
    Ok(CellResult {
        horizon,
        trial,
        mu,
        ell: None,
        regret,
        max_pred_err: run.max_err_sq.sqrt(),
        orr: Some(orr),
        diagnostics: None,
        violations,
    })
}

fn summarize(cfg: &ExperimentConfig, ell: Option<usize>, cells: &[CellResult]) -> Summary {
    let horizons: Vec<HorizonSummary> = cfg
        .horizons
        .iter()
        .map(|&t| {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.horizon == t).collect();
            let regrets: Vec<f64> = group.iter().map(|c| c.regret).collect();
            HorizonSummary {
                horizon: t,
                mu: group[0].mu,
                mean_regret: regrets.iter().sum::<f64>() / regrets.len() as f64,
                min_regret: regrets.iter().copied().fold(f64::INFINITY, f64::min),
                max_regret: regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    let pairs: Vec<(f64, f64)> = horizons.iter().map(|h| (h.horizon as f64, h.mean_regret)).collect();
    let fit = exponent_fit(&pairs).ok();
    let checks: Vec<&OrrCheck> = cells.iter().filter_map(|c| c.orr.as_ref()).collect();
    Summary {
        config_hash: cfg.hash(),
        name: cfg.name.clone(),
        setting: cfg.setting,
        trials: cfg.trials,
        delta: cfg.delta,
        ell,
        horizons,
        fit,
        orr: OrrSummary {
            checked: checks.len(),
            violations: checks.iter().filter(|c| !c.holds).count(),
        },
        violations: cells.iter().flat_map(|c| c.violations.iter().cloned()).collect(),
    }
}
