use serde::{Deserialize, Serialize};

use super::run::Experiment;
use crate::error::Result;
use crate::structural::{
    anomaly_pareto, certify_anomaly_free, ch_noise_bound, ch_recurrence_residual, char_poly, jordan_power_check,
    leverage_diagnostics, outlier_indices, AnomalyParams, AnomalyReport, CharPoly, Directions, JordanPowerReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    /// Random directions probed in addition to the Gram eigenvectors.
    pub directions: usize,
    pub alpha: f64,
    pub c1_grid: Vec<f64>,
    pub c2_grid: Vec<f64>,
    /// Outlier sets are skipped above this horizon.
    pub outlier_limit: usize,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            directions: 8,
            alpha: 1.0,
            c1_grid: vec![0.05, 0.1, 0.2, 0.3, 0.5],
            c2_grid: vec![0.1, 0.25, 0.5, 0.75],
            outlier_limit: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSummary {
    pub indices: Vec<usize>,
    pub bound: f64,
    pub max_gap: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub horizon: usize,
    pub trial: usize,
    pub max_state_norm: f64,
    pub char_poly: CharPoly,
    pub jordan: JordanPowerReport,
    pub outliers: Option<OutlierSummary>,
    /// `max_t Σ_{s<t} x_sᵀΣ_t⁻¹x_s / d`.
    pub leverage_ratio: f64,
    /// `(max residual, d 2^d C_A C_ξ)` when the noise is bounded and the
    /// inputs vanish.
    pub cayley_hamilton: Option<(f64, f64)>,
    pub pareto: Vec<AnomalyParams>,
    /// Certification at the frontier point with the largest `c₁`.
    pub anomaly: Option<AnomalyReport>,
    pub violations: Vec<String>,
}

/// Structural diagnostics on the simulated `(T, trial)` cell.
pub fn diagnose(exp: &Experiment, horizon: usize, trial: usize, opts: &DiagnoseOptions) -> Result<DiagnosticsReport> {
    let run = exp.predict(horizon, trial)?;
    let sys = &run.system;
    let states = &run.trajectory.states;
    let d = sys.state_dim();
    let max_norm = run.trajectory.max_state_norm();
    let mut violations = Vec::new();

    let cp = char_poly(&sys.a)?;
    if cp.abs_sum > 2f64.powi(d as i32) * (1.0 + 1e-9) {
        violations.push(format!("characteristic polynomial coefficient sum {} exceeds 2^d", cp.abs_sum));
    }
    let jordan = jordan_power_check(&sys.a, sys.r, sys.c_a, horizon)?;
    if !jordan.holds() {
        violations.push(format!("power ratio {} exceeds 1", jordan.worst_ratio.max(jordan.worst_sum_ratio)));
    }

    let outliers = if horizon <= opts.outlier_limit && max_norm >= 2.0 {
        let set = outlier_indices(states)?;
        let bound = d as f64 * max_norm.log2();
        let holds = set.indices.len() as f64 <= bound;
        if !holds {
            violations.push(format!("{} outliers exceed d log2 max |x| = {bound}", set.indices.len()));
        }
        Some(OutlierSummary {
            indices: set.indices,
            bound,
            max_gap: set.max_gap,
            holds,
        })
    } else {
        None
    };

    let lev = leverage_diagnostics(&states[..horizon], run.mu, 0)?;
    let leverage_ratio = lev.iter().map(|r| r.quad_sum).fold(0.0, f64::max) / d as f64;
    if leverage_ratio > 1.0 + 1e-10 {
        violations.push(format!("leverage sum ratio {leverage_ratio} exceeds 1"));
    }

    let c_xi = exp.config.adversary.map(|a| a.bound()).or(sys.noise.bound());
    let inputs_zero = run.trajectory.inputs.iter().flatten().all(|&u| u == 0.0);
    let cayley_hamilton = match (c_xi, inputs_zero) {
        (Some(c_xi), true) => {
            let res = ch_recurrence_residual(states, cp.recurrence())?;
            let worst = res.iter().copied().fold(0.0, f64::max);
            let bound = ch_noise_bound(d, sys.c_a, c_xi);
            if worst > bound + 1e-9 * (1.0 + max_norm) {
                violations.push(format!("recurrence residual {worst} exceeds {bound}"));
            }
            Some((worst, bound))
        }
        _ => None,
    };

    let dirs = Directions::Random {
        count: opts.directions,
        seed: exp.config.seed,
    };
    let pareto = anomaly_pareto(states, &dirs, opts.alpha, &opts.c1_grid, &opts.c2_grid)?;
    let anomaly = pareto
        .iter()
        .max_by(|a, b| a.c1.total_cmp(&b.c1).then(b.c.total_cmp(&a.c)))
        .map(|p| certify_anomaly_free(states, &dirs, *p))
        .transpose()?;

    Ok(DiagnosticsReport {
        horizon,
        trial,
        max_state_norm: max_norm,
        char_poly: cp,
        jordan,
        outliers,
        leverage_ratio,
        cayley_hamilton,
        pareto,
        anomaly,
        violations,
    })
}
