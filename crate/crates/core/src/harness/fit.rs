use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Substitute for non-positive regrets before taking logs.
pub const REGRET_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual of the log-log fit.
    pub residual: f64,
    /// Some regret was `≤ 0` and replaced by [`REGRET_FLOOR`].
    pub substituted: bool,
}

/// Least-squares line through `(ln T, ln R_T)`.
pub fn exponent_fit(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "exponent fit needs at least 3 horizons, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().any(|&(t, r)| !(t > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter("horizons must be positive and regrets finite".into()));
    }
    let substituted = pairs.iter().any(|&(_, r)| r <= 0.0);
    let pts: Vec<(f64, f64)> = pairs.iter().map(|&(t, r)| (t.ln(), r.max(REGRET_FLOOR).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("horizons must not all coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(ExponentFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        substituted,
    })
}
