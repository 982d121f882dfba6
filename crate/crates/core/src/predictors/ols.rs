use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, rank_one_inverse_update, solve_spd, Cholesky, Matrix};
use crate::numeric::{format_hex_float, parse_hex_float, KahanSum};

/// Updates between full Cholesky re-factorizations of `Σ`.
pub const REFACTOR_INTERVAL: usize = 256;

/// Ridge-regularized online least squares:
/// `A_t = argmin_A μ‖A‖_F² + Σ_{s<t} ‖A x_s − y_s‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsState {
    mu: f64,
    sigma: Matrix,
    sigma_inv: Matrix,
    cross: Matrix,
    coef: Matrix,
    t: usize,
    since_refactor: usize,
}

impl OlsState {
    pub fn new(dim_in: usize, dim_out: usize, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::NonPositiveRegularizer(mu));
        }
        Ok(OlsState {
            mu,
            sigma: Matrix::scaled_identity(dim_in, mu),
            sigma_inv: Matrix::scaled_identity(dim_in, 1.0 / mu),
            cross: Matrix::zeros(dim_out, dim_in),
            coef: Matrix::zeros(dim_out, dim_in),
            t: 0,
            since_refactor: 0,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Number of updates so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim_in(&self) -> usize {
        self.sigma.rows()
    }

    pub fn dim_out(&self) -> usize {
        self.cross.rows()
    }

    /// `Σ = μI + Σ x_s x_sᵀ`
    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &Matrix {
        &self.sigma_inv
    }

    /// `Y = Σ y_s x_sᵀ`
    pub fn cross(&self) -> &Matrix {
        &self.cross
    }

    /// Current coefficients `A_t = Y Σ⁻¹`.
    pub fn coefficients(&self) -> &Matrix {
        &self.coef
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.coef.mul_vec(x)
    }

    pub fn update(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.dim_in() || y.len() != self.dim_out() {
            return Err(Error::dims(format!(
                "ols update with x of length {} and y of length {}, expected {} and {}",
                x.len(),
                y.len(),
                self.dim_in(),
                self.dim_out()
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ols update"));
        }
        self.sigma.add_outer(1.0, x, x);
        self.cross.add_outer(1.0, y, x);
        self.t += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL {
            self.sigma_inv = Cholesky::new(&self.sigma)?.inverse();
            self.since_refactor = 0;
        } else {
            self.sigma_inv = rank_one_inverse_update(&self.sigma_inv, x);
        }
        self.coef = self.cross.matmul(&self.sigma_inv)?;
        Ok(())
    }

    /// Exact text dump of the state (hexadecimal floats).
    pub fn checkpoint(&self) -> OlsCheckpoint {
        let hex = |m: &Matrix| m.as_slice().iter().map(|&v| format_hex_float(v)).collect();
        OlsCheckpoint {
            mu: format_hex_float(self.mu),
            t: self.t,
            dim_in: self.dim_in(),
            dim_out: self.dim_out(),
            sigma: hex(&self.sigma),
            sigma_inv: hex(&self.sigma_inv),
            cross: hex(&self.cross),
            since_refactor: self.since_refactor,
        }
    }

    /// Restores a state; continuing from it is bitwise identical to
    /// continuing the original.
    pub fn restore(cp: &OlsCheckpoint) -> Result<Self> {
        let parse = |v: &[String], rows: usize, cols: usize| -> Result<Matrix> {
            let data = v
                .iter()
                .map(|s| parse_hex_float(s))
                .collect::<Result<Vec<_>>>()?;
            Matrix::from_row_major(rows, cols, data)
        };
        let mu = parse_hex_float(&cp.mu)?;
        if !(mu > 0.0) {
            return Err(Error::NonPositiveRegularizer(mu));
        }
        let sigma = parse(&cp.sigma, cp.dim_in, cp.dim_in)?;
        let sigma_inv = parse(&cp.sigma_inv, cp.dim_in, cp.dim_in)?;
        let cross = parse(&cp.cross, cp.dim_out, cp.dim_in)?;
        let coef = cross.matmul(&sigma_inv)?;
        Ok(OlsState {
            mu,
            sigma,
            sigma_inv,
            cross,
            coef,
            t: cp.t,
            since_refactor: cp.since_refactor,
        })
    }
}

/// Serializable form of [`OlsState`]; matrices are row-major lists of
/// hexadecimal float strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsCheckpoint {
    pub mu: String,
    pub t: usize,
    pub dim_in: usize,
    pub dim_out: usize,
    pub sigma: Vec<String>,
    pub sigma_inv: Vec<String>,
    pub cross: Vec<String>,
    pub since_refactor: usize,
}

/// Batch ridge solution `(Σ y_s x_sᵀ)(μI + Σ x_s x_sᵀ)⁻¹`, one SPD solve
/// per output row.
pub fn ols_batch_solve(xs: &[Vec<f64>], ys: &[Vec<f64>], dim_in: usize, dim_out: usize, mu: f64) -> Result<Matrix> {
    if !(mu > 0.0) {
        return Err(Error::NonPositiveRegularizer(mu));
    }
    if xs.len() != ys.len() {
        return Err(Error::dims("batch solve history lengths"));
    }
    let mut sigma = Matrix::scaled_identity(dim_in, mu);
    let mut cross = Matrix::zeros(dim_out, dim_in);
    for (x, y) in xs.iter().zip(ys) {
        sigma.add_outer(1.0, x, x);
        cross.add_outer(1.0, y, x);
    }
    let mut a = Matrix::zeros(dim_out, dim_in);
    for i in 0..dim_out {
        let row = solve_spd(&sigma, cross.row(i))?;
        a.row_mut(i).copy_from_slice(&row);
    }
    Ok(a)
}

/// Right-hand side of the prediction-error identity
///
/// ```text
/// A_t x_t − y_t = (Σ_{s<t} ξ_s x_sᵀ) Σ_t⁻¹ x_t − μ A Σ_t⁻¹ x_t − ξ_t
/// ```
///
/// for data `y_s = A x_s + ξ_s`. The history is checked against the model
/// to `1e-10 (1 + ‖y_s‖∞)`.
pub fn residual_closed_form(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    mu: f64,
    a_true: &Matrix,
    noises: &[Vec<f64>],
    x_t: &[f64],
    xi_t: &[f64],
) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::NonPositiveRegularizer(mu));
    }
    if xs.len() != ys.len() || xs.len() != noises.len() {
        return Err(Error::dims("residual history lengths"));
    }
    let (n, m) = a_true.shape();
    let mut sigma = Matrix::scaled_identity(m, mu);
    for (s, ((x, y), xi)) in xs.iter().zip(ys).zip(noises).enumerate() {
        let ax = a_true.mul_vec(x)?;
        let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mismatch = ax
            .iter()
            .zip(xi)
            .zip(y)
            .map(|((a, e), y)| (a + e - y).abs())
            .fold(0.0, f64::max);
        if mismatch > 1e-10 * scale {
            return Err(Error::ModelMismatch { step: s, mismatch });
        }
        sigma.add_outer(1.0, x, x);
    }
    let z = solve_spd(&sigma, x_t)?;
    let az = a_true.mul_vec(&z)?;
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let noise_term: KahanSum = xs.iter().zip(noises).map(|(x, xi)| xi[i] * dot(x, &z)).collect();
        *o = noise_term.value() - mu * az[i] - xi_t[i];
    }
    Ok(out)
}

/// Right-hand side of the online least squares regret bound
/// `μ‖A‖_F² + max_t ‖y_t − A_t x_t‖² · m · ln(1 + T M² / m)`.
pub fn orr_regret_bound(
    mu: f64,
    comparator_fro_sq: f64,
    max_err_sq: f64,
    dim_in: usize,
    horizon: usize,
    max_x_norm: f64,
) -> f64 {
    let m = dim_in as f64;
    mu * comparator_fro_sq
        + max_err_sq * m * (1.0 + horizon as f64 * max_x_norm * max_x_norm / m).ln()
}

/// Summary of one pass of the online learner over a regression sequence.
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub predictions: Vec<Vec<f64>>,
    /// `Σ ‖A_t x_t − y_t‖²`
    pub learner_loss: f64,
    /// `Σ ‖A x_t − y_t‖²` for the comparator, when given.
    pub comparator_loss: Option<f64>,
    pub max_err_sq: f64,
    pub max_x_norm: f64,
    pub final_state: OlsState,
}

impl OnlineRun {
    pub fn regret(&self) -> Option<f64> {
        self.comparator_loss.map(|c| self.learner_loss - c)
    }
}

/// Predict-then-update over `(x_t, y_t)`, `t = 1..=T`.
pub fn run_online(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    mu: f64,
    comparator: Option<&Matrix>,
) -> Result<OnlineRun> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::dims("online run needs equal, nonempty histories"));
    }
    let mut st = OlsState::new(xs[0].len(), ys[0].len(), mu)?;
    let mut learner = KahanSum::new();
    let mut comp = KahanSum::new();
    let mut max_err_sq: f64 = 0.0;
    let mut max_x: f64 = 0.0;
    let mut predictions = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(ys) {
        let yhat = st.predict(x)?;
        let err: f64 = yhat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        learner.add(err);
        max_err_sq = max_err_sq.max(err);
        max_x = max_x.max(crate::linalg::norm2(x));
        if let Some(a) = comparator {
            let ax = a.mul_vec(x)?;
            comp.add(ax.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum());
        }
        predictions.push(yhat);
        st.update(x, y)?;
    }
    Ok(OnlineRun {
        predictions,
        learner_loss: learner.value(),
        comparator_loss: comparator.map(|_| comp.value()),
        max_err_sq,
        max_x_norm: max_x,
        final_state: st,
    })
}
