use serde::{Deserialize, Serialize};

use super::OlsState;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::systems::Trajectory;

/// Lag-ℓ autoregressive regression shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArConfig {
    pub ell: usize,
    pub input_dim: usize,
    pub obs_dim: usize,
}

impl ArConfig {
    pub fn feature_dim(&self) -> usize {
        self.ell * (self.input_dim + self.obs_dim)
    }
}

/// `(u_t, …, u_{t−ℓ+1}, y_t, …, y_{t−ℓ+1})`, zero for negative indices.
pub fn ar_features(us: &[Vec<f64>], ys: &[Vec<f64>], t: usize, cfg: &ArConfig) -> Result<Vec<f64>> {
    if cfg.ell == 0 {
        return Err(Error::InvalidParameter("lag length must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(cfg.feature_dim());
    if cfg.input_dim > 0 {
        if us.len() <= t {
            return Err(Error::InsufficientHistory(t));
        }
        for k in 0..cfg.ell {
            match t.checked_sub(k) {
                Some(s) => out.extend_from_slice(&us[s]),
                None => out.extend(std::iter::repeat_n(0.0, cfg.input_dim)),
            }
        }
    }
    if ys.len() <= t {
        return Err(Error::InsufficientHistory(t));
    }
    for k in 0..cfg.ell {
        match t.checked_sub(k) {
            Some(s) => out.extend_from_slice(&ys[s]),
            None => out.extend(std::iter::repeat_n(0.0, cfg.obs_dim)),
        }
    }
    if out.len() != cfg.feature_dim() {
        return Err(Error::dims("history vectors do not match the configured dimensions"));
    }
    Ok(out)
}

/// Online least squares on states: predicts `x_{t+1}` from `(x_t; u_t)`.
#[derive(Debug, Clone)]
pub struct LdsLearner {
    ols: OlsState,
    state_dim: usize,
}

impl LdsLearner {
    pub fn new(state_dim: usize, input_dim: usize, mu: f64) -> Result<Self> {
        Ok(LdsLearner {
            ols: OlsState::new(state_dim + input_dim, state_dim, mu)?,
            state_dim,
        })
    }

    pub fn regressor(x: &[f64], u: &[f64]) -> Vec<f64> {
        x.iter().chain(u).copied().collect()
    }

    /// Predicts `x̂_{t+1} = A_t x_t + B_t u_t`, then learns from `x_{t+1}`.
    pub fn step(&mut self, traj: &Trajectory, t: usize) -> Result<Vec<f64>> {
        if t + 1 >= traj.states.len() {
            return Err(Error::InsufficientHistory(t));
        }
        let z = Self::regressor(&traj.states[t], &traj.inputs[t]);
        let pred = self.ols.predict(&z)?;
        self.ols.update(&z, &traj.states[t + 1])?;
        Ok(pred)
    }

    /// Updates with the transition `(x, u) → next` without predicting.
    pub fn learn(&mut self, x: &[f64], u: &[f64], next: &[f64]) -> Result<()> {
        self.ols.update(&Self::regressor(x, u), next)
    }

    /// Current estimates `(A_t, B_t)`.
    pub fn estimate(&self) -> (Matrix, Matrix) {
        let c = self.ols.coefficients();
        let d = self.state_dim;
        (c.block(0, 0, d, d), c.block(0, d, d, c.cols() - d))
    }

    pub fn ols(&self) -> &OlsState {
        &self.ols
    }
}

/// Online least squares autoregression: predicts `y_{t+1}` from the last
/// ℓ inputs and observations, learning only from `s ≥ ℓ − 1`.
#[derive(Debug, Clone)]
pub struct ArLearner {
    ols: OlsState,
    cfg: ArConfig,
}

impl ArLearner {
    pub fn new(cfg: ArConfig, mu: f64) -> Result<Self> {
        if cfg.ell == 0 {
            return Err(Error::InvalidParameter("lag length must be at least 1".into()));
        }
        Ok(ArLearner {
            ols: OlsState::new(cfg.feature_dim(), cfg.obs_dim, mu)?,
            cfg,
        })
    }

    pub fn config(&self) -> &ArConfig {
        &self.cfg
    }

    /// Predicts `ŷ_{t+1}` and then updates with `y_{t+1}` when `t ≥ ℓ − 1`.
    pub fn step(&mut self, traj: &Trajectory, t: usize) -> Result<Vec<f64>> {
        let ys = traj
            .observations
            .as_ref()
            .ok_or(Error::RequiresObservationMatrix)?;
        if t + 1 >= ys.len() {
            return Err(Error::InsufficientHistory(t));
        }
        let z = ar_features(&traj.inputs, ys, t, &self.cfg)?;
        let pred = self.ols.predict(&z)?;
        if t + 1 >= self.cfg.ell {
            self.ols.update(&z, &ys[t + 1])?;
        }
        Ok(pred)
    }

    /// `(F_t, G_t)` split out of the coefficient matrix; tap `k` of `F`
    /// multiplies `u_{t−k}`.
    pub fn filter(&self) -> (Matrix, Matrix) {
        let c = self.ols.coefficients();
        let fu = self.cfg.ell * self.cfg.input_dim;
        (c.block(0, 0, c.rows(), fu), c.block(0, fu, c.rows(), c.cols() - fu))
    }

    pub fn ols(&self) -> &OlsState {
        &self.ols
    }
}
