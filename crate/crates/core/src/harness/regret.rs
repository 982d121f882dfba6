use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{steady_state_predict, KalmanSteadyState};
use crate::linalg::{norm2, Matrix};
use crate::numeric::KahanSum;
use crate::systems::Trajectory;

/// Per-step losses and cumulative regret over the counted window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    /// Time index of the first counted step.
    pub start: usize,
    pub learner_losses: Vec<f64>,
    pub comparator_losses: Vec<f64>,
    /// Compensated running sums of `learner − comparator`.
    pub cumulative: Vec<f64>,
    pub regret: f64,
    /// `max ‖ŷ_t − y_t‖` over the window.
    pub max_pred_err: f64,
}

impl RegretRecord {
    fn from_pairs(start: usize, pairs: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut rec = RegretRecord {
            start,
            learner_losses: Vec::new(),
            comparator_losses: Vec::new(),
            cumulative: Vec::new(),
            regret: 0.0,
            max_pred_err: 0.0,
        };
        let mut sum = KahanSum::new();
        for (l, c) in pairs {
            rec.learner_losses.push(l);
            rec.comparator_losses.push(c);
            sum.add(l);
            sum.add(-c);
            rec.cumulative.push(sum.value());
            rec.max_pred_err = rec.max_pred_err.max(l.sqrt());
        }
        rec.regret = sum.value();
        rec
    }

    pub fn len(&self) -> usize {
        self.learner_losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learner_losses.is_empty()
    }

    pub fn max_err_sq(&self) -> f64 {
        self.max_pred_err * self.max_pred_err
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Regret of state predictions `predictions[t−1] = x̂_t` (`t = 1..=T`)
/// against `A x_{t−1} + B u_{t−1}`.
pub fn regret_full(traj: &Trajectory, predictions: &[Vec<f64>], a: &Matrix, b: &Matrix) -> Result<RegretRecord> {
    let horizon = traj.horizon();
    if predictions.len() != horizon {
        return Err(Error::dims("one prediction per step t = 1..=T"));
    }
    let mut pairs = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mut comp = a.mul_vec(&traj.states[t - 1])?;
        if b.cols() > 0 {
            for (c, v) in comp.iter_mut().zip(b.mul_vec(&traj.inputs[t - 1])?) {
                *c += v;
            }
        }
        let x = &traj.states[t];
        if predictions[t - 1].len() != x.len() {
            return Err(Error::dims("prediction length"));
        }
        pairs.push((sq_dist(&predictions[t - 1], x), sq_dist(&comp, x)));
    }
    Ok(RegretRecord::from_pairs(1, pairs.into_iter()))
}

/// Regret of observation predictions `predictions[t] = ŷ_t` (`t = 0..=T`)
/// against the steady-state Kalman predictor started at `x0_mean`,
/// counted from `t = ℓ + 1`.
pub fn regret_partial(
    traj: &Trajectory,
    predictions: &[Vec<f64>],
    kf: &KalmanSteadyState,
    x0_mean: &[f64],
    ell: usize,
) -> Result<RegretRecord> {
    let ys = traj
        .observations
        .as_ref()
        .ok_or(Error::RequiresObservationMatrix)?;
    if predictions.len() != ys.len() {
        return Err(Error::dims("one prediction per step t = 0..=T"));
    }
    let comp = steady_state_predict(kf, traj, x0_mean)?;
    let start = ell + 1;
    let pairs = (start..ys.len()).map(|t| (sq_dist(&predictions[t], &ys[t]), sq_dist(&comp[t], &ys[t])));
    Ok(RegretRecord::from_pairs(start, pairs))
}

/// `max ‖z‖` over the full-observation regressors `z_t = (x_t; u_t)`,
/// `t < T`.
pub fn max_regressor_norm(traj: &Trajectory) -> f64 {
    (0..traj.horizon())
        .map(|t| {
            let z: Vec<f64> = traj.states[t].iter().chain(&traj.inputs[t]).copied().collect();
            norm2(&z)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_traj(xs: &[f64]) -> Trajectory {
        Trajectory {
            states: xs.iter().map(|&x| vec![x]).collect(),
            inputs: vec![vec![]; xs.len() - 1],
            process_noise: vec![vec![0.0]; xs.len() - 1],
            observations: None,
            observation_noise: None,
        }
    }

    #[test]
    fn comparator_against_itself() {
        let traj = scalar_traj(&[1.0, 2.0, 3.5]);
        let a = Matrix::from_rows(&[[1.0]]);
        let preds = vec![vec![1.0], vec![2.0]];
        let rec = regret_full(&traj, &preds, &a, &Matrix::zeros(1, 0)).unwrap();
        assert_eq!(rec.comparator_losses, vec![1.0, 2.25]);
        assert_eq!(rec.regret, 0.0);
    }
}
