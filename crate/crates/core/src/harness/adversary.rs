use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::predictors::LdsLearner;
use crate::systems::{adversarial_noise_step, initial_mean, input_sequence, InputPolicy, SystemSpec, Trajectory};

/// Noise chosen online from the learner's state, replacing the system's
/// noise model in the full-observation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Adversary {
    /// `ξ_t = −C_ξ e_t/‖e_t‖` with `e_t = x̂_t − A x_{t−1} − B u_{t−1}`
    /// the learner's error on the noiseless drift, which maximizes the
    /// per-step regret `‖e_t − ξ_t‖² − ‖ξ_t‖²`. When `e_t = 0` the
    /// least-explored direction of the learner's Gram matrix is used.
    AgainstLearner { bound: f64 },
}

impl Adversary {
    pub fn bound(&self) -> f64 {
        match self {
            Adversary::AgainstLearner { bound } => *bound,
        }
    }
}

/// Runs the learner with regularizer `mu` against `adversary`, returning
/// the trajectory and the predictions `x̂_1..x̂_T`.
pub fn simulate_against_learner(
    sys: &SystemSpec,
    inputs: &InputPolicy,
    adversary: Adversary,
    horizon: usize,
    seed: u64,
    mu: f64,
) -> Result<(Trajectory, Vec<Vec<f64>>)> {
    let bound = adversary.bound();
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter(format!("adversary bound {bound} must be positive")));
    }
    let (d, m) = (sys.state_dim(), sys.input_dim());
    let us = input_sequence(inputs, m, horizon, seed)?;
    let mut learner = LdsLearner::new(d, m, mu)?;
    let mut states = vec![initial_mean(sys, seed)?];
    let mut xis = Vec::with_capacity(horizon);
    let mut preds = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let prev = &states[t - 1];
        let pred = learner.ols().predict(&LdsLearner::regressor(prev, &us[t - 1]))?;
        let mut drift = sys.a.mul_vec(prev)?;
        if m > 0 {
            for (v, w) in drift.iter_mut().zip(sys.b.mul_vec(&us[t - 1])?) {
                *v += w;
            }
        }
        let e: Vec<f64> = pred.iter().zip(&drift).map(|(p, q)| p - q).collect();
        let en = norm2(&e);
        let xi = if en > 0.0 {
            e.iter().map(|v| -bound * v / en).collect()
        } else {
            let sigma = learner.ols().sigma().block(0, 0, d, d);
            adversarial_noise_step(&sigma, &drift, bound)?
        };
        let x: Vec<f64> = drift.iter().zip(&xi).map(|(a, b)| a + b).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        learner.learn(&states[t - 1], &us[t - 1], &x)?;
        states.push(x);
        xis.push(xi);
        preds.push(pred);
    }
    Ok((
        Trajectory {
            states,
            inputs: us,
            process_noise: xis,
            observations: None,
            observation_noise: None,
        },
        preds,
    ))
}
