use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

/// Scalar regression pairs `(x_t, y_t)` for `t = 1..=T`, stored as
/// one-dimensional vectors so they feed directly into the learners.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSequence {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
}

impl RegressionSequence {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Zeros until the last step, then `x_T = T`, `y_T = a T`. Without a model
/// of the dynamics every learner has seen only zeros when it must predict
/// `y_T`, so a random sign `a` forces expected loss `T²`.
pub fn counterexample_instance(horizon: usize, sign: f64) -> Result<RegressionSequence> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidParameter(format!("sign must be ±1, got {sign}")));
    }
    let t = horizon as f64;
    let mut xs = vec![vec![0.0]; horizon];
    let mut ys = vec![vec![0.0]; horizon];
    xs[horizon - 1][0] = t;
    ys[horizon - 1][0] = sign * t;
    Ok(RegressionSequence { xs, ys })
}

/// Uniform random sign for trial `trial` of `seed`.
pub fn random_sign(seed: u64, trial: u64) -> f64 {
    if stream_rng(seed, streams::DIRECTIONS, trial).random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
