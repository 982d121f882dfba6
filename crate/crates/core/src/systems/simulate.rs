use serde::{Deserialize, Serialize};

use super::noise::{gaussian_with_sqrt, psd_sqrt, uniform_ball, unit_sphere, ProcessNoise};
use super::{InitialState, InputPolicy, NoiseKind, SystemSpec};
use crate::error::{Error, Result};
use crate::kalman::solve_dare;
use crate::linalg::{norm2, Matrix};
use crate::rng::{stream_rng, streams};

/// One simulated run. Index conventions: `states[t] = x_t` for `t = 0..=T`,
/// `inputs[t] = u_t` for `t = 0..T`, `process_noise[t-1] = ξ_t` for
/// `t = 1..=T`, and when observed `observations[t] = y_t`,
/// `observation_noise[t] = η_t` for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub process_noise: Vec<Vec<f64>>,
    pub observations: Option<Vec<Vec<f64>>>,
    pub observation_noise: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.process_noise.len()
    }

    pub fn max_state_norm(&self) -> f64 {
        self.states.iter().map(|x| norm2(x)).fold(0.0, f64::max)
    }

    /// Largest entry of `x_t − (A x_{t-1} + B u_{t-1}) − ξ_t`, evaluated in
    /// the same operation order as the simulator.
    pub fn recurrence_residual(&self, sys: &SystemSpec) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 1..self.states.len() {
            let drift = drift(sys, &self.states[t - 1], &self.inputs[t - 1]);
            for ((x, a), xi) in self.states[t].iter().zip(&drift).zip(&self.process_noise[t - 1]) {
                worst = worst.max((x - (a + xi)).abs());
            }
        }
        worst
    }
}

fn drift(sys: &SystemSpec, x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = sys.a.mul_vec(x).expect("validated dimensions");
    if sys.input_dim() > 0 {
        let bu = sys.b.mul_vec(u).expect("validated dimensions");
        for (o, b) in out.iter_mut().zip(bu) {
            *o += b;
        }
    }
    out
}

pub fn initial_mean(sys: &SystemSpec, seed: u64) -> Result<Vec<f64>> {
    let d = sys.state_dim();
    let x0 = match &sys.initial_state {
        InitialState::Zero => vec![0.0; d],
        InitialState::Fixed { x0 } => x0.clone(),
        InitialState::RandomSphere => {
            let mut rng = stream_rng(seed, streams::INITIAL_STATE, 0);
            unit_sphere(d, &mut rng)
                .into_iter()
                .map(|v| v * sys.bounds.c0)
                .collect()
        }
    };
    Ok(x0)
}

pub fn input_sequence(policy: &InputPolicy, m: usize, horizon: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(match policy {
        InputPolicy::Zero => vec![vec![0.0; m]; horizon],
        InputPolicy::UniformBall { bound } => (0..horizon)
            .map(|t| {
                let mut rng = stream_rng(seed, streams::INPUTS, t as u64);
                uniform_ball(m, *bound, &mut rng)
            })
            .collect(),
        InputPolicy::File { path } => super::read_vector_csv(path, "u", m, 0, horizon)?,
    })
}

/// Simulates `x_t = A x_{t-1} + B u_{t-1} + ξ_t` for `t = 1..=horizon`.
///
/// The noise seed is the one declared in `sys.noise`; `seed` drives the
/// initial state and inputs.
pub fn simulate_full(
    sys: &SystemSpec,
    inputs: &InputPolicy,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let d = sys.state_dim();
    let x0 = initial_mean(sys, seed)?;
    if x0.len() != d {
        return Err(Error::dims("initial state length"));
    }
    if norm2(&x0) > sys.bounds.c0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "‖x₀‖ = {} exceeds C₀ = {}",
            norm2(&x0),
            sys.bounds.c0
        )));
    }
    let us = input_sequence(inputs, sys.input_dim(), horizon, seed)?;
    let mut noise = ProcessNoise::new(&sys.noise.kind, sys.noise.seed, d, horizon)?;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut xis = Vec::with_capacity(horizon);
    states.push(x0);
    for t in 1..=horizon {
        let prev = &states[t - 1];
        let dr = drift(sys, prev, &us[t - 1]);
        let xi = noise.draw(t, prev, &dr)?;
        let x: Vec<f64> = dr.iter().zip(&xi).map(|(a, b)| a + b).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        states.push(x);
        xis.push(xi);
    }
    Ok(Trajectory {
        states,
        inputs: us,
        process_noise: xis,
        observations: None,
        observation_noise: None,
    })
}

/// Simulates the partially observed system `y_t = C x_t + η_t`.
///
/// `x₀` is drawn from `N(x̄₀, P)` with `x̄₀` the declared initial state and
/// `P` the steady-state predictive covariance; if the Riccati equation has
/// no stabilizing solution `Σ_x` is used instead. The zero noise kind gives
/// `x₀ = x̄₀` and no noise at all.
pub fn simulate_partial(
    sys: &SystemSpec,
    inputs: &InputPolicy,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    let c = sys.c.as_ref().ok_or(Error::RequiresObservationMatrix)?;
    let n = c.rows();
    let (sigma_x, sigma_y) = match &sys.noise.kind {
        NoiseKind::Zero => (None, None),
        NoiseKind::Gaussian { sigma_x, sigma_y } => (
            Some(sigma_x.clone()),
            Some(sigma_y.clone().unwrap_or_else(|| Matrix::zeros(n, n))),
        ),
        _ => {
            return Err(Error::InvalidParameter(
                "partial observation requires gaussian or zero noise".into(),
            ))
        }
    };
    let mean = initial_mean(sys, seed)?;
    let x0 = match (&sigma_x, &sigma_y) {
        (Some(sx), Some(sy)) => {
            let p0 = solve_dare(&sys.a, &sys.b, c, sx, sy)
                .map(|kf| kf.p)
                .unwrap_or_else(|_| sx.clone());
            let mut rng = stream_rng(seed, streams::INITIAL_STATE, 1);
            let dx = gaussian_with_sqrt(&psd_sqrt(&p0)?, &mut rng);
            mean.iter().zip(dx).map(|(m, e)| m + e).collect()
        }
        _ => mean,
    };
    let mut fixed = sys.clone();
    fixed.initial_state = InitialState::Fixed { x0 };
    fixed.bounds.c0 = f64::INFINITY;
    let mut traj = simulate_full(&fixed, inputs, horizon, seed)?;

    let sqrt_y = sigma_y.as_ref().map(psd_sqrt).transpose()?;
    let mut ys = Vec::with_capacity(horizon + 1);
    let mut etas = Vec::with_capacity(horizon + 1);
    for (t, x) in traj.states.iter().enumerate() {
        let eta = match &sqrt_y {
            Some(s) => {
                let mut rng = stream_rng(sys.noise.seed, streams::OBSERVATION_NOISE, t as u64);
                gaussian_with_sqrt(s, &mut rng)
            }
            None => vec![0.0; n],
        };
        let y: Vec<f64> = c.mul_vec(x)?.iter().zip(&eta).map(|(a, b)| a + b).collect();
        ys.push(y);
        etas.push(eta);
    }
    traj.observations = Some(ys);
    traj.observation_noise = Some(etas);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::NoiseConfig;

    #[test]
    fn fixed_point_and_decay() {
        let sys = SystemSpec::autonomous(Matrix::from_rows(&[[1.0]]), NoiseConfig::zero())
            .with_initial_state(vec![1.0]);
        let tr = simulate_full(&sys, &InputPolicy::Zero, 20, 0).unwrap();
        assert!(tr.states.iter().all(|x| x[0] == 1.0));

        let sys = SystemSpec::autonomous(Matrix::from_rows(&[[0.5]]), NoiseConfig::zero())
            .with_initial_state(vec![1.0]);
        let tr = simulate_full(&sys, &InputPolicy::Zero, 20, 0).unwrap();
        for (t, x) in tr.states.iter().enumerate() {
            assert_eq!(x[0], 0.5f64.powi(t as i32));
        }
    }

    #[test]
    fn jordan_block_counts_up() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let sys = SystemSpec::autonomous(a, NoiseConfig::zero()).with_initial_state(vec![0.0, 1.0]);
        let tr = simulate_full(&sys, &InputPolicy::Zero, 50, 0).unwrap();
        for (t, x) in tr.states.iter().enumerate() {
            assert_eq!(x, &vec![t as f64, 1.0]);
        }
    }

    #[test]
    fn partial_requires_c() {
        let sys = SystemSpec::autonomous(Matrix::identity(1), NoiseConfig::zero());
        assert!(matches!(
            simulate_partial(&sys, &InputPolicy::Zero, 5, 0),
            Err(Error::RequiresObservationMatrix)
        ));
    }
}
