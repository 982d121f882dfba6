#![allow(dead_code)]

use std::path::PathBuf;

use marginal_lds::linalg::Matrix;
use marginal_lds::predictors::LdsLearner;
use marginal_lds::systems::{
    build_jordan_system, BallDistribution, Bounds, InitialState, JordanBlock, JordanSpec, NoiseConfig, NoiseKind,
    SystemSpec, Trajectory,
};
use rand::Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Blocks filling dimension `d` with spectral radius exactly 1. Only
/// `size = 1` blocks unless `allow_jordan`.
pub fn random_blocks<R: Rng>(d: usize, allow_jordan: bool, rng: &mut R) -> Vec<JordanBlock> {
    let mut blocks = Vec::new();
    let mut left = d;
    while left > 0 {
        let magnitude = if blocks.is_empty() { 1.0 } else { rng.random_range(0.5..=1.0) };
        if left >= 2 && rng.random_bool(0.5) {
            blocks.push(JordanBlock::rotation(magnitude, rng.random_range(0.2..3.0), 1));
            left -= 2;
        } else if allow_jordan && left >= 2 && rng.random_bool(0.5) {
            blocks.push(JordanBlock::real(1.0, 2));
            left -= 2;
        } else {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            blocks.push(JordanBlock::real(sign * magnitude, 1));
            left -= 1;
        }
    }
    blocks
}

pub fn noise_kind(choice: usize, bound: f64, d: usize) -> NoiseKind {
    match choice % 4 {
        0 => NoiseKind::Zero,
        1 => NoiseKind::Gaussian {
            sigma_x: Matrix::scaled_identity(d, bound * bound / d as f64),
            sigma_y: None,
        },
        2 => NoiseKind::BoundedIid {
            bound,
            distribution: BallDistribution::UniformBall,
        },
        _ => NoiseKind::AdversarialLeastExplored {
            bound,
            regularizer: None,
        },
    }
}

/// Marginally stable, diagonalizable system with `m` inputs.
pub fn random_system<R: Rng>(d: usize, m: usize, noise: NoiseKind, rng: &mut R) -> SystemSpec {
    let spec = JordanSpec::new(random_blocks(d, false, rng), rng.random_range(1.0..2.0), rng.random());
    let bounds = Bounds {
        c_u: if m > 0 { 1.0 } else { 0.0 },
        ..Bounds::default()
    };
    let mut sys = build_jordan_system(&spec, m, 0, bounds, NoiseConfig::new(noise, rng.random())).unwrap();
    sys.initial_state = InitialState::RandomSphere;
    sys
}

/// Regressors `z_t = (x_t; u_t)`, targets `x_{t+1}` and noises `ξ_{t+1}`.
pub fn regression_data(traj: &Trajectory) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = traj.horizon();
    let zs = (0..n).map(|t| LdsLearner::regressor(&traj.states[t], &traj.inputs[t])).collect();
    let ys = traj.states[1..].to_vec();
    (zs, ys, traj.process_noise.clone())
}
