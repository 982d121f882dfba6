//! Linear dynamical systems: construction from Jordan descriptions, noise
//! generation and trajectory simulation.
//!
//! The fully observed model is `x_t = A x_{t-1} + B u_{t-1} + ξ_t`; the
//! partially observed model adds `y_t = C x_t + η_t`.

mod counterexample;
mod jordan;
mod noise;
mod simulate;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use counterexample::{counterexample_instance, random_sign, RegressionSequence};
pub use jordan::{JordanBlock, JordanSpec};
pub use noise::{adversarial_noise_step, psd_sqrt, read_vector_csv, unit_sphere, write_vector_csv};
pub use simulate::{initial_mean, input_sequence, simulate_full, simulate_partial, Trajectory};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, spectral_radius_estimate, Matrix};
use crate::rng::{stream_rng, streams};

/// Norm bounds declared for a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// `‖x₀‖ ≤ c0`
    #[serde(default = "unit")]
    pub c0: f64,
    /// `‖u_t‖ ≤ c_u`
    #[serde(default)]
    pub c_u: f64,
    /// `‖ξ_t‖ ≤ c_xi`
    #[serde(default = "unit")]
    pub c_xi: f64,
    /// `‖η_t‖ ≤ c_eta`
    #[serde(default = "unit")]
    pub c_eta: f64,
    /// `‖B‖₂ ≤ c_b`
    #[serde(default = "unit")]
    pub c_b: f64,
    /// `‖C‖₂ ≤ c_c`
    #[serde(default = "unit")]
    pub c_c: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            c0: 1.0,
            c_u: 0.0,
            c_xi: 1.0,
            c_eta: 1.0,
            c_b: 1.0,
            c_c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallDistribution {
    /// Uniform in the ball of radius `bound`.
    UniformBall,
    /// Independent random signs on every axis, scaled to norm `bound`.
    RademacherAxes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `ξ ≡ 0` (and `η ≡ 0`).
    Zero,
    Gaussian {
        sigma_x: Matrix,
        #[serde(default)]
        sigma_y: Option<Matrix>,
    },
    BoundedIid {
        bound: f64,
        distribution: BallDistribution,
    },
    /// Pushes the state along the least explored direction of the Gram
    /// matrix `μI + Σ x_s x_sᵀ`, with norm `bound`. `regularizer` is `μ`
    /// (1 when absent).
    AdversarialLeastExplored {
        bound: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        regularizer: Option<f64>,
    },
    /// CSV with header `t,xi_1,...,xi_d` and rows `t = 1..T`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseConfig {
    pub fn zero() -> Self {
        NoiseConfig {
            kind: NoiseKind::Zero,
            seed: 0,
        }
    }

    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        NoiseConfig { kind, seed }
    }

    /// Norm bound on `ξ_t` when the kind has one.
    pub fn bound(&self) -> Option<f64> {
        match &self.kind {
            NoiseKind::Zero => Some(0.0),
            NoiseKind::BoundedIid { bound, .. } | NoiseKind::AdversarialLeastExplored { bound, .. } => {
                Some(*bound)
            }
            NoiseKind::Gaussian { .. } | NoiseKind::File { .. } => None,
        }
    }
}

/// Initial state `x₀` (for partial observation: the mean `x₀⁻`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    Zero,
    Fixed {
        x0: Vec<f64>,
    },
    /// Uniform direction with norm `c0`, drawn per simulation seed.
    RandomSphere,
}

/// Exogenous input sequence `u_0..u_{T-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputPolicy {
    #[default]
    Zero,
    /// Uniform in the ball of radius `bound`.
    UniformBall { bound: f64 },
    /// CSV with header `t,u_1,...,u_m` and rows `t = 0..T-1`.
    File { path: PathBuf },
}

/// A linear dynamical system with its noise model and declared bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub a: Matrix,
    pub b: Matrix,
    #[serde(default)]
    pub c: Option<Matrix>,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub bounds: Bounds,
    /// Largest Jordan block size of `A`.
    #[serde(default = "one")]
    pub r: usize,
    /// Conditioning bound `‖S‖‖S^{-1}‖`.
    #[serde(default = "unit")]
    pub c_a: f64,
    #[serde(default)]
    pub initial_state: InitialState,
}

fn one() -> usize {
    1
}

impl SystemSpec {
    /// Fully observed system with zero input dimension.
    pub fn autonomous(a: Matrix, noise: NoiseConfig) -> Self {
        let d = a.rows();
        SystemSpec {
            a,
            b: Matrix::zeros(d, 0),
            c: None,
            noise,
            bounds: Bounds::default(),
            r: 1,
            c_a: 1.0,
            initial_state: InitialState::Zero,
        }
    }

    pub fn with_initial_state(mut self, x0: Vec<f64>) -> Self {
        self.initial_state = InitialState::Fixed { x0 };
        self
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn obs_dim(&self) -> Option<usize> {
        self.c.as_ref().map(Matrix::rows)
    }

    /// Checks dimensions, marginal stability (`ρ(A) ≤ 1 + 1e-6` by the
    /// power-limit estimate) and the declared `‖B‖₂` bound.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(&self.a)
    }

    /// Same checks, with the spectral radius taken from `similar`, a matrix
    /// similar to `A`. A Jordan block built as `S J S⁻¹` has its repeated
    /// eigenvalue split by rounding by about `ε^{1/r}`, which the power
    /// estimate on `A` would amplify; `J` itself is exact.
    fn validate_with(&self, similar: &Matrix) -> Result<()> {
        let d = self.state_dim();
        if !self.a.is_square() {
            return Err(Error::dims("A must be square"));
        }
        if self.b.rows() != d {
            return Err(Error::dims(format!("B has {} rows, expected {d}", self.b.rows())));
        }
        if let Some(c) = &self.c {
            if c.cols() != d {
                return Err(Error::dims(format!("C has {} columns, expected {d}", c.cols())));
            }
        }
        if let NoiseKind::Gaussian { sigma_x, sigma_y } = &self.noise.kind {
            if sigma_x.shape() != (d, d) {
                return Err(Error::dims("sigma_x must be d x d"));
            }
            if !sigma_x.is_symmetric(1e-12) {
                return Err(Error::NotSymmetric(sigma_x.max_asymmetry()));
            }
            if let (Some(sy), Some(n)) = (sigma_y, self.obs_dim()) {
                if sy.shape() != (n, n) {
                    return Err(Error::dims("sigma_y must be n x n"));
                }
            }
        }
        if let InitialState::Fixed { x0 } = &self.initial_state {
            if x0.len() != d {
                return Err(Error::dims("initial state length"));
            }
        }
        let rho = spectral_radius_estimate(similar, 1 << 40)?;
        if rho > 1.0 + 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "spectral radius estimate {rho} exceeds 1"
            )));
        }
        if self.input_dim() > 0 && operator_norm(&self.b) > self.bounds.c_b * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "‖B‖₂ = {} exceeds declared c_b = {}",
                operator_norm(&self.b),
                self.bounds.c_b
            )));
        }
        Ok(())
    }
}

/// Builds `A = S J S^{-1}` from `spec` and fills `B` (`d x input_dim`) and
/// `C` (`obs_dim x d`, omitted when `obs_dim == 0`) with seeded Gaussian
/// entries rescaled to spectral norms `bounds.c_b` and `bounds.c_c`.
pub fn build_jordan_system(
    spec: &JordanSpec,
    input_dim: usize,
    obs_dim: usize,
    bounds: Bounds,
    noise: NoiseConfig,
) -> Result<SystemSpec> {
    let (a, _) = spec.transition()?;
    let d = a.rows();
    let mut rng = stream_rng(spec.seed, streams::SYSTEM_MATRICES, 1);
    let b = gaussian_matrix(d, input_dim, bounds.c_b, &mut rng);
    let c = (obs_dim > 0).then(|| gaussian_matrix(obs_dim, d, bounds.c_c, &mut rng));
    let sys = SystemSpec {
        a,
        b,
        c,
        noise,
        bounds,
        r: spec.max_block_size(),
        c_a: spec.condition,
        initial_state: InitialState::Zero,
    };
    sys.validate_with(&spec.jordan_matrix())?;
    Ok(sys)
}

fn gaussian_matrix<R: rand::Rng>(rows: usize, cols: usize, norm: f64, rng: &mut R) -> Matrix {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    let mut m = Matrix::from_row_major(rows, cols, data).expect("finite gaussian draws");
    let n = operator_norm(&m);
    if n > 0.0 {
        m.scale_mut(norm / n);
    }
    m
}

/// Upper bound on `max_{k ≤ T} ‖x_k‖` for bounded noise and inputs:
/// `(T+1)^{r-1} C_A C₀ + C_A C_B C_u T^r + C_A C_ξ T^r`.
pub fn state_growth_bound(sys: &SystemSpec, horizon: usize) -> f64 {
    let t = horizon as f64;
    let r = sys.r as i32;
    let b = &sys.bounds;
    (t + 1.0).powi(r - 1) * sys.c_a * b.c0
        + sys.c_a * b.c_b * b.c_u * t.powi(r)
        + sys.c_a * b.c_xi * t.powi(r)
}
