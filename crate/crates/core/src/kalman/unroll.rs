use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::KalmanSteadyState;
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Matrix};

/// Impulse response of the steady-state predictor:
/// `ŷ_{t+1} ≈ Σ_{k<ℓ} F_k u_{t-k} + G_k y_{t-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnrolledFilter {
    pub f: Vec<Matrix>,
    pub g: Vec<Matrix>,
    /// Spectral radius estimate of `A_KF`, used for the geometric remainder
    /// beyond the stored taps.
    pub rho: f64,
}

impl UnrolledFilter {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// `‖[F_k G_k]‖₂`
    pub fn tap_norm(&self, k: usize) -> f64 {
        operator_norm(&Matrix::hstack(&self.f[k], &self.g[k]).expect("same row count"))
    }

    /// Length-ℓ autoregressive prediction of `y_{t+1}` from `u_{0..=t}`
    /// and `y_{0..=t}`, with zero padding before time 0.
    pub fn predict(&self, us: &[Vec<f64>], ys: &[Vec<f64>], t: usize) -> Vec<f64> {
        let n = self.g[0].rows();
        let mut out = vec![0.0; n];
        for k in 0..self.len().min(t + 1) {
            let s = t - k;
            if self.f[k].cols() > 0 {
                let fu = self.f[k].mul_vec(&us[s]).expect("input dimension");
                out.iter_mut().zip(fu).for_each(|(o, v)| *o += v);
            }
            let gy = self.g[k].mul_vec(&ys[s]).expect("observation dimension");
            out.iter_mut().zip(gy).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// `F_k = C_KF A_KF^k B_KF_u`, `G_k = C_KF A_KF^k B_KF_y` for `k < ell`.
pub fn unroll_filter(kf: &KalmanSteadyState, ell: usize) -> Result<UnrolledFilter> {
    if ell == 0 {
        return Err(Error::InvalidParameter("filter length must be at least 1".into()));
    }
    let mut f = Vec::with_capacity(ell);
    let mut g = Vec::with_capacity(ell);
    // C A^k, advanced by right multiplication.
    let mut ca = kf.c_kf.clone();
    for _ in 0..ell {
        f.push(ca.matmul(&kf.b_kf_u)?);
        g.push(ca.matmul(&kf.b_kf_y)?);
        ca = ca.matmul(&kf.a_kf)?;
    }
    Ok(UnrolledFilter { f, g, rho: kf.rho })
}

/// `Σ_{k≥L} ‖[F_k G_k]‖₂`: stored taps summed exactly, taps beyond the
/// stored length bounded geometrically from the last one with ratio `ρ̂`.
pub fn tail_l1(filter: &UnrolledFilter, from: usize) -> f64 {
    let len = filter.len();
    let stored: f64 = (from.min(len)..len).map(|k| filter.tap_norm(k)).sum();
    let rho = filter.rho;
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let last = filter.tap_norm(len - 1);
    let remainder = if from < len {
        last * rho / (1.0 - rho)
    } else {
        last * rho.powi((from - len + 1) as i32) / (1.0 - rho)
    };
    stored + remainder
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffLenResult {
    /// `R(ε)`, at least 1.
    pub length: usize,
    pub gamma: f64,
    /// Minimized value of `(1/(1−γ)) ln(‖F(γz)‖_∞ / (ε(1−γ)))`.
    pub bound: f64,
}

const GAMMA_GRID: usize = 200;
const CIRCLE_POINTS: usize = 2048;

/// Sufficient length `R(ε)` of the steady-state predictor, whose transfer
/// function is `F(w) = w C_KF (w I − A_KF)⁻¹ [B_KF_u B_KF_y]`.
pub fn sufficient_length(kf: &KalmanSteadyState, eps: f64) -> Result<SuffLenResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} must be positive")));
    }
    let rho = kf.rho;
    if !(rho < 1.0) {
        return Err(Error::UnstableFilter(rho));
    }
    let b = Matrix::hstack(&kf.b_kf_u, &kf.b_kf_y)?;
    let objective = |gamma: f64| -> f64 {
        let h = hinf_on_circle(&kf.c_kf, &kf.a_kf, &b, gamma);
        (h / (eps * (1.0 - gamma))).ln() / (1.0 - gamma)
    };

    let hi = 1.0 - rho;
    let lo = 1e-6f64.min(hi / 2.0);
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..GAMMA_GRID)
        .map(|i| {
            let gap = (log_lo + (log_hi - log_lo) * i as f64 / (GAMMA_GRID - 1) as f64).exp();
            1.0 - gap
        })
        .filter(|&g| g > rho && g < 1.0)
        .collect();
    if grid.is_empty() {
        return Err(Error::UnstableFilter(rho));
    }
    let values: Vec<f64> = grid.iter().map(|&g| objective(g)).collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("nonempty grid");

    // Golden-section refinement between the neighbouring grid points.
    let left = if best + 1 < grid.len() { grid[best + 1] } else { grid[best] };
    let right = if best > 0 { grid[best - 1] } else { grid[best] };
    let (mut a, mut c) = (left.min(right), left.max(right));
    let (mut gamma, mut value) = (grid[best], values[best]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    if c > a {
        let mut x1 = c - phi * (c - a);
        let mut x2 = a + phi * (c - a);
        let (mut f1, mut f2) = (objective(x1), objective(x2));
        for _ in 0..60 {
            if f1 < f2 {
                c = x2;
                x2 = x1;
                f2 = f1;
                x1 = c - phi * (c - a);
                f1 = objective(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (c - a);
                f2 = objective(x2);
            }
            if c - a <= 1e-14 {
                break;
            }
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < value {
                gamma = x;
                value = f;
            }
        }
    }
    let length = value.ceil().max(1.0) as usize;
    Ok(SuffLenResult {
        length,
        gamma,
        bound: value,
    })
}

/// `max_{|z|=1} ‖F(γ z)‖₂` over an equispaced grid on the circle.
fn hinf_on_circle(c: &Matrix, a: &Matrix, b: &Matrix, gamma: f64) -> f64 {
    (0..CIRCLE_POINTS)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / CIRCLE_POINTS as f64;
            let w = Complex64::from_polar(gamma, theta);
            transfer_norm(c, a, b, w)
        })
        .fold(0.0, f64::max)
}

/// `‖w C (w I − A)⁻¹ B‖₂` via the real embedding `[[Re, −Im], [Im, Re]]`,
/// whose singular values are those of the complex matrix, each doubled.
fn transfer_norm(c: &Matrix, a: &Matrix, b: &Matrix, w: Complex64) -> f64 {
    let d = a.rows();
    let mut m: Vec<Complex64> = (0..d * d)
        .map(|idx| {
            let (i, j) = (idx / d, idx % d);
            let diag = if i == j { w } else { Complex64::new(0.0, 0.0) };
            diag - a[(i, j)]
        })
        .collect();
    let mut rhs: Vec<Complex64> = (0..d * b.cols())
        .map(|idx| Complex64::new(b[(idx / b.cols(), idx % b.cols())], 0.0))
        .collect();
    complex_solve_in_place(&mut m, &mut rhs, d, b.cols());
    let (n, k) = (c.rows(), b.cols());
    let mut real = Matrix::zeros(2 * n, 2 * k);
    for i in 0..n {
        for j in 0..k {
            let mut s = Complex64::new(0.0, 0.0);
            for l in 0..d {
                s += c[(i, l)] * rhs[l * k + j];
            }
            s *= w;
            real[(i, j)] = s.re;
            real[(i, k + j)] = -s.im;
            real[(n + i, j)] = s.im;
            real[(n + i, k + j)] = s.re;
        }
    }
    operator_norm(&real)
}

/// Gaussian elimination with partial pivoting on a `d x d` complex system
/// with `k` right-hand sides; the solution overwrites `rhs`.
fn complex_solve_in_place(m: &mut [Complex64], rhs: &mut [Complex64], d: usize, k: usize) {
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| m[i * d + col].norm().total_cmp(&m[j * d + col].norm()))
            .expect("nonempty range");
        if piv != col {
            for j in 0..d {
                m.swap(piv * d + j, col * d + j);
            }
            for j in 0..k {
                rhs.swap(piv * k + j, col * k + j);
            }
        }
        let p = m[col * d + col];
        for i in (col + 1)..d {
            let f = m[i * d + col] / p;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col..d {
                let v = m[col * d + j];
                m[i * d + j] -= f * v;
            }
            for j in 0..k {
                let v = rhs[col * k + j];
                rhs[i * k + j] -= f * v;
            }
        }
    }
    for col in (0..d).rev() {
        let p = m[col * d + col];
        for j in 0..k {
            let mut s = rhs[col * k + j];
            for l in (col + 1)..d {
                s -= m[col * d + l] * rhs[l * k + j];
            }
            rhs[col * k + j] = s / p;
        }
    }
}
