//! Steady-state Kalman filtering in predictor form.
//!
//! With steady-state gain `K`, the one-step-ahead predictor is
//!
//! ```text
//! x⁻_t = A_KF x⁻_{t-1} + B_KF_u u_{t-1} + B_KF_y y_{t-1},   ŷ_t = C_KF x⁻_t
//! A_KF = A (I − K C),  B_KF_u = B,  B_KF_y = A K,  C_KF = C.
//! ```

mod unroll;

use serde::{Deserialize, Serialize};

pub use unroll::{sufficient_length, tail_l1, unroll_filter, SuffLenResult, UnrolledFilter};

use crate::error::{Error, Result};
use crate::linalg::{rank, spectral_radius_estimate, Cholesky, Matrix};
use crate::systems::Trajectory;

const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KalmanSteadyState {
    /// Steady-state predictive covariance of `x_t` given `y_{<t}`.
    pub p: Matrix,
    pub k: Matrix,
    pub a_kf: Matrix,
    pub b_kf_u: Matrix,
    pub b_kf_y: Matrix,
    pub c_kf: Matrix,
    /// `C P C^T + Σ_y`
    pub innovation_cov: Matrix,
    /// Upper-biased estimate of `ρ(A_KF)`.
    pub rho: f64,
    pub iterations: usize,
}

/// One Riccati step `A P Aᵀ − A P Cᵀ (C P Cᵀ + Σ_y)⁻¹ C P Aᵀ + Σ_x`,
/// returning the new covariance and the gain `P Cᵀ (C P Cᵀ + Σ_y)⁻¹`.
fn riccati_step(
    a: &Matrix,
    c: &Matrix,
    sigma_x: &Matrix,
    sigma_y: &Matrix,
    p: &Matrix,
) -> Result<(Matrix, Matrix, Matrix)> {
    let pct = p.matmul(&c.transpose())?;
    let mut s = &c.matmul(&pct)? + sigma_y;
    s.symmetrize();
    let chol = Cholesky::new(&s)?;
    // K = P Cᵀ S⁻¹, solved row by row through S Kᵀ = C P.
    let cp = pct.transpose();
    let mut kt = Matrix::zeros(cp.rows(), cp.cols());
    for j in 0..cp.cols() {
        kt.set_col(j, &chol.solve(&cp.col(j))?);
    }
    let k = kt.transpose();
    let d = a.rows();
    let i_kc = &Matrix::identity(d) - &k.matmul(c)?;
    // A (P − K C P) Aᵀ + Σ_x
    let post = i_kc.matmul(p)?;
    let mut next = &a.matmul(&post)?.matmul(&a.transpose())? + sigma_x;
    next.symmetrize();
    Ok((next, k, s))
}

fn krylov_rank(a: &Matrix, start: &Matrix) -> usize {
    let d = a.rows();
    let mut blocks = start.clone();
    let mut cur = start.clone();
    for _ in 1..d {
        cur = a.matmul(&cur).expect("square A");
        blocks = Matrix::hstack(&blocks, &cur).expect("same row count");
    }
    rank(&blocks, 1e-10)
}

/// Solves the discrete algebraic Riccati equation by fixed-point iteration
/// from `P = Σ_x` and assembles the predictor form.
///
/// Requires `(A, C)` observable, `(A, Σ_x^{1/2})` controllable and
/// `Σ_y ≻ 0`.
pub fn solve_dare(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    sigma_x: &Matrix,
    sigma_y: &Matrix,
) -> Result<KalmanSteadyState> {
    let d = a.rows();
    let n = c.rows();
    if !a.is_square() || c.cols() != d || b.rows() != d {
        return Err(Error::dims("solve_dare: A, B, C shapes"));
    }
    if sigma_x.shape() != (d, d) || sigma_y.shape() != (n, n) {
        return Err(Error::dims("solve_dare: covariance shapes"));
    }
    Cholesky::new(sigma_y)?;

    let obs_rank = krylov_rank(&a.transpose(), &c.transpose());
    if obs_rank < d {
        return Err(Error::NotObservable { rank: obs_rank, dim: d });
    }
    let sqrt_x = crate::systems::psd_sqrt(sigma_x)?;
    let ctrb_rank = krylov_rank(a, &sqrt_x);
    if ctrb_rank < d {
        return Err(Error::NotControllable { rank: ctrb_rank, dim: d });
    }

    let mut p = sigma_x.clone();
    let mut iterations = 0;
    loop {
        let (next, _, _) = riccati_step(a, c, sigma_x, sigma_y, &p)?;
        iterations += 1;
        let change = (&next - &p).frobenius_norm();
        let scale = next.frobenius_norm().max(f64::MIN_POSITIVE);
        p = next;
        if !p.is_finite() {
            return Err(Error::NonFinite("riccati iterate"));
        }
        if change <= 1e-12 * scale {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: change / scale,
            });
        }
    }
    let (next, k, s) = riccati_step(a, c, sigma_x, sigma_y, &p)?;
    let residual = (&next - &p).frobenius_norm() / p.frobenius_norm().max(f64::MIN_POSITIVE);
    if residual > 1e-10 {
        return Err(Error::NoConvergence { iterations, residual });
    }
    let a_kf = a.matmul(&(&Matrix::identity(d) - &k.matmul(c)?))?;
    let b_kf_y = a.matmul(&k)?;
    let rho = spectral_radius_estimate(&a_kf, 1 << 20)?;
    Ok(KalmanSteadyState {
        p,
        k,
        a_kf,
        b_kf_u: b.clone(),
        b_kf_y,
        c_kf: c.clone(),
        innovation_cov: s,
        rho,
        iterations,
    })
}

/// Runs the steady-state predictor over `traj`, returning `ŷ_t` for
/// `t = 0..=T` starting from `x⁻₀ = x0_mean`.
pub fn steady_state_predict(
    kf: &KalmanSteadyState,
    traj: &Trajectory,
    x0_mean: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let ys = traj
        .observations
        .as_ref()
        .ok_or(Error::RequiresObservationMatrix)?;
    let mut x = x0_mean.to_vec();
    let mut out = Vec::with_capacity(ys.len());
    for t in 0..ys.len() {
        if t > 0 {
            let mut next = kf.a_kf.mul_vec(&x)?;
            let by = kf.b_kf_y.mul_vec(&ys[t - 1])?;
            for (v, w) in next.iter_mut().zip(by) {
                *v += w;
            }
            if kf.b_kf_u.cols() > 0 {
                let bu = kf.b_kf_u.mul_vec(&traj.inputs[t - 1])?;
                for (v, w) in next.iter_mut().zip(bu) {
                    *v += w;
                }
            }
            x = next;
        }
        out.push(kf.c_kf.mul_vec(&x)?);
    }
    Ok(out)
}

/// Output of the time-varying filter.
#[derive(Debug, Clone)]
pub struct TimeVaryingRun {
    /// `ŷ_t` for `t = 0..=T`.
    pub predictions: Vec<Vec<f64>>,
    /// Gain `K_t` used at step `t`.
    pub gains: Vec<Matrix>,
}

/// Time-varying Kalman filter started from predictive covariance `sigma0`
/// and mean `x0_mean`.
#[allow(clippy::too_many_arguments)]
pub fn time_varying_kf(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    sigma_x: &Matrix,
    sigma_y: &Matrix,
    sigma0: &Matrix,
    x0_mean: &[f64],
    traj: &Trajectory,
) -> Result<TimeVaryingRun> {
    let ys = traj
        .observations
        .as_ref()
        .ok_or(Error::RequiresObservationMatrix)?;
    let mut p = sigma0.clone();
    let mut x = x0_mean.to_vec();
    let mut predictions = Vec::with_capacity(ys.len());
    let mut gains = Vec::with_capacity(ys.len());
    for (t, y) in ys.iter().enumerate() {
        let yhat = c.mul_vec(&x)?;
        let (next_p, k, _) = riccati_step(a, c, sigma_x, sigma_y, &p)?;
        let innov: Vec<f64> = y.iter().zip(&yhat).map(|(a, b)| a - b).collect();
        let corr = k.mul_vec(&innov)?;
        let filtered: Vec<f64> = x.iter().zip(&corr).map(|(a, b)| a + b).collect();
        let mut next = a.mul_vec(&filtered)?;
        if b.cols() > 0 && t < traj.inputs.len() {
            for (v, w) in next.iter_mut().zip(b.mul_vec(&traj.inputs[t])?) {
                *v += w;
            }
        }
        predictions.push(yhat);
        gains.push(k);
        x = next;
        p = next_p;
    }
    Ok(TimeVaryingRun { predictions, gains })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64) -> KalmanSteadyState {
        let m = |v: f64| Matrix::from_rows(&[[v]]);
        solve_dare(&m(a), &Matrix::zeros(1, 0), &m(1.0), &m(1.0), &m(1.0)).unwrap()
    }

    #[test]
    fn golden_ratio_system() {
        let kf = scalar(1.0);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((kf.p[(0, 0)] - phi).abs() < 1e-10);
        assert!((kf.k[(0, 0)] - (phi - 1.0)).abs() < 1e-10);
        assert!((kf.a_kf[(0, 0)] - (2.0 - phi)).abs() < 1e-10);
        assert!(kf.rho < 1.0);
    }

    #[test]
    fn memoryless_and_half() {
        assert!((scalar(0.0).p[(0, 0)] - 1.0).abs() < 1e-12);
        // P² − 0.25 P − 1 = 0 after clearing the denominator.
        let p = (0.25 + (0.0625f64 + 4.0).sqrt()) / 2.0;
        assert!((scalar(0.5).p[(0, 0)] - p).abs() < 1e-10);
    }

    #[test]
    fn unobservable_pair_is_rejected() {
        let a = Matrix::identity(2);
        let c = Matrix::from_rows(&[[1.0, 0.0]]);
        let r = solve_dare(&a, &Matrix::zeros(2, 0), &c, &Matrix::identity(2), &Matrix::identity(1));
        assert!(matches!(r, Err(Error::NotObservable { rank: 1, dim: 2 })));
    }

    #[test]
    fn uncontrollable_noise_is_rejected() {
        let a = Matrix::identity(2);
        let r = solve_dare(
            &a,
            &Matrix::zeros(2, 0),
            &Matrix::identity(2),
            &Matrix::from_diag(&[1.0, 0.0]),
            &Matrix::identity(2),
        );
        assert!(matches!(r, Err(Error::NotControllable { .. })));
    }
}
