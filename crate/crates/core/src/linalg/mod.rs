//! Small dense real linear algebra.
//!
//! Everything here is sized for desk-scale systems (dimension up to a few
//! dozen): Cholesky and LU solves, Sherman–Morrison inverse updates, a
//! cyclic Jacobi eigensolver for symmetric matrices, and the two norms the
//! rest of the crate relies on (spectral norm and a power-limit estimate of
//! the spectral radius).

mod decomp;
mod eigen;
mod matrix;

pub use decomp::{rank, solve_spd, Cholesky, Lu};
pub use eigen::{sym_eig, SymEig};
pub use matrix::Matrix;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    let scale = max_abs(v);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `y += s * x`.
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(s: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| s * x).collect()
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Inverse of `Σ + x x^T` given `p = Σ^{-1}` (Sherman–Morrison).
///
/// The denominator `1 + x^T p x` is at least one for positive definite `p`.
pub fn rank_one_inverse_update(p: &Matrix, x: &[f64]) -> Matrix {
    let px = p.mul_vec(x).expect("rank-one update dimension mismatch");
    let denom = 1.0 + dot(x, &px);
    let mut out = p.clone();
    out.add_outer(-1.0 / denom, &px, &px);
    out.symmetrize();
    out
}

/// Spectral norm `‖m‖₂`, the largest singular value.
///
/// Computed as the square root of the top eigenvalue of the smaller Gram
/// matrix (`m m^T` or `m^T m`) after scaling `m` to unit max-entry.
pub fn operator_norm(m: &Matrix) -> f64 {
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let s = m.scale(1.0 / scale);
    let gram = if s.rows() <= s.cols() {
        s.matmul(&s.transpose())
    } else {
        s.transpose().matmul(&s)
    }
    .expect("gram shapes agree");
    let eig = sym_eig(&gram).expect("gram matrix is symmetric");
    scale * eig.values[0].max(0.0).sqrt()
}

/// Estimates the spectral radius as `‖m^k‖₂^{1/k}`.
///
/// The power is formed by binary exponentiation with renormalization, so the
/// estimate itself never overflows; an intermediate norm above `1e300`
/// (before renormalization) is reported as [`Error::Overflow`] because it
/// signals a radius far above one. The estimate is biased upward.
pub fn spectral_radius_estimate(m: &Matrix, k: u64) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::dims("spectral radius of a non-square matrix"));
    }
    if k < 64 {
        return Err(Error::InvalidParameter(format!(
            "spectral radius estimate needs k >= 64, got {k}"
        )));
    }
    let overflow_log = 1e300f64.ln();
    let n = m.rows();
    // (matrix, log of the factor pulled out of it)
    let mut result = (Matrix::identity(n), 0.0f64);
    let mut base = (m.clone(), 0.0f64);
    normalize(&mut base)?;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            let prod = result.0.matmul(&base.0)?;
            result = (prod, result.1 + base.1);
            normalize(&mut result)?;
            if result.1 > overflow_log {
                return Err(Error::Overflow);
            }
        }
        e >>= 1;
        if e > 0 {
            let sq = base.0.matmul(&base.0)?;
            base = (sq, 2.0 * base.1);
            normalize(&mut base)?;
            if base.1 > overflow_log {
                return Err(Error::Overflow);
            }
        }
    }
    let norm = operator_norm(&result.0);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let log_norm = norm.ln() + result.1;
    if log_norm > overflow_log {
        return Err(Error::Overflow);
    }
    Ok((log_norm / k as f64).exp())
}

fn normalize(pair: &mut (Matrix, f64)) -> Result<()> {
    let s = pair.0.max_abs();
    if !s.is_finite() {
        return Err(Error::Overflow);
    }
    if s > 0.0 {
        pair.0.scale_mut(1.0 / s);
        pair.1 += s.ln();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_update_of_identity() {
        let p = Matrix::identity(2);
        let q = rank_one_inverse_update(&p, &[1.0, 0.0]);
        assert!((q[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((q[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(q[(0, 1)], 0.0);
    }

    #[test]
    fn zero_update_is_noop() {
        let p = Matrix::from_rows(&[[2.0, 0.3], [0.3, 1.0]]);
        assert_eq!(rank_one_inverse_update(&p, &[0.0, 0.0]), p);
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&Matrix::identity(3)) - 1.0).abs() < 1e-14);
        let m = Matrix::from_rows(&[[0.0, 3.0], [0.0, 0.0]]);
        assert!((operator_norm(&m) - 3.0).abs() < 1e-14);
        // [[1,3],[0,1]]: sigma_max = (3 + sqrt(13)) / 2
        let j = Matrix::from_rows(&[[1.0, 3.0], [0.0, 1.0]]);
        let exact = (3.0 + 13f64.sqrt()) / 2.0;
        assert!((operator_norm(&j) - exact).abs() < 1e-12 * exact);
        assert!((exact - 3.3028).abs() < 1e-4);
        assert_eq!(operator_norm(&Matrix::zeros(2, 3)), 0.0);
    }

    #[test]
    fn spectral_radius_examples() {
        let d = Matrix::from_diag(&[0.5, 0.2]);
        assert!((spectral_radius_estimate(&d, 256).unwrap() - 0.5).abs() < 1e-3);
        let c = std::f64::consts::FRAC_PI_4.cos();
        let r = Matrix::from_rows(&[[c, -c], [c, c]]);
        assert!((spectral_radius_estimate(&r, 256).unwrap() - 1.0).abs() < 1e-6);
        let s = Matrix::from_rows(&[[0.382]]);
        assert!((spectral_radius_estimate(&s, 512).unwrap() - 0.382).abs() < 1e-6);
    }

    #[test]
    fn spectral_radius_overflow_and_bad_k() {
        let big = Matrix::from_rows(&[[1e10]]);
        assert!(matches!(
            spectral_radius_estimate(&big, 64),
            Err(Error::Overflow)
        ));
        assert!(spectral_radius_estimate(&Matrix::identity(2), 10).is_err());
    }

    #[test]
    fn jordan_block_radius_is_upper_biased() {
        let j = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let est = spectral_radius_estimate(&j, 1024).unwrap();
        assert!((1.0..1.01).contains(&est));
    }
}
