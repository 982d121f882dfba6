use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, operator_norm, Matrix};
use crate::systems::JordanSpec;

/// Ascending coefficients `[a_0, …, a_{d−1}, 1]` of `det(zI − A)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    pub coefficients: Vec<f64>,
    /// `Σ|a_i|` including the leading 1.
    pub abs_sum: f64,
    /// Largest coefficient gap to the block-factor product, when checked.
    pub cross_check: Option<f64>,
}

impl CharPoly {
    fn from_coefficients(coefficients: Vec<f64>) -> Self {
        let abs_sum = coefficients.iter().map(|c| c.abs()).sum();
        CharPoly {
            coefficients,
            abs_sum,
            cross_check: None,
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// The `d` trailing coefficients `a_0..a_{d−1}`.
    pub fn recurrence(&self) -> &[f64] {
        &self.coefficients[..self.degree()]
    }
}

pub const MAX_CHAR_POLY_DIM: usize = 32;

/// Faddeev–LeVerrier: `M_k = A M_{k−1} + c_{d−k+1} I`, `c_{d−k} = −tr(A M_k)/k`.
pub fn char_poly(a: &Matrix) -> Result<CharPoly> {
    if !a.is_square() {
        return Err(Error::dims("characteristic polynomial of a non-square matrix"));
    }
    let d = a.rows();
    if d > MAX_CHAR_POLY_DIM {
        return Err(Error::DimensionTooLarge(d));
    }
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let mut m = Matrix::zeros(d, d);
    for k in 1..=d {
        let mut next = a.matmul(&m)?;
        for i in 0..d {
            next[(i, i)] += c[d - k + 1];
        }
        m = next;
        let am = a.matmul(&m)?;
        c[d - k] = -am.trace() / k as f64;
    }
    Ok(CharPoly::from_coefficients(c))
}

/// Real ascending coefficients of `Π (z − z_i)`; roots must be closed
/// under conjugation.
pub fn char_poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= r * c;
        }
        p = next;
    }
    p.iter().map(|c| c.re).collect()
}

/// [`char_poly`] of the spec's transition, with the coefficient gap to
/// the product of its block factors recorded.
pub fn char_poly_for_spec(spec: &JordanSpec) -> Result<CharPoly> {
    let (a, _) = spec.transition()?;
    let mut cp = char_poly(&a)?;
    let expected = char_poly_from_roots(&spec.eigenvalues());
    let gap = cp
        .coefficients
        .iter()
        .zip(&expected)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    cp.cross_check = Some(gap);
    Ok(cp)
}

/// `‖x_t + Σ_{i<d} a_i x_{t−d+i}‖` for `t = d..=T`, indexed from `t = d`.
pub fn ch_recurrence_residual(states: &[Vec<f64>], recurrence: &[f64]) -> Result<Vec<f64>> {
    let d = recurrence.len();
    if states.len() <= d {
        return Err(Error::InsufficientHistory(states.len()));
    }
    let n = states[0].len();
    let mut out = Vec::with_capacity(states.len() - d);
    for t in d..states.len() {
        let mut r = states[t].clone();
        if r.len() != n {
            return Err(Error::dims("state lengths differ"));
        }
        for (i, &a) in recurrence.iter().enumerate() {
            for (rj, xj) in r.iter_mut().zip(&states[t - d + i]) {
                *rj += a * xj;
            }
        }
        out.push(norm2(&r));
    }
    Ok(out)
}

/// `d · 2^d · C_A · C_ξ`.
pub fn ch_noise_bound(d: usize, c_a: f64, c_xi: f64) -> f64 {
    d as f64 * 2f64.powi(d as i32) * c_a * c_xi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanPowerReport {
    /// `max_k ‖A^k‖ / ((k+1)^{r−1} C_A)`.
    pub worst_ratio: f64,
    pub worst_k: usize,
    /// `max_k Σ_{s≤k} ‖A^s‖ / ((k+1)^r C_A)`.
    pub worst_sum_ratio: f64,
}

impl JordanPowerReport {
    pub fn holds(&self) -> bool {
        self.worst_ratio <= 1.0 + 1e-9 && self.worst_sum_ratio <= 1.0 + 1e-9
    }
}

/// Checks `‖A^k‖ ≤ (k+1)^{r−1} C_A` and its summed form for `k ≤ k_max`.
pub fn jordan_power_check(a: &Matrix, r: usize, c_a: f64, k_max: usize) -> Result<JordanPowerReport> {
    if !a.is_square() {
        return Err(Error::dims("power check of a non-square matrix"));
    }
    if r == 0 || !(c_a > 0.0) {
        return Err(Error::InvalidParameter("need r ≥ 1 and C_A > 0".into()));
    }
    let mut power = Matrix::identity(a.rows());
    let mut rep = JordanPowerReport {
        worst_ratio: 0.0,
        worst_k: 0,
        worst_sum_ratio: 0.0,
    };
    let mut sum = 0.0;
    for k in 0..=k_max {
        let nrm = operator_norm(&power);
        sum += nrm;
        let kp1 = (k + 1) as f64;
        let ratio = nrm / (kp1.powi(r as i32 - 1) * c_a);
        if ratio > rep.worst_ratio {
            rep.worst_ratio = ratio;
            rep.worst_k = k;
        }
        rep.worst_sum_ratio = rep.worst_sum_ratio.max(sum / (kp1.powi(r as i32) * c_a));
        power = a.matmul(&power)?;
        if !power.is_finite() {
            return Err(Error::Overflow);
        }
    }
    Ok(rep)
}
