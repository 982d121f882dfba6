use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

pub const MAX_POLY_DEGREE: usize = 64;
pub const MAX_SEARCH_ROOTS: usize = 2;
pub const MAX_SEARCH_DEGREE: usize = 8;
pub const MAX_CANDIDATES: usize = 1_000_000;
pub const RESIDUE_TOLERANCE: f64 = 1e-9;
pub const COEFFICIENT_BOUND: i64 = 10;

fn trim<T: Copy + PartialEq + Default>(p: &[T]) -> &[T] {
    let mut n = p.len();
    while n > 0 && p[n - 1] == T::default() {
        n -= 1;
    }
    &p[..n]
}

fn check_divisor<T: Copy + PartialEq + Default>(q: &[T], one: T) -> Result<&[T]> {
    let q = trim(q);
    if q.last() != Some(&one) {
        return Err(Error::NonMonicDivisor);
    }
    if q.len() > MAX_POLY_DEGREE + 1 {
        return Err(Error::DimensionTooLarge(q.len() - 1));
    }
    Ok(q)
}

/// Remainder of `p` divided by the monic `q`; both in ascending order. The
/// result has `deg q` coefficients.
pub fn poly_mod(p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    let q = check_divisor(q, 1.0)?;
    if p.len() > MAX_POLY_DEGREE + 1 {
        return Err(Error::DimensionTooLarge(p.len() - 1));
    }
    let k = q.len() - 1;
    let mut r = p.to_vec();
    for top in (k..r.len()).rev() {
        let c = r[top];
        if c != 0.0 {
            for i in 0..=k {
                r[top - k + i] -= c * q[i];
            }
        }
    }
    r.resize(k, 0.0);
    Ok(r)
}

/// [`poly_mod`] over complex coefficients.
pub fn poly_mod_complex(p: &[Complex64], q: &[Complex64]) -> Result<Vec<Complex64>> {
    let q = check_divisor(q, Complex64::new(1.0, 0.0))?;
    let k = q.len() - 1;
    let mut r = p.to_vec();
    for top in (k..r.len()).rev() {
        let c = r[top];
        for i in 0..=k {
            r[top - k + i] -= c * q[i];
        }
    }
    r.resize(k, Complex64::new(0.0, 0.0));
    Ok(r)
}

/// `Π (z − z_i)` in ascending order.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= r * c;
        }
        p = next;
    }
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallMultiple {
    /// Monic integer coefficients, ascending.
    pub coefficients: Vec<i64>,
    /// Largest residue coefficient modulo `Π (z − z_i)`.
    pub residue: f64,
    pub candidates: usize,
}

fn residue_of(coeffs: &[i64], q: &[Complex64]) -> Result<f64> {
    let p: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c as f64, 0.0)).collect();
    Ok(poly_mod_complex(&p, q)?.iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Searches for a monic integer polynomial of degree `≤ max_degree` with
/// coefficients in `[−10, 10]` that `Π (z − z_i)` divides. Sparse
/// `{−1, 0, 1}` candidates are enumerated first by degree, then seeded
/// random candidates are drawn until the budget runs out.
pub fn small_multiple_search(roots: &[Complex64], max_degree: usize, seed: u64) -> Result<SmallMultiple> {
    if roots.is_empty() || roots.len() > MAX_SEARCH_ROOTS {
        return Err(Error::InvalidParameter(format!(
            "search supports 1 to {MAX_SEARCH_ROOTS} roots"
        )));
    }
    if max_degree > MAX_SEARCH_DEGREE || max_degree < roots.len() {
        return Err(Error::InvalidParameter(format!(
            "max_degree must lie in [{}, {MAX_SEARCH_DEGREE}]",
            roots.len()
        )));
    }
    if roots.iter().any(|z| z.norm() > 1.0 + 1e-12) {
        return Err(Error::InvalidParameter("roots must lie in the closed unit disk".into()));
    }
    let q = poly_from_roots(roots);
    let k = roots.len();
    let mut candidates = 0;
    let mut best = f64::INFINITY;

    for n in k..=max_degree {
        let total = 3usize.pow(n as u32);
        for code in 0..total {
            let mut coeffs = vec![0i64; n + 1];
            let mut c = code;
            for slot in coeffs.iter_mut().take(n) {
                *slot = (c % 3) as i64 - 1;
                c /= 3;
            }
            coeffs[n] = 1;
            candidates += 1;
            let residue = residue_of(&coeffs, &q)?;
            if residue <= RESIDUE_TOLERANCE {
                return Ok(SmallMultiple {
                    coefficients: coeffs,
                    residue,
                    candidates,
                });
            }
            best = best.min(residue);
        }
    }

    let mut rng = stream_rng(seed, streams::POLY_SEARCH, 0);
    while candidates < MAX_CANDIDATES {
        let n = rng.random_range(k..=max_degree);
        let mut coeffs: Vec<i64> = (0..n)
            .map(|_| rng.random_range(-COEFFICIENT_BOUND..=COEFFICIENT_BOUND))
            .collect();
        coeffs.push(1);
        candidates += 1;
        let residue = residue_of(&coeffs, &q)?;
        if residue <= RESIDUE_TOLERANCE {
            return Ok(SmallMultiple {
                coefficients: coeffs,
                residue,
                candidates,
            });
        }
        best = best.min(residue);
    }
    Err(Error::NotFound {
        candidates,
        best_residue: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_division() {
        assert_eq!(poly_mod(&[-1.0, 0.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(poly_mod(&[0.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap(), vec![0.0, -1.0]);
        assert_eq!(poly_mod(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(poly_mod(&[1.0], &[1.0, 2.0]), Err(Error::NonMonicDivisor)));
    }

    #[test]
    fn short_dividend() {
        assert_eq!(poly_mod(&[3.0], &[1.0, 0.0, 1.0]).unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn finds_multiple_of_z_minus_one() {
        let m = small_multiple_search(&[Complex64::new(1.0, 0.0)], 4, 0).unwrap();
        assert_eq!(m.coefficients.iter().map(|&c| c as f64).sum::<f64>(), 0.0);
    }
}
