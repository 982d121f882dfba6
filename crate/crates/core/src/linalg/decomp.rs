use super::{dot, Matrix};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `m = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factorizes a symmetric positive definite matrix.
    ///
    /// Fails with [`Error::NotSpd`] when a pivot drops to
    /// `1e-14 * trace / rows` or below.
    pub fn new(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims("cholesky of a non-square matrix"));
        }
        if !m.is_symmetric(1e-12) {
            return Err(Error::NotSymmetric(m.max_asymmetry()));
        }
        let n = m.rows();
        let floor = if n == 0 { 0.0 } else { 1e-14 * m.trace() / n as f64 };
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut pivot = m[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > floor) || pivot <= 0.0 {
                return Err(Error::NotSpd { row: j, pivot });
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.l.rows();
        if b.len() != n {
            return Err(Error::dims("cholesky solve right-hand side"));
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = (y[i] - s) / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let col = self
                .solve(&super::unit(n, j))
                .expect("unit vector has matching length");
            inv.set_col(j, &col);
        }
        inv.symmetrize();
        inv
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diag().iter().map(|v| v.ln()).sum::<f64>()
    }
}

/// Solves `m x = b` for symmetric positive definite `m` via Cholesky.
pub fn solve_spd(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if m.rows() != b.len() {
        return Err(Error::dims("solve_spd right-hand side"));
    }
    Cholesky::new(m)?.solve(b)
}

/// LU factorization with partial pivoting, for general square systems.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims("LU of a non-square matrix"));
        }
        let n = m.rows();
        let tiny = 1e-14 * m.max_abs();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= tiny || pmax == 0.0 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::dims("LU solve right-hand side"));
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &y[..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &y[i + 1..]);
            y[i] = (y[i] - s) / self.lu[(i, i)];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.lu.rows();
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let col = self
                .solve(&super::unit(n, j))
                .expect("unit vector has matching length");
            inv.set_col(j, &col);
        }
        inv
    }

    pub fn det(&self) -> f64 {
        self.sign * self.lu.diag().iter().product::<f64>()
    }
}

/// Numerical rank by Gaussian elimination with full pivoting; pivots below
/// `rel_tol * max|m|` count as zero.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let tol = rel_tol * a.max_abs();
    if a.max_abs() == 0.0 {
        return 0;
    }
    let mut r = 0;
    for k in 0..rows.min(cols) {
        let mut best = (k, k, 0.0f64);
        for i in k..rows {
            for j in k..cols {
                if a[(i, j)].abs() > best.2 {
                    best = (i, j, a[(i, j)].abs());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        let (pi, pj, _) = best;
        for j in 0..cols {
            let tmp = a[(k, j)];
            a[(k, j)] = a[(pi, j)];
            a[(pi, j)] = tmp;
        }
        for i in 0..rows {
            let tmp = a[(i, k)];
            a[(i, k)] = a[(i, pj)];
            a[(i, pj)] = tmp;
        }
        let pivot = a[(k, k)];
        for i in (k + 1)..rows {
            let f = a[(i, k)] / pivot;
            for j in k..cols {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_identity_solves() {
        let x = solve_spd(&Matrix::from_diag(&[2.0, 2.0]), &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let x = solve_spd(&Matrix::identity(3), &[1.0, -1.0, 0.0]).unwrap();
        assert_eq!(x, vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(solve_spd(&m, &[1.0, 1.0]), Err(Error::NotSpd { .. })));
        let z = Matrix::zeros(2, 2);
        assert!(matches!(Cholesky::new(&z), Err(Error::NotSpd { .. })));
    }

    #[test]
    fn lu_inverse_and_det() {
        let m = Matrix::from_rows(&[[0.0, 2.0], [1.0, 1.0]]);
        let lu = Lu::new(&m).unwrap();
        assert!((lu.det() + 2.0).abs() < 1e-15);
        let prod = m.matmul(&lu.inverse()).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(2)) < 1e-15);
        assert!(matches!(
            Lu::new(&Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]])),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&Matrix::identity(3), 1e-10), 3);
        assert_eq!(rank(&Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]), 1e-10), 1);
        assert_eq!(rank(&Matrix::zeros(2, 2), 1e-10), 0);
        assert_eq!(rank(&Matrix::from_rows(&[[1.0, 0.0, 1.0]]), 1e-10), 1);
    }
}
