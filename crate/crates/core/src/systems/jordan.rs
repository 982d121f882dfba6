use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::rng::{stream_rng, streams};

/// One Jordan block: eigenvalue `magnitude * e^{i phase}` repeated `size`
/// times. Phases 0 and π give real blocks; any other phase describes a
/// conjugate pair realized as a real `2 size x 2 size` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanBlock {
    pub magnitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default = "one")]
    pub size: usize,
}

fn one() -> usize {
    1
}

impl JordanBlock {
    pub fn real(eigenvalue: f64, size: usize) -> Self {
        JordanBlock {
            magnitude: eigenvalue.abs(),
            phase: if eigenvalue < 0.0 { PI } else { 0.0 },
            size,
        }
    }

    pub fn rotation(magnitude: f64, phase: f64, size: usize) -> Self {
        JordanBlock {
            magnitude,
            phase,
            size,
        }
    }

    pub fn is_real(&self) -> bool {
        self.phase.abs() < 1e-12 || (self.phase - PI).abs() < 1e-12
    }

    pub fn real_dim(&self) -> usize {
        if self.is_real() {
            self.size
        } else {
            2 * self.size
        }
    }

    fn real_eigenvalue(&self) -> f64 {
        if self.phase.abs() < 1e-12 {
            self.magnitude
        } else {
            -self.magnitude
        }
    }
}

/// Jordan-form description of a transition matrix `A = S J S^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanSpec {
    pub blocks: Vec<JordanBlock>,
    /// Target `‖S‖₂ ‖S^{-1}‖₂`.
    #[serde(default = "unit_condition")]
    pub condition: f64,
    #[serde(default)]
    pub seed: u64,
}

fn unit_condition() -> f64 {
    1.0
}

impl JordanSpec {
    pub fn new(blocks: Vec<JordanBlock>, condition: f64, seed: u64) -> Self {
        JordanSpec {
            blocks,
            condition,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidParameter("jordan spec has no blocks".into()));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if !(0.0..=1.0).contains(&b.magnitude) {
                return Err(Error::InvalidParameter(format!(
                    "block {i}: eigenvalue magnitude {} outside [0, 1]",
                    b.magnitude
                )));
            }
            if !(0.0..2.0 * PI).contains(&b.phase) {
                return Err(Error::InvalidParameter(format!(
                    "block {i}: phase {} outside [0, 2pi)",
                    b.phase
                )));
            }
            if b.size == 0 {
                return Err(Error::InvalidParameter(format!("block {i}: size 0")));
            }
        }
        if !(self.condition >= 1.0 && self.condition.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "condition {} must be >= 1",
                self.condition
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(JordanBlock::real_dim).sum()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|b| b.size).max().unwrap_or(0)
    }

    /// Block-diagonal real Jordan matrix `J`.
    pub fn jordan_matrix(&self) -> Matrix {
        let d = self.dim();
        let mut j = Matrix::zeros(d, d);
        let mut off = 0;
        for b in &self.blocks {
            if b.is_real() {
                let lam = b.real_eigenvalue();
                for i in 0..b.size {
                    j[(off + i, off + i)] = lam;
                    if i + 1 < b.size {
                        j[(off + i, off + i + 1)] = 1.0;
                    }
                }
            } else {
                let (s, c) = b.phase.sin_cos();
                let (re, im) = (b.magnitude * c, b.magnitude * s);
                for i in 0..b.size {
                    let o = off + 2 * i;
                    j[(o, o)] = re;
                    j[(o, o + 1)] = -im;
                    j[(o + 1, o)] = im;
                    j[(o + 1, o + 1)] = re;
                    if i + 1 < b.size {
                        j[(o, o + 2)] = 1.0;
                        j[(o + 1, o + 3)] = 1.0;
                    }
                }
            }
            off += b.real_dim();
        }
        j
    }

    /// Similarity `S` with `‖S‖₂‖S^{-1}‖₂` equal to `condition`.
    ///
    /// `S = Q₁ D Q₂` with seeded random rotations `Q₁, Q₂` and a geometric
    /// diagonal scaling from 1 to `condition`; `condition == 1` gives `S = I`.
    pub fn similarity(&self) -> Matrix {
        let d = self.dim();
        if self.condition <= 1.0 || d == 1 {
            return Matrix::identity(d);
        }
        let mut rng = stream_rng(self.seed, streams::SYSTEM_MATRICES, 0);
        let q1 = random_rotation(d, &mut rng);
        let q2 = random_rotation(d, &mut rng);
        let diag: Vec<f64> = (0..d)
            .map(|i| self.condition.powf(i as f64 / (d - 1) as f64))
            .collect();
        &(&q1 * &Matrix::from_diag(&diag)) * &q2
    }

    /// Eigenvalues with algebraic multiplicity.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            if b.is_real() {
                out.extend(std::iter::repeat_n(Complex64::new(b.real_eigenvalue(), 0.0), b.size));
            } else {
                let z = Complex64::from_polar(b.magnitude, b.phase);
                for _ in 0..b.size {
                    out.push(z);
                    out.push(z.conj());
                }
            }
        }
        out
    }

    /// `(A, S)` with `A = S J S^{-1}`.
    pub fn transition(&self) -> Result<(Matrix, Matrix)> {
        self.validate()?;
        let s = self.similarity();
        let s_inv = Lu::new(&s)?.inverse();
        let a = &(&s * &self.jordan_matrix()) * &s_inv;
        Ok((a, s))
    }
}

/// Product of Givens rotations over every coordinate pair, two passes.
fn random_rotation<R: Rng>(d: usize, rng: &mut R) -> Matrix {
    let mut q = Matrix::identity(d);
    for _ in 0..2 {
        for p in 0..d {
            for r in (p + 1)..d {
                let angle: f64 = rng.random_range(0.0..2.0 * PI);
                let (s, c) = angle.sin_cos();
                for k in 0..d {
                    let qp = q[(k, p)];
                    let qr = q[(k, r)];
                    q[(k, p)] = c * qp - s * qr;
                    q[(k, r)] = s * qp + c * qr;
                }
            }
        }
    }
    q
}
