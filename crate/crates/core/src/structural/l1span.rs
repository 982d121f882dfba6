use serde::{Deserialize, Serialize};

use super::planar::SymmetricHull;
use crate::error::Result;
use crate::linalg::{dot, norm2, Cholesky, Matrix};

pub const MAX_ITERATIONS: usize = 100_000;
/// Target duality gap relative to `‖x‖₂`.
pub const GAP_TOLERANCE: f64 = 1e-6;
const CHECK_EVERY: usize = 10;

/// `x = Σ a_s x_s + v` with `value = Σ|a_s| + ‖v‖₂` an upper bound on the
/// norm `‖x‖_{Δ′(S)}` and `value − gap` a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Decomposition {
    /// Nonzero coefficients as `(basis index, a_s)`, sorted by index.
    pub coefficients: Vec<(usize, f64)>,
    pub residual: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl L1Decomposition {
    /// `Σ |a_s|`
    pub fn l1(&self) -> f64 {
        self.coefficients.iter().map(|(_, a)| a.abs()).sum()
    }

    pub fn residual_norm(&self) -> f64 {
        norm2(&self.residual)
    }

    pub fn lower_bound(&self) -> f64 {
        (self.value - self.gap).max(0.0)
    }

    /// `Σ a_s x_s + v`
    pub fn reconstruct(&self, basis: &[Vec<f64>]) -> Vec<f64> {
        let mut out = self.residual.clone();
        for &(s, a) in &self.coefficients {
            for (o, b) in out.iter_mut().zip(&basis[s]) {
                *o += a * b;
            }
        }
        out
    }
}

/// What the solver is asked to decide.
#[derive(Clone, Copy)]
enum Goal {
    /// Solve to the gap tolerance.
    Value,
    /// Stop as soon as the norm is known to be `≤ t` or `> t`.
    Compare(f64),
}

struct Outcome {
    coef: Vec<f64>,
    primal: f64,
    dual: f64,
    iterations: usize,
    converged: bool,
}

/// Normalized problem data: unit columns, their original norms and the
/// original indices of nonzero basis vectors.
struct Problem {
    d: usize,
    cols: Vec<Vec<f64>>,
    norms: Vec<f64>,
    index: Vec<usize>,
    /// Cholesky factor of `I + X̃ X̃ᵀ` for the Woodbury identity.
    woodbury: Cholesky,
}

impl Problem {
    fn new(d: usize, basis: &[Vec<f64>]) -> Result<Self> {
        let mut cols = Vec::new();
        let mut norms = Vec::new();
        let mut index = Vec::new();
        for (s, b) in basis.iter().enumerate() {
            let n = norm2(b);
            if n > 0.0 && n.is_finite() {
                cols.push(b.iter().map(|v| v / n).collect::<Vec<_>>());
                norms.push(n);
                index.push(s);
            }
        }
        let mut g = Matrix::identity(d);
        for c in &cols {
            g.add_outer(1.0, c, c);
        }
        Ok(Problem {
            d,
            cols,
            norms,
            index,
            woodbury: Cholesky::new(&g)?,
        })
    }

    fn n(&self) -> usize {
        self.cols.len()
    }

    fn apply(&self, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (c, &ai) in self.cols.iter().zip(a) {
            if ai != 0.0 {
                for (o, v) in out.iter_mut().zip(c) {
                    *o += ai * v;
                }
            }
        }
        out
    }

    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|c| dot(c, y)).collect()
    }

    /// `(I + X̃ᵀX̃)⁻¹ r = r − X̃ᵀ (I + X̃X̃ᵀ)⁻¹ X̃ r`
    fn inverse_apply(&self, r: &[f64]) -> Vec<f64> {
        let xr = self.apply(r);
        let w = self.woodbury.solve(&xr).expect("dimension d");
        let back = self.apply_t(&w);
        r.iter().zip(back).map(|(a, b)| a - b).collect()
    }

    fn primal(&self, x: &[f64], a: &[f64]) -> f64 {
        let xa = self.apply(a);
        let res: Vec<f64> = x.iter().zip(&xa).map(|(p, q)| p - q).collect();
        a.iter().zip(&self.norms).map(|(a, n)| a.abs() / n).sum::<f64>() + norm2(&res)
    }

    /// `xᵀz` after scaling `z` into `{‖z‖ ≤ 1, |x_sᵀz| ≤ 1}`.
    fn dual(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut scale = norm2(z).max(1.0);
        for (c, n) in self.cols.iter().zip(&self.norms) {
            scale = scale.max((dot(c, z) * n).abs());
        }
        if scale == 0.0 || !scale.is_finite() {
            return 0.0;
        }
        dot(x, z) / scale
    }

    /// ADMM on `min Σ w_s|ã_s| + ‖x − X̃ã‖₂` with `w_s = 1/‖x_s‖`, split as
    /// `ã = b`, `X̃ã = s`.
    fn solve(&self, x: &[f64], goal: Goal) -> Outcome {
        let n = self.n();
        let d = self.d;
        let weights: Vec<f64> = self.norms.iter().map(|v| 1.0 / v).collect();
        let mut rho = 1.0;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut s = vec![0.0; d];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; d];

        let mut best_coef = vec![0.0; n];
        let mut best_primal = norm2(x);
        let mut best_dual = self.dual(x, x);
        let mut iterations = 0;

        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let xs_minus: Vec<f64> = s.iter().zip(&u2).map(|(p, q)| p - q).collect();
            let back = self.apply_t(&xs_minus);
            let rhs: Vec<f64> = (0..n).map(|i| b[i] - u1[i] + back[i]).collect();
            a = self.inverse_apply(&rhs);

            let b_old = std::mem::take(&mut b);
            b = (0..n)
                .map(|i| {
                    let v = a[i] + u1[i];
                    let k = weights[i] / rho;
                    v.signum() * (v.abs() - k).max(0.0)
                })
                .collect();

            let xa = self.apply(&a);
            let q: Vec<f64> = xa.iter().zip(&u2).map(|(p, q)| p + q).collect();
            let diff: Vec<f64> = x.iter().zip(&q).map(|(p, q)| p - q).collect();
            let dn = norm2(&diff);
            let shrink = if dn > 0.0 { (1.0 - 1.0 / (rho * dn)).max(0.0) } else { 0.0 };
            let s_old = std::mem::replace(
                &mut s,
                x.iter().zip(&diff).map(|(xi, di)| xi - shrink * di).collect(),
            );

            for i in 0..n {
                u1[i] += a[i] - b[i];
            }
            for i in 0..d {
                u2[i] += xa[i] - s[i];
            }

            if iterations % CHECK_EVERY == 0 || iterations == MAX_ITERATIONS {
                for cand in [&b, &a] {
                    let p = self.primal(x, cand);
                    if p < best_primal {
                        best_primal = p;
                        best_coef.clone_from(cand);
                    }
                }
                let z: Vec<f64> = u2.iter().map(|v| -rho * v).collect();
                best_dual = best_dual.max(self.dual(x, &z));
                let xb = self.apply(&best_coef);
                let r: Vec<f64> = x.iter().zip(&xb).map(|(p, q)| p - q).collect();
                best_dual = best_dual.max(self.dual(x, &r));

                let done = match goal {
                    Goal::Value => best_primal - best_dual <= GAP_TOLERANCE,
                    Goal::Compare(t) => {
                        best_primal <= t || best_dual > t || best_primal - best_dual <= GAP_TOLERANCE
                    }
                };
                if done {
                    return Outcome {
                        coef: best_coef,
                        primal: best_primal,
                        dual: best_dual,
                        iterations,
                        converged: true,
                    };
                }

                // Residual balancing; the a-update does not depend on ρ.
                let pr = (0..n).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>()
                    + (0..d).map(|i| (xa[i] - s[i]).powi(2)).sum::<f64>();
                let ds: Vec<f64> = s.iter().zip(&s_old).map(|(p, q)| p - q).collect();
                let xt_ds = self.apply_t(&ds);
                let dr = (0..n)
                    .map(|i| (b[i] - b_old[i] + xt_ds[i]).powi(2))
                    .sum::<f64>()
                    * rho
                    * rho;
                if pr > 100.0 * dr {
                    rho *= 2.0;
                    u1.iter_mut().for_each(|v| *v /= 2.0);
                    u2.iter_mut().for_each(|v| *v /= 2.0);
                } else if dr > 100.0 * pr {
                    rho /= 2.0;
                    u1.iter_mut().for_each(|v| *v *= 2.0);
                    u2.iter_mut().for_each(|v| *v *= 2.0);
                }
            }
        }
        Outcome {
            coef: best_coef,
            primal: best_primal,
            dual: best_dual,
            iterations,
            converged: false,
        }
    }
}

/// Norm of `x` with respect to the absolute convex hull of `basis` and the
/// unit ball: `min Σ|a_s| + ‖x − Σ a_s x_s‖₂`.
///
/// A solve that exhausts its iterations is reported with
/// `converged = false` and its remaining gap rather than as an error.
pub fn l1_span_norm(x: &[f64], basis: &[Vec<f64>]) -> Result<L1Decomposition> {
    let d = x.len();
    check_dims(d, basis)?;
    let xn = norm2(x);
    if xn == 0.0 || basis.is_empty() {
        return Ok(L1Decomposition {
            coefficients: Vec::new(),
            residual: x.to_vec(),
            value: xn,
            gap: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if d == 2 {
        return Ok(planar_decomposition(x, basis, &SymmetricHull::new(basis)));
    }
    let prob = Problem::new(d, basis)?;
    if prob.n() == 0 {
        return l1_span_norm(x, &[]);
    }
    let unit: Vec<f64> = x.iter().map(|v| v / xn).collect();
    let out = prob.solve(&unit, Goal::Value);

    let mut coefficients = Vec::new();
    let mut residual = x.to_vec();
    for (k, &c) in out.coef.iter().enumerate() {
        if c != 0.0 {
            let s = prob.index[k];
            let a = c / prob.norms[k] * xn;
            coefficients.push((s, a));
            for (r, b) in residual.iter_mut().zip(&basis[s]) {
                *r -= a * b;
            }
        }
    }
    let value = coefficients.iter().map(|(_, a)| a.abs()).sum::<f64>() + norm2(&residual);
    let lower = out.dual * xn;
    Ok(L1Decomposition {
        coefficients,
        residual,
        value,
        gap: (value - lower).max(0.0),
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Decides `‖x‖_{Δ′(basis)} ≤ threshold`, stopping as soon as a primal
/// point or dual certificate settles the comparison. Undecided solves
/// fall back to the primal upper bound.
pub fn l1_span_norm_at_most(x: &[f64], basis: &[Vec<f64>], threshold: f64) -> Result<bool> {
    let d = x.len();
    check_dims(d, basis)?;
    let xn = norm2(x);
    if xn <= threshold {
        return Ok(true);
    }
    if d == 2 {
        return Ok(l1_span_norm(x, basis)?.value <= threshold);
    }
    let prob = Problem::new(d, basis)?;
    if prob.n() == 0 {
        return Ok(false);
    }
    let unit: Vec<f64> = x.iter().map(|v| v / xn).collect();
    let out = prob.solve(&unit, Goal::Compare(threshold / xn));
    Ok(out.primal * xn <= threshold)
}

/// Exact in the plane: the decomposition comes from the optimal face and
/// the lower bound from the matching dual direction.
fn planar_decomposition(x: &[f64], basis: &[Vec<f64>], hull: &SymmetricHull) -> L1Decomposition {
    let g = hull.gauge((x[0], x[1]));
    let mut residual = x.to_vec();
    for &(s, a) in &g.coefficients {
        for (r, b) in residual.iter_mut().zip(&basis[s]) {
            *r -= a * b;
        }
    }
    let value = g.coefficients.iter().map(|(_, a)| a.abs()).sum::<f64>() + norm2(&residual);
    L1Decomposition {
        coefficients: g.coefficients,
        residual,
        value,
        gap: (value - g.lower).max(0.0),
        iterations: 0,
        converged: true,
    }
}

fn check_dims(d: usize, basis: &[Vec<f64>]) -> Result<()> {
    if basis.iter().any(|b| b.len() != d) {
        return Err(crate::Error::dims("basis vector length differs from x"));
    }
    if basis.iter().flatten().any(|v| !v.is_finite()) {
        return Err(crate::Error::NonFinite("l1 basis"));
    }
    Ok(())
}

/// Outlier indices `I_T = {s : ‖x_s‖_{Δ′(x_0..x_{s-1})} ≥ (2/ln 2) d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSet {
    pub indices: Vec<usize>,
    pub threshold: f64,
    /// Upper bound on `‖x_s‖_{Δ_{s-1}}` for every `s`.
    pub norms: Vec<f64>,
    /// Largest solver gap encountered.
    pub max_gap: f64,
}

pub fn outlier_threshold(d: usize) -> f64 {
    2.0 / std::f64::consts::LN_2 * d as f64
}

/// Classifies every state of `states` against the hull of its past. Norms
/// are solver upper bounds, so the set can only be over-counted.
pub fn outlier_indices(states: &[Vec<f64>]) -> Result<OutlierSet> {
    let d = states.first().map_or(0, Vec::len);
    let threshold = outlier_threshold(d);
    let mut norms = Vec::with_capacity(states.len());
    let mut indices = Vec::new();
    let mut max_gap: f64 = 0.0;
    let mut planar = (d == 2).then(SymmetricHull::default);
    for s in 0..states.len() {
        let dec = match planar.as_mut() {
            Some(hull) => {
                check_dims(2, &states[s..=s])?;
                if s > 0 {
                    hull.extend([(s - 1, (states[s - 1][0], states[s - 1][1]))]);
                }
                planar_decomposition(&states[s], &states[..s], hull)
            }
            None => l1_span_norm(&states[s], &states[..s])?,
        };
        max_gap = max_gap.max(dec.gap);
        if dec.value >= threshold {
            indices.push(s);
        }
        norms.push(dec.value);
    }
    Ok(OutlierSet {
        indices,
        threshold,
        norms,
        max_gap,
    })
}

/// Result of searching the past for a large projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    /// `(|wᵀx_T| − ‖v‖) / Σ|a_s|`
    pub required: f64,
    pub best_index: Option<usize>,
    pub best_value: f64,
    pub holds: bool,
}

/// Given `x_T = Σ a_s x_s + v`, some `s` must satisfy
/// `|wᵀx_s| ≥ (|wᵀx_T| − ‖v‖)/Σ|a_s|` for unit `w`; checked by direct
/// search over the past.
pub fn exists_large_witness(
    x_t: &[f64],
    past: &[Vec<f64>],
    dec: &L1Decomposition,
    w: &[f64],
) -> WitnessRecord {
    let wn = norm2(w);
    let unit: Vec<f64> = w.iter().map(|v| v / wn).collect();
    let la = dec.l1();
    let numer = dot(&unit, x_t).abs() - dec.residual_norm();
    let required = if la > 0.0 { numer / la } else if numer > 0.0 { f64::INFINITY } else { 0.0 };
    let (best_index, best_value) = past
        .iter()
        .enumerate()
        .map(|(s, x)| (s, dot(&unit, x).abs()))
        .fold((None, f64::NEG_INFINITY), |acc, (s, v)| if v > acc.1 { (Some(s), v) } else { acc });
    let slack = 1e-12 * (1.0 + norm2(x_t));
    WitnessRecord {
        required,
        best_index,
        best_value,
        holds: required <= 0.0 || best_value + slack >= required,
    }
}

/// Theoretical bounds `(L_a, L_v)` on a decomposition of `x_T` over its
/// past for `x_t = A x_{t-1} + ξ_t`, `‖x_0‖ ≤ c0`, `‖ξ_t‖ ≤ c_xi`,
/// `max ‖x_t‖ ≤ m_bound`:
///
/// ```text
/// L_a = (2/ln 2) d
/// L_v = max_{k≤k'} ‖A^k‖ · max(c0, L_a) + (Σ_{s<k'} ‖A^s‖ c_xi)(L_a + 1),
/// k' = ⌊d log₂ M⌋
/// ```
pub fn theoretical_l1_bounds(a: &Matrix, c0: f64, c_xi: f64, m_bound: f64) -> Result<(f64, f64)> {
    let d = a.rows();
    let la = outlier_threshold(d);
    let m = m_bound.max(1.0);
    let kp = (d as f64 * m.log2()).floor() as usize;
    let mut power = Matrix::identity(d);
    let mut max_pow: f64 = 1.0;
    let mut sum_pow = 0.0;
    for k in 0..=kp {
        let nrm = crate::linalg::operator_norm(&power);
        max_pow = max_pow.max(nrm);
        if k < kp {
            sum_pow += nrm;
        }
        power = a.matmul(&power)?;
        if !power.is_finite() {
            return Err(crate::Error::Overflow);
        }
    }
    let lv = max_pow * c0.max(la) + sum_pow * c_xi * (la + 1.0);
    Ok((la, lv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_residual() {
        let dec = l1_span_norm(&[0.0, 3.0], &[vec![1.0, 0.0]]).unwrap();
        assert!((dec.value - 3.0).abs() < 1e-6);
        assert!(dec.l1() < 1e-6);
    }

    #[test]
    fn exact_multiple() {
        let dec = l1_span_norm(&[6.0, 0.0], &[vec![3.0, 0.0]]).unwrap();
        assert!((dec.value - 2.0).abs() < 1e-5, "{dec:?}");
        assert!(dec.converged);
        let r = dec.reconstruct(&[vec![3.0, 0.0]]);
        assert!((r[0] - 6.0).abs() < 1e-12 && r[1].abs() < 1e-12);
    }

    #[test]
    fn scalar_geometric_outliers() {
        let states: Vec<Vec<f64>> = (0..8).map(|t| vec![4f64.powi(t)]).collect();
        let set = outlier_indices(&states).unwrap();
        assert_eq!(set.indices, (1..8).collect::<Vec<_>>());
        let ones = vec![vec![1.0]; 8];
        assert!(outlier_indices(&ones).unwrap().indices.is_empty());
    }

    #[test]
    fn comparison_agrees_with_value() {
        let basis = vec![vec![1.0, 1.0], vec![-2.0, 0.5]];
        let x = [3.0, -1.0];
        let v = l1_span_norm(&x, &basis).unwrap().value;
        assert!(l1_span_norm_at_most(&x, &basis, v + 1e-3).unwrap());
        assert!(!l1_span_norm_at_most(&x, &basis, v - 1e-3).unwrap());
    }

    #[test]
    fn planar_matches_admm() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.random_range(1..12);
            let scale = rng.random_range(0.2..4.0);
            let basis: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-scale..scale), rng.random_range(-scale..scale)])
                .collect();
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let exact = planar_decomposition(&x, &basis, &SymmetricHull::new(&basis));
            assert!(exact.gap <= 1e-9 * (1.0 + exact.value), "{exact:?}");
            let r = exact.reconstruct(&basis);
            assert!((r[0] - x[0]).abs() < 1e-9 && (r[1] - x[1]).abs() < 1e-9);
            let prob = Problem::new(2, &basis).unwrap();
            let xn = norm2(&x);
            let unit = [x[0] / xn, x[1] / xn];
            let out = prob.solve(&unit, Goal::Value);
            let lower = exact.lower_bound();
            assert!(out.dual * xn <= exact.value + 1e-9 * (1.0 + xn), "dual {} vs {}", out.dual * xn, exact.value);
            assert!(lower <= out.primal * xn + 1e-9 * (1.0 + xn));
            if out.converged {
                assert!((out.primal * xn - exact.value).abs() <= 1e-5 * (1.0 + xn), "{} vs {} after {}", out.primal * xn, exact.value, out.iterations);
            }
        }
    }
}
