use serde::{Deserialize, Serialize};

use super::l1span::l1_span_norm;
use crate::error::{Error, Result};
use crate::linalg::{dot, rank_one_inverse_update, Matrix};

/// Leverage quantities at step `t`, with `Σ_t = μI + Σ_{s<t} v_s v_sᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageRecord {
    pub t: usize,
    /// `Σ_{s<t} v_sᵀ Σ_t⁻¹ v_s`, at most `d`.
    pub quad_sum: f64,
    /// `b_s = v_sᵀ Σ_t⁻¹ v_t` for `s < t`.
    pub b: Vec<f64>,
    pub b_sq_sum: f64,
    /// `(Σ|a_s|, ‖v‖)` of the decomposition of `v_t` over its past, when
    /// computed at this step.
    pub decomposition: Option<(f64, f64)>,
    /// `(L_a² + L_v²/μ) d²` from the measured decomposition.
    pub bound: Option<f64>,
}

impl LeverageRecord {
    pub fn quad_holds(&self, d: usize) -> bool {
        self.quad_sum <= d as f64 * (1.0 + 1e-10)
    }

    pub fn bound_holds(&self) -> Option<bool> {
        self.bound.map(|b| self.b_sq_sum <= b * (1.0 + 1e-9) + 1e-12)
    }
}

/// Per-step leverage records for `vs`. The ℓ1 decomposition of `v_t`
/// over `v_0..v_{t−1}` is computed every `decompose_every` steps
/// (never when 0), since it dominates the cost.
pub fn leverage_diagnostics(vs: &[Vec<f64>], mu: f64, decompose_every: usize) -> Result<Vec<LeverageRecord>> {
    if !(mu > 0.0) {
        return Err(Error::NonPositiveRegularizer(mu));
    }
    let d = vs.first().map_or(0, Vec::len);
    if vs.iter().any(|v| v.len() != d) {
        return Err(Error::dims("leverage vectors differ in length"));
    }
    let mut inv = Matrix::scaled_identity(d, 1.0 / mu);
    let mut out = Vec::with_capacity(vs.len());
    for t in 0..vs.len() {
        let (mut quad, mut b) = (0.0, Vec::with_capacity(t));
        let w = inv.mul_vec(&vs[t])?;
        for v in &vs[..t] {
            quad += dot(v, &inv.mul_vec(v)?);
            b.push(dot(v, &w));
        }
        let b_sq_sum = b.iter().map(|x| x * x).sum();
        let (decomposition, bound) = if decompose_every > 0 && t > 0 && t % decompose_every == 0 {
            let dec = l1_span_norm(&vs[t], &vs[..t])?;
            let (la, lv) = (dec.l1(), dec.residual_norm());
            (Some((la, lv)), Some((la * la + lv * lv / mu) * (d * d) as f64))
        } else {
            (None, None)
        };
        out.push(LeverageRecord {
            t,
            quad_sum: quad,
            b,
            b_sq_sum,
            decomposition,
            bound,
        });
        inv = rank_one_inverse_update(&inv, &vs[t]);
    }
    Ok(out)
}

/// Covering-argument quantities for the confidence radius. These are
/// reported alongside regret but never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetQuantities {
    pub eps_net: f64,
    pub r_z: f64,
    pub s_b: f64,
    pub radius: f64,
}

/// `ε = 1/Σ g(s)`, `R_z = μ^{−1/2}(L_a² + L_v²/μ)^{1/2} d^{1/2}`,
/// `S_b = √2((L_a² + L_v²/μ) d² + 1)^{1/2}`,
/// `L = √2 C_ξ S_b (d ln(1 + 2R_z/ε) + ln(T/δ))^{1/2}`, where `g(s)` bounds
/// `‖v_s‖`.
pub fn net_quantities(
    l_a: f64,
    l_v: f64,
    mu: f64,
    d: usize,
    c_xi: f64,
    g: &[f64],
    delta: f64,
) -> NetQuantities {
    let lev = l_a * l_a + l_v * l_v / mu;
    let df = d as f64;
    let eps_net = 1.0 / g.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let r_z = (lev * df / mu).sqrt();
    let s_b = (2.0 * (lev * df * df + 1.0)).sqrt();
    let horizon = g.len().max(1) as f64;
    let radius =
        std::f64::consts::SQRT_2 * c_xi * s_b * (df * (1.0 + 2.0 * r_z / eps_net).ln() + (horizon / delta).ln()).sqrt();
    NetQuantities {
        eps_net,
        r_z,
        s_b,
        radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vector() {
        let v = vec![vec![3.0, 4.0], vec![0.0, 0.0]];
        let rec = leverage_diagnostics(&v, 1.0, 0).unwrap();
        assert!((rec[1].quad_sum - 25.0 / 26.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_approaches_d() {
        let vs: Vec<Vec<f64>> = (0..7).map(|s| crate::linalg::unit(3, s % 3)).collect();
        let rec = leverage_diagnostics(&vs, 1e-6, 0).unwrap();
        let last = rec.last().unwrap();
        assert!(last.quad_sum < 3.0 && last.quad_sum > 3.0 - 1e-5);
    }
}
