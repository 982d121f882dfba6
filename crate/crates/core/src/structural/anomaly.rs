use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, sym_eig, Matrix};
use crate::rng::{stream_rng, streams};
use crate::systems::unit_sphere;

/// Directions probed by [`certify_anomaly_free`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Directions {
    /// `count` seeded random unit vectors plus the eigenvectors of the
    /// final Gram matrix `Σ x_t x_tᵀ`.
    Random { count: usize, seed: u64 },
    /// Explicit directions, normalized before use.
    Explicit { vectors: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyParams {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
}

impl AnomalyParams {
    /// `c1 ≤ 1/2` and `c ≥ 1/c1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 <= 0.5) {
            return Err(Error::InvalidParameter(format!("c1 = {} must lie in (0, 1/2]", self.c1)));
        }
        if self.c < 1.0 / self.c1 {
            return Err(Error::InvalidParameter(format!(
                "c = {} must be at least 1/c1 = {}",
                self.c,
                1.0 / self.c1
            )));
        }
        if !(self.c2 > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter("c2 and alpha must be positive".into()));
        }
        Ok(())
    }
}

/// One `(t, direction)` check: `M = |wᵀx_t| > c` requires at least
/// `c1 M^α` indices `s < t` with `|wᵀx_s| ≥ c2 M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyCheck {
    pub t: usize,
    pub direction: usize,
    pub m: f64,
    pub required: f64,
    pub observed: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRecord {
    pub w: Vec<f64>,
    pub checks: usize,
    pub failures: usize,
    /// The check with the smallest `observed − required`, if any fired.
    pub worst: Option<AnomalyCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub params: AnomalyParams,
    pub directions: Vec<DirectionRecord>,
    /// Every triggered check, ordered by direction then `t`.
    pub checks: Vec<AnomalyCheck>,
    pub certified: bool,
}

impl AnomalyReport {
    /// Flat CSV, one row per `(t, direction)` check.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,t,m,required,observed,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{:?},{:?},{},{}\n",
                c.direction, c.t, c.m, c.required, c.observed, c.pass
            ));
        }
        out
    }
}

pub fn resolve_directions(series: &[Vec<f64>], dirs: &Directions) -> Result<Vec<Vec<f64>>> {
    let d = series.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    match dirs {
        Directions::Explicit { vectors } => {
            for v in vectors {
                if v.len() != d {
                    return Err(Error::dims("direction length"));
                }
                let n = norm2(v);
                if n == 0.0 {
                    return Err(Error::InvalidParameter("zero direction".into()));
                }
                out.push(v.iter().map(|x| x / n).collect());
            }
        }
        Directions::Random { count, seed } => {
            for k in 0..*count {
                let mut rng = stream_rng(*seed, streams::DIRECTIONS, k as u64);
                out.push(unit_sphere(d, &mut rng));
            }
            let mut gram = Matrix::zeros(d, d);
            for x in series {
                gram.add_outer(1.0, x, x);
            }
            let eig = sym_eig(&gram)?;
            for j in 0..d {
                out.push(eig.vector(j));
            }
        }
    }
    Ok(out)
}

/// For each `t`, the number of `s < t` with `p_s ≥ c2 p_t`, via a Fenwick
/// tree over the ranks of the projections.
fn prior_large_counts(p: &[f64], c2: f64) -> Vec<usize> {
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut tree = vec![0usize; n + 1];
    let mut counts = Vec::with_capacity(n);
    for (t, &pt) in p.iter().enumerate() {
        // Number of inserted values < c2 p_t, subtracted from t.
        let bound = c2 * pt;
        let below = sorted.partition_point(|&v| v < bound);
        let mut i = below;
        let mut less = 0;
        while i > 0 {
            less += tree[i];
            i &= i - 1;
        }
        counts.push(t - less);
        let mut i = sorted.partition_point(|&v| v < pt) + 1;
        while i <= n {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    counts
}

/// Checks `(c, c1, c2, α)`-anomaly-freeness of `series` along the given
/// directions.
pub fn certify_anomaly_free(
    series: &[Vec<f64>],
    dirs: &Directions,
    params: AnomalyParams,
) -> Result<AnomalyReport> {
    params.validate()?;
    let ws = resolve_directions(series, dirs)?;
    let mut records = Vec::with_capacity(ws.len());
    let mut all = Vec::new();
    for (k, w) in ws.into_iter().enumerate() {
        let p: Vec<f64> = series.iter().map(|x| dot(&w, x).abs()).collect();
        let counts = prior_large_counts(&p, params.c2);
        let mut rec = DirectionRecord {
            w,
            checks: 0,
            failures: 0,
            worst: None,
        };
        for (t, (&m, &observed)) in p.iter().zip(&counts).enumerate() {
            if m <= params.c {
                continue;
            }
            let required = params.c1 * m.powf(params.alpha);
            let check = AnomalyCheck {
                t,
                direction: k,
                m,
                required,
                observed,
                pass: observed as f64 >= required,
            };
            rec.checks += 1;
            if !check.pass {
                rec.failures += 1;
            }
            let slack = observed as f64 - required;
            if rec
                .worst
                .as_ref()
                .is_none_or(|w| slack < w.observed as f64 - w.required)
            {
                rec.worst = Some(check.clone());
            }
            all.push(check);
        }
        records.push(rec);
    }
    let certified = all.iter().all(|c| c.pass);
    Ok(AnomalyReport {
        params,
        directions: records,
        checks: all,
        certified,
    })
}

/// Smallest `c` certifying the series for given `(c1, c2, α)`:
/// `max(1/c1, largest failing |wᵀx_t|)`.
pub fn minimal_c(series: &[Vec<f64>], ws: &[Vec<f64>], c1: f64, c2: f64, alpha: f64) -> f64 {
    let mut c = 1.0 / c1;
    for w in ws {
        let p: Vec<f64> = series.iter().map(|x| dot(w, x).abs()).collect();
        let counts = prior_large_counts(&p, c2);
        for (&m, &n) in p.iter().zip(&counts) {
            if (n as f64) < c1 * m.powf(alpha) {
                c = c.max(m);
            }
        }
    }
    c
}

/// Non-dominated `(c, c1, c2)` over the grid (smaller `c`, larger `c1`
/// and `c2` are better) at fixed `α`.
pub fn anomaly_pareto(
    series: &[Vec<f64>],
    dirs: &Directions,
    alpha: f64,
    c1_grid: &[f64],
    c2_grid: &[f64],
) -> Result<Vec<AnomalyParams>> {
    let ws = resolve_directions(series, dirs)?;
    let mut pts = Vec::new();
    for &c1 in c1_grid {
        if !(c1 > 0.0 && c1 <= 0.5) {
            return Err(Error::InvalidParameter(format!("c1 = {c1} outside (0, 1/2]")));
        }
        for &c2 in c2_grid {
            let c = minimal_c(series, &ws, c1, c2, alpha);
            pts.push(AnomalyParams { c, c1, c2, alpha });
        }
    }
    let dominated = |a: &AnomalyParams, b: &AnomalyParams| {
        b.c <= a.c && b.c1 >= a.c1 && b.c2 >= a.c2 && (b.c < a.c || b.c1 > a.c1 || b.c2 > a.c2)
    };
    let front: Vec<AnomalyParams> = pts
        .iter()
        .filter(|a| !pts.iter().any(|b| dominated(a, b)))
        .copied()
        .collect();
    Ok(front)
}
