use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{BallDistribution, NoiseKind};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, sym_eig, Matrix};
use crate::rng::{stream_rng, streams};

/// Unit-scale noise of norm `c_xi` along the least explored direction of
/// `gram`, oriented to agree with `state`.
///
/// When the smallest eigenvalue is repeated the direction is the
/// projection of `state` onto its eigenspace; if that projection vanishes,
/// the first eigenvector of the eigenspace is used, oriented so its first
/// nonzero coordinate is positive.
pub fn adversarial_noise_step(gram: &Matrix, state: &[f64], c_xi: f64) -> Result<Vec<f64>> {
    let d = gram.rows();
    if state.len() != d {
        return Err(Error::dims("adversarial noise state length"));
    }
    let eig = sym_eig(gram)?;
    let lam_min = eig.values[d - 1];
    let tol = 1e-12 * eig.values[0].abs().max(1.0);
    let space: Vec<Vec<f64>> = (0..d)
        .filter(|&j| eig.values[j] - lam_min <= tol)
        .map(|j| eig.vector(j))
        .collect();

    let mut proj = vec![0.0; d];
    for v in &space {
        let c = dot(v, state);
        for (p, vi) in proj.iter_mut().zip(v) {
            *p += c * vi;
        }
    }
    let pn = norm2(&proj);
    let dir = if pn > 1e-12 * norm2(state) && pn > 0.0 {
        proj.iter().map(|p| p / pn).collect()
    } else {
        let mut v = space[space.len() - 1].clone();
        if let Some(first) = v.iter().copied().find(|x| *x != 0.0) {
            if first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let n = norm2(&v);
        v.iter().map(|x| x / n).collect::<Vec<_>>()
    };
    Ok(dir.iter().map(|x| c_xi * x).collect())
}

/// Draws `sqrt_cov · z` with `z` standard normal.
pub(crate) fn gaussian_with_sqrt<R: Rng>(sqrt_cov: &Matrix, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..sqrt_cov.cols()).map(|_| rng.sample(StandardNormal)).collect();
    sqrt_cov.mul_vec(&z).expect("square covariance root")
}

/// Symmetric square root of a PSD covariance (negative eigenvalues from
/// rounding are clamped to zero).
pub fn psd_sqrt(cov: &Matrix) -> Result<Matrix> {
    let eig = sym_eig(cov)?;
    let n = cov.rows();
    let scale = eig.values.first().copied().unwrap_or(0.0).abs();
    let mut out = Matrix::zeros(n, n);
    for (j, &lam) in eig.values.iter().enumerate() {
        if lam < -1e-10 * scale.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "covariance has negative eigenvalue {lam}"
            )));
        }
        let v = eig.vector(j);
        out.add_outer(lam.max(0.0).sqrt(), &v, &v);
    }
    Ok(out)
}

/// Uniform sample from the ball of radius `bound` in `d` dimensions.
pub(crate) fn uniform_ball<R: Rng>(d: usize, bound: f64, rng: &mut R) -> Vec<f64> {
    let dir = unit_sphere(d, rng);
    let u: f64 = rng.random();
    let r = bound * u.powf(1.0 / d as f64);
    dir.iter().map(|x| r * x).collect()
}

pub fn unit_sphere<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm2(&g);
        if n > 1e-300 {
            return g.iter().map(|x| x / n).collect();
        }
    }
}

fn rademacher_axes<R: Rng>(d: usize, bound: f64, rng: &mut R) -> Vec<f64> {
    let s = bound / (d as f64).sqrt();
    (0..d)
        .map(|_| if rng.random::<bool>() { s } else { -s })
        .collect()
}

/// Generator for process noise `ξ_t`, one draw per step.
pub(crate) enum ProcessNoise {
    Zero(usize),
    Gaussian { sqrt_cov: Matrix, seed: u64 },
    Bounded { d: usize, bound: f64, dist: BallDistribution, seed: u64 },
    Adversarial { bound: f64, gram: Matrix },
    File(Vec<Vec<f64>>),
}

impl ProcessNoise {
    pub(crate) fn new(kind: &NoiseKind, seed: u64, d: usize, horizon: usize) -> Result<Self> {
        Ok(match kind {
            NoiseKind::Zero => ProcessNoise::Zero(d),
            NoiseKind::Gaussian { sigma_x, .. } => ProcessNoise::Gaussian {
                sqrt_cov: psd_sqrt(sigma_x)?,
                seed,
            },
            NoiseKind::BoundedIid { bound, distribution } => {
                check_bound(*bound)?;
                ProcessNoise::Bounded {
                    d,
                    bound: *bound,
                    dist: *distribution,
                    seed,
                }
            }
            NoiseKind::AdversarialLeastExplored { bound, regularizer } => {
                check_bound(*bound)?;
                let mu = regularizer.unwrap_or(1.0);
                if !(mu > 0.0) {
                    return Err(Error::NonPositiveRegularizer(mu));
                }
                ProcessNoise::Adversarial {
                    bound: *bound,
                    gram: Matrix::scaled_identity(d, mu),
                }
            }
            NoiseKind::File { path } => {
                ProcessNoise::File(read_vector_csv(path, "xi", d, 1, horizon)?)
            }
        })
    }

    /// `ξ_t` given the previous state and the noiseless drift
    /// `A x_{t-1} + B u_{t-1}`.
    pub(crate) fn draw(&mut self, t: usize, prev: &[f64], drift: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            ProcessNoise::Zero(d) => vec![0.0; *d],
            ProcessNoise::Gaussian { sqrt_cov, seed } => {
                let mut rng = stream_rng(*seed, streams::PROCESS_NOISE, t as u64);
                gaussian_with_sqrt(sqrt_cov, &mut rng)
            }
            ProcessNoise::Bounded { d, bound, dist, seed } => {
                let mut rng = stream_rng(*seed, streams::PROCESS_NOISE, t as u64);
                match dist {
                    BallDistribution::UniformBall => uniform_ball(*d, *bound, &mut rng),
                    BallDistribution::RademacherAxes => rademacher_axes(*d, *bound, &mut rng),
                }
            }
            ProcessNoise::Adversarial { bound, gram } => {
                gram.add_outer(1.0, prev, prev);
                adversarial_noise_step(gram, drift, *bound)?
            }
            ProcessNoise::File(rows) => rows[t - 1].clone(),
        })
    }
}

fn check_bound(bound: f64) -> Result<()> {
    if bound > 0.0 && bound.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("noise bound {bound} must be positive")))
    }
}

/// Reads `count` rows of a CSV with header `t,{prefix}_1..{prefix}_dim`,
/// whose `t` column must run `first_t, first_t+1, ...`.
pub fn read_vector_csv(
    path: &Path,
    prefix: &str,
    dim: usize,
    first_t: usize,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    if !path.exists() {
        return Err(Error::NoiseFileMissing(path.to_path_buf()));
    }
    let malformed = |reason: String| Error::MalformedCsv {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let header = reader.headers().map_err(|e| malformed(e.to_string()))?;
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=dim).map(|i| format!("{prefix}_{i}")))
        .collect();
    if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(malformed(format!("header must be `{}`", expected.join(","))));
    }
    let mut rows = Vec::with_capacity(count);
    for (i, rec) in reader.records().take(count).enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let t: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| malformed(format!("row {}: bad t", i + 1)))?;
        if t != first_t + i {
            return Err(malformed(format!("row {}: expected t = {}", i + 1, first_t + i)));
        }
        let v = rec
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(format!("row {}: {e}", i + 1)))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(malformed(format!("row {}: non-finite value", i + 1)));
        }
        rows.push(v);
    }
    if rows.len() < count {
        return Err(malformed(format!("{} rows, need {count}", rows.len())));
    }
    Ok(rows)
}

/// Writes rows in the format read by [`read_vector_csv`]. Values are
/// printed with round-trip precision.
pub fn write_vector_csv(path: &Path, prefix: &str, first_t: usize, rows: &[Vec<f64>]) -> Result<()> {
    let dim = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=dim).map(|i| format!("{prefix}_{i}")))
        .collect();
    w.write_record(&header).map_err(|e| Error::io(path, e.into()))?;
    for (i, r) in rows.iter().enumerate() {
        let rec: Vec<String> = std::iter::once((first_t + i).to_string())
            .chain(r.iter().map(|x| format!("{x:?}")))
            .collect();
        w.write_record(&rec).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
