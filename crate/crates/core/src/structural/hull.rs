use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::l1span::{l1_span_norm, l1_span_norm_at_most, outlier_threshold};
use super::planar::convex_hull;
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::rng::{stream_rng, streams};

/// Sides of the regular polygon inscribed in the unit disk.
pub const DISK_POLYGON_SIDES: usize = 256;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullVolume {
    pub value: f64,
    /// Standard error of the Monte Carlo estimate; `None` for exact modes.
    pub std_error: Option<f64>,
}

impl HullVolume {
    pub fn is_exact(&self) -> bool {
        self.std_error.is_none()
    }
}

/// Options for [`hull_volume_with`].
#[derive(Debug, Clone, Copy)]
pub struct VolumeOptions {
    pub include_unit_ball: bool,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions {
            include_unit_ball: true,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

/// Volume of the absolute convex hull of `points` (and of the unit ball
/// when `include_unit_ball`).
pub fn hull_volume(points: &[Vec<f64>], include_unit_ball: bool) -> Result<HullVolume> {
    hull_volume_with(
        points,
        VolumeOptions {
            include_unit_ball,
            ..VolumeOptions::default()
        },
    )
}

pub fn hull_volume_with(points: &[Vec<f64>], opts: VolumeOptions) -> Result<HullVolume> {
    let d = match points.first() {
        Some(p) => p.len(),
        None if opts.include_unit_ball => {
            return Err(Error::InvalidParameter(
                "dimension is ambiguous without points; use hull_volume_in".into(),
            ))
        }
        None => return Ok(HullVolume { value: 0.0, std_error: None }),
    };
    hull_volume_in(d, points, opts)
}

/// As [`hull_volume_with`] with the dimension given explicitly, so the
/// point set may be empty.
pub fn hull_volume_in(d: usize, points: &[Vec<f64>], opts: VolumeOptions) -> Result<HullVolume> {
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::dims("hull points of differing dimension"));
    }
    let exact = |value| Ok(HullVolume { value, std_error: None });
    match d {
        0 => Err(Error::InvalidParameter("dimension 0".into())),
        1 => {
            let r = points
                .iter()
                .map(|p| p[0].abs())
                .fold(if opts.include_unit_ball { 1.0 } else { 0.0 }, f64::max);
            exact(2.0 * r)
        }
        2 => {
            let mut pts: Vec<(f64, f64)> = points
                .iter()
                .flat_map(|p| [(p[0], p[1]), (-p[0], -p[1])])
                .collect();
            if opts.include_unit_ball {
                pts.extend(disk_polygon());
            }
            exact(polygon_area(&convex_hull(pts)))
        }
        3..=6 => {
            if !opts.include_unit_ball {
                return Err(Error::InvalidParameter(
                    "Monte Carlo volume needs the unit ball in the hull".into(),
                ));
            }
            monte_carlo_volume(d, points, opts.mc_samples, opts.seed)
        }
        _ => Err(Error::DimensionTooLarge(d)),
    }
}

fn disk_polygon() -> impl Iterator<Item = (f64, f64)> {
    (0..DISK_POLYGON_SIDES).map(|k| {
        let th = 2.0 * std::f64::consts::PI * k as f64 / DISK_POLYGON_SIDES as f64;
        (th.cos(), th.sin())
    })
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        s += a.0 * b.1 - a.1 * b.0;
    }
    s.abs() / 2.0
}

/// Hit-or-miss estimate inside the cube `[−R, R]^d`, `R = max(1, max‖p‖)`.
fn monte_carlo_volume(d: usize, points: &[Vec<f64>], samples: usize, seed: u64) -> Result<HullVolume> {
    if samples == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least one sample".into()));
    }
    let r = points.iter().map(|p| norm2(p)).fold(1.0, f64::max);
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: Vec<Result<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, streams::MONTE_CARLO, c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut hits = 0;
            for _ in 0..count {
                let y: Vec<f64> = (0..d).map(|_| rng.random_range(-r..r)).collect();
                if l1_span_norm_at_most(&y, points, 1.0)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    let mut total = 0usize;
    for h in hits {
        total += h?;
    }
    let cube = (2.0 * r).powi(d as i32);
    let p = total as f64 / samples as f64;
    Ok(HullVolume {
        value: cube * p,
        std_error: Some(cube * (p * (1.0 - p) / samples as f64).sqrt()),
    })
}

/// Outcome of probing the volume-doubling lemma at one added point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingRecord {
    /// Upper bound on `‖x‖_{Δ′(S)}`.
    pub norm: f64,
    pub norm_lower: f64,
    pub ratio: f64,
    pub exact: bool,
    /// `(C, required ratio 1 + 2e^{−1/C}, triggered, satisfied)` for each
    /// probed `C`; a check triggers when the norm lower bound is at least
    /// `2 C d`.
    pub checks: Vec<(f64, f64, bool, bool)>,
    /// Ratio ≥ 2 required when the norm reaches `(2/ln 2) d`.
    pub doubling_triggered: bool,
    pub satisfied: bool,
}

/// `Vol(Δ′(S ∪ {x})) / Vol(Δ′(S))` together with the lemma's thresholds.
/// Only exact modes (`d ≤ 2`) back assertions; Monte Carlo ratios are
/// reported with `exact = false` and never fail the record.
pub fn check_volume_doubling(s: &[Vec<f64>], x: &[f64], opts: VolumeOptions) -> Result<DoublingRecord> {
    let d = x.len();
    let dec = l1_span_norm(x, s)?;
    let before = hull_volume_in(d, s, opts)?;
    let mut with: Vec<Vec<f64>> = s.to_vec();
    with.push(x.to_vec());
    let after = hull_volume_in(d, &with, opts)?;
    let ratio = after.value / before.value;
    let exact = before.is_exact() && after.is_exact();
    let lower = dec.lower_bound();
    let checks: Vec<(f64, f64, bool, bool)> = [1.0 / std::f64::consts::LN_2, 1.0, 2.0]
        .iter()
        .map(|&c| {
            let required = 1.0 + 2.0 * (-1.0 / c).exp();
            let triggered = lower >= 2.0 * c * d as f64;
            (c, required, triggered, !triggered || ratio >= required * (1.0 - 1e-12))
        })
        .collect();
    let doubling_triggered = lower >= outlier_threshold(d);
    let doubling_ok = !doubling_triggered || ratio >= 2.0 * (1.0 - 1e-12);
    let satisfied = !exact || (doubling_ok && checks.iter().all(|c| c.3));
    Ok(DoublingRecord {
        norm: dec.value,
        norm_lower: lower,
        ratio,
        exact,
        checks,
        doubling_triggered,
        satisfied,
    })
}
