//! Exact gauge of `conv(±S ∪ B₂)` in the plane.
//!
//! The gauge is `max_u ⟨x,u⟩ / max(1, h_S(u))` over unit `u`, where `h_S`
//! is the support function of the symmetric hull. Between consecutive
//! breakpoints of `max(1, h_S)` the ratio is monotone or peaks at `x/‖x‖`,
//! so it suffices to evaluate hull edge normals, the angles where a vertex
//! becomes tangent to the disk, and `x/‖x‖`.

pub(crate) type P2 = (f64, f64);

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn dot2(a: P2, b: P2) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn norm(a: P2) -> f64 {
    a.0.hypot(a.1)
}

/// Indices of the counter-clockwise hull vertices (monotone chain).
/// Collinear inputs give the two extreme points.
pub(crate) fn convex_hull_indices(pts: &[P2]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i].0.total_cmp(&pts[j].0).then(pts[i].1.total_cmp(&pts[j].1)));
    order.dedup_by(|a, b| pts[*a] == pts[*b]);
    if order.len() < 3 {
        return order;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for &i in &order {
        while hull.len() >= 2 && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower = hull.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while hull.len() >= lower && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

pub(crate) fn convex_hull(pts: Vec<P2>) -> Vec<P2> {
    convex_hull_indices(&pts).into_iter().map(|i| pts[i]).collect()
}

/// Hull of `±basis`, each vertex tagged with `(basis index, sign)`.
#[derive(Debug, Clone, Default)]
pub(crate) struct SymmetricHull {
    verts: Vec<(P2, usize, f64)>,
}

/// Gauge value with its certificate and a point on the optimal face.
pub(crate) struct PlanarGauge {
    /// `⟨x,u⟩ / max(1, h(u))` at the best direction, a lower bound.
    pub lower: f64,
    /// `(basis index, coefficient)` of the primal decomposition.
    pub coefficients: Vec<(usize, f64)>,
}

impl SymmetricHull {
    pub fn new(basis: &[Vec<f64>]) -> Self {
        let mut h = SymmetricHull::default();
        h.extend(basis.iter().enumerate().map(|(s, b)| (s, (b[0], b[1]))));
        h
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = (usize, P2)>) {
        let mut all = std::mem::take(&mut self.verts);
        for (s, p) in items {
            if norm(p) > 0.0 && p.0.is_finite() && p.1.is_finite() {
                all.push((p, s, 1.0));
                all.push(((-p.0, -p.1), s, -1.0));
            }
        }
        let pts: Vec<P2> = all.iter().map(|v| v.0).collect();
        self.verts = convex_hull_indices(&pts).into_iter().map(|i| all[i]).collect();
    }

    fn support(&self, u: P2) -> f64 {
        self.verts.iter().map(|v| dot2(v.0, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn gauge(&self, x: P2) -> PlanarGauge {
        let xn = norm(x);
        if xn == 0.0 || self.verts.is_empty() {
            return PlanarGauge {
                lower: xn,
                coefficients: Vec::new(),
            };
        }
        let m = self.verts.len();
        let mut cands: Vec<P2> = vec![(x.0 / xn, x.1 / xn)];
        if m >= 3 {
            for i in 0..m {
                let (a, b) = (self.verts[i].0, self.verts[(i + 1) % m].0);
                let e = (b.0 - a.0, b.1 - a.1);
                let en = norm(e);
                if en > 0.0 {
                    cands.push((e.1 / en, -e.0 / en));
                }
            }
        } else {
            let v = self.verts[0].0;
            let vn = norm(v);
            cands.push((-v.1 / vn, v.0 / vn));
            cands.push((v.1 / vn, -v.0 / vn));
        }
        for &(v, _, _) in &self.verts {
            let r2 = dot2(v, v);
            if r2 > 1.0 {
                let along = (v.0 / r2, v.1 / r2);
                let side = (1.0 - 1.0 / r2).sqrt() / r2.sqrt();
                let perp = (-v.1, v.0);
                cands.push((along.0 + side * perp.0, along.1 + side * perp.1));
                cands.push((along.0 - side * perp.0, along.1 - side * perp.1));
            }
        }
        let (mut best_u, mut best_f, mut best_h) = (cands[0], f64::NEG_INFINITY, 1.0);
        for u in cands {
            let un = norm(u);
            let u = (u.0 / un, u.1 / un);
            let h = self.support(u).max(1.0);
            let f = dot2(x, u) / h;
            if f > best_f {
                (best_u, best_f, best_h) = (u, f, h);
            }
        }

        // Generators of the optimal face: active vertices and, when the
        // disk touches the supporting line, the tangent point.
        let tol = 1e-9 * best_h;
        let mut gens: Vec<(P2, Option<usize>)> = self
            .verts
            .iter()
            .enumerate()
            .filter(|(_, v)| dot2(v.0, best_u) >= best_h - tol)
            .map(|(k, v)| (v.0, Some(k)))
            .collect();
        if best_h <= 1.0 + tol {
            gens.push((best_u, None));
        }
        let target = (x.0 / best_f, x.1 / best_f);
        let mut pick: (f64, usize, usize, f64) = (f64::INFINITY, 0, 0, 1.0);
        for i in 0..gens.len() {
            for j in i..gens.len() {
                let (p, q) = (gens[i].0, gens[j].0);
                let pq = (p.0 - q.0, p.1 - q.1);
                let len2 = dot2(pq, pq);
                let lam = if len2 > 0.0 {
                    (dot2((target.0 - q.0, target.1 - q.1), pq) / len2).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                let pt = (q.0 + lam * pq.0, q.1 + lam * pq.1);
                let dist = norm((pt.0 - target.0, pt.1 - target.1));
                if dist < pick.0 {
                    pick = (dist, i, j, lam);
                }
            }
        }
        let mut coefficients = Vec::new();
        if !gens.is_empty() {
            let (_, i, j, lam) = pick;
            for (g, w) in [(i, lam), (j, 1.0 - lam)] {
                if let Some(k) = gens[g].1 {
                    let (_, s, sign) = self.verts[k];
                    if w > 0.0 {
                        coefficients.push((s, sign * w * best_f));
                    }
                }
            }
        }
        coefficients.sort_by_key(|c| c.0);
        coefficients.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        PlanarGauge {
            lower: best_f.max(0.0),
            coefficients,
        }
    }
}
