use rand::Rng;

use crate::concept::Boundary;
use crate::error::{Error, Result};
use crate::metric::{exact_region_mass, planar, MassEstimate, Metric, Region, Shape, Space};

/// `ν(A^r)` for `A` the described boundary, `A^r = ⋃_{a∈A} B(a, r)`.
/// Exact for point sets on a line, spheres whose expanded balls have
/// closed-form masses, and segments in a planar Euclidean box; Monte
/// Carlo over `mc_samples` draws otherwise.
pub fn expansion_mass<R: Rng + ?Sized>(
    space: &Space,
    boundary: &Boundary,
    r: f64,
    mc_samples: usize,
    rng: &mut R,
) -> Result<MassEstimate> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::param("r", "must be ≥ 0"));
    }
    if boundary.is_empty() || r == 0.0 {
        return Ok(MassEstimate::exact(0.0));
    }
    if let Some(m) = exact_expansion(space, boundary, r) {
        return Ok(MassEstimate::exact(m));
    }
    if mc_samples == 0 {
        return Err(Error::NeedsMonteCarlo);
    }
    let hits = (0..mc_samples)
        .filter(|_| boundary.distance(space.metric, &space.sample_base(rng)) <= r)
        .count();
    let total = space.total_mass();
    let p = hits as f64 / mc_samples as f64;
    Ok(MassEstimate {
        mass: total * p,
        std_err: total * (p * (1.0 - p) / mc_samples as f64).sqrt(),
        exact: false,
        samples: mc_samples,
    })
}

fn exact_expansion(space: &Space, boundary: &Boundary, r: f64) -> Option<f64> {
    match boundary {
        Boundary::Points { points } if space.dim() == 1 => {
            let parts = points
                .iter()
                .map(|p| Region::Ball {
                    center: p.to_vec(),
                    radius: r,
                })
                .collect();
            exact_region_mass(space, &Region::Union { parts })
        }
        Boundary::Sphere { center, radius } if space.metric == Metric::Euclidean => {
            let outer = space.ball_mass(center, radius + r)?;
            let inner = if r < *radius {
                space.ball_mass(center, radius - r)?
            } else {
                0.0
            };
            Some(outer - inner)
        }
        Boundary::Segment { a, b } if space.metric == Metric::Euclidean && space.dim() == 2 => {
            let (lo, hi) = match space.shape {
                Shape::Box { lo, hi, .. } => (lo, hi),
                _ => return None,
            };
            Some(segment_tube_in_box([a[0], a[1]], [b[0], b[1]], r, lo, hi))
        }
        _ => None,
    }
}

/// Area of `{p : dist(p, [a, b]) ≤ r} ∩ [lo, hi]²`, split into the
/// rectangle swept along the segment and the two half-disk end caps.
pub fn segment_tube_in_box(a: [f64; 2], b: [f64; 2], r: f64, lo: f64, hi: f64) -> f64 {
    let bx = planar::rect(lo, hi, lo, hi);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return planar::disk_polygon_area(a, r, &bx);
    }
    let t = [dx / len, dy / len];
    let n = [-t[1], t[0]];
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    // slab between the end lines, within r of the line
    let mut slab = planar::clip_halfplane(&bx, t, dot(t, a));
    slab = planar::clip_halfplane(&slab, [-t[0], -t[1]], -dot(t, b));
    slab = planar::clip_halfplane(&slab, n, dot(n, a) - r);
    slab = planar::clip_halfplane(&slab, [-n[0], -n[1]], -(dot(n, a) + r));
    let body = planar::area(&slab);
    let behind_a = planar::clip_halfplane(&bx, [-t[0], -t[1]], -dot(t, a));
    let beyond_b = planar::clip_halfplane(&bx, t, dot(t, b));
    body + planar::disk_polygon_area(a, r, &behind_a) + planar::disk_polygon_area(b, r, &beyond_b)
}

/// `ν(V_r^c)` straight from margins: Monte Carlo mass of `{m_c < r}`.
pub fn low_margin_mass<R: Rng + ?Sized>(
    space: &Space,
    concept: &crate::concept::Concept,
    r: f64,
    mc_samples: usize,
    rng: &mut R,
) -> MassEstimate {
    let mut hits = 0usize;
    for _ in 0..mc_samples {
        let x = space.sample_base(rng);
        if concept.margin(space, &x, rng) < r {
            hits += 1;
        }
    }
    let total = space.total_mass();
    let p = hits as f64 / mc_samples.max(1) as f64;
    MassEstimate {
        mass: total * p,
        std_err: total * (p * (1.0 - p) / mc_samples.max(1) as f64).sqrt(),
        exact: false,
        samples: mc_samples,
    }
}
