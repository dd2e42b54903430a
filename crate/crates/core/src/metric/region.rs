use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{planar, Metric, Shape, Space};
use crate::error::{Error, Result};

/// Measurable subsets of the instance space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Closed metric ball (the space's metric).
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x : normal·x >= offset}`
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// Axis-aligned box `[lo, hi]`.
    Cuboid {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Union {
        parts: Vec<Region>,
    },
    Intersection {
        parts: Vec<Region>,
    },
    Complement {
        inner: Box<Region>,
    },
}

/// A mass value together with its Monte Carlo standard error (zero when
/// exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub mass: f64,
    pub std_err: f64,
    pub exact: bool,
    pub samples: usize,
}

impl MassEstimate {
    pub fn exact(mass: f64) -> Self {
        MassEstimate {
            mass,
            std_err: 0.0,
            exact: true,
            samples: 0,
        }
    }
}

impl Region {
    pub fn complement(self) -> Region {
        Region::Complement {
            inner: Box::new(self),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let check = |got: usize| {
            if got != dim {
                Err(Error::DimensionMismatch { expected: dim, got })
            } else {
                Ok(())
            }
        };
        match self {
            Region::Ball { center, radius } => {
                check(center.len())?;
                if !(*radius >= 0.0) {
                    return Err(Error::param("region.radius", "must be >= 0"));
                }
            }
            Region::Halfspace { normal, .. } => check(normal.len())?,
            Region::Cuboid { lo, hi } => {
                check(lo.len())?;
                check(hi.len())?;
            }
            Region::Union { parts } | Region::Intersection { parts } => {
                for p in parts {
                    p.validate(dim)?;
                }
            }
            Region::Complement { inner } => inner.validate(dim)?,
        }
        Ok(())
    }

    pub fn contains(&self, metric: Metric, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => metric.dist(x, center) <= *radius,
            Region::Halfspace { normal, offset } => dot(normal, x) >= *offset,
            Region::Cuboid { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| v >= l && v <= h),
            Region::Union { parts } => parts.iter().any(|p| p.contains(metric, x)),
            Region::Intersection { parts } => parts.iter().all(|p| p.contains(metric, x)),
            Region::Complement { inner } => !inner.contains(metric, x),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ν(region ∩ X): exact for the analytic cases, otherwise a Monte Carlo
/// estimate over `mc_samples` draws from ν.
pub fn region_mass<R: Rng + ?Sized>(
    space: &Space,
    region: &Region,
    mc_samples: usize,
    rng: &mut R,
) -> Result<MassEstimate> {
    region.validate(space.dim())?;
    if let Some(m) = exact_mass(space, region) {
        return Ok(MassEstimate::exact(m));
    }
    if mc_samples == 0 {
        return Err(Error::NeedsMonteCarlo);
    }
    let hits = (0..mc_samples)
        .filter(|_| region.contains(space.metric, &space.sample_base(rng)))
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

/// Closed-form ν(region ∩ X), when one is implemented for this
/// combination of region and space.
pub fn exact_region_mass(space: &Space, region: &Region) -> Option<f64> {
    region.validate(space.dim()).ok()?;
    exact_mass(space, region)
}

pub(crate) fn exact_mass(space: &Space, region: &Region) -> Option<f64> {
    if space.dim() == 1 {
        let set = intersect(&space_intervals(space), &intervals(region, space.metric));
        return Some(measure(&set));
    }
    match region {
        Region::Complement { inner } => exact_mass(space, inner).map(|m| space.total_mass() - m),
        Region::Union { parts } if parts.is_empty() => Some(0.0),
        Region::Union { parts } if parts.len() == 1 => exact_mass(space, &parts[0]),
        Region::Union { .. } => None,
        Region::Intersection { parts } if parts.is_empty() => Some(space.total_mass()),
        Region::Intersection { parts } if parts.len() == 1 => exact_mass(space, &parts[0]),
        Region::Ball { center, radius } => space.ball_mass(center, *radius),
        Region::Cuboid { lo, hi } if matches!(space.shape, Shape::Box { .. }) => {
            let Shape::Box {
                lo: blo, hi: bhi, ..
            } = space.shape
            else {
                unreachable!()
            };
            Some(
                lo.iter()
                    .zip(hi)
                    .map(|(l, h)| (h.min(bhi) - l.max(blo)).max(0.0))
                    .product(),
            )
        }
        Region::Halfspace { normal, offset } if space.dim() == 3 => match space.shape {
            Shape::Box { lo, hi, .. } => Some(halfspace_box_3d(lo, hi, normal, *offset)),
            _ => None,
        },
        _ if space.dim() == 2 => convex_planar_mass(space, region),
        _ => None,
    }
}

/// ν of `{x ∈ [lo,hi]^3 : w·x >= b}` by inclusion–exclusion over the cube
/// vertices.
fn halfspace_box_3d(lo: f64, hi: f64, w: &[f64], b: f64) -> f64 {
    let s = hi - lo;
    let mut t = b - w.iter().map(|wi| wi * lo).sum::<f64>();
    let mut coef = Vec::with_capacity(3);
    let max = w.iter().map(|x| (x * s).abs()).fold(0.0, f64::max);
    for &wi in w {
        let a = wi * s;
        if a < 0.0 {
            t -= a;
        }
        if a.abs() <= 1e-12 * max {
            continue;
        }
        coef.push(a.abs());
    }
    let vol = s.powi(3);
    if coef.is_empty() {
        return if t <= 0.0 { vol } else { 0.0 };
    }
    // F(t) = vol{u ∈ [0,1]^k : Σ c_i u_i <= t}
    let k = coef.len();
    let mut fact = 1.0;
    let mut prod = 1.0;
    for (i, c) in coef.iter().enumerate() {
        fact *= (i + 1) as f64;
        prod *= c;
    }
    let mut acc = 0.0;
    for mask in 0u32..(1 << k) {
        let shift: f64 = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| coef[i])
            .sum();
        let v = (t - shift).max(0.0).powi(k as i32);
        if mask.count_ones() % 2 == 0 {
            acc += v;
        } else {
            acc -= v;
        }
    }
    let below = (acc / (fact * prod)).clamp(0.0, 1.0);
    (1.0 - below) * vol
}

enum Disk {
    None,
    One([f64; 2], f64),
}

/// Planar intersections of half-planes, cuboids and at most one Euclidean
/// ball with a box or disk support.
fn convex_planar_mass(space: &Space, region: &Region) -> Option<f64> {
    let mut planes: Vec<([f64; 2], f64)> = Vec::new();
    let mut disk = Disk::None;
    if !flatten(region, space.metric, &mut planes, &mut disk) {
        return None;
    }
    match &space.shape {
        Shape::Box { lo, hi, .. } => {
            let mut poly = planar::rect(*lo, *hi, *lo, *hi);
            for (w, b) in &planes {
                poly = planar::clip_halfplane(&poly, *w, *b);
            }
            Some(match disk {
                Disk::None => planar::area(&poly),
                Disk::One(c, r) => planar::disk_polygon_area(c, r, &poly),
            })
        }
        Shape::Ball { radius, .. } => {
            if let Disk::One(..) = disk {
                return None;
            }
            let r = *radius;
            let mut poly = planar::rect(-2.0 * r, 2.0 * r, -2.0 * r, 2.0 * r);
            for (w, b) in &planes {
                poly = planar::clip_halfplane(&poly, *w, *b);
            }
            Some(planar::disk_polygon_area([0.0, 0.0], r, &poly))
        }
        _ => None,
    }
}

fn flatten(
    region: &Region,
    metric: Metric,
    planes: &mut Vec<([f64; 2], f64)>,
    disk: &mut Disk,
) -> bool {
    match region {
        Region::Halfspace { normal, offset } => planes.push(([normal[0], normal[1]], *offset)),
        Region::Complement { inner } => match inner.as_ref() {
            Region::Halfspace { normal, offset } => {
                planes.push(([-normal[0], -normal[1]], -offset))
            }
            _ => return false,
        },
        Region::Cuboid { lo, hi } => push_box(planes, lo[0], hi[0], lo[1], hi[1]),
        Region::Ball { center, radius } => match metric {
            Metric::LInfinity => push_box(
                planes,
                center[0] - radius,
                center[0] + radius,
                center[1] - radius,
                center[1] + radius,
            ),
            Metric::Euclidean => {
                if let Disk::One(..) = disk {
                    return false;
                }
                *disk = Disk::One([center[0], center[1]], *radius);
            }
        },
        Region::Intersection { parts } => {
            for p in parts {
                if !flatten(p, metric, planes, disk) {
                    return false;
                }
            }
        }
        Region::Union { parts } if parts.len() == 1 => {
            return flatten(&parts[0], metric, planes, disk)
        }
        Region::Union { .. } => return false,
    }
    true
}

fn push_box(planes: &mut Vec<([f64; 2], f64)>, x0: f64, x1: f64, y0: f64, y1: f64) {
    planes.push(([1.0, 0.0], x0));
    planes.push(([-1.0, 0.0], -x1));
    planes.push(([0.0, 1.0], y0));
    planes.push(([0.0, -1.0], -y1));
}

// --- one-dimensional interval algebra -------------------------------------

type Intervals = Vec<(f64, f64)>;

fn normalize(mut v: Intervals) -> Intervals {
    v.retain(|(a, b)| b > a);
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Intervals = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersect(a: &Intervals, b: &Intervals) -> Intervals {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    normalize(out)
}

fn complement(a: &Intervals) -> Intervals {
    let mut out = Vec::new();
    let mut cur = f64::NEG_INFINITY;
    for &(lo, hi) in a {
        if lo > cur {
            out.push((cur, lo));
        }
        cur = hi;
    }
    if cur < f64::INFINITY {
        out.push((cur, f64::INFINITY));
    }
    out
}

fn measure(a: &Intervals) -> f64 {
    a.iter().map(|(lo, hi)| hi - lo).sum()
}

fn space_intervals(space: &Space) -> Intervals {
    match &space.shape {
        Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => vec![(*lo, *hi)],
        Shape::Ball { radius, .. } => vec![(-radius, *radius)],
        Shape::Clusters { centers, radius } => normalize(
            centers
                .iter()
                .map(|c| (c[0] - radius, c[0] + radius))
                .collect(),
        ),
    }
}

fn intervals(region: &Region, metric: Metric) -> Intervals {
    let _ = metric; // all metrics agree in one dimension
    match region {
        Region::Ball { center, radius } => vec![(center[0] - radius, center[0] + radius)],
        Region::Halfspace { normal, offset } => {
            let w = normal[0];
            if w > 0.0 {
                vec![(offset / w, f64::INFINITY)]
            } else if w < 0.0 {
                vec![(f64::NEG_INFINITY, offset / w)]
            } else if *offset <= 0.0 {
                vec![(f64::NEG_INFINITY, f64::INFINITY)]
            } else {
                vec![]
            }
        }
        Region::Cuboid { lo, hi } => normalize(vec![(lo[0], hi[0])]),
        Region::Union { parts } => {
            normalize(parts.iter().flat_map(|p| intervals(p, metric)).collect())
        }
        Region::Intersection { parts } => parts
            .iter()
            .fold(vec![(f64::NEG_INFINITY, f64::INFINITY)], |acc, p| {
                intersect(&acc, &intervals(p, metric))
            }),
        Region::Complement { inner } => complement(&intervals(inner, metric)),
    }
}
