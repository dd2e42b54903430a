//! Ground-truth concepts `c : X → Y`, their margins `m_c(x)` and boundary
//! descriptions.

mod boundary;

pub use boundary::Boundary;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{planar, Metric, Point, Shape, Space};

/// Class id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConceptKind {
    /// `1{x₀ >= theta}`
    Threshold {
        theta: f64,
    },
    /// `1{normal·x >= offset}`
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// `1{ρ(x, center) <= radius}`
    Disk {
        center: Vec<f64>,
        radius: f64,
    },
    /// Label `labels[i]` on the i-th ball of a clusters space.
    Clusters {
        labels: Vec<u32>,
    },
    /// Indicator of the depth-`depth` fat Cantor approximation on [0, 1].
    FatCantor {
        depth: u32,
    },
    Constant {
        label: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "oracle", rename_all = "snake_case")]
pub enum MarginOracle {
    /// Closed form when available, otherwise sampled with the default budget.
    #[default]
    Analytic,
    Sampled {
        budget: usize,
    },
}

pub const DEFAULT_MARGIN_BUDGET: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ConceptSpec {
    #[serde(flatten)]
    kind: ConceptKind,
    #[serde(default)]
    margin: MarginOracle,
}

/// A labeling function together with its margin oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ConceptSpec", into = "ConceptSpec")]
pub struct Concept {
    kind: ConceptKind,
    oracle: MarginOracle,
    cantor: Option<Arc<Vec<(f64, f64)>>>,
}

impl From<ConceptSpec> for Concept {
    fn from(s: ConceptSpec) -> Self {
        Concept::new(s.kind).with_oracle(s.margin)
    }
}

impl From<Concept> for ConceptSpec {
    fn from(c: Concept) -> Self {
        ConceptSpec {
            kind: c.kind,
            margin: c.oracle,
        }
    }
}

/// Closed intervals of the depth-`depth` fat Cantor set: at iteration
/// `n = 1..=depth` the open middle `2^{-(n+1)}` fraction of every interval
/// is removed.
pub fn fat_cantor_intervals(depth: u32) -> Vec<(f64, f64)> {
    let mut cur = vec![(0.0, 1.0)];
    for n in 1..=depth {
        let frac = 0.5f64.powi(n as i32 + 1);
        let mut next = Vec::with_capacity(cur.len() * 2);
        for (a, b) in cur {
            let keep = 0.5 * (b - a) * (1.0 - frac);
            next.push((a, a + keep));
            next.push((b - keep, b));
        }
        cur = next;
    }
    cur
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Concept {
    pub fn new(kind: ConceptKind) -> Self {
        let cantor = match kind {
            ConceptKind::FatCantor { depth } => Some(Arc::new(fat_cantor_intervals(depth))),
            _ => None,
        };
        Concept {
            kind,
            oracle: MarginOracle::Analytic,
            cantor,
        }
    }

    pub fn with_oracle(mut self, oracle: MarginOracle) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn kind(&self) -> &ConceptKind {
        &self.kind
    }

    pub fn oracle(&self) -> MarginOracle {
        self.oracle
    }

    pub fn threshold(theta: f64) -> Self {
        Concept::new(ConceptKind::Threshold { theta })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Self {
        Concept::new(ConceptKind::Halfspace { normal, offset })
    }

    pub fn disk(center: Vec<f64>, radius: f64) -> Self {
        Concept::new(ConceptKind::Disk { center, radius })
    }

    pub fn fat_cantor(depth: u32) -> Self {
        Concept::new(ConceptKind::FatCantor { depth })
    }

    pub fn constant(label: u32) -> Self {
        Concept::new(ConceptKind::Constant { label })
    }

    /// Two balls of radius `radius` whose gap is `separation`, centred in
    /// the unit square, labelled 0 and 1.
    pub fn two_clusters(separation: f64, radius: f64) -> Result<(Space, Concept)> {
        if !(separation > 0.0 && radius > 0.0) {
            return Err(Error::param(
                "separation",
                "need separation > 0, radius > 0",
            ));
        }
        let h = 0.5 * separation + radius;
        let space = Space::new(
            Shape::Clusters {
                centers: vec![vec![0.5 - h, 0.5], vec![0.5 + h, 0.5]],
                radius,
            },
            Metric::Euclidean,
        )?;
        Ok((
            space,
            Concept::new(ConceptKind::Clusters { labels: vec![0, 1] }),
        ))
    }

    /// Checks that the concept's parameters fit the space.
    pub fn validate(&self, space: &Space) -> Result<()> {
        let d = space.dim();
        let mismatch = |got| Err(Error::DimensionMismatch { expected: d, got });
        match &self.kind {
            ConceptKind::Halfspace { normal, .. } => {
                if normal.len() != d {
                    return mismatch(normal.len());
                }
                if normal.iter().all(|w| *w == 0.0) {
                    return Err(Error::param("concept.normal", "must be nonzero"));
                }
            }
            ConceptKind::Disk { center, radius } => {
                if center.len() != d {
                    return mismatch(center.len());
                }
                if !(*radius > 0.0) {
                    return Err(Error::param("concept.radius", "must be > 0"));
                }
            }
            ConceptKind::Clusters { labels } => match &space.shape {
                Shape::Clusters { centers, .. } if centers.len() == labels.len() => {}
                _ => {
                    return Err(Error::param(
                        "concept.labels",
                        "clusters concept needs a clusters space with one label per ball",
                    ))
                }
            },
            ConceptKind::FatCantor { depth } => {
                if d != 1 {
                    return mismatch(1);
                }
                if *depth > 24 {
                    return Err(Error::param("concept.depth", "at most 24"));
                }
            }
            ConceptKind::Threshold { .. } | ConceptKind::Constant { .. } => {}
        }
        Ok(())
    }

    /// `c(x)`.
    pub fn label(&self, space: &Space, x: &[f64]) -> Label {
        match &self.kind {
            ConceptKind::Threshold { theta } => Label((x[0] >= *theta) as u32),
            ConceptKind::Halfspace { normal, offset } => Label((dot(normal, x) >= *offset) as u32),
            ConceptKind::Disk { center, radius } => {
                Label((space.metric.dist(x, center) <= *radius) as u32)
            }
            ConceptKind::Clusters { labels } => {
                let Shape::Clusters { centers, .. } = &space.shape else {
                    return Label(labels[0]);
                };
                let i = (0..centers.len())
                    .min_by(|&i, &j| {
                        space
                            .metric
                            .dist_key(x, &centers[i])
                            .total_cmp(&space.metric.dist_key(x, &centers[j]))
                    })
                    .unwrap_or(0);
                Label(labels[i])
            }
            ConceptKind::FatCantor { .. } => {
                let iv = self.cantor.as_ref().expect("cantor intervals");
                Label(cantor_slot(iv, x[0]).is_ok() as u32)
            }
            ConceptKind::Constant { label } => Label(*label),
        }
    }

    /// Closed-form margin, when implemented for this concept/space pair.
    /// `+∞` means no opposite-class point exists.
    pub fn analytic_margin(&self, space: &Space, x: &[f64]) -> Option<f64> {
        let metric = space.metric;
        match &self.kind {
            ConceptKind::Constant { .. } => Some(f64::INFINITY),
            ConceptKind::Threshold { theta } => {
                let (lo, hi) = match space.shape {
                    Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => (lo, hi),
                    _ => return None,
                };
                if *theta <= lo || *theta > hi {
                    return Some(f64::INFINITY);
                }
                Some((x[0] - theta).abs())
            }
            ConceptKind::Halfspace { normal, offset } => {
                halfspace_margin(space, normal, *offset, x)
            }
            ConceptKind::Disk { center, radius } => {
                let inside = match space.shape {
                    Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => {
                        center.iter().all(|c| c - radius > lo && c + radius < hi)
                    }
                    _ => false,
                };
                if !inside {
                    return None;
                }
                Some((metric.dist(x, center) - radius).abs())
            }
            ConceptKind::Clusters { labels } => {
                let Shape::Clusters { centers, radius } = &space.shape else {
                    return None;
                };
                let own = self.label(space, x).0;
                let m = centers
                    .iter()
                    .zip(labels)
                    .filter(|(_, &l)| l != own)
                    .map(|(c, _)| (metric.dist(x, c) - radius).max(0.0))
                    .fold(f64::INFINITY, f64::min);
                Some(m)
            }
            ConceptKind::FatCantor { .. } => {
                let (lo, hi) = match space.shape {
                    Shape::Interval { lo, hi } => (lo, hi),
                    _ => return None,
                };
                let iv = self.cantor.as_ref().expect("cantor intervals");
                Some(cantor_margin(iv, lo, hi, x[0]))
            }
        }
    }

    /// Sampled oracle: minimum distance from `x` to `budget` draws from ν
    /// that carry the opposite label. Converges to `m_c(x)` from above.
    pub fn sampled_margin<R: Rng + ?Sized>(
        &self,
        space: &Space,
        x: &[f64],
        budget: usize,
        rng: &mut R,
    ) -> f64 {
        let own = self.label(space, x);
        let mut best = f64::INFINITY;
        for _ in 0..budget {
            let p = space.sample_base(rng);
            if self.label(space, &p) != own {
                best = best.min(space.metric.dist_key(&p, x));
            }
        }
        match space.metric {
            Metric::Euclidean => best.sqrt(),
            Metric::LInfinity => best,
        }
    }

    /// `m_c(x)` using the configured oracle.
    pub fn margin<R: Rng + ?Sized>(&self, space: &Space, x: &[f64], rng: &mut R) -> f64 {
        match self.oracle {
            MarginOracle::Analytic => match self.analytic_margin(space, x) {
                Some(m) => m,
                None => self.sampled_margin(space, x, DEFAULT_MARGIN_BUDGET, rng),
            },
            MarginOracle::Sampled { budget } => self.sampled_margin(space, x, budget, rng),
        }
    }

    /// Exact boundary description when the geometry admits one.
    pub fn analytic_boundary(&self, space: &Space) -> Option<Boundary> {
        let d = space.dim();
        let euclid = space.metric == Metric::Euclidean || d == 1;
        match &self.kind {
            ConceptKind::Constant { .. } | ConceptKind::Clusters { .. } => Some(Boundary::Empty),
            ConceptKind::Threshold { theta } => {
                let (lo, hi) = match space.shape {
                    Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => (lo, hi),
                    _ => return None,
                };
                if *theta <= lo || *theta > hi {
                    return Some(Boundary::Empty);
                }
                match d {
                    1 => Some(Boundary::Points {
                        points: vec![Point::from(*theta)],
                    }),
                    2 if euclid => Some(Boundary::Segment {
                        a: Point::from([*theta, lo]),
                        b: Point::from([*theta, hi]),
                    }),
                    _ => None,
                }
            }
            ConceptKind::Halfspace { normal, offset } => {
                let (lo, hi) = match space.shape {
                    Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => (lo, hi),
                    _ => return None,
                };
                match d {
                    1 => {
                        let z = offset / normal[0];
                        Some(if z > lo && z <= hi {
                            Boundary::Points {
                                points: vec![Point::from(z)],
                            }
                        } else {
                            Boundary::Empty
                        })
                    }
                    2 if euclid => Some(halfplane_segment(normal, *offset, lo, hi)),
                    _ => None,
                }
            }
            ConceptKind::Disk { center, radius } => {
                if !euclid {
                    return None;
                }
                self.analytic_margin(space, center)
                    .map(|_| Boundary::Sphere {
                        center: Point::from(center.clone()),
                        radius: *radius,
                    })
            }
            ConceptKind::FatCantor { .. } => {
                let (lo, hi) = match space.shape {
                    Shape::Interval { lo, hi } => (lo, hi),
                    _ => return None,
                };
                let iv = self.cantor.as_ref().expect("cantor intervals");
                let points = iv
                    .iter()
                    .flat_map(|&(a, b)| [a, b])
                    .filter(|&e| e > lo && e < hi)
                    .map(Point::from)
                    .collect();
                Some(Boundary::Points { points })
            }
        }
    }

    /// Points of margin at most `tolerance` among `budget` draws from ν.
    pub fn sampled_boundary<R: Rng + ?Sized>(
        &self,
        space: &Space,
        tolerance: f64,
        budget: usize,
        rng: &mut R,
    ) -> Boundary {
        let mut points = Vec::new();
        for _ in 0..budget {
            let p = space.sample_base(rng);
            if self.margin(space, &p, rng) <= tolerance {
                points.push(p);
            }
        }
        Boundary::Sampled { points, tolerance }
    }

    /// Analytic boundary when available, else a sampled one.
    pub fn boundary<R: Rng + ?Sized>(&self, space: &Space, rng: &mut R) -> Boundary {
        match self.analytic_boundary(space) {
            Some(b) => b,
            None => {
                let tol = 1e-2 * space.diameter();
                self.sampled_boundary(space, tol, 20_000, rng)
            }
        }
    }
}

/// `Ok(i)` when `x` lies in the i-th closed interval, `Err(i)` for the
/// insertion slot otherwise.
fn cantor_slot(iv: &[(f64, f64)], x: f64) -> std::result::Result<usize, usize> {
    let i = iv.partition_point(|&(a, _)| a <= x);
    if i > 0 && x <= iv[i - 1].1 {
        Ok(i - 1)
    } else {
        Err(i)
    }
}

fn cantor_margin(iv: &[(f64, f64)], lo: f64, hi: f64, x: f64) -> f64 {
    match cantor_slot(iv, x) {
        Ok(i) => {
            let (a, b) = iv[i];
            let left = if a > lo { x - a } else { f64::INFINITY };
            let right = if b < hi { b - x } else { f64::INFINITY };
            left.min(right)
        }
        Err(i) => {
            let mut m = f64::INFINITY;
            if i > 0 {
                m = m.min(x - iv[i - 1].1);
            }
            if i < iv.len() {
                m = m.min(iv[i].0 - x);
            }
            m
        }
    }
}

fn point_segment_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (qx * qx + qy * qy).sqrt()
}

/// Margin of a half-space concept: distance from `x` to the closure of the
/// opposite-class region (a convex polygon in the plane).
fn halfspace_margin(space: &Space, normal: &[f64], offset: f64, x: &[f64]) -> Option<f64> {
    let (lo, hi) = match space.shape {
        Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => (lo, hi),
        _ => return None,
    };
    let own = dot(normal, x) >= offset;
    match space.dim() {
        1 => {
            let z = offset / normal[0];
            if !(z > lo && z <= hi) {
                return Some(f64::INFINITY);
            }
            Some((x[0] - z).abs())
        }
        2 if space.metric == Metric::Euclidean => {
            let w = [normal[0], normal[1]];
            let rect = planar::rect(lo, hi, lo, hi);
            let other = if own {
                planar::clip_halfplane(&rect, [-w[0], -w[1]], -offset)
            } else {
                planar::clip_halfplane(&rect, w, offset)
            };
            if other.is_empty() {
                return Some(f64::INFINITY);
            }
            let p = [x[0], x[1]];
            let n = other.len();
            Some(
                (0..n)
                    .map(|i| point_segment_dist(p, other[i], other[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min),
            )
        }
        _ => None,
    }
}

/// `{w·x = b} ∩ [lo,hi]²` via Liang–Barsky clipping of the line.
fn halfplane_segment(w: &[f64], b: f64, lo: f64, hi: f64) -> Boundary {
    let n2 = w[0] * w[0] + w[1] * w[1];
    let p0 = [w[0] * b / n2, w[1] * b / n2];
    let dir = [-w[1], w[0]];
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..2 {
        if dir[k].abs() < 1e-300 {
            if p0[k] < lo || p0[k] > hi {
                return Boundary::Empty;
            }
            continue;
        }
        let a = (lo - p0[k]) / dir[k];
        let c = (hi - p0[k]) / dir[k];
        t0 = t0.max(a.min(c));
        t1 = t1.min(a.max(c));
    }
    if t0 > t1 {
        return Boundary::Empty;
    }
    let at = |t: f64| Point::from([p0[0] + t * dir[0], p0[1] + t * dir[1]]);
    if t0 == t1 {
        return Boundary::Points {
            points: vec![at(t0)],
        };
    }
    Boundary::Segment {
        a: at(t0),
        b: at(t1),
    }
}
