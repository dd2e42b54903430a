//! Metric measure spaces used by the experiments: points, distances,
//! Lebesgue base measure, samplers and exact ball masses.

pub mod planar;
mod region;

pub use region::{exact_region_mass, region_mass, MassEstimate, Region};

use std::f64::consts::PI;
use std::ops::Deref;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the instance space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::param(
                "coords",
                "point needs at least one coordinate",
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        debug_assert!(v.iter().all(|c| c.is_finite()));
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point::from(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::from(v.to_vec())
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::from(vec![x])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    LInfinity,
}

impl Metric {
    pub fn dist(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => self.dist_key(p, q).sqrt(),
            Metric::LInfinity => self.dist_key(p, q),
        }
    }

    /// A monotone transform of the distance that is cheaper to evaluate
    /// (squared distance for the Euclidean metric).
    #[inline]
    pub fn dist_key(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(),
            Metric::LInfinity => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Maps a distance to its key.
    #[inline]
    pub fn key_of(self, d: f64) -> f64 {
        match self {
            Metric::Euclidean => d * d,
            Metric::LInfinity => d,
        }
    }

    /// Lebesgue volume of a radius-`r` ball of this metric in dimension `d`.
    pub fn ball_volume(self, d: usize, r: f64) -> f64 {
        match self {
            Metric::Euclidean => unit_ball_volume(d) * r.powi(d as i32),
            Metric::LInfinity => (2.0 * r).powi(d as i32),
        }
    }

    /// Radius of the ball with the given volume.
    pub fn radius_for_volume(self, d: usize, vol: f64) -> f64 {
        match self {
            Metric::Euclidean => (vol / unit_ball_volume(d)).powf(1.0 / d as f64),
            Metric::LInfinity => 0.5 * vol.powf(1.0 / d as f64),
        }
    }
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Support of the base measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// `[lo, hi]^dim`
    Box {
        lo: f64,
        hi: f64,
        dim: usize,
    },
    /// Euclidean ball of the given radius centered at the origin.
    Ball {
        radius: f64,
        dim: usize,
    },
    /// Disjoint union of equal-radius metric balls.
    Clusters {
        centers: Vec<Vec<f64>>,
        radius: f64,
    },
}

/// A metric measure space `(X, ρ, ν)` with ν the Lebesgue measure on the
/// shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Space {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub metric: Metric,
}

const CONTAIN_TOL: f64 = 1e-12;

impl Space {
    pub fn new(shape: Shape, metric: Metric) -> Result<Self> {
        let s = Space { shape, metric };
        s.validate()?;
        Ok(s)
    }

    pub fn unit_interval() -> Self {
        Space::interval(0.0, 1.0)
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Space::new(Shape::Interval { lo, hi }, Metric::Euclidean).expect("valid interval")
    }

    pub fn unit_square() -> Self {
        Space::cube(0.0, 1.0, 2)
    }

    pub fn cube(lo: f64, hi: f64, dim: usize) -> Self {
        Space::new(Shape::Box { lo, hi, dim }, Metric::Euclidean).expect("valid box")
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        match &self.shape {
            Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => {
                if !(finite(*lo) && finite(*hi) && lo < hi) {
                    return Err(Error::param("space", "need finite lo < hi"));
                }
                if let Shape::Box { dim, .. } = self.shape {
                    if dim == 0 {
                        return Err(Error::param("space.dim", "must be >= 1"));
                    }
                }
            }
            Shape::Ball { radius, dim } => {
                if !(finite(*radius) && *radius > 0.0) || *dim == 0 {
                    return Err(Error::param("space", "need radius > 0 and dim >= 1"));
                }
            }
            Shape::Clusters { centers, radius } => {
                if centers.is_empty() || !(finite(*radius) && *radius > 0.0) {
                    return Err(Error::param("space", "need centers and radius > 0"));
                }
                let d = centers[0].len();
                if d == 0 || centers.iter().any(|c| c.len() != d) {
                    return Err(Error::param("space.centers", "inconsistent dimensions"));
                }
                for i in 0..centers.len() {
                    for j in 0..i {
                        if self.metric.dist(&centers[i], &centers[j]) <= 2.0 * radius {
                            return Err(Error::param("space.centers", "cluster balls overlap"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Interval { .. } => 1,
            Shape::Box { dim, .. } | Shape::Ball { dim, .. } => *dim,
            Shape::Clusters { centers, .. } => centers[0].len(),
        }
    }

    /// ν(X).
    pub fn total_mass(&self) -> f64 {
        match &self.shape {
            Shape::Interval { lo, hi } => hi - lo,
            Shape::Box { lo, hi, dim } => (hi - lo).powi(*dim as i32),
            Shape::Ball { radius, dim } => unit_ball_volume(*dim) * radius.powi(*dim as i32),
            Shape::Clusters { centers, radius } => {
                centers.len() as f64 * self.metric.ball_volume(self.dim(), *radius)
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` of the support.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        match &self.shape {
            Shape::Interval { lo, hi } => (vec![*lo], vec![*hi]),
            Shape::Box { lo, hi, .. } => (vec![*lo; d], vec![*hi; d]),
            Shape::Ball { radius, .. } => (vec![-radius; d], vec![*radius; d]),
            Shape::Clusters { centers, radius } => {
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for c in centers {
                    for i in 0..d {
                        lo[i] = lo[i].min(c[i] - radius);
                        hi[i] = hi[i].max(c[i] + radius);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Upper bound on the diameter of the support.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        self.metric.dist(&lo, &hi)
    }

    pub fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() || p.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match &self.shape {
            Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => {
                let tol = CONTAIN_TOL * (hi - lo);
                p.iter().all(|&x| x >= lo - tol && x <= hi + tol)
            }
            Shape::Ball { radius, .. } => {
                let r2: f64 = p.iter().map(|x| x * x).sum();
                r2 <= radius * radius * (1.0 + CONTAIN_TOL)
            }
            Shape::Clusters { centers, radius } => centers
                .iter()
                .any(|c| self.metric.dist(p, c) <= radius * (1.0 + CONTAIN_TOL)),
        }
    }

    /// ρ(p, q), checking dimensions.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        self.check_dim(q)?;
        Ok(self.metric.dist(p, q))
    }

    /// Draws from ν / ν(X).
    pub fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let d = self.dim();
        match &self.shape {
            Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => Point(
                (0..d)
                    .map(|_| lo + (hi - lo) * rng.random::<f64>())
                    .collect(),
            ),
            Shape::Ball { radius, .. } => Point(sample_in_ball(
                &vec![0.0; d],
                *radius,
                Metric::Euclidean,
                rng,
            )),
            Shape::Clusters { centers, radius } => {
                let c = &centers[rng.random_range(0..centers.len())];
                Point(sample_in_ball(c, *radius, self.metric, rng))
            }
        }
    }

    /// Exact ν(B(center, r) ∩ X) when a closed form is available.
    pub fn ball_mass(&self, center: &[f64], r: f64) -> Option<f64> {
        if r <= 0.0 {
            return Some(0.0);
        }
        let d = self.dim();
        let m = self.metric;
        match &self.shape {
            Shape::Interval { lo, hi } => Some(overlap(center[0] - r, center[0] + r, *lo, *hi)),
            Shape::Box { lo, hi, .. } => {
                if d == 1 || m == Metric::LInfinity {
                    return Some(
                        center
                            .iter()
                            .map(|&c| overlap(c - r, c + r, *lo, *hi))
                            .product(),
                    );
                }
                if d == 2 {
                    let sq = planar::rect(*lo, *hi, *lo, *hi);
                    return Some(planar::disk_polygon_area([center[0], center[1]], r, &sq));
                }
                let inside = center.iter().all(|&c| c - r >= *lo && c + r <= *hi);
                if inside {
                    return Some(m.ball_volume(d, r));
                }
                let far: f64 = center
                    .iter()
                    .map(|&c| (c - lo).abs().max((c - hi).abs()).powi(2))
                    .sum();
                if far.sqrt() <= r {
                    return Some(self.total_mass());
                }
                None
            }
            Shape::Ball { radius, .. } => {
                let dist = Metric::Euclidean.dist(center, &vec![0.0; d]);
                match m {
                    Metric::Euclidean => lens_volume(d, *radius, r, dist),
                    Metric::LInfinity => {
                        if d == 1 {
                            Some(overlap(center[0] - r, center[0] + r, -radius, *radius))
                        } else if d == 2 {
                            let sq = planar::rect(
                                center[0] - r,
                                center[0] + r,
                                center[1] - r,
                                center[1] + r,
                            );
                            Some(planar::disk_polygon_area([0.0, 0.0], *radius, &sq))
                        } else {
                            None
                        }
                    }
                }
            }
            Shape::Clusters { centers, radius } => {
                let mut total = 0.0;
                for c in centers {
                    let part = match m {
                        Metric::Euclidean => lens_volume(d, *radius, r, m.dist(center, c))?,
                        Metric::LInfinity => center
                            .iter()
                            .zip(c)
                            .map(|(&a, &b)| overlap(a - r, a + r, b - radius, b + radius))
                            .product(),
                    };
                    total += part;
                }
                Some(total)
            }
        }
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Volume of the intersection of two Euclidean balls in dimension `d`.
fn lens_volume(d: usize, r1: f64, r2: f64, dist: f64) -> Option<f64> {
    if dist >= r1 + r2 {
        return Some(0.0);
    }
    if dist <= (r1 - r2).abs() {
        return Some(unit_ball_volume(d) * r1.min(r2).powi(d as i32));
    }
    match d {
        1 => Some(overlap(-r1, r1, dist - r2, dist + r2)),
        2 => Some(planar::lens_area(r1, r2, dist)),
        3 => {
            let s = r1 + r2 - dist;
            Some(
                PI * s
                    * s
                    * (dist * dist + 2.0 * dist * r2 - 3.0 * r2 * r2
                        + 2.0 * dist * r1
                        + 6.0 * r1 * r2
                        - 3.0 * r1 * r1)
                    / (12.0 * dist),
            )
        }
        _ => None,
    }
}

/// Uniform draw from the metric ball `B(center, r)`.
pub fn sample_in_ball<R: Rng + ?Sized>(
    center: &[f64],
    r: f64,
    metric: Metric,
    rng: &mut R,
) -> Vec<f64> {
    let d = center.len();
    match metric {
        Metric::LInfinity => center
            .iter()
            .map(|c| c + r * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
        Metric::Euclidean => {
            if d == 1 {
                return vec![center[0] + r * (2.0 * rng.random::<f64>() - 1.0)];
            }
            let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = r * rng.random::<f64>().powf(1.0 / d as f64) / norm;
            for (x, c) in dir.iter_mut().zip(center) {
                *x = c + *x * scale;
            }
            dir
        }
    }
}
