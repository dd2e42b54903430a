use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::metric::{sample_in_ball, Metric, Point};

/// Description of the boundary set `{x : m_c(x) = 0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Empty,
    Points {
        points: Vec<Point>,
    },
    Segment {
        a: Point,
        b: Point,
    },
    Sphere {
        center: Point,
        radius: f64,
    },
    /// Points of margin at most `tolerance`, found by rejection sampling.
    Sampled {
        points: Vec<Point>,
        tolerance: f64,
    },
}

fn seg_nearest(a: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let ab: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (x.iter()
            .zip(a)
            .zip(&ab)
            .map(|((xi, ai), di)| (xi - ai) * di)
            .sum::<f64>()
            / len2)
            .clamp(0.0, 1.0)
    };
    a.iter().zip(&ab).map(|(ai, di)| ai + t * di).collect()
}

impl Boundary {
    pub fn is_empty(&self) -> bool {
        match self {
            Boundary::Empty => true,
            Boundary::Points { points } | Boundary::Sampled { points, .. } => points.is_empty(),
            _ => false,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, Boundary::Sampled { .. })
    }

    /// Nearest boundary point to `x` (Euclidean geometry for segments and
    /// spheres; point sets use `metric`).
    pub fn nearest(&self, metric: Metric, x: &[f64]) -> Option<Point> {
        match self {
            Boundary::Empty => None,
            Boundary::Points { points } | Boundary::Sampled { points, .. } => points
                .iter()
                .min_by(|p, q| metric.dist_key(p, x).total_cmp(&metric.dist_key(q, x)))
                .cloned(),
            Boundary::Segment { a, b } => Some(Point::from(seg_nearest(a, b, x))),
            Boundary::Sphere { center, radius } => {
                let d = Metric::Euclidean.dist(x, center);
                if d == 0.0 {
                    let mut p = center.to_vec();
                    p[0] += radius;
                    return Some(Point::from(p));
                }
                Some(Point::from(
                    center
                        .iter()
                        .zip(x)
                        .map(|(c, xi)| c + radius * (xi - c) / d)
                        .collect::<Vec<_>>(),
                ))
            }
        }
    }

    /// ρ(x, ∂X); `+∞` for an empty boundary.
    pub fn distance(&self, metric: Metric, x: &[f64]) -> f64 {
        match self.nearest(metric, x) {
            Some(p) => metric.dist(&p, x),
            None => f64::INFINITY,
        }
    }

    /// Walks the boundary with a parameter `u ∈ [0, 1]`.
    pub fn point_at(&self, u: f64) -> Option<Point> {
        let u = u.clamp(0.0, 1.0);
        match self {
            Boundary::Empty => None,
            Boundary::Points { points } | Boundary::Sampled { points, .. } => {
                if points.is_empty() {
                    return None;
                }
                let i = ((u * points.len() as f64) as usize).min(points.len() - 1);
                Some(points[i].clone())
            }
            Boundary::Segment { a, b } => Some(Point::from(
                a.iter()
                    .zip(b.iter())
                    .map(|(p, q)| p + u * (q - p))
                    .collect::<Vec<_>>(),
            )),
            Boundary::Sphere { center, radius } => {
                let mut p = center.to_vec();
                let th = 2.0 * std::f64::consts::PI * u;
                p[0] += radius * th.cos();
                if p.len() > 1 {
                    p[1] += radius * th.sin();
                }
                Some(Point::from(p))
            }
        }
    }

    /// Unit normal at a boundary point (direction of increasing signed
    /// distance), when the geometry defines one.
    pub fn normal_at(&self, z: &[f64]) -> Option<Vec<f64>> {
        match self {
            Boundary::Segment { a, b } if a.dim() == 2 => {
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let n = (dx * dx + dy * dy).sqrt();
                (n > 0.0).then(|| vec![-dy / n, dx / n])
            }
            Boundary::Sphere { center, .. } => {
                let v: Vec<f64> = z.iter().zip(center.iter()).map(|(p, c)| p - c).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
            }
            Boundary::Points { .. } | Boundary::Sampled { .. } if z.len() == 1 => Some(vec![1.0]),
            _ => None,
        }
    }

    /// Uniform draw from the boundary's natural measure (counting measure
    /// for point sets, length/area otherwise).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Point> {
        match self {
            Boundary::Sphere { center, radius } => {
                let mut v = sample_in_ball(&vec![0.0; center.dim()], 1.0, Metric::Euclidean, rng);
                let mut n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                while n < 1e-9 {
                    v = sample_in_ball(&vec![0.0; center.dim()], 1.0, Metric::Euclidean, rng);
                    n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                }
                Some(Point::from(
                    center
                        .iter()
                        .zip(&v)
                        .map(|(c, x)| c + radius * x / n)
                        .collect::<Vec<_>>(),
                ))
            }
            _ => {
                let u = rng.random::<f64>();
                self.point_at(u)
            }
        }
    }

    /// Number of points for finite boundaries.
    pub fn point_count(&self) -> Option<usize> {
        match self {
            Boundary::Empty => Some(0),
            Boundary::Points { points } | Boundary::Sampled { points, .. } => Some(points.len()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        let b = Boundary::Segment {
            a: Point::from([0.0, 0.0]),
            b: Point::from([1.0, 0.0]),
        };
        assert!((b.distance(Metric::Euclidean, &[0.5, 0.3]) - 0.3).abs() < 1e-15);
        assert!((b.distance(Metric::Euclidean, &[2.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(b.normal_at(&[0.5, 0.0]).unwrap(), vec![-0.0, 1.0]);
    }

    #[test]
    fn sphere_nearest_point() {
        let b = Boundary::Sphere {
            center: Point::from([0.5, 0.5]),
            radius: 0.2,
        };
        let p = b.nearest(Metric::Euclidean, &[0.5, 0.9]).unwrap();
        assert!((p[1] - 0.7).abs() < 1e-15);
        assert!((b.distance(Metric::Euclidean, &[0.5, 0.5]) - 0.2).abs() < 1e-15);
    }
}
