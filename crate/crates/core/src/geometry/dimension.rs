use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::expansion::expansion_mass;
use crate::concept::Boundary;
use crate::error::{Error, Result};
use crate::metric::{Metric, Point, Space};

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    pub intercept_se: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let s2 = if n > 2 { sse / (nf - 2.0) } else { 0.0 };
    Some(LineFit {
        slope,
        intercept,
        r2,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
    })
}

/// Greedy `r`-net: every point lies within `r` of a chosen centre, and
/// centres are pairwise more than `r` apart.
pub fn greedy_cover_count(points: &[Point], metric: Metric, r: f64) -> usize {
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut centers: Vec<&[f64]> = Vec::new();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / r).floor() as i64).collect() };
    for p in points {
        let base = key(p);
        let d = base.len();
        let mut covered = false;
        let mut probe = vec![0i64; d];
        'search: for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            for k in 0..d {
                probe[k] = base[k] + (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(ids) = cells.get(&probe) {
                for &i in ids {
                    if metric.dist(centers[i], p) <= r {
                        covered = true;
                        break 'search;
                    }
                }
            }
        }
        if !covered {
            cells.entry(base).or_default().push(centers.len());
            centers.push(p);
        }
    }
    centers.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    /// `(r, N_r)` pairs.
    pub counts: Vec<(f64, usize)>,
    pub fit: Option<LineFit>,
    /// All counts equal: the slope carries no information.
    pub degenerate: bool,
}

fn check_ladder(radii: &[f64]) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::param("radii", "need at least 3 radii"));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::param("radii", "radii must be positive"));
    }
    if !radii.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::param("radii", "radii must be strictly decreasing"));
    }
    if radii[0] / radii[radii.len() - 1] < 10.0 - 1e-9 {
        return Err(Error::param("radii", "radii must span at least one decade"));
    }
    Ok(())
}

/// Box-counting dimension of a point cloud: slope of `log N_r` against
/// `log(1/r)` where `N_r` is the size of a greedy `r`-cover.
pub fn box_counting_dim(
    points: &[Point],
    metric: Metric,
    radii: &[f64],
) -> Result<DimensionEstimate> {
    check_ladder(radii)?;
    let counts: Vec<(f64, usize)> = radii
        .iter()
        .map(|&r| (r, greedy_cover_count(points, metric, r)))
        .collect();
    let degenerate = counts.iter().all(|c| c.1 == counts[0].1);
    if degenerate {
        return Ok(DimensionEstimate {
            dimension: 0.0,
            counts,
            fit: None,
            degenerate,
        });
    }
    let x: Vec<f64> = counts.iter().map(|c| (1.0 / c.0).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|c| (c.1.max(1) as f64).ln()).collect();
    let fit = fit_line(&x, &y);
    Ok(DimensionEstimate {
        dimension: fit.map_or(0.0, |f| f.slope.max(0.0)),
        counts,
        fit,
        degenerate,
    })
}

/// Box-counting dimension of a boundary from `samples` draws of its
/// natural measure (finite point sets are used as they are).
pub fn boundary_dim<R: Rng + ?Sized>(
    boundary: &Boundary,
    metric: Metric,
    samples: usize,
    radii: &[f64],
    rng: &mut R,
) -> Result<DimensionEstimate> {
    let pts: Vec<Point> = match boundary {
        Boundary::Points { points } | Boundary::Sampled { points, .. } => points.clone(),
        Boundary::Empty => Vec::new(),
        _ => (0..samples).filter_map(|_| boundary.sample(rng)).collect(),
    };
    box_counting_dim(&pts, metric, radii)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiEstimate {
    /// Intercept of `ν(A^r)/r` against `r`.
    pub content: f64,
    /// `(r, ν(A^r))` pairs.
    pub masses: Vec<(f64, f64)>,
    pub fit: Option<LineFit>,
}

/// Minkowski content of the boundary, extrapolating `ν(A^r)/r` linearly to
/// `r = 0` over the given radii.
pub fn minkowski_content<R: Rng + ?Sized>(
    space: &Space,
    boundary: &Boundary,
    radii: &[f64],
    mc_samples: usize,
    rng: &mut R,
) -> Result<MinkowskiEstimate> {
    if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::param("radii", "need at least 2 positive radii"));
    }
    if boundary.is_empty() {
        return Ok(MinkowskiEstimate {
            content: 0.0,
            masses: radii.iter().map(|&r| (r, 0.0)).collect(),
            fit: None,
        });
    }
    let mut masses = Vec::with_capacity(radii.len());
    for &r in radii {
        masses.push((r, expansion_mass(space, boundary, r, mc_samples, rng)?.mass));
    }
    let x: Vec<f64> = masses.iter().map(|m| m.0).collect();
    let y: Vec<f64> = masses.iter().map(|m| m.1 / m.0).collect();
    let fit = fit_line(&x, &y);
    Ok(MinkowskiEstimate {
        content: fit.map_or(y[0], |f| f.intercept.max(0.0)),
        masses,
        fit,
    })
}
