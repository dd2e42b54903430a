use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{sample_in_ball, Space};
use crate::rng::seeded;

/// `ε(δ)`: an upper bound on `μ_t(A)` over all rounds and all `A` with
/// `ν(A) ≤ δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SmoothnessRate {
    /// `min(1, δ / sigma_eff)`.
    Linear { sigma_eff: f64 },
    /// Nondecreasing `(δ, ε)` knots; evaluated by stepping up to the next
    /// knot, so the table never underestimates between knots.
    Tabulated { table: Vec<(f64, f64)> },
}

impl SmoothnessRate {
    pub fn eval(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        match self {
            SmoothnessRate::Linear { sigma_eff } => (delta / sigma_eff).min(1.0),
            SmoothnessRate::Tabulated { table } => {
                let i = table.partition_point(|&(d, _)| d < delta);
                table.get(i).map_or(1.0, |&(_, e)| e.min(1.0))
            }
        }
    }

    /// Lipschitz constant of the linear form.
    pub fn slope(&self) -> Option<f64> {
        match self {
            SmoothnessRate::Linear { sigma_eff } => Some(1.0 / sigma_eff),
            SmoothnessRate::Tabulated { .. } => None,
        }
    }
}

/// Radius `s` with `ν(B(center, s) ∩ X) = target`, found by a safeguarded
/// regula falsi on the exact ball mass (or on a common-random-numbers
/// estimate when no closed form exists).
pub fn radius_for_mass(space: &Space, center: &[f64], target: f64) -> Result<f64> {
    let total = space.total_mass();
    if !(target > 0.0 && target <= total) {
        return Err(Error::param(
            "target",
            format!("mass must be in (0, {total}]"),
        ));
    }
    let d = space.dim();
    let r0 = space.metric.radius_for_volume(d, target);
    let crn = std::cell::OnceCell::new();
    let mass = |r: f64| {
        space.ball_mass(center, r).unwrap_or_else(|| {
            crn.get_or_init(|| CrnBall::new(space, center))
                .mass(space, r)
        })
    };
    let f0 = mass(r0) - target;
    if f0.abs() <= 1e-13 * total {
        return Ok(r0);
    }
    // ν(B ∩ X) ≤ vol(B), so the root lies above r0
    let (mut a, mut fa) = (r0, f0);
    let mut b = 2.0 * space.diameter().max(r0);
    let mut fb = mass(b) - target;
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::param(
            "target",
            "ball mass does not bracket the target",
        ));
    }
    let mut side = 0i32;
    for _ in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = mass(c) - target;
        if fc.abs() <= 1e-13 * total || (b - a) <= 1e-14 * b {
            return Ok(c);
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Fixed unit-ball draws reused across radii so that the estimated mass is
/// monotone in the radius.
struct CrnBall {
    dirs: Vec<Vec<f64>>,
    center: Vec<f64>,
}

impl CrnBall {
    const N: usize = 20_000;

    fn new(space: &Space, center: &[f64]) -> Self {
        let mut rng = seeded(0x6372_6e62);
        let zero = vec![0.0; space.dim()];
        let dirs = (0..Self::N)
            .map(|_| sample_in_ball(&zero, 1.0, space.metric, &mut rng))
            .collect();
        CrnBall {
            dirs,
            center: center.to_vec(),
        }
    }

    fn mass(&self, space: &Space, r: f64) -> f64 {
        let inside = self
            .dirs
            .iter()
            .filter(|v| {
                let p: Vec<f64> = self.center.iter().zip(*v).map(|(c, x)| c + r * x).collect();
                space.contains(&p)
            })
            .count();
        space.metric.ball_volume(space.dim(), r) * inside as f64 / Self::N as f64
    }
}

/// Numerical rate of the truncated-Gaussian adversary. The density of
/// `N(m, s²I)` restricted to `X` decreases with `‖x − m‖`, so among sets
/// of ν-mass `δ` the heaviest is `B(m, r) ∩ X` with `ν(B(m, r) ∩ X) = δ`.
/// Its mass is estimated for a grid of means covering the space (corners
/// included, where truncation is most severe) and the maximum plus three
/// standard errors is tabulated.
pub fn gaussian_rate_table(
    space: &Space,
    sd: f64,
    knots: usize,
    draws: usize,
) -> Result<SmoothnessRate> {
    if !(sd > 0.0) {
        return Err(Error::param("sigma_g", "must be > 0"));
    }
    let mut rng = seeded(0x6761_7573);
    let total = space.total_mass();
    let (lo, hi) = space.bounding_box();
    let d = space.dim();
    let per_axis = if d <= 2 { 5 } else { 3 };
    let mut means = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let m: Vec<f64> = (0..d)
            .map(|k| lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (per_axis - 1) as f64)
            .collect();
        if space.contains(&m) {
            means.push(m);
        }
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    if means.is_empty() {
        means.push(space.sample_base(&mut rng).into_inner());
    }
    let deltas: Vec<f64> = (0..knots)
        .map(|j| total * 10f64.powf(-6.0 * (1.0 - j as f64 / (knots - 1).max(1) as f64)))
        .collect();
    let mut eps = vec![0.0f64; knots];
    for m in &means {
        let mut dists = Vec::with_capacity(draws);
        while dists.len() < draws {
            let p: Vec<f64> = m
                .iter()
                .map(|c| c + sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            if space.contains(&p) {
                dists.push(space.metric.dist(&p, m));
            }
        }
        dists.sort_by(f64::total_cmp);
        for (j, &delta) in deltas.iter().enumerate() {
            let r = radius_for_mass(space, m, delta)?;
            let k = dists.partition_point(|&x| x <= r);
            let p = k as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt() + 1.0 / draws as f64;
            eps[j] = eps[j].max((p + 3.0 * se).min(1.0));
        }
    }
    let mut run = 0.0f64;
    let mut table = vec![(0.0, 0.0)];
    for (delta, e) in deltas.into_iter().zip(eps) {
        run = run.max(e);
        table.push((delta, run));
    }
    Ok(SmoothnessRate::Tabulated { table })
}
