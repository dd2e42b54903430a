use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ml::MLBall;
use crate::concept::Concept;
use crate::error::{Error, Result};
use crate::metric::{Metric, Point, Space};

/// Balls grouped by radius, each group bucketed on a grid whose cell side
/// equals the radius, so a membership query touches `3^d` cells per group.
#[derive(Clone, Debug, Default)]
pub struct BallIndex {
    groups: Vec<Group>,
    balls: Vec<MLBall>,
}

#[derive(Clone, Debug)]
struct Group {
    radius: f64,
    cells: HashMap<Vec<i64>, Vec<u32>>,
}

impl Group {
    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.radius).floor() as i64).collect()
    }
}

impl BallIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn balls(&self) -> &[MLBall] {
        &self.balls
    }

    pub fn into_balls(self) -> Vec<MLBall> {
        self.balls
    }

    pub fn insert(&mut self, ball: MLBall) {
        let i = self.balls.len() as u32;
        let g = match self.groups.iter().position(|g| g.radius == ball.radius) {
            Some(g) => g,
            None => {
                self.groups.push(Group {
                    radius: ball.radius,
                    cells: HashMap::new(),
                });
                self.groups.len() - 1
            }
        };
        let key = self.groups[g].key(&ball.center);
        self.groups[g].cells.entry(key).or_default().push(i);
        self.balls.push(ball);
    }

    /// Index of some ball containing `x`.
    pub fn find(&self, metric: Metric, x: &[f64]) -> Option<usize> {
        let d = x.len();
        let mut probe = vec![0i64; d];
        for g in &self.groups {
            let base = g.key(x);
            let cells = 3usize.pow(d as u32);
            for code in 0..cells {
                let mut c = code;
                for k in 0..d {
                    probe[k] = base[k] + (c % 3) as i64 - 1;
                    c /= 3;
                }
                if let Some(ids) = g.cells.get(&probe) {
                    for &i in ids {
                        if self.balls[i as usize].contains(metric, x) {
                            return Some(i as usize);
                        }
                    }
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverOptions {
    /// Total ν draws the greedy pass may consume.
    pub candidate_budget: usize,
    /// Target fraction of `V_r` left uncovered on a fresh sample.
    pub miss_target: f64,
    /// Draws per validation round.
    pub validation_samples: usize,
    /// Candidates per greedy batch.
    pub batch: usize,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions {
            candidate_budget: 400_000,
            miss_target: 1e-3,
            validation_samples: 20_000,
            batch: 4_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCount {
    /// Layer `L_k = {2^k r ≤ m_c < 2^{k+1} r}`.
    pub k: u32,
    pub ball_radius: f64,
    pub count: usize,
}

/// A mutually-labelling cover of (the sampled part of) `V_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub r: f64,
    pub balls: Vec<MLBall>,
    pub n_ml_upper: usize,
    pub layers: Vec<LayerCount>,
    /// ν-mass of `V_r` outside every ball, from the last validation sample.
    pub residual_mass_est: f64,
    pub residual_std_err: f64,
    /// ν(V_r^c) estimated from all draws.
    pub complement_mass_est: f64,
    pub complement_std_err: f64,
    /// Uncovered fraction of `V_r` on the last validation sample.
    pub miss_rate: f64,
    pub candidates_used: usize,
    /// Set when the budget ran out before the miss target was met.
    pub warning: Option<String>,
}

impl CoverReport {
    /// Conservative ν-mass of the complement of the cover: `V_r^c` plus the
    /// uncovered part of `V_r`, each padded by three standard errors.
    pub fn uncovered_mass_upper(&self) -> f64 {
        self.complement_mass_est
            + 3.0 * self.complement_std_err
            + self.residual_mass_est
            + 3.0 * self.residual_std_err
    }
}

fn layer_of(m: f64, r: f64) -> Option<u32> {
    if m < r {
        return None;
    }
    let k = (m / r).log2().floor();
    Some(if k.is_finite() { k.max(0.0) as u32 } else { 60 })
}

/// Greedy layered cover of `V_r = {m_c ≥ r}`: every uncovered candidate in
/// layer `L_k` opens a ball of radius `2^k r / 3`, which is mutually
/// labelling because its centre has margin at least `2^k r`. Candidates
/// are processed from the top layer down within each batch.
pub fn greedy_ml_cover<R: Rng + ?Sized>(
    concept: &Concept,
    space: &Space,
    r: f64,
    opts: &CoverOptions,
    rng: &mut R,
) -> Result<CoverReport> {
    if !(r > 0.0 && r < space.diameter()) {
        return Err(Error::param("r", "must lie in (0, diameter)"));
    }
    concept.validate(space)?;
    let total = space.total_mass();
    let metric = space.metric;
    let mut index = BallIndex::new();
    let mut layer_counts: Vec<usize> = Vec::new();
    let mut used = 0usize;
    let (mut drawn, mut in_complement) = (0usize, 0usize);

    let add = |index: &mut BallIndex, x: Point, k: u32, counts: &mut Vec<usize>| {
        if index.find(metric, &x).is_none() {
            let radius = 2f64.powi(k as i32) * r / 3.0;
            index.insert(MLBall { center: x, radius });
            if counts.len() <= k as usize {
                counts.resize(k as usize + 1, 0);
            }
            counts[k as usize] += 1;
        }
    };

    let mut miss_rate;
    let mut residual;
    loop {
        let n = opts.batch.min(opts.candidate_budget - used);
        let mut batch: Vec<(u32, Point)> = Vec::with_capacity(n);
        for _ in 0..n {
            let x = space.sample_base(rng);
            let m = concept.margin(space, &x, rng);
            drawn += 1;
            match layer_of(m, r) {
                Some(k) => batch.push((k, x)),
                None => in_complement += 1,
            }
        }
        used += n;
        batch.sort_by_key(|e| std::cmp::Reverse(e.0));
        for (k, x) in batch {
            add(&mut index, x, k, &mut layer_counts);
        }

        // fresh validation sample
        let mut uncovered = Vec::new();
        let mut in_vr = 0usize;
        for _ in 0..opts.validation_samples {
            let x = space.sample_base(rng);
            let m = concept.margin(space, &x, rng);
            drawn += 1;
            match layer_of(m, r) {
                Some(k) => {
                    in_vr += 1;
                    if index.find(metric, &x).is_none() {
                        uncovered.push((k, x));
                    }
                }
                None => in_complement += 1,
            }
        }
        miss_rate = if in_vr == 0 {
            0.0
        } else {
            uncovered.len() as f64 / in_vr as f64
        };
        let p = uncovered.len() as f64 / opts.validation_samples.max(1) as f64;
        residual = (
            total * p,
            total * (p * (1.0 - p) / opts.validation_samples.max(1) as f64).sqrt(),
        );
        if miss_rate <= opts.miss_target || used >= opts.candidate_budget {
            break;
        }
        // the misses are ν draws as well; use them as the next candidates
        uncovered.sort_by_key(|e| std::cmp::Reverse(e.0));
        for (k, x) in uncovered {
            add(&mut index, x, k, &mut layer_counts);
        }
    }
    let warning = (miss_rate > opts.miss_target).then(|| {
        format!(
            "candidate budget {} exhausted with miss rate {:.2e} above target {:.2e}",
            opts.candidate_budget, miss_rate, opts.miss_target
        )
    });
    let pc = in_complement as f64 / drawn.max(1) as f64;
    let layers = layer_counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &count)| LayerCount {
            k: k as u32,
            ball_radius: 2f64.powi(k as i32) * r / 3.0,
            count,
        })
        .collect();
    let balls = index.into_balls();
    Ok(CoverReport {
        r,
        n_ml_upper: balls.len(),
        balls,
        layers,
        residual_mass_est: residual.0,
        residual_std_err: residual.1,
        complement_mass_est: total * pc,
        complement_std_err: total * (pc * (1.0 - pc) / drawn.max(1) as f64).sqrt(),
        miss_rate,
        candidates_used: used,
        warning,
    })
}
