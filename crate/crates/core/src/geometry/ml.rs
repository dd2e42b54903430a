use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::error::{Error, Result};
use crate::learner::Record;
use crate::metric::{sample_in_ball, Metric, Point, Space};

/// Open ball `B(center, radius)`; mutually labelling when `radius` is at
/// most a third of the centre's margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MLBall {
    pub center: Point,
    pub radius: f64,
}

impl MLBall {
    pub fn contains(&self, metric: Metric, x: &[f64]) -> bool {
        metric.dist(&self.center, x) < self.radius
    }

    /// Uniform draw from the ball intersected with the space.
    pub fn sample<R: Rng + ?Sized>(&self, space: &Space, rng: &mut R) -> Point {
        loop {
            let p = sample_in_ball(&self.center, self.radius, space.metric, rng);
            if space.contains(&p) && self.contains(space.metric, &p) {
                return Point::from(p);
            }
        }
    }
}

/// `B(x, m_c(x)/3)`.
pub fn ml_ball<R: Rng + ?Sized>(
    concept: &Concept,
    space: &Space,
    x: &[f64],
    rng: &mut R,
) -> Result<MLBall> {
    space.check_dim(x)?;
    let m = concept.margin(space, x, rng);
    if m == 0.0 {
        return Err(Error::BoundaryPoint);
    }
    if m.is_infinite() {
        return Err(Error::ConstantConcept);
    }
    Ok(MLBall {
        center: Point::new(x.to_vec())?,
        radius: m / 3.0,
    })
}

/// Outcome of sampling pairs inside a ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pairs: usize,
    /// Pairs with `ρ(x, x') ≥ m_c(x)`.
    pub distance_violations: usize,
    /// Pairs with different labels.
    pub label_violations: usize,
}

/// Samples `pairs` pairs in `ball ∩ X` and checks `ρ(x, x') < m_c(x)` and
/// label agreement.
pub fn verify_pairs<R: Rng + ?Sized>(
    concept: &Concept,
    space: &Space,
    ball: &MLBall,
    pairs: usize,
    rng: &mut R,
) -> PairCheck {
    let mut out = PairCheck {
        pairs,
        ..PairCheck::default()
    };
    for _ in 0..pairs {
        let a = ball.sample(space, rng);
        let b = ball.sample(space, rng);
        let m = concept.margin(space, &a, rng);
        if space.metric.dist(&a, &b) >= m {
            out.distance_violations += 1;
        }
        if concept.label(space, &a) != concept.label(space, &b) {
            out.label_violations += 1;
        }
    }
    out
}

/// Mistakes made inside a ball after the ball has already received a
/// point, summed over `balls`.
pub fn post_visit_mistakes(metric: Metric, balls: &[MLBall], records: &[Record]) -> usize {
    let mut visited = vec![false; balls.len()];
    let mut count = 0;
    for r in records {
        for (i, b) in balls.iter().enumerate() {
            if b.contains(metric, &r.x) {
                if visited[i] && r.is_mistake() {
                    count += 1;
                }
                visited[i] = true;
            }
        }
    }
    count
}

/// Mistakes at points that fall in at least one of `balls`.
pub fn mistakes_in_balls(metric: Metric, balls: &[MLBall], records: &[Record]) -> usize {
    records
        .iter()
        .filter(|r| r.is_mistake() && balls.iter().any(|b| b.contains(metric, &r.x)))
        .count()
}
