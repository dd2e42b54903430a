use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{region_mass, sample_in_ball, MassEstimate, Point, Region, Space};

/// The per-round distribution `μ_t` an adversary commits to before the
/// point is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    PointMass {
        x: Point,
    },
    /// Uniform on `B(center, radius) ∩ X`.
    UniformBall {
        center: Point,
        radius: f64,
    },
    /// `N(mean, sd² I)` conditioned on `X`.
    Gaussian {
        mean: Point,
        sd: f64,
    },
    /// `ν / ν(X)`.
    Base,
}

const MAX_REJECTIONS: usize = 10_000_000;

impl Distribution {
    pub fn sample<R: Rng + ?Sized>(&self, space: &Space, rng: &mut R) -> Result<Point> {
        match self {
            Distribution::PointMass { x } => Ok(x.clone()),
            Distribution::Base => Ok(space.sample_base(rng)),
            Distribution::UniformBall { center, radius } => {
                for _ in 0..MAX_REJECTIONS {
                    let p = sample_in_ball(center, *radius, space.metric, rng);
                    if space.contains(&p) {
                        return Ok(Point::from(p));
                    }
                }
                Err(Error::param("radius", "ball misses the space"))
            }
            Distribution::Gaussian { mean, sd } => {
                for _ in 0..MAX_REJECTIONS {
                    let p: Vec<f64> = mean
                        .iter()
                        .map(|m| m + sd * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    if space.contains(&p) {
                        return Ok(Point::from(p));
                    }
                }
                Err(Error::param(
                    "sigma_g",
                    "Gaussian mass inside the space is negligible",
                ))
            }
        }
    }

    /// `μ(A)`, exact where the geometry allows. Gaussian laws have no
    /// closed form here and return `NoAnalyticMass`.
    pub fn mass<R: Rng + ?Sized>(
        &self,
        space: &Space,
        region: &Region,
        mc_samples: usize,
        rng: &mut R,
    ) -> Result<MassEstimate> {
        match self {
            Distribution::PointMass { x } => Ok(MassEstimate::exact(
                region.contains(space.metric, x) as u8 as f64,
            )),
            Distribution::Base => {
                let m = region_mass(space, region, mc_samples, rng)?;
                let z = space.total_mass();
                Ok(MassEstimate {
                    mass: m.mass / z,
                    std_err: m.std_err / z,
                    ..m
                })
            }
            Distribution::UniformBall { center, radius } => {
                let ball = Region::Ball {
                    center: center.to_vec(),
                    radius: *radius,
                };
                let z = region_mass(space, &ball, mc_samples, rng)?;
                let both = Region::Intersection {
                    parts: vec![ball, region.clone()],
                };
                let m = region_mass(space, &both, mc_samples, rng)?;
                if !(z.mass > 0.0) {
                    return Err(Error::param("radius", "ball has zero mass in the space"));
                }
                Ok(MassEstimate {
                    mass: (m.mass / z.mass).min(1.0),
                    std_err: m.std_err / z.mass + m.mass * z.std_err / (z.mass * z.mass),
                    exact: m.exact && z.exact,
                    samples: m.samples.max(z.samples),
                })
            }
            Distribution::Gaussian { .. } => {
                Err(Error::NoAnalyticMass("truncated Gaussian".to_string()))
            }
        }
    }

    /// Monte Carlo `μ(A)` from `n` draws of this distribution.
    pub fn mass_by_sampling<R: Rng + ?Sized>(
        &self,
        space: &Space,
        region: &Region,
        n: usize,
        rng: &mut R,
    ) -> Result<MassEstimate> {
        let mut hits = 0usize;
        for _ in 0..n {
            if region.contains(space.metric, &self.sample(space, rng)?) {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        Ok(MassEstimate {
            mass: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            exact: false,
            samples: n,
        })
    }
}
