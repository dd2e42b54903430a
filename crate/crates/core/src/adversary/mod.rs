//! Adversaries: worst-case constructions, σ-smooth and Gaussian samplers,
//! and the i.i.d. base adversary.

mod dist;
mod rate;
mod worst;

pub use dist::Distribution;
pub use rate::{gaussian_rate_table, radius_for_mass, SmoothnessRate};
pub use worst::{build_worst_case_sequence, even_round_mistakes};

use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concept::{Boundary, Concept};
use crate::error::{Error, Result};
use crate::learner::Transcript;
use crate::metric::{Point, Shape, Space};
use worst::PairGen;

/// How boundary-targeting adversaries pick the centre of `μ_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum TargetPolicy {
    Fixed {
        point: Vec<f64>,
    },
    /// Boundary point nearest the learner's most recent mistake.
    #[default]
    NearestToLastMistake,
    /// Walks the boundary back and forth, one full sweep per `period`
    /// rounds.
    Sweep {
        period: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryKind {
    Scripted {
        points: Vec<Vec<f64>>,
    },
    /// `x_t = (−1/3)^t` on the line.
    SignSequence,
    /// Alternating pairs converging to the boundary.
    PairConstructor,
    /// Uniform on the ball around the target whose ν-mass is `sigma·ν(X)`.
    SigmaSmoothBallBoost {
        sigma: f64,
        #[serde(default)]
        policy: TargetPolicy,
    },
    /// Target plus `N(0, sigma_g² I)` noise, conditioned on the space.
    GaussianPerturb {
        sigma_g: f64,
        #[serde(default)]
        policy: TargetPolicy,
    },
    IidBase,
}

impl AdversaryKind {
    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            AdversaryKind::Scripted { points } => {
                for p in points {
                    space.check_dim(p)?;
                }
            }
            AdversaryKind::SignSequence => {
                if space.dim() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: space.dim(),
                    });
                }
            }
            AdversaryKind::SigmaSmoothBallBoost { sigma, policy } => {
                if !(*sigma > 0.0) {
                    return Err(Error::param("adversary.sigma", "must be > 0"));
                }
                validate_policy(space, policy)?;
            }
            AdversaryKind::GaussianPerturb { sigma_g, policy } => {
                if !(*sigma_g > 0.0) {
                    return Err(Error::param("adversary.sigma_g", "must be > 0"));
                }
                validate_policy(space, policy)?;
            }
            AdversaryKind::PairConstructor | AdversaryKind::IidBase => {}
        }
        Ok(())
    }
}

fn validate_policy(space: &Space, policy: &TargetPolicy) -> Result<()> {
    match policy {
        TargetPolicy::Fixed { point } => space.check_dim(point),
        TargetPolicy::Sweep { period } if *period == 0 => {
            Err(Error::param("adversary.policy.period", "must be ≥ 1"))
        }
        _ => Ok(()),
    }
}

/// A stateful adversary. It sees the whole transcript but never the
/// learner's internals.
#[derive(Clone, Debug)]
pub struct Adversary {
    kind: AdversaryKind,
    boundary: Option<Boundary>,
    seen: usize,
    last_mistake: Option<Vec<f64>>,
    pair: Option<PairGen>,
    radius_cache: Option<(Vec<f64>, f64)>,
    gaussian_rate: OnceLock<SmoothnessRate>,
}

impl Adversary {
    pub fn new(kind: AdversaryKind) -> Self {
        Adversary {
            kind,
            boundary: None,
            seen: 0,
            last_mistake: None,
            pair: None,
            radius_cache: None,
            gaussian_rate: OnceLock::new(),
        }
    }

    pub fn kind(&self) -> &AdversaryKind {
        &self.kind
    }

    /// Scripted adversary from a CSV file with one point per row; a
    /// non-numeric first row is treated as a header.
    pub fn scripted_from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Config {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        let mut points = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(crate::learner::csv_err)?;
            let parsed: std::result::Result<Vec<f64>, _> =
                row.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(p) => points.push(p),
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::Config {
                        path: path.display().to_string(),
                        reason: format!("row {}: {e}", i + 1),
                    })
                }
            }
        }
        Ok(Adversary::new(AdversaryKind::Scripted { points }))
    }

    fn boundary<R: Rng + ?Sized>(
        &mut self,
        space: &Space,
        concept: &Concept,
        rng: &mut R,
    ) -> &Boundary {
        if self.boundary.is_none() {
            self.boundary = Some(concept.boundary(space, rng));
        }
        self.boundary.as_ref().expect("boundary set")
    }

    fn observe(&mut self, tr: &Transcript) {
        if tr.len() < self.seen {
            // a fresh transcript: forget everything learned from the old one
            self.seen = 0;
            self.last_mistake = None;
            self.pair = None;
        }
        for r in &tr.records[self.seen..] {
            if r.is_mistake() {
                self.last_mistake = Some(r.x.to_vec());
            }
        }
        self.seen = tr.len();
    }

    fn target<R: Rng + ?Sized>(
        &mut self,
        space: &Space,
        concept: &Concept,
        policy: &TargetPolicy,
        round: usize,
        rng: &mut R,
    ) -> Vec<f64> {
        if let TargetPolicy::Fixed { point } = policy {
            return point.clone();
        }
        let metric = space.metric;
        let last = self.last_mistake.clone();
        let b = self.boundary(space, concept, rng);
        if b.is_empty() {
            return space.sample_base(rng).into_inner();
        }
        let z = match policy {
            TargetPolicy::NearestToLastMistake => match last {
                Some(x) => b.nearest(metric, &x),
                None => b.point_at(0.5),
            },
            TargetPolicy::Sweep { period } => {
                let phase = ((round - 1) % period) as f64 / *period as f64;
                let u = if phase < 0.5 {
                    2.0 * phase
                } else {
                    2.0 - 2.0 * phase
                };
                b.point_at(u)
            }
            TargetPolicy::Fixed { .. } => unreachable!(),
        };
        z.map(Point::into_inner)
            .unwrap_or_else(|| space.sample_base(rng).into_inner())
    }

    fn sigma_radius(&mut self, space: &Space, center: &[f64], sigma: f64) -> Result<f64> {
        if let Some((c, r)) = &self.radius_cache {
            if c.as_slice() == center {
                return Ok(*r);
            }
        }
        let target = sigma * space.total_mass();
        let r0 = space.metric.radius_for_volume(space.dim(), target);
        let r = if ball_inside(space, center, r0) {
            r0
        } else {
            radius_for_mass(space, center, target)?
        };
        self.radius_cache = Some((center.to_vec(), r));
        Ok(r)
    }

    /// `μ_t` for the next round, given the transcript so far.
    pub fn distribution<R: Rng + ?Sized>(
        &mut self,
        space: &Space,
        concept: &Concept,
        tr: &Transcript,
        rng: &mut R,
    ) -> Result<Distribution> {
        self.observe(tr);
        let round = tr.len() + 1;
        let kind = self.kind.clone();
        match kind {
            AdversaryKind::Scripted { points } => match points.get(round - 1) {
                Some(p) => Ok(Distribution::PointMass {
                    x: Point::new(p.clone())?,
                }),
                None => Err(Error::ProtocolViolation {
                    round,
                    reason: format!("scripted sequence has only {} points", points.len()),
                }),
            },
            AdversaryKind::SignSequence => Ok(Distribution::PointMass {
                x: Point::from((-1.0f64 / 3.0).powi(round as i32)),
            }),
            AdversaryKind::PairConstructor => {
                if self.pair.is_none() {
                    let b = concept.analytic_boundary(space).ok_or_else(|| {
                        Error::Unsupported(
                            "worst-case construction needs an analytic boundary".into(),
                        )
                    })?;
                    self.pair = Some(PairGen::start(space, concept, &b)?);
                    self.boundary = Some(b);
                }
                let hist: Vec<&[f64]> = tr.points().collect();
                let b = self.boundary.as_ref().expect("boundary set");
                let gen = self.pair.as_mut().expect("generator set");
                Ok(Distribution::PointMass {
                    x: gen.next(space, concept, b, &hist)?,
                })
            }
            AdversaryKind::SigmaSmoothBallBoost { sigma, policy } => {
                if sigma >= 1.0 {
                    return Ok(Distribution::Base);
                }
                let z = self.target(space, concept, &policy, round, rng);
                let r = self.sigma_radius(space, &z, sigma)?;
                Ok(Distribution::UniformBall {
                    center: Point::from(z),
                    radius: r,
                })
            }
            AdversaryKind::GaussianPerturb { sigma_g, policy } => {
                let z = self.target(space, concept, &policy, round, rng);
                Ok(Distribution::Gaussian {
                    mean: Point::from(z),
                    sd: sigma_g,
                })
            }
            AdversaryKind::IidBase => Ok(Distribution::Base),
        }
    }

    /// Picks `μ_t` and draws `x_t ~ μ_t`.
    pub fn next_distribution<R: Rng + ?Sized>(
        &mut self,
        space: &Space,
        concept: &Concept,
        tr: &Transcript,
        rng: &mut R,
    ) -> Result<(Point, Distribution)> {
        let d = self.distribution(space, concept, tr, rng)?;
        let x = d.sample(space, rng)?;
        Ok((x, d))
    }

    /// Declared smoothness rate.
    pub fn rate(&self, space: &Space) -> Result<SmoothnessRate> {
        let total = space.total_mass();
        match &self.kind {
            AdversaryKind::Scripted { .. }
            | AdversaryKind::SignSequence
            | AdversaryKind::PairConstructor => Err(Error::NoRate),
            AdversaryKind::IidBase => Ok(SmoothnessRate::Linear { sigma_eff: total }),
            AdversaryKind::SigmaSmoothBallBoost { sigma, .. } => Ok(SmoothnessRate::Linear {
                sigma_eff: sigma.min(1.0) * total,
            }),
            AdversaryKind::GaussianPerturb { sigma_g, .. } => {
                if let Some(r) = self.gaussian_rate.get() {
                    return Ok(r.clone());
                }
                let r = gaussian_rate_table(space, *sigma_g, 41, 20_000)?;
                Ok(self.gaussian_rate.get_or_init(|| r).clone())
            }
        }
    }

    pub fn smoothness_rate_eval(&self, space: &Space, delta: f64) -> Result<f64> {
        Ok(self.rate(space)?.eval(delta))
    }
}

/// Whether `B(center, r)` lies inside the space.
fn ball_inside(space: &Space, center: &[f64], r: f64) -> bool {
    let d = space.dim() as f64;
    let reach = match space.metric {
        crate::metric::Metric::Euclidean => r,
        crate::metric::Metric::LInfinity => r * d.sqrt(),
    };
    match &space.shape {
        Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } => {
            center.iter().all(|c| c - r >= *lo && c + r <= *hi)
        }
        Shape::Ball { radius, .. } => {
            crate::metric::Metric::Euclidean.dist(center, &vec![0.0; center.len()]) + reach
                <= *radius
        }
        Shape::Clusters { .. } => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{run_protocol, LearnerConfig};
    use crate::metric::Region;
    use crate::rng::seeded;

    #[test]
    fn sign_sequence_values() {
        let space = Space::interval(-1.0, 1.0);
        let c = Concept::threshold(0.0);
        let mut adv = Adversary::new(AdversaryKind::SignSequence);
        let tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            3,
            &mut seeded(0),
        )
        .unwrap();
        let xs: Vec<f64> = tr.points().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0 / 3.0, 1.0 / 9.0, -1.0 / 27.0]);
    }

    #[test]
    fn sigma_ball_has_the_right_mass() {
        let space = Space::unit_square();
        let c = Concept::halfspace(vec![1.0, 0.0], 0.5);
        let mut adv = Adversary::new(AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.01,
            policy: TargetPolicy::Fixed {
                point: vec![0.5, 0.5],
            },
        });
        let d = adv
            .distribution(&space, &c, &Transcript::default(), &mut seeded(0))
            .unwrap();
        let Distribution::UniformBall { radius, .. } = d else {
            panic!("{d:?}")
        };
        assert!((std::f64::consts::PI * radius * radius - 0.01).abs() < 1e-15);
    }

    #[test]
    fn sigma_ball_domination_by_sampling() {
        let space = Space::unit_square();
        let c = Concept::halfspace(vec![1.0, 0.0], 0.5);
        let mut adv = Adversary::new(AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.01,
            policy: TargetPolicy::Fixed {
                point: vec![0.5, 0.5],
            },
        });
        let mut rng = seeded(11);
        let d = adv
            .distribution(&space, &c, &Transcript::default(), &mut rng)
            .unwrap();
        let a = Region::Cuboid {
            lo: vec![0.5, 0.5],
            hi: vec![0.55, 0.55],
        };
        let n = 100_000;
        let est = d.mass_by_sampling(&space, &a, n, &mut rng).unwrap();
        let bound = 0.0025 / 0.01;
        let se = (bound * (1.0 - bound) / n as f64).sqrt();
        assert!(est.mass <= bound + 3.0 * se, "{} vs {}", est.mass, bound);
        let exact = d.mass(&space, &a, 0, &mut rng).unwrap();
        assert!(exact.exact && (est.mass - exact.mass).abs() < 4.0 * se.max(1e-3));
    }

    #[test]
    fn rates() {
        let iv = Space::unit_interval();
        let iid = Adversary::new(AdversaryKind::IidBase);
        assert_eq!(iid.smoothness_rate_eval(&iv, 0.3).unwrap(), 0.3);
        let sig = Adversary::new(AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.1,
            policy: TargetPolicy::default(),
        });
        assert!((sig.smoothness_rate_eval(&iv, 0.05).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(sig.smoothness_rate_eval(&iv, 0.0).unwrap(), 0.0);
        assert_eq!(sig.smoothness_rate_eval(&iv, 0.2).unwrap(), 1.0);
        for k in [
            AdversaryKind::SignSequence,
            AdversaryKind::PairConstructor,
            AdversaryKind::Scripted { points: vec![] },
        ] {
            assert!(matches!(
                Adversary::new(k).smoothness_rate_eval(&iv, 0.1),
                Err(Error::NoRate)
            ));
        }
    }

    #[test]
    fn sweep_visits_the_whole_segment() {
        let space = Space::unit_square();
        let c = Concept::halfspace(vec![1.0, 0.0], 0.5);
        let mut adv = Adversary::new(AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.01,
            policy: TargetPolicy::Sweep { period: 100 },
        });
        let tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            100,
            &mut seeded(2),
        )
        .unwrap();
        let ys: Vec<f64> = tr
            .records
            .iter()
            .map(|r| match &r.dist {
                Distribution::UniformBall { center, .. } => center[1],
                _ => panic!(),
            })
            .collect();
        // the sweep starts at one end of the segment and reaches the other
        // half-way through the period
        assert!(ys[0] == 0.0 || ys[0] == 1.0, "{}", ys[0]);
        assert!((ys[50] - (1.0 - ys[0])).abs() < 1e-12);
        assert!(tr.points().all(|p| space.contains(p)));
    }

    #[test]
    fn pair_constructor_adversary_errs_each_even_round() {
        let space = Space::unit_square();
        let c = Concept::halfspace(vec![1.0, 0.0], 0.5);
        let mut adv = Adversary::new(AdversaryKind::PairConstructor);
        let tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            200,
            &mut seeded(0),
        )
        .unwrap();
        let even = tr
            .records
            .iter()
            .filter(|r| r.t % 2 == 0 && r.is_mistake())
            .count();
        assert_eq!(even, 100);
    }

    #[test]
    fn scripted_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("seq.csv");
        std::fs::write(&p, "x0,x1\n0.1,0.2\n0.3,0.4\n").unwrap();
        let adv = Adversary::scripted_from_csv(&p).unwrap();
        assert_eq!(
            adv.kind(),
            &AdversaryKind::Scripted {
                points: vec![vec![0.1, 0.2], vec![0.3, 0.4]]
            }
        );
    }
}
