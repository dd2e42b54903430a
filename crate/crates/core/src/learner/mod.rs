//! The 1-nearest-neighbour online learner and the protocol loop.

mod history;

pub use history::History;

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::{Adversary, Distribution};
use crate::concept::{Concept, Label};
use crate::error::{Error, Result};
use crate::metric::{Point, Space};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    /// Prediction at t = 1, before anything is stored.
    pub default_label: u32,
    /// Grid bucketing for nearest-neighbour queries.
    pub accelerator: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            default_label: 0,
            accelerator: true,
        }
    }
}

impl LearnerConfig {
    pub fn history(&self, space: &Space) -> History {
        if self.accelerator {
            History::accelerated(space.dim(), space.metric)
        } else {
            History::new(space.dim(), space.metric)
        }
    }
}

/// One protocol round.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub t: usize,
    pub x: Point,
    pub y: Label,
    pub yhat: Label,
    pub loss: f64,
    /// `m_c(x_t)`, NaN when no closed form is available.
    pub margin: f64,
    /// The distribution the adversary drew `x_t` from.
    pub dist: Distribution,
}

impl Record {
    pub fn is_mistake(&self) -> bool {
        self.loss > 0.0
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub records: Vec<Record>,
    /// `cumulative[t-1]` = mistakes in rounds `1..=t`.
    pub cumulative: Vec<u64>,
    pub seed: u64,
    pub config_hash: String,
}

/// Totals written next to a transcript CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub seed: u64,
    pub config_hash: String,
    pub rounds: usize,
    pub mistakes: u64,
    pub average_loss: f64,
}

pub fn zero_one_loss(y: Label, yhat: Label) -> f64 {
    if y == yhat {
        0.0
    } else {
        1.0
    }
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, r: Record) {
        let prev = self.cumulative.last().copied().unwrap_or(0);
        self.cumulative.push(prev + r.is_mistake() as u64);
        self.records.push(r);
    }

    pub fn mistakes(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    /// Mistakes in rounds `1..=t`.
    pub fn mistakes_at(&self, t: usize) -> u64 {
        if t == 0 {
            0
        } else {
            self.cumulative[t.min(self.len()) - 1]
        }
    }

    /// `(1/T) Σ_{t≤T} loss_t`.
    pub fn average_loss(&self, up_to: usize) -> Result<f64> {
        if up_to == 0 || up_to > self.len() {
            return Err(Error::param(
                "up_to",
                format!("must be in 1..={}, got {up_to}", self.len()),
            ));
        }
        let s: f64 = self.records[..up_to].iter().map(|r| r.loss).sum();
        Ok(s / up_to as f64)
    }

    pub fn summary(&self) -> TranscriptSummary {
        TranscriptSummary {
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            rounds: self.len(),
            mistakes: self.mistakes(),
            average_loss: if self.is_empty() {
                0.0
            } else {
                self.average_loss(self.len()).unwrap_or(0.0)
            },
        }
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.records.iter().map(|r| r.x.coords())
    }

    /// CSV with columns `t, x0.., y, yhat, loss, margin`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.records.first().map_or(1, |r| r.x.dim());
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|k| format!("x{k}")));
        header.extend(["y", "yhat", "loss", "margin"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![r.t.to_string()];
            row.extend(r.x.iter().map(|v| v.to_string()));
            row.push(r.y.to_string());
            row.push(r.yhat.to_string());
            row.push(r.loss.to_string());
            row.push(r.margin.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let json_path = dir.join(format!("{stem}.json"));
        let body = serde_json::to_string_pretty(&self.summary())
            .map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(&json_path, body).map_err(|e| Error::io(&json_path, e))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Serde(e.to_string())
}

/// Runs `rounds` rounds of the smoothed online protocol: the adversary
/// sees the transcript so far and emits `μ_t`, `x_t ~ μ_t` is revealed,
/// the learner predicts, pays zero-one loss, and memorizes `(x_t, y_t)`.
pub fn run_protocol<R: Rng + ?Sized>(
    space: &Space,
    concept: &Concept,
    adversary: &mut Adversary,
    cfg: &LearnerConfig,
    rounds: usize,
    rng: &mut R,
) -> Result<Transcript> {
    run_protocol_with(space, concept, adversary, cfg, rounds, rng, |_, _| {})
}

/// `run_protocol` with a hook called after each round with the history
/// as it stood when the prediction was made.
pub fn run_protocol_with<R: Rng + ?Sized, F: FnMut(&History, &Record)>(
    space: &Space,
    concept: &Concept,
    adversary: &mut Adversary,
    cfg: &LearnerConfig,
    rounds: usize,
    rng: &mut R,
    mut hook: F,
) -> Result<Transcript> {
    concept.validate(space)?;
    let mut history = cfg.history(space);
    let mut tr = Transcript {
        records: Vec::with_capacity(rounds),
        cumulative: Vec::with_capacity(rounds),
        ..Transcript::default()
    };
    let default = Label(cfg.default_label);
    for t in 1..=rounds {
        let (x, dist) = adversary.next_distribution(space, concept, &tr, rng)?;
        if x.dim() != space.dim() {
            return Err(Error::ProtocolViolation {
                round: t,
                reason: format!("point has dimension {}, space has {}", x.dim(), space.dim()),
            });
        }
        if !space.contains(&x) {
            return Err(Error::ProtocolViolation {
                round: t,
                reason: format!("point {:?} lies outside the space", x.coords()),
            });
        }
        let y = concept.label(space, &x);
        let yhat = history.predict(&x, default);
        let margin = concept.analytic_margin(space, &x).unwrap_or(f64::NAN);
        let rec = Record {
            t,
            x,
            y,
            yhat,
            loss: zero_one_loss(y, yhat),
            margin,
            dist,
        };
        hook(&history, &rec);
        history.update(&rec.x, y);
        tr.push(rec);
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversaryKind, TargetPolicy};
    use crate::rng::seeded;

    #[test]
    fn sign_sequence_errs_every_round_after_the_first() {
        let space = Space::interval(-1.0, 1.0);
        let c = Concept::threshold(0.0);
        let mut adv = Adversary::new(AdversaryKind::SignSequence);
        let tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            50,
            &mut seeded(0),
        )
        .unwrap();
        assert_eq!(tr.records[0].loss, 0.0);
        assert!(tr.records[1..].iter().all(|r| r.is_mistake()));
        assert_eq!(tr.mistakes(), 49);
        assert!((tr.average_loss(50).unwrap() - 49.0 / 50.0).abs() < 1e-15);

        let wrong = LearnerConfig {
            default_label: 1,
            ..LearnerConfig::default()
        };
        let mut adv = Adversary::new(AdversaryKind::SignSequence);
        let tr = run_protocol(&space, &c, &mut adv, &wrong, 50, &mut seeded(0)).unwrap();
        assert_eq!(tr.mistakes(), 50);
    }

    #[test]
    fn constant_concept_errs_at_most_once() {
        let space = Space::unit_square();
        let c = Concept::constant(1);
        let mut adv = Adversary::new(AdversaryKind::IidBase);
        let tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            100,
            &mut seeded(3),
        )
        .unwrap();
        assert!(tr.records[1..].iter().all(|r| !r.is_mistake()));
    }

    #[test]
    fn separated_clusters_make_few_mistakes() {
        let (space, c) = Concept::two_clusters(1.0, 0.1).unwrap();
        let mut adv = Adversary::new(AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.05,
            policy: TargetPolicy::NearestToLastMistake,
        });
        let tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            10_000,
            &mut seeded(5),
        )
        .unwrap();
        assert!(tr.mistakes() <= 2, "{}", tr.mistakes());
    }

    #[test]
    fn outside_point_is_a_protocol_violation() {
        let space = Space::unit_interval();
        let c = Concept::threshold(0.5);
        let mut adv = Adversary::new(AdversaryKind::Scripted {
            points: vec![vec![0.2], vec![1.5]],
        });
        let err = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            2,
            &mut seeded(0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation { round: 2, .. }));
    }

    #[test]
    fn average_loss_edges() {
        let space = Space::unit_interval();
        let c = Concept::threshold(0.5);
        let mut adv = Adversary::new(AdversaryKind::Scripted {
            points: (0..10)
                .map(|i| vec![if i % 2 == 0 { 0.1 } else { 0.9 }])
                .collect(),
        });
        let tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            10,
            &mut seeded(0),
        )
        .unwrap();
        assert_eq!(tr.mistakes(), 1);
        assert!(tr.average_loss(0).is_err());
        assert!(tr.average_loss(11).is_err());
        assert!(tr.cumulative.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn csv_layout() {
        let space = Space::unit_square();
        let c = Concept::halfspace(vec![1.0, 0.0], 0.5);
        let mut adv = Adversary::new(AdversaryKind::IidBase);
        let mut tr = run_protocol(
            &space,
            &c,
            &mut adv,
            &LearnerConfig::default(),
            3,
            &mut seeded(1),
        )
        .unwrap();
        tr.seed = 1;
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,x0,x1,y,yhat,loss,margin");
        assert_eq!(lines.len(), 4);
        assert_eq!(config_hash(&c).len(), 64);
    }
}
