//! Geometry-only jobs behind the `cover`, `dim` and `worstcase`
//! subcommands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::with_workers;
use crate::adversary::{build_worst_case_sequence, even_round_mistakes, Adversary, AdversaryKind};
use crate::error::{Error, Result};
use crate::geometry::{
    boundary_dim, fit_line, greedy_ml_cover, minkowski_content, CoverReport, DimensionEstimate,
    LineFit, MinkowskiEstimate,
};
use crate::learner::run_protocol;
use crate::rng::split;

fn missing(section: &str) -> Error {
    Error::Config {
        path: section.to_string(),
        reason: "section required by this command".to_string(),
    }
}

fn write_json<T: Serialize>(cfg: &ExperimentConfig, name: &str, value: &T) -> Result<()> {
    if let Some(dir) = cfg.output_dir() {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let p = dir.join(name);
        let body = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSummary {
    pub reports: Vec<CoverReport>,
    /// Slope of `log N_ML` against `log r`.
    pub scaling: Option<LineFit>,
}

/// Greedy ML covers at every configured radius (radius `k` on analysis
/// stream `k`), plus their log-log scaling slope.
pub fn run_cover(cfg: &ExperimentConfig) -> Result<CoverSummary> {
    cfg.validate()?;
    let sec = cfg.cover.as_ref().ok_or_else(|| missing("cover"))?;
    let reports = with_workers(|| {
        sec.radii
            .par_iter()
            .enumerate()
            .map(|(k, &r)| {
                let mut rng = split(cfg.seed, u64::MAX - k as u64);
                greedy_ml_cover(&cfg.concept, &cfg.space, r, &sec.options, &mut rng)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|c| c.n_ml_upper > 0)
        .map(|c| (c.r.ln(), (c.n_ml_upper as f64).ln()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let summary = CoverSummary {
        scaling: fit_line(&x, &y),
        reports,
    };
    write_json(cfg, "cover.json", &summary)?;
    if sec.write_balls {
        if let Some(dir) = cfg.output_dir() {
            let p = dir.join("cover_balls.csv");
            let mut w = csv::Writer::from_path(&p).map_err(|e| Error::Serde(e.to_string()))?;
            let d = cfg.space.dim();
            let mut header = vec!["r".to_string()];
            header.extend((0..d).map(|i| format!("x{i}")));
            header.push("radius".into());
            w.write_record(&header)
                .map_err(|e| Error::Serde(e.to_string()))?;
            for rep in &summary.reports {
                for b in &rep.balls {
                    let mut row = vec![rep.r.to_string()];
                    row.extend(b.center.iter().map(|v| v.to_string()));
                    row.push(b.radius.to_string());
                    w.write_record(&row)
                        .map_err(|e| Error::Serde(e.to_string()))?;
                }
            }
            w.flush().map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub dimension: DimensionEstimate,
    pub minkowski: MinkowskiEstimate,
}

/// Box-counting dimension and Minkowski content of the concept's boundary.
pub fn run_dimension(cfg: &ExperimentConfig) -> Result<DimensionReport> {
    cfg.validate()?;
    let sec = cfg.dimension.clone().unwrap_or_default();
    let mut rng = split(cfg.seed, u64::MAX);
    let boundary = cfg.concept.boundary(&cfg.space, &mut rng);
    let dimension = boundary_dim(
        &boundary,
        cfg.space.metric,
        sec.samples,
        &sec.radii,
        &mut rng,
    )?;
    let minkowski = minkowski_content(
        &cfg.space,
        &boundary,
        &sec.minkowski_radii,
        sec.mc_samples,
        &mut rng,
    )?;
    let rep = DimensionReport {
        dimension,
        minkowski,
    };
    write_json(cfg, "dimension.json", &rep)?;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseReport {
    pub pairs: usize,
    pub rounds: usize,
    pub mistakes: u64,
    /// Mistakes on the second point of each pair.
    pub even_round_mistakes: usize,
    pub average_loss: f64,
}

/// Builds the alternating-pair sequence and replays it against the
/// configured learner.
pub fn run_worstcase(cfg: &ExperimentConfig) -> Result<WorstCaseReport> {
    cfg.validate()?;
    let sec = cfg.worstcase.as_ref().ok_or_else(|| missing("worstcase"))?;
    let seq = build_worst_case_sequence(&cfg.space, &cfg.concept, sec.pairs)?;
    let even = even_round_mistakes(&cfg.space, &cfg.concept, &seq);
    let mut adv = Adversary::new(AdversaryKind::Scripted {
        points: seq.iter().map(|p| p.to_vec()).collect(),
    });
    let rounds = seq.len();
    let tr = run_protocol(
        &cfg.space,
        &cfg.concept,
        &mut adv,
        &cfg.learner,
        rounds,
        &mut split(cfg.seed, 0),
    )?;
    let rep = WorstCaseReport {
        pairs: sec.pairs,
        rounds,
        mistakes: tr.mistakes(),
        even_round_mistakes: even,
        average_loss: tr.mistakes() as f64 / rounds.max(1) as f64,
    };
    write_json(cfg, "worstcase.json", &rep)?;
    Ok(rep)
}
