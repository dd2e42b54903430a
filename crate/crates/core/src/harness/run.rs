use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::emit::emit_outputs;
use super::stats::{fit_exponent, mean_ci, median, AzumaReport, AzumaTracker, ExponentFit, MeanCi};
use crate::adversary::{Adversary, SmoothnessRate};
use crate::error::{Error, Result};
use crate::geometry::{greedy_ml_cover, rate_bound, BoundCurve, CoverPoint, RateBoundInputs};
use crate::learner::{config_hash, run_protocol_with, Transcript};
use crate::rng::split;

/// Environment variable holding the worker count for trial pools.
pub const WORKERS_ENV: &str = "SMOOTHNN_WORKERS";

/// Stream indices above this are reserved for analysis randomness, so
/// trial streams never collide with them.
const ANALYSIS_STREAM: u64 = 1 << 62;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub mistakes: u64,
    pub average_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub average_loss: MeanCi,
    pub mistakes: MeanCi,
    pub median_mistakes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOverlay {
    pub rate: SmoothnessRate,
    pub covers: Vec<CoverPoint>,
    pub curve: BoundCurve,
    /// Trials whose mistakes stay under the empirical bound at every
    /// checkpoint.
    pub trials_within: Option<usize>,
    pub fraction_within: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub rounds: usize,
    pub trials: usize,
    /// `trials · T`.
    pub total_rounds: u64,
    pub ci_level: f64,
    pub checkpoints: Vec<usize>,
    pub trial_summaries: Vec<TrialSummary>,
    /// `mistakes_by_trial[i][j]`: trial `i`'s cumulative mistakes at
    /// `checkpoints[j]`.
    pub mistakes_by_trial: Vec<Vec<u64>>,
    pub curve: Vec<CurvePoint>,
    pub exponent: Option<ExponentFit>,
    pub azuma: Option<AzumaReport>,
    pub bound: Option<BoundOverlay>,
    pub warnings: Vec<String>,
}

struct TrialOutcome {
    at: Vec<u64>,
    mistakes: u64,
    azuma: Option<(bool, f64)>,
}

/// Runs `f` in a pool sized by `SMOOTHNN_WORKERS` when set.
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize =
                v.trim()
                    .parse()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::Config {
                        path: WORKERS_ENV.to_string(),
                        reason: format!("expected a positive integer, got {v:?}"),
                    })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Unsupported(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    template: &Adversary,
    checkpoints: &[usize],
    hash: &str,
    i: usize,
) -> Result<TrialOutcome> {
    let mut rng = split(cfg.seed, i as u64);
    let mut aux = split(cfg.seed, ANALYSIS_STREAM + 1 + i as u64);
    let mut adv = template.clone();
    let a = &cfg.analysis;
    let mut tracker = match (&a.azuma_region, a.azuma_check) {
        (Some(region), true) => Some(AzumaTracker::new(
            &cfg.space,
            region,
            a.p,
            a.azuma_mc,
            checkpoints,
        )),
        _ => None,
    };
    let mut failure: Option<Error> = None;
    let mut tr: Transcript = run_protocol_with(
        &cfg.space,
        &cfg.concept,
        &mut adv,
        &cfg.learner,
        cfg.rounds,
        &mut rng,
        |_, rec| {
            if let (Some(tk), None) = (tracker.as_mut(), failure.as_ref()) {
                if let Err(e) = tk.observe(rec.t, &rec.x, &rec.dist, &mut aux) {
                    failure = Some(e);
                }
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    tr.seed = cfg.seed;
    tr.config_hash = hash.to_string();
    if a.save_transcripts {
        if let Some(dir) = cfg.output_dir() {
            let dir = dir.join("transcripts");
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            tr.save(&dir, &format!("trial_{i:04}"))?;
        }
    }
    Ok(TrialOutcome {
        at: checkpoints.iter().map(|&t| tr.mistakes_at(t)).collect(),
        mistakes: tr.mistakes(),
        azuma: tracker.map(|t| (t.violated, t.max_ratio)),
    })
}

fn bound_overlay(
    cfg: &ExperimentConfig,
    adversary: &Adversary,
    checkpoints: &[usize],
    by_trial: &[Vec<u64>],
    warnings: &mut Vec<String>,
) -> Result<Option<BoundOverlay>> {
    let a = &cfg.analysis;
    let has_geometry = a.d_est.is_some() && a.m_est.is_some();
    if a.bound_radii.is_empty() && !has_geometry {
        warnings.push(
            "bound_overlay is on but neither bound_radii nor d_est/m_est are set; plotting without overlay"
                .to_string(),
        );
        return Ok(None);
    }
    let rate = match adversary.rate(&cfg.space) {
        Ok(r) => r,
        Err(e) => {
            warnings.push(format!("no bound overlay: {e}"));
            return Ok(None);
        }
    };
    let reports = a
        .bound_radii
        .par_iter()
        .enumerate()
        .map(|(k, &r)| {
            let mut rng = split(cfg.seed, ANALYSIS_STREAM - 1 - k as u64);
            greedy_ml_cover(&cfg.concept, &cfg.space, r, &a.bound_cover, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    for rep in &reports {
        if let Some(w) = &rep.warning {
            warnings.push(format!("cover at r = {}: {w}", rep.r));
        }
    }
    let covers: Vec<CoverPoint> = reports.iter().map(CoverPoint::from).collect();
    let sigma = match rate.slope() {
        Some(s) => 1.0 / s,
        None => {
            if has_geometry {
                warnings.push("tabulated rate: closed-form curve skipped".to_string());
            }
            f64::INFINITY
        }
    };
    let inputs = RateBoundInputs {
        d_est: a.d_est.filter(|_| sigma.is_finite()),
        m_est: a.m_est.filter(|_| sigma.is_finite()),
        sigma: if sigma.is_finite() { sigma } else { 1.0 },
        p: a.p.min(1.0 - 1e-12),
    };
    let ts: Vec<u64> = checkpoints.iter().map(|&t| t as u64).collect();
    let curve = match rate_bound(&inputs, &rate, Some(&covers), Some(&a.constants), &ts) {
        Ok(c) => c,
        Err(e) => {
            warnings.push(format!("no bound overlay: {e}"));
            return Ok(None);
        }
    };
    let (trials_within, fraction_within) = match &curve.empirical {
        Some(emp) => {
            let n = by_trial
                .iter()
                .filter(|row| row.iter().zip(emp).all(|(&m, b)| m as f64 <= b.bound))
                .count();
            (Some(n), Some(n as f64 / by_trial.len() as f64))
        }
        None => (None, None),
    };
    Ok(Some(BoundOverlay {
        rate,
        covers,
        curve,
        trials_within,
        fraction_within,
    }))
}

/// Runs `trials` independent episodes (trial `i` on stream `i` of the
/// master seed), aggregates curves at the checkpoints, runs the enabled
/// analyses, and writes outputs when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let adversary = cfg.build_adversary()?;
    let checkpoints = cfg.checkpoints();
    let hash = config_hash(cfg);
    let outcomes = with_workers(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, &adversary, &checkpoints, &hash, i))
            .collect::<Result<Vec<_>>>()
    })??;

    let by_trial: Vec<Vec<u64>> = outcomes.iter().map(|o| o.at.clone()).collect();
    let level = cfg.analysis.ci_level;
    let curve = checkpoints
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let m: Vec<f64> = by_trial.iter().map(|r| r[j] as f64).collect();
            let l: Vec<f64> = m.iter().map(|v| v / t as f64).collect();
            CurvePoint {
                t,
                average_loss: mean_ci(&l, level),
                mistakes: mean_ci(&m, level),
                median_mistakes: median(&m),
            }
        })
        .collect();
    let trial_summaries = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| TrialSummary {
            trial: i,
            mistakes: o.mistakes,
            average_loss: o.mistakes as f64 / cfg.rounds as f64,
        })
        .collect();

    let mut warnings = Vec::new();
    let a = &cfg.analysis;
    let exponent = if a.exponent_fit {
        let window = a
            .fit_window
            .unwrap_or([(cfg.rounds / 32).max(1), cfg.rounds]);
        let f = fit_exponent(
            &checkpoints,
            &by_trial,
            window,
            a.bootstrap,
            level,
            cfg.seed ^ 0x5eed,
        )?;
        if f.undefined {
            warnings.push("no mistakes in the fit window: exponent undefined".to_string());
        }
        Some(f)
    } else {
        None
    };
    let azuma = a.azuma_check.then(|| {
        let flags: Vec<(bool, f64)> = outcomes.iter().filter_map(|o| o.azuma).collect();
        AzumaReport::from_flags(&flags, a.p)
    });
    let bound = if a.bound_overlay {
        with_workers(|| bound_overlay(cfg, &adversary, &checkpoints, &by_trial, &mut warnings))??
    } else {
        None
    };

    let result = ExperimentResult {
        name: cfg.name.clone(),
        seed: cfg.seed,
        config_hash: hash,
        rounds: cfg.rounds,
        trials: cfg.trials,
        total_rounds: (cfg.trials * cfg.rounds) as u64,
        ci_level: level,
        checkpoints,
        trial_summaries,
        mistakes_by_trial: by_trial,
        curve,
        exponent,
        azuma,
        bound,
        warnings,
    };
    if let Some(dir) = cfg.output_dir() {
        emit_outputs(&result, &dir, &a.formats)?;
    }
    Ok(result)
}
