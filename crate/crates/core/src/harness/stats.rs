use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::adversary::Distribution;
use crate::error::{Error, Result};
use crate::geometry::{deviation_term, fit_line, nan_from_null};
use crate::learner::Transcript;
use crate::metric::{Region, Space};
use crate::rng::seeded;

/// Mean with a Student-t confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    #[serde(deserialize_with = "nan_from_null")]
    pub mean: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub sd: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub lo: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub hi: f64,
}

pub fn mean_ci(xs: &[f64], level: f64) -> MeanCi {
    let n = xs.len();
    if n == 0 {
        return MeanCi {
            mean: f64::NAN,
            sd: f64::NAN,
            lo: f64::NAN,
            hi: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanCi {
            mean,
            sd: 0.0,
            lo: mean,
            hi: mean,
        };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let q = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map(|t| t.inverse_cdf(0.5 + level / 2.0))
        .unwrap_or(1.96);
    let half = q * sd / (n as f64).sqrt();
    MeanCi {
        mean,
        sd,
        lo: mean - half,
        hi: mean + half,
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Growth exponent of cumulative mistakes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// `NaN` when undefined.
    #[serde(deserialize_with = "nan_from_null")]
    pub alpha: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub ci_lo: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub ci_hi: f64,
    pub ci_level: f64,
    pub window: [usize; 2],
    pub points: usize,
    #[serde(deserialize_with = "nan_from_null")]
    pub r2: f64,
    /// Set when the fit is undefined (no mistakes in the window).
    pub undefined: bool,
}

fn slope_of_means(
    ts: &[usize],
    per_trial: &[&[u64]],
    idx: &[usize],
    picks: &[usize],
) -> Option<(f64, f64)> {
    let mut x = Vec::with_capacity(idx.len());
    let mut y = Vec::with_capacity(idx.len());
    for &j in idx {
        let m = picks.iter().map(|&i| per_trial[i][j] as f64).sum::<f64>() / picks.len() as f64;
        if m <= 0.0 {
            return None;
        }
        x.push((ts[j] as f64).ln());
        y.push(m.ln());
    }
    fit_line(&x, &y).map(|f| (f.slope, f.r2))
}

/// Log-log least-squares slope of mean cumulative mistakes against `T`
/// over the checkpoints inside `window`, with a percentile bootstrap
/// interval from resampling trials.
///
/// `per_trial[i][j]` is trial `i`'s cumulative mistake count at `ts[j]`.
pub fn fit_exponent(
    ts: &[usize],
    per_trial: &[Vec<u64>],
    window: [usize; 2],
    bootstrap: usize,
    level: f64,
    seed: u64,
) -> Result<ExponentFit> {
    if per_trial.is_empty() || per_trial.iter().any(|c| c.len() != ts.len()) {
        return Err(Error::param(
            "per_trial",
            "one value per checkpoint per trial",
        ));
    }
    if window[1] < 100 {
        return Err(Error::param(
            "window",
            "curve must cover at least 100 rounds",
        ));
    }
    let idx: Vec<usize> = (0..ts.len())
        .filter(|&j| ts[j] >= window[0] && ts[j] <= window[1])
        .collect();
    if idx.len() < 2 {
        return Err(Error::param(
            "window",
            "need at least two checkpoints in the window",
        ));
    }
    let rows: Vec<&[u64]> = per_trial.iter().map(|v| v.as_slice()).collect();
    let all: Vec<usize> = (0..rows.len()).collect();
    let undefined = ExponentFit {
        alpha: f64::NAN,
        ci_lo: f64::NAN,
        ci_hi: f64::NAN,
        ci_level: level,
        window,
        points: idx.len(),
        r2: f64::NAN,
        undefined: true,
    };
    let Some((alpha, r2)) = slope_of_means(ts, &rows, &idx, &all) else {
        return Ok(undefined);
    };
    let mut rng = seeded(seed);
    let mut boots = Vec::with_capacity(bootstrap);
    let mut picks = vec![0usize; rows.len()];
    for _ in 0..bootstrap {
        for p in picks.iter_mut() {
            *p = rng.random_range(0..rows.len());
        }
        if let Some((s, _)) = slope_of_means(ts, &rows, &idx, &picks) {
            boots.push(s);
        }
    }
    let (ci_lo, ci_hi) = if boots.is_empty() {
        (alpha, alpha)
    } else {
        boots.sort_by(f64::total_cmp);
        let q =
            |p: f64| boots[((p * (boots.len() - 1) as f64).round() as usize).min(boots.len() - 1)];
        (q((1.0 - level) / 2.0), q(0.5 + level / 2.0))
    };
    Ok(ExponentFit {
        alpha,
        ci_lo,
        ci_hi,
        r2,
        undefined: false,
        ..undefined
    })
}

/// Running martingale `S_t = Σ (1{x_τ ∈ A} − μ_τ(A))` for one episode,
/// checked against `√(2t log(2t/p))` at the checkpoints.
#[derive(Clone, Debug)]
pub struct AzumaTracker<'a> {
    space: &'a Space,
    region: &'a Region,
    p: f64,
    mc: usize,
    checkpoints: &'a [usize],
    next: usize,
    sum: f64,
    pub max_ratio: f64,
    pub violated: bool,
}

impl<'a> AzumaTracker<'a> {
    pub fn new(
        space: &'a Space,
        region: &'a Region,
        p: f64,
        mc: usize,
        checkpoints: &'a [usize],
    ) -> Self {
        AzumaTracker {
            space,
            region,
            p,
            mc,
            checkpoints,
            next: 0,
            sum: 0.0,
            max_ratio: 0.0,
            violated: false,
        }
    }

    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        t: usize,
        x: &[f64],
        dist: &Distribution,
        rng: &mut R,
    ) -> Result<()> {
        let mu = dist.mass(self.space, self.region, self.mc, rng)?.mass;
        let hit = self.region.contains(self.space.metric, x) as u8 as f64;
        self.sum += hit - mu;
        while self.next < self.checkpoints.len() && self.checkpoints[self.next] <= t {
            if self.checkpoints[self.next] == t {
                let b = deviation_term(t as u64, self.p);
                let dev = self.sum.abs();
                self.max_ratio = self
                    .max_ratio
                    .max(if b > 0.0 { dev / b } else { f64::INFINITY });
                if dev > b {
                    self.violated = true;
                }
            }
            self.next += 1;
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzumaReport {
    pub trials: usize,
    pub violations: usize,
    pub fraction: f64,
    pub p: f64,
    /// `p + 3·√(p(1−p)/N)`.
    pub tolerance: f64,
    pub within_tolerance: bool,
    /// Largest `|S_t| / √(2t log(2t/p))` seen in any trial.
    pub max_ratio: f64,
}

impl AzumaReport {
    pub fn from_flags(flags: &[(bool, f64)], p: f64) -> Self {
        let n = flags.len();
        let violations = flags.iter().filter(|f| f.0).count();
        let fraction = violations as f64 / n.max(1) as f64;
        let tolerance = p + 3.0 * (p * (1.0 - p) / n.max(1) as f64).sqrt();
        AzumaReport {
            trials: n,
            violations,
            fraction,
            p,
            tolerance,
            within_tolerance: fraction <= tolerance,
            max_ratio: flags.iter().map(|f| f.1).fold(0.0, f64::max),
        }
    }
}

/// Fraction of transcripts whose martingale deviation from the fixed set
/// `region` exceeds `√(2t log(2t/p))` at some checkpoint. The per-round
/// distributions must have analytic masses (or `mc > 0`).
pub fn azuma_check(
    space: &Space,
    transcripts: &[Transcript],
    region: &Region,
    p: f64,
    checkpoints: &[usize],
    mc: usize,
) -> Result<AzumaReport> {
    region.validate(space.dim())?;
    let mut rng = seeded(0);
    let mut flags = Vec::with_capacity(transcripts.len());
    for tr in transcripts {
        let mut track = AzumaTracker::new(space, region, p, mc, checkpoints);
        for r in &tr.records {
            track.observe(r.t, &r.x, &r.dist, &mut rng)?;
        }
        flags.push((track.violated, track.max_ratio));
    }
    Ok(AzumaReport::from_flags(&flags, p))
}
