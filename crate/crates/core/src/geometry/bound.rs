use serde::{Deserialize, Serialize};

use super::cover::CoverReport;
use crate::adversary::SmoothnessRate;
use crate::error::{Error, Result};

/// Geometry of the boundary and the adversary's smoothness, as they enter
/// the closed-form rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBoundInputs {
    /// Box-counting dimension of the boundary.
    pub d_est: Option<f64>,
    /// Minkowski content of the boundary.
    pub m_est: Option<f64>,
    /// Effective smoothness `σ·ν(X)`.
    pub sigma: f64,
    /// Failure probability.
    pub p: f64,
}

/// Existential constants of the closed form, supplied as configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosedFormConstants {
    /// Cover constant `C` in `N_ML(V_r) ≤ C r^{-(d+c1)}`.
    pub c: f64,
    pub c0: f64,
    /// Defaults to `2C(d + c1)`.
    pub c1_big: Option<f64>,
    pub c1: f64,
    pub c2: f64,
}

impl Default for ClosedFormConstants {
    fn default() -> Self {
        ClosedFormConstants {
            c: 1.0,
            c0: 0.0,
            c1_big: None,
            c1: 0.1,
            c2: 0.1,
        }
    }
}

/// One `(r, N_ML, ν(V^c))` point of an empirical cover ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub r: f64,
    pub n_ml: usize,
    pub complement_mass: f64,
}

impl From<&CoverReport> for CoverPoint {
    fn from(c: &CoverReport) -> Self {
        CoverPoint {
            r: c.r,
            n_ml: c.n_ml_upper,
            complement_mass: c.uncovered_mass_upper(),
        }
    }
}

/// JSON has no NaN; serde_json writes it as `null`. Reads it back.
pub(crate) fn nan_from_null<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBound {
    pub t: u64,
    pub bound: f64,
    /// NaN when no grid point was usable.
    #[serde(deserialize_with = "nan_from_null")]
    pub best_r: f64,
    pub n_ml: usize,
    /// `T·ε(ν(V^c))`
    #[serde(deserialize_with = "nan_from_null")]
    pub smooth_term: f64,
    /// `√(2T log(2T/p))`
    pub deviation_term: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormBound {
    pub t: u64,
    pub r_star: f64,
    /// `C r*^{-(d+c1)}`
    pub cover_term: f64,
    /// `T (m + c2) r* / σ`
    pub smooth_term: f64,
    pub deviation_term: f64,
    /// Sum of the three terms at `r*`, capped at `T`.
    pub optimized: f64,
    /// `C0 + C1 ((m + c2) T / σ)^{(d+c1)/(d+1)}`
    pub rate_form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct BoundCurve {
    pub empirical: Option<Vec<EmpiricalBound>>,
    pub closed_form: Option<Vec<ClosedFormBound>>,
}

/// `√(2T log(2T/p))`.
pub fn deviation_term(t: u64, p: f64) -> f64 {
    let t = t as f64;
    (2.0 * t * (2.0 * t / p).ln()).max(0.0).sqrt()
}

/// `min{T, N + T·ε(ν(V^c)) + √(2T log(2T/p))}` for one candidate set.
pub fn mistake_bound(
    t: u64,
    n_ml: usize,
    complement_mass: f64,
    rate: &SmoothnessRate,
    p: f64,
) -> f64 {
    let v = n_ml as f64 + t as f64 * rate.eval(complement_mass) + deviation_term(t, p);
    v.min(t as f64)
}

/// Mistake-bound curves over `ts`: the empirical bound minimised over the
/// cover ladder, and the closed form at the optimal radius, whichever the
/// inputs allow.
pub fn rate_bound(
    inputs: &RateBoundInputs,
    rate: &SmoothnessRate,
    covers: Option<&[CoverPoint]>,
    constants: Option<&ClosedFormConstants>,
    ts: &[u64],
) -> Result<BoundCurve> {
    if !(inputs.p > 0.0 && inputs.p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    if !(inputs.sigma > 0.0) {
        return Err(Error::param("sigma", "must be > 0"));
    }
    let geometry = match (inputs.d_est, inputs.m_est) {
        (Some(d), Some(m)) if d >= 0.0 && m >= 0.0 => Some((d, m)),
        (Some(_), Some(_)) => return Err(Error::param("d_est", "d_est and m_est must be ≥ 0")),
        _ => None,
    };
    let covers = covers.filter(|c| !c.is_empty());
    if covers.is_none() && geometry.is_none() {
        return Err(Error::param(
            "rate_bound",
            "needs a cover ladder or both d_est and m_est",
        ));
    }
    let mut out = BoundCurve::default();
    if let Some(grid) = covers {
        out.empirical = Some(
            ts.iter()
                .map(|&t| {
                    let dev = deviation_term(t, inputs.p);
                    let mut best = EmpiricalBound {
                        t,
                        bound: t as f64,
                        best_r: f64::NAN,
                        n_ml: 0,
                        smooth_term: f64::NAN,
                        deviation_term: dev,
                    };
                    for c in grid {
                        let smooth = t as f64 * rate.eval(c.complement_mass);
                        let v = c.n_ml as f64 + smooth + dev;
                        if v < best.bound || best.best_r.is_nan() {
                            best = EmpiricalBound {
                                t,
                                bound: v.min(t as f64),
                                best_r: c.r,
                                n_ml: c.n_ml,
                                smooth_term: smooth,
                                deviation_term: dev,
                            };
                        }
                    }
                    best
                })
                .collect(),
        );
    }
    if let Some((d, m)) = geometry {
        let k = constants.cloned().unwrap_or_default();
        let big_c1 = k.c1_big.unwrap_or(2.0 * k.c * (d + k.c1));
        let s = inputs.sigma;
        out.closed_form = Some(
            ts.iter()
                .map(|&t| {
                    let tf = t as f64;
                    let e = d + k.c1;
                    let r_star = (k.c * e * s / (tf * (m + k.c2))).powf(1.0 / (e + 1.0));
                    let cover = k.c * r_star.powf(-e);
                    let smooth = tf * (m + k.c2) * r_star / s;
                    let dev = deviation_term(t, inputs.p);
                    ClosedFormBound {
                        t,
                        r_star,
                        cover_term: cover,
                        smooth_term: smooth,
                        deviation_term: dev,
                        optimized: (cover + smooth + dev).min(tf),
                        rate_form: k.c0 + big_c1 * ((m + k.c2) * tf / s).powf(e / (d + 1.0)),
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}
