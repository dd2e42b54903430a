use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary, AdversaryKind};
use crate::concept::Concept;
use crate::error::{Error, Result};
use crate::geometry::{ClosedFormConstants, CoverOptions};
use crate::learner::LearnerConfig;
use crate::metric::{Region, Space};

fn one() -> usize {
    1
}

/// One experiment, read from a TOML document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub space: Space,
    pub concept: Concept,
    #[serde(default)]
    pub adversary: Option<AdversaryKind>,
    /// CSV of points for a scripted adversary, relative to the config file.
    #[serde(default)]
    pub script: Option<PathBuf>,
    #[serde(default)]
    pub learner: LearnerConfig,
    /// Horizon `T`.
    #[serde(default = "one", alias = "T")]
    pub rounds: usize,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Rounds at which curves are sampled; dyadic up to `T` when absent.
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub cover: Option<CoverSection>,
    #[serde(default)]
    pub dimension: Option<DimensionSection>,
    #[serde(default)]
    pub worstcase: Option<WorstCaseSection>,
    /// Directory the config was read from; resolves relative paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub azuma_check: bool,
    /// The fixed set `V^c` whose martingale is tracked.
    pub azuma_region: Option<Region>,
    /// Monte Carlo draws per round for `μ_t(V^c)` when no closed form
    /// exists; zero demands exact masses.
    pub azuma_mc: usize,
    pub p: f64,
    pub exponent_fit: bool,
    /// `[T_lo, T_hi]`; defaults to `[T/32, T]`.
    pub fit_window: Option<[usize; 2]>,
    pub bootstrap: usize,
    pub ci_level: f64,
    pub bound_overlay: bool,
    pub bound_radii: Vec<f64>,
    pub bound_cover: CoverOptions,
    pub d_est: Option<f64>,
    pub m_est: Option<f64>,
    pub constants: ClosedFormConstants,
    pub save_transcripts: bool,
    pub formats: Vec<Format>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            azuma_check: false,
            azuma_region: None,
            azuma_mc: 0,
            p: 0.05,
            exponent_fit: false,
            fit_window: None,
            bootstrap: 1000,
            ci_level: 0.95,
            bound_overlay: false,
            bound_radii: Vec::new(),
            bound_cover: CoverOptions::default(),
            d_est: None,
            m_est: None,
            constants: ClosedFormConstants::default(),
            save_transcripts: false,
            formats: vec![Format::Csv, Format::Svg, Format::Json],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSection {
    pub radii: Vec<f64>,
    #[serde(default)]
    pub options: CoverOptions,
    #[serde(default)]
    pub write_balls: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionSection {
    pub radii: Vec<f64>,
    pub samples: usize,
    pub minkowski_radii: Vec<f64>,
    pub mc_samples: usize,
}

impl Default for DimensionSection {
    fn default() -> Self {
        DimensionSection {
            radii: vec![0.1, 0.05, 0.02, 0.01],
            samples: 20_000,
            minkowski_radii: vec![0.04, 0.02, 0.01],
            mc_samples: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorstCaseSection {
    pub pairs: usize,
}

fn invalid(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

/// Re-labels a library error as a config error at `path`.
fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| invalid(path, e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            invalid(
                if path == "." { "<root>" } else { &path },
                inner.message().to_string(),
            )
        })?;
        Ok(cfg)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.as_deref().map(|p| self.resolve(p))
    }

    /// Checks ranges and that every cross-reference resolves: dimensions of
    /// concept, adversary and analysis regions against the space, the
    /// script file, and checkpoints and fit window against `T`.
    pub fn validate(&self) -> Result<()> {
        self.space.validate().map_err(at("space"))?;
        self.concept.validate(&self.space).map_err(at("concept"))?;
        if self.rounds == 0 {
            return Err(invalid("rounds", "T must be ≥ 1"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be ≥ 1"));
        }
        if let Some(a) = &self.adversary {
            a.validate(&self.space).map_err(at("adversary"))?;
        }
        if let Some(s) = &self.script {
            if matches!(&self.adversary, Some(a) if !matches!(a, AdversaryKind::Scripted { .. })) {
                return Err(invalid(
                    "script",
                    "only a scripted adversary reads a script",
                ));
            }
            let p = self.resolve(s);
            if !p.is_file() {
                return Err(invalid("script", format!("{} does not exist", p.display())));
            }
        }
        if let Some(cp) = &self.checkpoints {
            if cp.is_empty() || cp.iter().any(|&t| t == 0 || t > self.rounds) {
                return Err(invalid("checkpoints", "must be non-empty and within 1..=T"));
            }
            if !cp.windows(2).all(|w| w[0] < w[1]) {
                return Err(invalid("checkpoints", "must be strictly increasing"));
            }
        }
        let a = &self.analysis;
        if !(a.p > 0.0 && a.p <= 1.0) {
            return Err(invalid("analysis.p", "must lie in (0, 1]"));
        }
        if !(a.ci_level > 0.0 && a.ci_level < 1.0) {
            return Err(invalid("analysis.ci_level", "must lie in (0, 1)"));
        }
        if a.azuma_check {
            match &a.azuma_region {
                None => return Err(invalid("analysis.azuma_region", "required by azuma_check")),
                Some(r) => r
                    .validate(self.space.dim())
                    .map_err(at("analysis.azuma_region"))?,
            }
        }
        if let Some([lo, hi]) = a.fit_window {
            if lo == 0 || lo >= hi || hi > self.rounds {
                return Err(invalid("analysis.fit_window", "need 1 ≤ lo < hi ≤ T"));
            }
        }
        if a.bound_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("analysis.bound_radii", "radii must be positive"));
        }
        if let Some(c) = &self.cover {
            if c.radii.is_empty() || c.radii.iter().any(|r| !(*r > 0.0)) {
                return Err(invalid("cover.radii", "need positive radii"));
            }
        }
        Ok(())
    }

    pub fn checkpoints(&self) -> Vec<usize> {
        if let Some(c) = &self.checkpoints {
            return c.clone();
        }
        dyadic_checkpoints(self.rounds)
    }

    /// Builds the adversary, reading the script file when one is named.
    pub fn build_adversary(&self) -> Result<Adversary> {
        if let Some(s) = &self.script {
            return Adversary::scripted_from_csv(&self.resolve(s));
        }
        match &self.adversary {
            Some(k) => Ok(Adversary::new(k.clone())),
            None => Err(invalid("adversary", "an experiment run needs an adversary")),
        }
    }
}

/// `1, 2, 4, …` below `T`, then `T`.
pub fn dyadic_checkpoints(t: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..usize::BITS)
        .map(|k| 1usize << k)
        .take_while(|&c| c < t)
        .collect();
    out.push(t);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        name = "sign"
        T = 50
        seed = 3
        [space]
        shape = "interval"
        lo = -1.0
        hi = 1.0
        [concept]
        kind = "threshold"
        theta = 0.0
        [adversary]
        kind = "sign_sequence"
    "#;

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::from_toml_str(BASIC).unwrap();
        c.validate().unwrap();
        assert_eq!(c.rounds, 50);
        assert_eq!(c.trials, 1);
        assert_eq!(c.checkpoints(), vec![1, 2, 4, 8, 16, 32, 50]);
    }

    #[test]
    fn errors_carry_field_paths() {
        let bad = BASIC.replace("theta = 0.0", "theta = \"zero\"");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("concept"), "{path}"),
            other => panic!("{other:?}"),
        }
        let bad = format!("{BASIC}\n[analysis]\nbootstrapp = 3\n");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("analysis"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cross_references_are_checked() {
        let mut c = ExperimentConfig::from_toml_str(BASIC).unwrap();
        c.checkpoints = Some(vec![10, 60]);
        assert!(
            matches!(c.validate(), Err(Error::Config { ref path, .. }) if path == "checkpoints")
        );
        c.checkpoints = None;
        c.analysis.azuma_check = true;
        assert!(c.validate().is_err());
        c.analysis.azuma_region = Some(Region::Cuboid {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        });
        assert!(c.validate().is_err());
        c.analysis.azuma_check = false;
        c.rounds = 0;
        assert!(matches!(c.validate(), Err(Error::Config { ref path, .. }) if path == "rounds"));
    }
}
