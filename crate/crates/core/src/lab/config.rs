//! Experiment configuration: TOML schema, validation, and hashing.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::maps::MapKind;
use crate::targets::{Geometry, RateProfile};
use crate::{Error, Result};

/// Which experiment a config runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EahFraction,
    Hts,
    CfMaxdigit,
    CylinderCount,
    BoxDim,
    FSet,
    ReturnTimes,
    Birkhoff,
    Correlation,
    Classify,
}

impl ExperimentKind {
    pub fn slug(self) -> &'static str {
        match self {
            ExperimentKind::EahFraction => "eah-fraction",
            ExperimentKind::Hts => "hts",
            ExperimentKind::CfMaxdigit => "cf-maxdigit",
            ExperimentKind::CylinderCount => "cylinder-count",
            ExperimentKind::BoxDim => "box-dim",
            ExperimentKind::FSet => "f-set",
            ExperimentKind::ReturnTimes => "return-times",
            ExperimentKind::Birkhoff => "birkhoff",
            ExperimentKind::Correlation => "correlation",
            ExperimentKind::Classify => "classify",
        }
    }
}

/// The map an experiment runs on, with its representation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MapSpec {
    pub name: MapKind,
    /// intermittency exponent (intermittent map only)
    #[serde(default)]
    pub alpha: Option<f64>,
    /// fraction bits of the fixed-point orbit (intermittent map only)
    #[serde(default = "default_precision")]
    pub precision: u32,
    /// burn-in steps when sampling from the invariant measure
    #[serde(default = "default_burn_in")]
    pub burn_in: u32,
}

fn default_precision() -> u32 {
    62
}

fn default_burn_in() -> u32 {
    1000
}

/// Shrinking-target schedule parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScheduleSpec {
    pub center: f64,
    pub geometry: Geometry,
    pub profile: RateProfile,
}

/// Window indices for eventually-always-hitting runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct WindowSpec {
    pub n: usize,
    pub m: usize,
}

/// Reference hitting-time law selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum LawSpec {
    Exponential,
    DoublingPeriodic { p: u32 },
    MpPeriodic { cycle_derivative: f64 },
    MpOrigin,
}

/// Hitting-time statistics run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct HtsSpec {
    pub center: f64,
    pub geometry: Geometry,
    pub radius: f64,
    pub law: LawSpec,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
}

fn default_t_max() -> f64 {
    5.0
}

fn default_t_points() -> usize {
    50
}

/// Max-digit growth run on continued fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CfSpec {
    pub bound: crate::cf::BoundKind,
    pub c_grid: Vec<f64>,
}

/// Cylinder counting / box-dimension parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CountSpec {
    pub s_num: u64,
    pub s_den: u64,
    pub n: usize,
    /// single word length (cylinder-count)
    #[serde(default)]
    pub word_len: Option<usize>,
    /// inclusive range with step (box-dim)
    #[serde(default)]
    pub len_start: Option<usize>,
    #[serde(default)]
    pub len_end: Option<usize>,
    #[serde(default)]
    pub len_step: Option<usize>,
}

/// Prescribed-zero-run lower-bound family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FSetSpec {
    pub s_num: u64,
    pub s_den: u64,
    /// number of inductive stages (m_1 = 1, m_k = k * sum of earlier stages)
    #[serde(default)]
    pub stages: Option<usize>,
    /// explicit schedule overriding the inductive one
    #[serde(default)]
    pub schedule: Option<Vec<u64>>,
}

/// Accumulated-return-time statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ReturnsSpec {
    pub n: usize,
    /// C grid (alpha < 1) or kappa grid (alpha >= 1)
    pub grid: Vec<f64>,
}

/// Birkhoff measure estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BirkhoffSpec {
    pub edges: Vec<f64>,
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
}

fn default_seeds() -> usize {
    4
}

/// Correlation-decay estimation (doubling map).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CorrelationSpec {
    pub lags: Vec<usize>,
    pub orbits: usize,
    pub series_len: usize,
    /// half-open intervals defining the observable f (default [0, 1/2))
    #[serde(default = "default_observable")]
    pub f: Vec<(f64, f64)>,
    #[serde(default = "default_observable")]
    pub g: Vec<(f64, f64)>,
}

fn default_observable() -> Vec<(f64, f64)> {
    vec![(0.0, 0.5)]
}

/// Correlation-decay model supplied to the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum DecaySpec {
    Exponential {
        rate: f64,
        #[serde(default)]
        rate_se: f64,
    },
    Polynomial {
        exponent: f64,
        #[serde(default)]
        exponent_se: f64,
    },
    Unknown,
}

/// Threshold classification inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ClassifySpec {
    pub profile: RateProfile,
    pub decay: DecaySpec,
    pub nested: bool,
    pub ergodic: bool,
    pub finite_measure: bool,
    #[serde(default)]
    pub hts_nondegenerate: bool,
}

/// A fully specified experiment. Unknown keys anywhere are rejected;
/// each kind requires its own sections and refuses unrelated ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub hts: Option<HtsSpec>,
    #[serde(default)]
    pub cf: Option<CfSpec>,
    #[serde(default)]
    pub count: Option<CountSpec>,
    #[serde(default)]
    pub f_set: Option<FSetSpec>,
    #[serde(default)]
    pub returns: Option<ReturnsSpec>,
    #[serde(default)]
    pub birkhoff: Option<BirkhoffSpec>,
    #[serde(default)]
    pub correlation: Option<CorrelationSpec>,
    #[serde(default)]
    pub classify: Option<ClassifySpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Short hash of the canonical JSON form: stable under TOML
    /// reformatting, changed by any semantic difference.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let required: &[&str] = match self.kind {
            EahFraction => &["map", "schedule", "window", "samples"],
            Hts => &["map", "hts", "samples"],
            CfMaxdigit => &["cf", "window", "samples"],
            CylinderCount | BoxDim => &["count"],
            FSet => &["f-set"],
            ReturnTimes => &["map", "returns", "samples"],
            Birkhoff => &["map", "birkhoff"],
            Correlation => &["map", "correlation"],
            Classify => &["classify"],
        };
        let sections: [(&str, bool); 10] = [
            ("map", self.map.is_some()),
            ("schedule", self.schedule.is_some()),
            ("window", self.window.is_some()),
            ("samples", self.samples.is_some()),
            ("hts", self.hts.is_some()),
            ("cf", self.cf.is_some()),
            ("count", self.count.is_some()),
            ("f-set", self.f_set.is_some()),
            ("returns", self.returns.is_some()),
            ("birkhoff", self.birkhoff.is_some()),
        ];
        for (name, present) in sections {
            let needed = required.contains(&name);
            if needed && !present {
                return Err(Error::Config(format!(
                    "{} requires the `{name}` section",
                    self.kind.slug()
                )));
            }
            if !needed && present {
                return Err(Error::Config(format!(
                    "{} does not accept the `{name}` section",
                    self.kind.slug()
                )));
            }
        }
        let corr_needed = required.contains(&"correlation");
        if corr_needed != self.correlation.is_some() && self.kind != Classify {
            return Err(Error::Config(format!(
                "correlation section mismatch for {}",
                self.kind.slug()
            )));
        }
        if (self.kind == Classify) != self.classify.is_some() {
            return Err(Error::Config(format!(
                "classify section mismatch for {}",
                self.kind.slug()
            )));
        }
        if self.kind == Correlation && self.correlation.is_none() {
            return Err(Error::Config("correlation section missing".into()));
        }

        if let Some(map) = &self.map {
            match map.name {
                MapKind::MannevillePomeau => {
                    let a = map.alpha.ok_or_else(|| {
                        Error::Config("intermittent map needs `alpha`".into())
                    })?;
                    if !(a > 0.0) {
                        return Err(Error::Config("alpha must be positive".into()));
                    }
                    if map.precision < 8 || map.precision > 4096 {
                        return Err(Error::Config("precision must be in [8, 4096]".into()));
                    }
                }
                _ => {
                    if map.alpha.is_some() {
                        return Err(Error::Config(
                            "`alpha` only applies to the intermittent map".into(),
                        ));
                    }
                }
            }
        }
        if let Some(schedule) = &self.schedule {
            schedule.profile.validate()?;
            if !(0.0..1.0).contains(&schedule.center) {
                return Err(Error::Config("center must lie in [0, 1)".into()));
            }
        }
        if let Some(w) = &self.window {
            if w.n < 1 || w.n > w.m {
                return Err(Error::Config("window needs 1 <= n <= m".into()));
            }
        }
        if let Some(h) = &self.hts {
            if !(h.radius > 0.0 && h.radius < 0.5) {
                return Err(Error::Config("hts radius must lie in (0, 1/2)".into()));
            }
            if h.t_max <= 0.0 || h.t_points < 2 {
                return Err(Error::Config("hts grid needs t_max > 0, t_points >= 2".into()));
            }
            if !(0.0..1.0).contains(&h.center) {
                return Err(Error::Config("hts center must lie in [0, 1)".into()));
            }
        }
        if let Some(cf) = &self.cf {
            if cf.c_grid.is_empty() || cf.c_grid.iter().any(|&c| c <= 0.0) {
                return Err(Error::Config("cf c-grid must be nonempty and positive".into()));
            }
        }
        if let Some(c) = &self.count {
            if c.s_num < 1 || c.s_num > c.s_den {
                return Err(Error::Config("count density must lie in (0, 1]".into()));
            }
            match self.kind {
                CylinderCount if c.word_len.is_none() => {
                    return Err(Error::Config("cylinder-count needs `word-len`".into()));
                }
                BoxDim if c.len_start.is_none() || c.len_end.is_none() => {
                    return Err(Error::Config("box-dim needs `len-start` and `len-end`".into()));
                }
                _ => {}
            }
        }
        if let Some(f) = &self.f_set {
            if f.s_num < 1 || f.s_num > f.s_den {
                return Err(Error::Config("f-set density must lie in (0, 1]".into()));
            }
            if f.stages.is_none() == f.schedule.is_none() {
                return Err(Error::Config(
                    "f-set needs exactly one of `stages` or `schedule`".into(),
                ));
            }
        }
        if let Some(r) = &self.returns {
            if r.n < 10 || r.grid.is_empty() {
                return Err(Error::Config("returns need n >= 10 and a nonempty grid".into()));
            }
        }
        if let Some(b) = &self.birkhoff {
            if b.edges.len() < 2 || b.edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("birkhoff edges must increase strictly".into()));
            }
            if b.steps == 0 || b.seeds == 0 {
                return Err(Error::Config("birkhoff needs steps > 0 and seeds > 0".into()));
            }
        }
        if let Some(c) = &self.correlation {
            if c.lags.is_empty() || c.orbits == 0 || c.series_len <= c.lags.iter().max().unwrap() + 1 {
                return Err(Error::Config(
                    "correlation needs lags, orbits and series-len > max lag + 1".into(),
                ));
            }
            for &(a, b) in c.f.iter().chain(&c.g) {
                if !(0.0..=1.0).contains(&a) || !(a < b && b <= 1.0) {
                    return Err(Error::Config(format!(
                        "observable interval ({a}, {b}) must satisfy 0 <= a < b <= 1"
                    )));
                }
            }
        }
        if let Some(c) = &self.classify {
            c.profile.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EAH_TOML: &str = r#"
        kind = "eah-fraction"
        master-seed = 42
        output-dir = "out"
        samples = 100

        [map]
        name = "doubling"

        [schedule]
        center = 0.3
        geometry = "two-sided-clipped"
        profile = { kind = "power-law", c = 0.5, a = 1.0 }

        [window]
        n = 10
        m = 100
    "#;

    #[test]
    fn parses_and_hashes_stably() {
        let a = ExperimentConfig::from_toml(EAH_TOML).unwrap();
        let b = ExperimentConfig::from_toml(&EAH_TOML.replace("    ", "\t")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);

        let c = ExperimentConfig::from_toml(&EAH_TOML.replace("n = 10", "n = 11")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_sections() {
        let unknown = EAH_TOML.replace("samples = 100", "samples = 100\nbogus = 1");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());

        let missing = EAH_TOML.replace("[window]\n        n = 10\n        m = 100", "");
        assert!(ExperimentConfig::from_toml(&missing).is_err());

        let extra = format!("{EAH_TOML}\n[returns]\nn = 100\ngrid = [2.0]\n");
        assert!(ExperimentConfig::from_toml(&extra).is_err());
    }

    #[test]
    fn validates_map_parameters() {
        let mp = EAH_TOML.replace("name = \"doubling\"", "name = \"manneville-pomeau\"");
        assert!(ExperimentConfig::from_toml(&mp).is_err());
        let mp_ok = EAH_TOML.replace(
            "name = \"doubling\"",
            "name = \"manneville-pomeau\"\n        alpha = 0.5",
        );
        assert!(ExperimentConfig::from_toml(&mp_ok).is_ok());
        let bad = EAH_TOML.replace("name = \"doubling\"", "name = \"doubling\"\n        alpha = 0.5");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }
}
