//! Run configuration, stored as JSON.
//!
//! Every field except `schema_version` has a default, so `{"schema_version": 1}`
//! is a complete configuration. Unknown fields are rejected, and every error
//! names the offending field path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackConfig, DEFAULT_SIGMAS};
use crate::decay::{CountDistribution, DecayParams, SourceParams};
use crate::error::{Error, Result, Warning};
use crate::postproc::DistillParams;
use crate::protocol::{AnnouncementMode, DetectorModel, PlateSpec, Scenario, TimelineParams};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "RADIOKEY_CONFIG";

pub const DEFAULT_MU: f64 = 0.1;
pub const DEFAULT_PAIRS: usize = 10_000;
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default = "default_timeline")]
    pub timeline: TimelineParams,
    #[serde(default = "default_plate")]
    pub plate: PlateSpec,
    #[serde(default = "DetectorModel::ideal")]
    pub detector: DetectorModel,
    #[serde(default)]
    pub attack: AttackConfig,
    /// Bob's detection-test threshold in standard deviations.
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    #[serde(default)]
    pub announcement: AnnouncementMode,
    /// Scenario (b) charges `P / (1 - P)` instead of `P` when set.
    #[serde(default)]
    pub exact_fraction_ratio: bool,
    /// Reconciliation and privacy amplification; skipped when absent.
    #[serde(default = "default_postprocess")]
    pub postprocess: Option<DistillParams>,
    /// Record the elapsed time in the report. Off by default because it
    /// makes reports differ between runs.
    #[serde(default)]
    pub report_timing: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_csv: Option<PathBuf>,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_sigmas() -> f64 {
    DEFAULT_SIGMAS
}

fn default_postprocess() -> Option<DistillParams> {
    Some(DistillParams::default())
}

/// `tau_D = 10 d`, `x = 0.2`, `y = 2`.
fn default_timeline() -> TimelineParams {
    let decay = DecayParams::from_mean_life(10.0).expect("positive");
    TimelineParams::new(0.5, 1.5, 20.0, decay).expect("valid")
}

fn default_plate() -> PlateSpec {
    PlateSpec {
        pair_count: DEFAULT_PAIRS,
        source: CountDistribution::Poisson(SourceParams { mu: DEFAULT_MU }),
        background_rate: 0.0,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            trials: DEFAULT_TRIALS,
            scenario: Scenario::default(),
            timeline: default_timeline(),
            plate: default_plate(),
            detector: DetectorModel::ideal(),
            attack: AttackConfig::default(),
            sigmas: DEFAULT_SIGMAS,
            announcement: AnnouncementMode::default(),
            exact_fraction_ratio: false,
            postprocess: default_postprocess(),
            report_timing: false,
            output: OutputPaths::default(),
        }
    }
}

fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Domain(m) => Error::config(path, m),
        other => other,
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hard constraints. Soft ones are reported by [`RunConfig::warnings`].
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {CONFIG_SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        self.timeline.check().map_err(at("timeline"))?;
        self.plate.check().map_err(at("plate"))?;
        if let CountDistribution::Poisson(s) = &self.plate.source {
            SourceParams::new(s.mu).map_err(at("plate.source.poisson.mu"))?;
        }
        self.detector.check().map_err(at("detector"))?;
        self.attack.check(&self.timeline).map_err(at("attack"))?;
        if self.attack.epsilon_eve != self.detector.epsilon_eve {
            return Err(Error::config(
                "detector.epsilon_eve",
                format!(
                    "{} disagrees with attack.epsilon_eve = {}",
                    self.detector.epsilon_eve, self.attack.epsilon_eve
                ),
            ));
        }
        if !(self.sigmas > 0.0 && self.sigmas.is_finite()) {
            return Err(Error::config(
                "sigmas",
                format!("must be positive, got {}", self.sigmas),
            ));
        }
        if let Some(p) = &self.postprocess {
            if !(p.sample_fraction > 0.0 && p.sample_fraction < 1.0) {
                return Err(Error::config(
                    "postprocess.sample_fraction",
                    format!("must lie in (0, 1), got {}", p.sample_fraction),
                ));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut w = self.timeline.warnings();
        w.extend(self.plate.warnings());
        w
    }

    /// Mean excited nuclei per sample.
    pub fn mu(&self) -> f64 {
        self.plate.source.mean()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{Budget, Strategy};

    #[test]
    fn minimal_config_uses_documented_defaults() {
        let c = RunConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.mu(), 0.1);
        assert_eq!(c.scenario, Scenario::ArrivalCheck);
        assert_eq!(c.sigmas, 5.0);
        assert!((c.timeline.exposure_ratio() - 0.2).abs() < 1e-15);
        assert!((c.timeline.revelation_ratio() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn decay_accepts_half_life() {
        let c = RunConfig::from_json(
            r#"{"schema_version": 1, "timeline": {"production_days": 0.5, "transport_days": 1.5, "revelation_days": 20, "decay": {"half_life_days": 13.6}}}"#,
        )
        .unwrap();
        assert!((c.timeline.decay.mean_life() - 13.6 / std::f64::consts::LN_2).abs() < 1e-12);
        assert!(c.to_json().contains("mean_life_days"));
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.attack.strategy = Strategy::Both;
        c.attack.budget = Budget::Auto(crate::adversary::AutoBudget::Auto);
        c.attack.window = Some([0.0, 1.0]);
        c.scenario = Scenario::NoArrivalCheck;
        c.postprocess = None;
        c.output.report = Some("out/report.json".into());
        let text = c.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn errors_carry_field_paths() {
        let cases = [
            (
                r#"{"schema_version": 1, "plate": {"pair_count": 10, "source": {"poisson": {"mu": 0.1}}, "background_rate": 0, "colour": 1}}"#,
                "plate",
            ),
            (r#"{"schema_version": 1, "trials": "many"}"#, "trials"),
            (r#"{"schema_version": 2}"#, "schema_version"),
            (r#"{"schema_version": 1, "trials": 0}"#, "trials"),
            (
                r#"{"schema_version": 1, "detector": {"epsilon_bob": 1.5}}"#,
                "detector",
            ),
            (
                r#"{"schema_version": 1, "plate": {"pair_count": 10, "source": {"poisson": {"mu": 12}}, "background_rate": 0}}"#,
                "plate.source.poisson.mu",
            ),
            (
                r#"{"schema_version": 1, "attack": {"window": [0, 100]}}"#,
                "attack",
            ),
            (
                r#"{"schema_version": 1, "attack": {"budget": "lots"}}"#,
                "attack.budget",
            ),
            (
                r#"{"schema_version": 1, "timeline": {"production_days": 0, "transport_days": 1, "revelation_days": 1, "decay": {"mean_life_days": -1}}}"#,
                "timeline.decay",
            ),
            (
                r#"{"schema_version": 1, "timeline": {"production_days": 0, "transport_days": 1, "revelation_days": 1, "decay": {"mean_life_days": 2, "half_life_days": 2}}}"#,
                "timeline.decay",
            ),
            (
                r#"{"schema_version": 1, "postprocess": {"sample_fraction": 1.0}}"#,
                "postprocess.sample_fraction",
            ),
            (
                r#"{"schema_version": 1, "detector": {"epsilon_bob": 1, "epsilon_eve": 0.5}}"#,
                "detector.epsilon_eve",
            ),
        ];
        for (text, want) in cases {
            match RunConfig::from_json(text) {
                Err(Error::Config { path, .. }) => {
                    assert!(path.starts_with(want), "{text}: got path {path}")
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
