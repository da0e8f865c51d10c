//! Experiment configuration files.
//!
//! A config is a single TOML document; unknown keys anywhere are errors.
//!
//! ```toml
//! name = "gridworld-bc"
//! env = "gridworld{h=10}"
//! feature_map = "tabular"
//! algorithm = "bc"
//! expert = "nash"
//! budgets = [10, 50, 100, 200, 500]
//! seeds = [42, 123, 456, 789]
//! master_seed = 0
//!
//! [bc]
//! max_epochs = 2000
//!
//! [exploration]
//! beta = 9.0
//!
//! [output]
//! csv = "runs.csv"
//! plots = [{ metric = "nash_gap", x = "budget", log_x = true }]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use mail_core::exploration::InverseMode;
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub env: String,
    pub feature_map: String,
    pub algorithm: String,
    #[serde(default = "default_expert")]
    pub expert: String,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub bc: BcSection,
    #[serde(default)]
    pub exploration: ExplorationSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_expert() -> String {
    "nash".into()
}

/// BC overrides. A missing `eta` means `ln(budget) / H` for every run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub eta: Option<f64>,
    pub b_theta: Option<f64>,
    pub step_size: Option<f64>,
    pub max_epochs: Option<usize>,
    pub grad_tolerance: Option<f64>,
}

/// Exploration overrides; `n_episodes` always comes from the budget.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationSection {
    pub beta: Option<f64>,
    pub c_beta: Option<f64>,
    pub delta: Option<f64>,
    pub ridge: Option<f64>,
    pub inverse: Option<InverseMode>,
    pub refresh_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_csv")]
    pub csv: String,
    /// Fill `wall_ms`. Off by default so that output is reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub plots: Vec<PlotSpec>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { csv: default_csv(), timing: false, plots: Vec::new() }
    }
}

fn default_csv() -> String {
    "runs.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    pub metric: String,
    #[serde(default = "default_x")]
    pub x: String,
    #[serde(default)]
    pub log_x: bool,
}

fn default_x() -> String {
    "budget".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LabError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Structural checks plus name resolution against the registries.
    pub fn validate(&self) -> Result<(), LabError> {
        if self.budgets.is_empty() {
            return Err(LabError::Config("budgets must not be empty".into()));
        }
        if self.budgets[0] == 0 || self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::Config("budgets must be positive and strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(LabError::Config("seeds must not be empty".into()));
        }
        crate::registry::EnvSpec::parse(&self.env)?;
        crate::registry::FeatureSpec::parse(&self.feature_map)?;
        crate::registry::Algorithm::parse(&self.algorithm)?;
        crate::registry::ExpertSpec::parse(&self.expert)?;
        for p in &self.output.plots {
            crate::plot::Metric::parse(&p.metric)?;
            if p.x != "budget" {
                return Err(LabError::Config(format!("unknown x axis {:?}; registered: budget", p.x)));
            }
        }
        Ok(())
    }
}

/// A `name{key=value,...}` string. The braces are optional when there
/// are no parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl Call {
    pub fn parse(s: &str) -> Result<Self, LabError> {
        let s = s.trim();
        let (name, rest) = match s.find('{') {
            Some(i) => (&s[..i], Some(&s[i + 1..])),
            None => (s, None),
        };
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            let body = rest
                .strip_suffix('}')
                .ok_or_else(|| LabError::Config(format!("unbalanced braces in {s:?}")))?;
            for item in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| LabError::Config(format!("expected key=value in {s:?}, got {item:?}")))?;
                if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                    return Err(LabError::Config(format!("duplicate parameter {k:?} in {s:?}")));
                }
            }
        }
        let name = name.trim();
        if name.is_empty() {
            return Err(LabError::Config(format!("missing name in {s:?}")));
        }
        Ok(Self { name: name.to_string(), params })
    }

    /// Rejects parameters outside `allowed`.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<(), LabError> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(LabError::Config(format!(
                    "unknown parameter {k:?} for {}; accepted: {}",
                    self.name,
                    if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
                )));
            }
        }
        Ok(())
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, LabError> {
        self.params
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| LabError::Config(format!("cannot parse {key}={v:?} for {}", self.name)))
            })
            .transpose()
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, LabError> {
        self.get(key)?
            .ok_or_else(|| LabError::Config(format!("{} needs parameter {key}", self.name)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
env = "gridworld{h=10}"
feature_map = "tabular"
algorithm = "bc"
budgets = [10, 50]
seeds = [1]
"#;

    #[test]
    fn call_syntax() {
        let c = Call::parse("gridworld{h=10}").unwrap();
        assert_eq!(c.name, "gridworld");
        assert_eq!(c.params["h"], "10");
        let c = Call::parse("tabular").unwrap();
        assert!(c.params.is_empty());
        let c = Call::parse("nash-mixture{ k = 3, weights = 0.5:0.25:0.25 }").unwrap();
        assert_eq!(c.params["weights"], "0.5:0.25:0.25");
        assert!(Call::parse("gridworld{h=10").is_err());
        assert!(Call::parse("chain{len}").is_err());
        assert!(Call::parse("chain{len=1,len=2}").is_err());
    }

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.expert, "nash");
        assert_eq!(cfg.output.csv, "runs.csv");
        assert!(!cfg.output.timing);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{MINIMAL}\nbugdets = [1]\n");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(LabError::Config(_))));
        let text = format!("{MINIMAL}\n[bc]\netta = 1.0\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn budgets_checked() {
        for b in ["[]", "[10, 10]", "[50, 10]", "[0, 1]"] {
            let text = MINIMAL.replace("[10, 50]", b);
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{b}");
        }
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("[1]", "[]")).is_err());
    }

    #[test]
    fn unknown_names_list_registered_options() {
        let err = ExperimentConfig::from_toml(&MINIMAL.replace("gridworld{h=10}", "maze")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gridworld") && msg.contains("chain") && msg.contains("tictactoe"), "{msg}");
    }
}
