//! Run configuration: JSON with defaults filled and unknown keys rejected.

use std::path::PathBuf;

use orbitctl_core::counting::{Arc, WindowSchedule};
use orbitctl_core::orbits::Method;
use orbitctl_core::thermo::DEFAULT_T_SPAN;
use orbitctl_core::tolerances::DEFAULT_BUDGET;
use orbitctl_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// `"maxent"` or a number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Value(f64),
    Named(AlphaName),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaName {
    Maxent,
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec::Named(AlphaName::Maxent)
    }
}

impl std::str::FromStr for AlphaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "maxent" {
            return Ok(AlphaSpec::Named(AlphaName::Maxent));
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(AlphaSpec::Value)
            .ok_or_else(|| {
                config_error(
                    "alpha",
                    format!("expected \"maxent\" or a number, got {s:?}"),
                )
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Sandwich parameter of the smoothed windows.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Half-width of the `t` bracket for the Legendre solve.
    #[serde(default = "default_t_span")]
    pub t_span: f64,
    /// Ceiling on `d^{n_max}`.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eta: default_eta(),
            t_span: default_t_span(),
            budget: default_budget(),
        }
    }
}

fn default_eta() -> f64 {
    0.1
}

fn default_t_span() -> f64 {
    DEFAULT_T_SPAN
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

fn default_n_min() -> usize {
    1
}

fn default_interval() -> (f64, f64) {
    (-1.0, 1.0)
}

fn default_arc() -> Arc {
    Arc::FULL
}

fn default_depth() -> usize {
    12
}

fn default_k_max() -> usize {
    5
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from("orbit-cache")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file holding the map coefficients.
    pub map: PathBuf,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default)]
    pub alpha: AlphaSpec,
    #[serde(default = "default_interval")]
    pub interval: (f64, f64),
    #[serde(default = "default_arc")]
    pub arc: Arc,
    /// Shrinking windows; when set, `count` predicts with the schedule.
    #[serde(default)]
    pub schedule: Option<WindowSchedule>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Reports go to stdout when unset.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub override_hyperbolicity: bool,
    /// Permits `d^{n_max}` above the budget.
    #[serde(default)]
    pub override_budget: bool,
}

pub fn config_error(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

/// Parses and validates everything that does not need the map.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(
            if path.is_empty() { "." } else { &path },
            e.into_inner().to_string(),
        )
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn new(map: PathBuf, n_max: usize) -> Self {
        Self {
            map,
            cache_dir: default_cache_dir(),
            n_min: default_n_min(),
            n_max,
            alpha: AlphaSpec::default(),
            interval: default_interval(),
            arc: default_arc(),
            schedule: None,
            depth: default_depth(),
            k_max: default_k_max(),
            output_dir: None,
            method: None,
            tolerances: Tolerances::default(),
            override_hyperbolicity: false,
            override_budget: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 {
            return Err(config_error("n_min", "periods start at 1"));
        }
        if self.n_min > self.n_max {
            return Err(config_error(
                "n_min",
                format!("n_min = {} exceeds n_max = {}", self.n_min, self.n_max),
            ));
        }
        let (a, b) = self.interval;
        if !(a <= b) {
            return Err(config_error("interval", format!("[{a}, {b}] is reversed")));
        }
        if !(0.0..=1.0).contains(&self.arc.width_fraction) {
            return Err(config_error("arc.width_fraction", "must lie in [0, 1]"));
        }
        if !(self.tolerances.eta > 0.0 && self.tolerances.eta < 1.0) {
            return Err(config_error("tolerances.eta", "must lie in (0, 1)"));
        }
        if !(self.tolerances.t_span > 0.0) {
            return Err(config_error("tolerances.t_span", "must be positive"));
        }
        if self.k_max == 0 {
            return Err(config_error("k_max", "must be at least 1"));
        }
        if let Some(s) = &self.schedule {
            s.validate()
                .map_err(|e| config_error("schedule", e.to_string()))?;
        }
        Ok(())
    }

    /// `d^{n_max}` within the budget unless overridden.
    pub fn check_budget(&self, degree: usize) -> Result<()> {
        if self.override_budget {
            return Ok(());
        }
        let within = u32::try_from(self.n_max)
            .ok()
            .and_then(|n| degree.checked_pow(n))
            .is_some_and(|size| size <= self.tolerances.budget);
        if within {
            Ok(())
        } else {
            Err(config_error(
                "n_max",
                format!(
                    "degree {degree} to the power {} exceeds the budget {}; set override_budget to proceed",
                    self.n_max, self.tolerances.budget
                ),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"map": "m.json", "n_max": 10}"#).unwrap();
        assert_eq!(c.n_min, 1);
        assert_eq!(c.alpha, AlphaSpec::Named(AlphaName::Maxent));
        assert_eq!(c.interval, (-1.0, 1.0));
        assert_eq!(c.tolerances.budget, 1 << 17);
        assert_eq!(c.cache_dir, PathBuf::from("orbit-cache"));
        assert!(!c.override_hyperbolicity);
    }

    #[test]
    fn errors_carry_the_key_path() {
        let reversed = parse_config(r#"{"map": "m.json", "n_min": 5, "n_max": 3}"#).unwrap_err();
        assert!(matches!(&reversed, Error::Config { path, .. } if path == "n_min"));
        let unknown = parse_config(r#"{"map": "m.json", "n_max": 3, "tolerances": {"etaa": 1}}"#)
            .unwrap_err();
        assert!(matches!(&unknown, Error::Config { path, .. } if path.starts_with("tolerances")));
        let alpha =
            parse_config(r#"{"map": "m.json", "n_max": 3, "alpha": "median"}"#).unwrap_err();
        assert!(matches!(&alpha, Error::Config { path, .. } if path == "alpha"));
        assert_eq!(alpha.exit_code(), 2);
    }

    #[test]
    fn numeric_alpha_and_budget() {
        let c = parse_config(r#"{"map": "m.json", "n_max": 18, "alpha": 0.8}"#).unwrap();
        assert_eq!(c.alpha, AlphaSpec::Value(0.8));
        assert!(c.check_budget(2).is_err());
        assert!(c.check_budget(1).is_ok());
        let over = RunConfig {
            override_budget: true,
            ..c
        };
        assert!(over.check_budget(2).is_ok());
        assert_eq!("maxent".parse::<AlphaSpec>().unwrap(), AlphaSpec::default());
        assert!("nan".parse::<AlphaSpec>().is_err());
    }
}
