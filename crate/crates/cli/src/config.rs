//! Config loading (TOML or JSON by extension), overlays and the error
//! kinds that select the exit code.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pulseforge::baselines::BaselineConfig;

/// Invalid or unreadable configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

/// Training or propagation stopped on a numerical problem (exit code 3).
#[derive(Debug)]
pub struct NumericalHalt(pub String);

/// A result missed its threshold under `--strict` (exit code 4).
#[derive(Debug)]
pub struct StrictMiss(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl fmt::Display for NumericalHalt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical halt: {}", self.0)
    }
}

impl fmt::Display for StrictMiss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "strict threshold missed: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}
impl std::error::Error for NumericalHalt {}
impl std::error::Error for StrictMiss {}

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_STRICT: u8 = 4;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<NumericalHalt>() {
            return EXIT_NUMERICAL;
        }
        if cause.is::<StrictMiss>() {
            return EXIT_STRICT;
        }
        if let Some(e) = cause.downcast_ref::<pulseforge::Error>() {
            use pulseforge::Error as E;
            return match e {
                E::Config(_) | E::Validation(_) | E::Format(_) | E::Json(_) => EXIT_CONFIG,
                E::Numerical(_) | E::StepRejected(_) => EXIT_NUMERICAL,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

/// Parses `path` as JSON if it ends in `.json`, TOML otherwise. Errors
/// carry the parser's line and column.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
}

/// Deep-merges `patch` into the serialized `base` and deserializes the
/// result; `section` names the table in error messages.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, patch: Option<&serde_json::Value>, section: &str) -> Result<T> {
    let Some(patch) = patch else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let mut value = serde_json::to_value(base)?;
    merge(&mut value, patch);
    serde_json::from_value(value).map_err(|e| ConfigError(format!("in [{section}]: {e}")).into())
}

fn merge(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Resolves `p` against the directory of the config file.
pub fn relative_to(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Overrides of the scheme defaults for waveform widths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformOverrides {
    pub drag_sigma_ticks: Option<usize>,
    pub cr_sigma_ticks: Option<usize>,
    pub flank_sigmas: Option<f64>,
    pub pi_ticks: Option<usize>,
}

impl WaveformOverrides {
    pub fn apply(&self, mut cfg: BaselineConfig) -> BaselineConfig {
        if let Some(v) = self.drag_sigma_ticks {
            cfg.drag_sigma_ticks = v;
        }
        if let Some(v) = self.cr_sigma_ticks {
            cfg.cr_sigma_ticks = v;
        }
        if let Some(v) = self.flank_sigmas {
            cfg.flank_sigmas = v;
        }
        if let Some(v) = self.pi_ticks {
            cfg.pi_ticks = v;
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overlay_replaces_only_given_fields() {
        #[derive(Debug, PartialEq, Serialize, Deserialize)]
        struct Inner {
            a: f64,
            b: Vec<usize>,
        }
        #[derive(Debug, PartialEq, Serialize, Deserialize)]
        struct Outer {
            x: u32,
            inner: Inner,
        }
        let base = Outer { x: 1, inner: Inner { a: 0.5, b: vec![1, 2] } };
        let out: Outer = overlay(&base, Some(&json!({"inner": {"b": [7]}})), "t").unwrap();
        assert_eq!(out, Outer { x: 1, inner: Inner { a: 0.5, b: vec![7] } });
        let err = overlay(&base, Some(&json!({"x": "no"})), "t").unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn library_errors_map_to_exit_codes() {
        let e: anyhow::Error = pulseforge::Error::Numerical("q".into()).into();
        assert_eq!(exit_code(&e), EXIT_NUMERICAL);
        let e: anyhow::Error = pulseforge::Error::Config("c".into()).into();
        assert_eq!(exit_code(&e.context("while loading")), EXIT_CONFIG);
        let e: anyhow::Error = StrictMiss("f".into()).into();
        assert_eq!(exit_code(&e), EXIT_STRICT);
    }
}
