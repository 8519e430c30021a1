use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use bsosim::{DriveField, LambdaConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A configuration problem, reported as JSON naming the offending key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Rabi,
    RabiDc,
    GbsoScan,
    ArbitraryInit,
    Lambda,
    #[serde(rename = "composite_2l")]
    Composite2l,
    RamanCompare,
    Analytic,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rabi => "rabi",
            Self::RabiDc => "rabi_dc",
            Self::GbsoScan => "gbso_scan",
            Self::ArbitraryInit => "arbitrary_init",
            Self::Lambda => "lambda",
            Self::Composite2l => "composite_2l",
            Self::RamanCompare => "raman_compare",
            Self::Analytic => "analytic",
        }
    }
}

/// Two-level drive runs (`rabi`, `rabi_dc`). With `pulse_area` set, the run
/// ends when the pulse area is reached and `t_end` must be omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiParams {
    pub field: DriveField,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub pulse_area: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// `[from, to]` window for the tone fit of the residual.
    #[serde(default)]
    pub demod_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauGrid {
    Explicit(Vec<f64>),
    /// Starts where the rescaled drive equals `g0m_start`, spans `periods`
    /// periods of 2ω.
    Span {
        g0m_start: f64,
        periods: f64,
        points: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    pub field: DriveField,
    pub tau_grid: TauGrid,
    #[serde(default = "half_pi")]
    pub pulse_area: f64,
    #[serde(default = "one")]
    pub max_drive_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArbitraryInitParams {
    pub field: DriveField,
    pub a0: f64,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaParams {
    pub lambda: LambdaConfig,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub init_level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terms {
    Full,
    RotatingOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeParams {
    pub g: f64,
    pub omega: f64,
    #[serde(default)]
    pub atom_freq: Option<f64>,
    pub mean_photons: f64,
    #[serde(default)]
    pub alpha_phase: f64,
    #[serde(default = "full_terms")]
    pub terms: Terms,
    #[serde(default = "window_k")]
    pub window_k: f64,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Also run the rotating-only model and fit the 2ω residual.
    #[serde(default)]
    pub bso_reference: bool,
    #[serde(default)]
    pub export_hamiltonian: bool,
    /// Largest edge-shell probability tolerated.
    #[serde(default = "leak_tol")]
    pub leak_tol: f64,
    #[serde(default = "norm_tol")]
    pub norm_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanParams {
    pub lambda: LambdaConfig,
    /// Defaults to the matched drive: `ω = Δω`, `g0M` = exact Raman rate.
    #[serde(default)]
    pub field: Option<DriveField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticParams {
    pub field: DriveField,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub a0: Option<f64>,
}

fn half_pi() -> f64 {
    PI / 2.0
}

fn one() -> f64 {
    1.0
}

fn full_terms() -> Terms {
    Terms::Full
}

fn leak_tol() -> f64 {
    bsosim::composite::LEAK_TOL
}

fn norm_tol() -> f64 {
    bsosim::composite::COMPOSITE_NORM_TOL
}

fn window_k() -> f64 {
    bsosim::composite::DEFAULT_WINDOW_K
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    Rabi(RabiParams),
    Scan(ScanParams),
    ArbitraryInit(ArbitraryInitParams),
    Lambda(LambdaParams),
    Composite(CompositeParams),
    Raman(RamanParams),
    Analytic(AnalyticParams),
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(flatten)]
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Dotted path of the key a deserialization message is about: serde's
/// missing/unknown field names and the library's `invalid <name>: ...`.
fn named_field(path: &str, message: &str) -> String {
    let quoted = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("missing field") || message.starts_with("unknown field"));
    let invalid = message
        .strip_prefix("invalid ")
        .and_then(|m| m.split_once(':'))
        .map(|(name, _)| name)
        .filter(|name| !matches!(*name, "type" | "value" | "length"))
        .filter(|name| name.chars().all(|c| c.is_alphanumeric() || c == '_'));
    let leaf = quoted.or(invalid);
    match (path, leaf) {
        (".", Some(leaf)) | ("", Some(leaf)) => leaf.to_string(),
        (".", None) | ("", None) => "<root>".to_string(),
        (p, Some(leaf)) if p.rsplit('.').next() != Some(leaf) => format!("{p}.{leaf}"),
        (p, _) => p.to_string(),
    }
}

fn typed<T: DeserializeOwned>(value: Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        ConfigError::new(named_field(&path, &message), message)
    })
}

#[cfg(test)]
fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("<root>", e.to_string()))?;
    from_value(value)
}

pub fn load(path: &Path) -> Result<(Value, ScenarioConfig), ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| ConfigError::new("<root>", e.to_string()))?;
    let cfg = from_value(value.clone())?;
    Ok((value, cfg))
}

pub fn from_value(value: Value) -> Result<ScenarioConfig, ConfigError> {
    let Value::Object(mut map) = value else {
        return Err(ConfigError::new("<root>", "config must be a JSON object"));
    };
    let scenario: ScenarioKind = match map.remove("scenario") {
        None => return Err(ConfigError::new("scenario", "missing field `scenario`")),
        Some(v) => serde_json::from_value(v).map_err(|e| ConfigError::new("scenario", e.to_string()))?,
    };
    let output_dir = match map.remove("output_dir") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(ConfigError::new("output_dir", "output_dir must be a string")),
    };
    let rest = Value::Object(map);
    let params = match scenario {
        ScenarioKind::Rabi | ScenarioKind::RabiDc => Params::Rabi(typed(rest)?),
        ScenarioKind::GbsoScan => Params::Scan(typed(rest)?),
        ScenarioKind::ArbitraryInit => Params::ArbitraryInit(typed(rest)?),
        ScenarioKind::Lambda => Params::Lambda(typed(rest)?),
        ScenarioKind::Composite2l => Params::Composite(typed(rest)?),
        ScenarioKind::RamanCompare => Params::Raman(typed(rest)?),
        ScenarioKind::Analytic => Params::Analytic(typed(rest)?),
    };
    Ok(ScenarioConfig {
        scenario,
        params,
        output_dir,
    })
}

/// Sets the numeric leaf at dotted `path`, creating it inside an existing
/// object if absent.
pub fn set_leaf(value: &mut Value, path: &str, x: f64) -> Result<(), ConfigError> {
    let (parents, leaf) = match path.rsplit_once('.') {
        Some((p, l)) => (p.split('.').collect::<Vec<_>>(), l),
        None => (Vec::new(), path),
    };
    let mut node = value;
    for key in parents {
        node = node
            .get_mut(key)
            .filter(|n| n.is_object())
            .ok_or_else(|| ConfigError::new(path, format!("`{key}` is not an object in the config")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| ConfigError::new(path, "parent is not an object"))?;
    match obj.get(leaf) {
        None | Some(Value::Number(_)) => {}
        Some(other) => {
            return Err(ConfigError::new(
                path,
                format!("not a numeric parameter (found {other})"),
            ));
        }
    }
    let n =
        serde_json::Number::from_f64(x).ok_or_else(|| ConfigError::new(path, format!("value {x} is not finite")))?;
    obj.insert(leaf.to_string(), Value::Number(n));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_omega_named() {
        let e = parse(r#"{"scenario": "rabi", "field": {"g0M": 1}, "t_end": 1}"#).unwrap_err();
        assert_eq!(e.field, "field.omega");
    }

    #[test]
    fn invalid_value_named() {
        let e = parse(r#"{"scenario": "rabi", "field": {"omega": -1, "g0M": 1}, "t_end": 1}"#).unwrap_err();
        assert_eq!(e.field, "field.omega");
        let e = parse(r#"{"scenario": "rabi", "field": {"omega": 1, "g0M": 1}, "t_end": "x"}"#).unwrap_err();
        assert_eq!(e.field, "t_end");
        let e = parse(r#"{"scenario": "rabi", "field": {"omega": 1, "g0M": 1}, "tend": 1}"#).unwrap_err();
        assert_eq!(e.field, "tend");
        let e = parse(r#"{"scenario": "rabbi"}"#).unwrap_err();
        assert_eq!(e.field, "scenario");
    }

    #[test]
    fn lambda_validation_named() {
        let e = parse(
            r#"{"scenario": "lambda", "t_end": 1,
                "lambda": {"omega01": 10, "omega12": 9, "delta": 1, "g": 1, "extra": 0}}"#,
        )
        .unwrap_err();
        assert_eq!(e.field, "lambda.extra");
    }

    #[test]
    fn leaf_setting() {
        let mut v: Value = serde_json::from_str(r#"{"field": {"omega": 10, "name": "x"}, "t_end": 1}"#).unwrap();
        set_leaf(&mut v, "field.g_dc", 0.5).unwrap();
        set_leaf(&mut v, "t_end", 2.0).unwrap();
        assert_eq!(v["field"]["g_dc"], 0.5);
        assert_eq!(v["t_end"], 2.0);
        assert!(set_leaf(&mut v, "field.name", 1.0).is_err());
        assert!(set_leaf(&mut v, "field", 1.0).is_err());
        assert!(set_leaf(&mut v, "nope.x", 1.0).is_err());
    }
}
