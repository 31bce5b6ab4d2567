//! Scenario configuration documents.
//!
//! A document is either a single scenario or a sweep
//! `{"name": …, "sweep": [scenario, …]}`. Physical parameters have no
//! defaults; numerical knobs (band layout, tolerance fallbacks, model
//! cutoff) do.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("{0}")]
    Syntax(String),
}

impl ConfigError {
    pub fn at(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        ConfigError::Field { path: path.into(), message: message.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub process: ProcessConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterConfig>,
    pub window: WindowConfig,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    pub sweep: Vec<ScenarioConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Document {
    Single(ScenarioConfig),
    Sweep(SweepConfig),
}

impl Document {
    pub fn name(&self) -> &str {
        match self {
            Document::Single(s) => &s.name,
            Document::Sweep(s) => &s.name,
        }
    }

    pub fn scenarios(&self) -> Vec<&ScenarioConfig> {
        match self {
            Document::Single(s) => vec![s],
            Document::Sweep(s) => s.sweep.iter().collect(),
        }
    }
}

/// Parses a document, reporting the JSON path of the first offending field.
pub fn parse_document(text: &str) -> Result<Document, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let sweep = value.get("sweep").is_some();
    let path_err = |e: serde_path_to_error::Error<serde_json::Error>| {
        let path = e.path().to_string();
        ConfigError::Field { path, message: e.into_inner().to_string() }
    };
    if sweep {
        let s: SweepConfig = serde_path_to_error::deserialize(value).map_err(path_err)?;
        Ok(Document::Sweep(s))
    } else {
        let s: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(path_err)?;
        Ok(Document::Single(s))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    Poisson { rho: f64, dim: usize },
    Lattice { spacing: f64, dim: usize },
    Matern { rho: f64, radius: f64, dim: usize },
    FibonacciGas { center: f64, half_width: f64, profile: ProfileConfig },
    Renewal { law: LawConfig },
    Branching { rho: f64, rate: f64, dim: usize, horizon: f64, box_halfwidth: f64, inner_halfwidth: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Tent,
    Constant { q: f64 },
}

/// A real number given as a JSON number or as an exact `"n/d"` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Ratio(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Exponential,
    Gamma { alpha: f64 },
    TwoAtom { a: Number, b: Number, p: Number },
    FiniteAtoms { atoms: Vec<AtomConfig> },
    Deterministic { a: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub a: Number,
    pub p: f64,
}

/// A complex number as `x` or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterPoint {
    pub x: Vec<f64>,
    pub w: WeightValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightOutcome {
    pub w: WeightValue,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisplacementConfig {
    Gaussian { sigma: f64 },
    Uniform { a: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClusterConfig {
    Deterministic { points: Vec<ClusterPoint> },
    Bernoulli { p: f64 },
    RandomWeight { outcomes: Vec<WeightOutcome> },
    Displacement { law: DisplacementConfig },
    NeymanScott { k_table: Vec<f64>, displacement: DisplacementConfig },
    SignedBernoulli { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowConfig {
    /// `(0, length)` on the line.
    Interval { length: f64 },
    Cube {
        half_width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    Line { start: f64, stop: f64, step: f64 },
    Points { points: Vec<Vec<f64>> },
    Axes { axes: Vec<Vec<f64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSettings {
    pub guard: usize,
    pub band: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrSettings {
    pub bin_width: f64,
    pub max_lag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSettings {
    pub edges: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub k_grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub autocorr: Option<AutocorrSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairSettings>,
    /// Atoms of enumerated models are generated up to this `|k|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_cutoff: Option<f64>,
}

/// Requires the density estimate at `k` to lie in `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeCheck {
    pub k: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_mean_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_max_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_l1_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_atom_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_unexplained: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_z: Option<f64>,
    /// Relative error of the empirical intensity against the process
    /// intensity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_rel: Option<f64>,
    /// Largest `|z|` of the mean particle count against its expectation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_z: Option<f64>,
    /// Mean relative error of the pair statistic over its shells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_mean_rel: Option<f64>,
    /// Largest relative error of the pair statistic over its shells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_max_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shape: Vec<ShapeCheck>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const POISSON: &str = r#"{
        "name": "p",
        "process": {"type": "poisson", "rho": 1.0, "dim": 1},
        "window": {"kind": "interval", "length": 100.0},
        "estimator": {"k_grid": {"type": "line", "start": 0.0, "stop": 1.0, "step": 0.5}},
        "tolerances": {"density_mean_rel": 0.05}
    }"#;

    #[test]
    fn parses_single_and_round_trips() {
        let doc = parse_document(POISSON).unwrap();
        let Document::Single(s) = &doc else { panic!("expected a single scenario") };
        assert_eq!(s.process, ProcessConfig::Poisson { rho: 1.0, dim: 1 });
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(parse_document(&text).unwrap(), doc);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = POISSON.replace("\"rho\": 1.0", "\"rho\": \"x\"");
        let msg = parse_document(&bad).unwrap_err().to_string();
        assert!(msg.starts_with("process"), "{msg}");
        let bad = POISSON.replace("\"poisson\"", "\"poison\"");
        let msg = parse_document(&bad).unwrap_err().to_string();
        assert!(msg.contains("poison"), "{msg}");
        let bad = POISSON.replace("\"step\": 0.5", "\"step\": 0.5, \"extra\": 1");
        let msg = parse_document(&bad).unwrap_err().to_string();
        assert!(msg.starts_with("estimator.k_grid"), "{msg}");
        let missing = POISSON.replace("\"rho\": 1.0, ", "");
        assert!(parse_document(&missing).unwrap_err().to_string().contains("rho"));
    }

    #[test]
    fn parses_laws_and_clusters() {
        let law: LawConfig = serde_json::from_str(r#"{"type": "two_atom", "a": "2/3", "b": "4/3", "p": "1/2"}"#).unwrap();
        assert_eq!(law, LawConfig::TwoAtom { a: Number::Ratio("2/3".into()), b: Number::Ratio("4/3".into()), p: Number::Ratio("1/2".into()) });
        let c: ClusterConfig = serde_json::from_str(r#"{"type": "deterministic", "points": [{"x": [0.5], "w": [1.0, -1.0]}]}"#).unwrap();
        assert_eq!(c, ClusterConfig::Deterministic { points: vec![ClusterPoint { x: vec![0.5], w: WeightValue::Complex([1.0, -1.0]) }] });
    }
}
