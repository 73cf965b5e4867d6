//! JSON run configuration and its schema.

use std::f64::consts::PI;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classical::{LapseProfile, Scheme};
use crate::ensembles::{log_spaced, ClockSetting, EnergyGridSetting, RegularizationSetting};
use crate::error::Result;
use crate::models::{ClassicalModelSpec, QuantumModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Z(beta) by both routes.
    Canonical,
    /// Omega(E) by both routes.
    Microcanonical,
    /// Both tables side by side.
    Compare,
    /// Fixed-time gauge against direct Hamilton integration.
    ClassicalHamilton,
    /// Fixed-energy shooting between two points.
    ClassicalMaupertuis,
    /// Equal-integral lapse pair with step halving.
    ReparCheck,
    /// Spectral broadening against alpha quadrature for the projector.
    ProjectorXcheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Canonical,
        Experiment::Microcanonical,
        Experiment::Compare,
        Experiment::ClassicalHamilton,
        Experiment::ClassicalMaupertuis,
        Experiment::ReparCheck,
        Experiment::ProjectorXcheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Canonical => "canonical",
            Experiment::Microcanonical => "microcanonical",
            Experiment::Compare => "compare",
            Experiment::ClassicalHamilton => "classical-hamilton",
            Experiment::ClassicalMaupertuis => "classical-maupertuis",
            Experiment::ReparCheck => "repar-check",
            Experiment::ProjectorXcheck => "projector-xcheck",
        }
    }

    pub fn is_classical(self) -> bool {
        matches!(
            self,
            Experiment::ClassicalHamilton | Experiment::ClassicalMaupertuis | Experiment::ReparCheck
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// CSV tables plus a JSON sidecar.
    #[default]
    Csv,
    /// A single JSON document.
    Json,
}

/// Schema-only view of the `model` field.
#[allow(dead_code)]
#[derive(JsonSchema)]
#[serde(untagged)]
enum ModelSchema {
    Quantum(QuantumModelSpec),
    Classical(ClassicalModelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum BetaGridSetting {
    /// Explicit inverse temperatures (1 / energy units).
    List(Vec<f64>),
    /// `count` log-spaced points in `[min, max]`.
    LogSpaced { min: f64, max: f64, count: usize },
}

impl Default for BetaGridSetting {
    fn default() -> Self {
        BetaGridSetting::LogSpaced {
            min: 0.1,
            max: 10.0,
            count: 16,
        }
    }
}

impl BetaGridSetting {
    pub fn values(&self) -> Vec<f64> {
        match self {
            BetaGridSetting::List(v) => v.clone(),
            BetaGridSetting::LogSpaced { min, max, count } => {
                if *count == 0 {
                    Vec::new()
                } else {
                    log_spaced(*min, *max, *count)
                }
            }
        }
    }
}

fn default_sigma_span() -> [f64; 2] {
    [0.0, 2.0 * PI]
}

fn default_steps() -> usize {
    crate::classical::DEFAULT_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Inverse temperatures for Z(beta).
    #[serde(default)]
    pub beta: BetaGridSetting,
    /// Energies for Omega(E); `"auto"` uses the clock-energy lattice within 6 sigma of the spectrum.
    #[serde(default)]
    pub energy: EnergyGridSetting,
    /// Evolution-parameter interval [sigma_a, sigma_b]; equals the time span in the N = 1 gauge.
    #[serde(default = "default_sigma_span")]
    pub sigma_span: [f64; 2],
    /// Fixed integration steps over `sigma_span` (and for each shooting trial).
    #[serde(default = "default_steps")]
    pub n_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            beta: BetaGridSetting::default(),
            energy: EnergyGridSetting::default(),
            sigma_span: default_sigma_span(),
            n_steps: default_steps(),
        }
    }
}

/// Lapse N(sigma) = dt / d(sigma).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LapseSpec {
    Constant {
        value: f64,
    },
    /// scale (1 + amplitude sin(frequency sigma + phase)).
    Sinusoidal {
        scale: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Sinusoidal with `scale` chosen so the integral over `sigma_span` equals its length.
    NormalizedSinusoidal {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl LapseSpec {
    pub fn build(&self, span: (f64, f64)) -> Result<LapseProfile> {
        match *self {
            LapseSpec::Constant { value } => LapseProfile::constant(value),
            LapseSpec::Sinusoidal {
                scale,
                amplitude,
                frequency,
                phase,
            } => LapseProfile::sinusoidal(scale, amplitude, frequency, phase),
            LapseSpec::NormalizedSinusoidal {
                amplitude,
                frequency,
                phase,
            } => LapseProfile::normalized_sinusoidal(amplitude, frequency, phase, span),
        }
    }
}

fn default_lapse() -> LapseSpec {
    LapseSpec::Constant { value: 1.0 }
}

fn default_lapse_alt() -> LapseSpec {
    LapseSpec::NormalizedSinusoidal {
        amplitude: 0.5,
        frequency: 1.0,
        phase: 0.0,
    }
}

fn default_q0() -> Vec<f64> {
    vec![1.0]
}

fn default_p0() -> Vec<f64> {
    vec![0.0]
}

fn default_q_a() -> Vec<f64> {
    vec![0.0]
}

fn default_q_b() -> Vec<f64> {
    vec![1.0]
}

fn default_energy() -> f64 {
    1.0
}

fn default_refinements() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Initial positions (length D).
    #[serde(default = "default_q0")]
    pub q0: Vec<f64>,
    /// Initial momenta (length D).
    #[serde(default = "default_p0")]
    pub p0: Vec<f64>,
    /// Initial physical time.
    #[serde(default)]
    pub t0: f64,
    /// Lapse of the first repar-check run; classical-hamilton always uses N = 1.
    #[serde(default = "default_lapse")]
    pub lapse: LapseSpec,
    /// Second lapse for repar-check; must have the same integral over `sigma_span`.
    #[serde(default = "default_lapse_alt")]
    pub lapse_alt: LapseSpec,
    #[serde(default)]
    pub scheme: Scheme,
    /// Shooting start point.
    #[serde(default = "default_q_a")]
    pub q_a: Vec<f64>,
    /// Shooting target point.
    #[serde(default = "default_q_b")]
    pub q_b: Vec<f64>,
    /// Shell energy for shooting.
    #[serde(default = "default_energy")]
    pub energy: f64,
    /// Initial momentum direction for shooting; defaults to q_b - q_a.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_guess: Option<Vec<f64>>,
    /// Step halvings reported by repar-check below `n_steps`.
    #[serde(default = "default_refinements")]
    pub refinements: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            q0: default_q0(),
            p0: default_p0(),
            t0: 0.0,
            lapse: default_lapse(),
            lapse_alt: default_lapse_alt(),
            scheme: Scheme::default(),
            q_a: default_q_a(),
            q_b: default_q_b(),
            energy: default_energy(),
            init_guess: None,
            refinements: default_refinements(),
        }
    }
}

fn default_xcheck_sites() -> usize {
    32
}

fn default_xcheck_period() -> f64 {
    40.0 * PI
}

fn default_xcheck_width() -> f64 {
    0.2
}

fn default_xcheck_nodes() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct XcheckConfig {
    /// Clock sites N_T.
    #[serde(default = "default_xcheck_sites")]
    pub n_sites: usize,
    /// Clock period Theta (time units).
    #[serde(default = "default_xcheck_period")]
    pub period: f64,
    /// Gaussian width sigma_E (energy units).
    #[serde(default = "default_xcheck_width")]
    pub width: f64,
    /// Trapezoid nodes M.
    #[serde(default = "default_xcheck_nodes")]
    pub n_nodes: usize,
    /// Half-range of the alpha integral; default half the period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
}

impl Default for XcheckConfig {
    fn default() -> Self {
        Self {
            n_sites: default_xcheck_sites(),
            period: default_xcheck_period(),
            width: default_xcheck_width(),
            n_nodes: default_xcheck_nodes(),
            alpha_max: None,
        }
    }
}

/// Configuration for one `cens` run. Units: hbar = k_B = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
#[schemars(title = "RunConfig")]
pub struct RunConfig {
    /// Experiment; optional here because the subcommand names it, but must agree when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    /// Quantum model for canonical/microcanonical/compare/projector-xcheck, classical
    /// system for classical-*/repar-check; selected by `kind`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    #[schemars(with = "Option<ModelSchema>")]
    pub model: Option<Value>,
    /// `"auto"` or {n_sites, period}.
    #[serde(default)]
    pub clock: ClockSetting,
    #[serde(default)]
    pub regularization: RegularizationSetting,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub xcheck: XcheckConfig,
    /// Output path prefix; default `cens_<experiment>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Seed for randomized models without their own seed.
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Some(Experiment::Compare),
            model: Some(
                serde_json::to_value(QuantumModelSpec::TwoLevel { e0: 0.0, e1: 1.0 })
                    .expect("serializable"),
            ),
            clock: ClockSetting::default(),
            regularization: RegularizationSetting::default(),
            grids: GridConfig::default(),
            dynamics: DynamicsConfig::default(),
            xcheck: XcheckConfig::default(),
            output: None,
            format: OutputFormat::default(),
            seed: 0,
        }
    }
}

/// Pretty-printed JSON schema of [`RunConfig`].
pub fn print_schema() -> String {
    let schema = schemars::schema_for!(RunConfig);
    serde_json::to_string_pretty(&schema).expect("schema serializes")
}

/// Configuration problem located by a JSON pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

/// Parses a config document, reporting the failing location as a JSON pointer.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
        pointer: pointer_from_path(e.path()),
        message: e.inner().to_string(),
    })
}

/// Typed model chosen by the experiment family.
///
/// Tagged enums are buffered by serde, which hides the failing field from the
/// path tracker; it is recovered by dropping one key at a time and keeping
/// the key whose absence changes the error.
pub fn parse_model<T: serde::de::DeserializeOwned>(value: &Value) -> std::result::Result<T, ConfigError> {
    let err = match serde_path_to_error::deserialize::<_, T>(value) {
        Ok(v) => return Ok(v),
        Err(e) => e,
    };
    let message = err.inner().to_string();
    let mut pointer = format!("/model{}", pointer_from_path(err.path()));
    if pointer == "/model" {
        if let Some(obj) = value.as_object() {
            if !obj.contains_key("kind") || message.starts_with("unknown variant") {
                pointer.push_str("/kind");
            } else if let Some(field) = ["unknown field `", "missing field `"]
                .iter()
                .find_map(|p| message.strip_prefix(p))
                .and_then(|rest| rest.split('`').next())
            {
                pointer = format!("/model/{field}");
            } else {
                for key in obj.keys().filter(|k| *k != "kind") {
                    let mut probe = obj.clone();
                    probe.remove(key);
                    let changed = match serde_json::from_value::<T>(Value::Object(probe)) {
                        Ok(_) => true,
                        Err(e) => e.to_string() != message,
                    };
                    if changed {
                        pointer = format!("/model/{key}");
                        break;
                    }
                }
            }
        }
    }
    Err(ConfigError { pointer, message })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_an_empty_document() {
        let c = parse_config("{}").unwrap();
        assert_eq!(c.grids.n_steps, 2048);
        assert_eq!(c.clock, ClockSetting::default());
        assert_eq!(c.grids.beta.values().len(), 16);
        assert_eq!(c.format, OutputFormat::Csv);
    }

    #[test]
    fn bad_enum_reports_pointer() {
        let e = parse_config(r#"{"experiment": "grand-canonical"}"#).unwrap_err();
        assert_eq!(e.pointer, "/experiment");
        let e = parse_config(r#"{"dynamics": {"scheme": "rk4"}}"#).unwrap_err();
        assert_eq!(e.pointer, "/dynamics/scheme");
        let e = parse_config(r#"{"grids": {"n_steps": -3}}"#).unwrap_err();
        assert_eq!(e.pointer, "/grids/n_steps");
        let e = parse_config(r#"{"colour": 1}"#).unwrap_err();
        assert!(e.message.contains("colour"));
    }

    #[test]
    fn model_pointer_is_prefixed() {
        let c = parse_config(r#"{"model": {"kind": "two_level", "e0": "x", "e1": 1}}"#).unwrap();
        let e = parse_model::<QuantumModelSpec>(c.model.as_ref().unwrap()).unwrap_err();
        assert_eq!(e.pointer, "/model/e0");
        let v = serde_json::json!({"kind": "harmonic_oscilator", "omega": 1.0});
        assert_eq!(parse_model::<ClassicalModelSpec>(&v).unwrap_err().pointer, "/model/kind");
        let v = serde_json::json!({"kind": "harmonic", "omega": 1.0, "spin": 2});
        assert_eq!(parse_model::<ClassicalModelSpec>(&v).unwrap_err().pointer, "/model/spin");
        let v = serde_json::json!({"kind": "harmonic", "dof": 1, "mass": [1], "omega": 1.0});
        assert_eq!(parse_model::<ClassicalModelSpec>(&v).unwrap_err().pointer, "/model/mass");
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            let s = serde_json::to_string(&e).unwrap();
            assert_eq!(s, format!("\"{}\"", e.name()));
        }
    }
}
