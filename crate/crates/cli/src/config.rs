// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration files.
//!
//! A config names a built-in scenario or embeds one inline, picks a method and
//! optionally overrides a few knobs:
//!
//! ```json
//! { "scenario": "single-x", "method": "cocoa",
//!   "overrides": { "nc": 4, "learning_rate": 0.005, "max_iterations": 500,
//!                  "seed": 7, "bounds_mhz": [-25, 25] },
//!   "sweep_values": [1, 2, 3] }
//! ```
//!
//! Parsing reports every problem it finds, not just the first.

use std::path::Path;

use qoc_core::fourier::max_harmonics;
use qoc_core::optimize::Method;
use qoc_core::scenarios::{find_scenario, Scenario};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("{path} is not valid JSON: {message}")]
    Syntax { path: String, message: String },
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("field `{key}` should be {expected}")]
    TypeMismatch { key: String, expected: &'static str },
    #[error("field `{key}`: unknown scenario `{name}`")]
    UnknownScenario { key: String, name: String },
    #[error("field `{key}`: unknown method `{value}` (expected cocoa, grape or crab)")]
    UnknownMethod { key: String, value: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{key}`: {message}")]
    Invalid { key: String, message: String },
}

/// Knobs a config may change on its scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub nc: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub bounds_mhz: Option<(f64, f64)>,
}

impl Overrides {
    pub fn apply(&self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        if let Some(nc) = self.nc {
            s.nc = nc;
        }
        if let Some(lr) = self.learning_rate {
            s.optimizer.learning_rate = lr;
        }
        if let Some(r) = self.max_iterations {
            s.stop.max_iterations = r;
        }
        if let Some(seed) = self.seed {
            s = s.with_seed(seed);
        }
        if let Some((lo, hi)) = self.bounds_mhz {
            s.window.lower_mhz = lo;
            s.window.upper_mhz = hi;
        }
        s
    }
}

/// A validated configuration with overrides already applied.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub method: Method,
    pub overrides: Overrides,
    /// Explicit sweep values; otherwise the scenario's own or a default list.
    pub sweep_values: Option<Vec<f64>>,
}

fn as_usize(v: &Value) -> Option<usize> {
    v.as_u64().and_then(|n| usize::try_from(n).ok())
}

fn parse_overrides(map: &Map<String, Value>, errors: &mut Vec<ConfigError>) -> Overrides {
    let mut out = Overrides::default();
    for (key, value) in map {
        let full = format!("overrides.{key}");
        let mismatch = |expected| ConfigError::TypeMismatch {
            key: full.clone(),
            expected,
        };
        match key.as_str() {
            "nc" => match as_usize(value) {
                Some(n) => out.nc = Some(n),
                None => errors.push(mismatch("a non-negative integer")),
            },
            "learning_rate" => match value.as_f64() {
                Some(x) if x > 0.0 => out.learning_rate = Some(x),
                Some(_) => errors.push(ConfigError::Invalid {
                    key: full,
                    message: "learning rate must be positive".into(),
                }),
                None => errors.push(mismatch("a number")),
            },
            "max_iterations" => match as_usize(value) {
                Some(n) if n > 0 => out.max_iterations = Some(n),
                Some(_) => errors.push(ConfigError::Invalid {
                    key: full,
                    message: "at least one iteration is required".into(),
                }),
                None => errors.push(mismatch("a positive integer")),
            },
            "seed" => match value.as_u64() {
                Some(n) => out.seed = Some(n),
                None => errors.push(mismatch("a non-negative integer")),
            },
            "bounds_mhz" => match value
                .as_array()
                .map(|a| a.iter().map(Value::as_f64).collect::<Vec<_>>())
            {
                Some(v) if v.len() == 2 && v.iter().all(Option::is_some) => {
                    let (lo, hi) = (v[0].unwrap_or_default(), v[1].unwrap_or_default());
                    if lo < hi {
                        out.bounds_mhz = Some((lo, hi));
                    } else {
                        errors.push(ConfigError::Invalid {
                            key: full,
                            message: format!("lower bound {lo} must be below upper bound {hi}"),
                        });
                    }
                }
                _ => errors.push(mismatch("a pair of numbers [lower, upper]")),
            },
            _ => errors.push(ConfigError::UnknownField(full)),
        }
    }
    out
}

fn parse_scenario(value: &Value, errors: &mut Vec<ConfigError>) -> Option<Scenario> {
    match value {
        Value::String(name) => {
            let found = find_scenario(name);
            if found.is_none() {
                errors.push(ConfigError::UnknownScenario {
                    key: "scenario".into(),
                    name: name.clone(),
                });
            }
            found
        }
        Value::Object(_) => match serde_json::from_value::<Scenario>(value.clone()) {
            Ok(s) => Some(s),
            Err(e) => {
                errors.push(ConfigError::Invalid {
                    key: "scenario".into(),
                    message: e.to_string(),
                });
                None
            }
        },
        _ => {
            errors.push(ConfigError::TypeMismatch {
                key: "scenario".into(),
                expected: "a scenario name or an inline scenario object",
            });
            None
        }
    }
}

fn parse_method(value: &Value, errors: &mut Vec<ConfigError>) -> Option<Method> {
    match value.as_str() {
        Some("cocoa") => Some(Method::Cocoa),
        Some("grape") => Some(Method::Grape),
        Some("crab") => Some(Method::Crab),
        Some(other) => {
            errors.push(ConfigError::UnknownMethod {
                key: "method".into(),
                value: other.into(),
            });
            None
        }
        None => {
            errors.push(ConfigError::TypeMismatch {
                key: "method".into(),
                expected: "a string",
            });
            None
        }
    }
}

/// Validates a parsed JSON document.
pub fn parse_value(doc: &Value) -> Result<RunConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let Some(map) = doc.as_object() else {
        return Err(vec![ConfigError::TypeMismatch {
            key: "<root>".into(),
            expected: "an object",
        }]);
    };
    for key in map.keys() {
        if !matches!(
            key.as_str(),
            "scenario" | "method" | "overrides" | "sweep_values"
        ) {
            errors.push(ConfigError::UnknownField(key.clone()));
        }
    }
    let scenario = match map.get("scenario") {
        Some(v) => parse_scenario(v, &mut errors),
        None => {
            errors.push(ConfigError::MissingField("scenario".into()));
            None
        }
    };
    let method = match map.get("method") {
        Some(v) => parse_method(v, &mut errors),
        None => {
            errors.push(ConfigError::MissingField("method".into()));
            None
        }
    };
    let overrides = match map.get("overrides") {
        Some(Value::Object(o)) => parse_overrides(o, &mut errors),
        Some(_) => {
            errors.push(ConfigError::TypeMismatch {
                key: "overrides".into(),
                expected: "an object",
            });
            Overrides::default()
        }
        None => Overrides::default(),
    };
    let sweep_values = match map.get("sweep_values") {
        None => None,
        Some(v) => match v
            .as_array()
            .map(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
        {
            Some(Some(values)) if !values.is_empty() => Some(values),
            _ => {
                errors.push(ConfigError::TypeMismatch {
                    key: "sweep_values".into(),
                    expected: "a non-empty array of numbers",
                });
                None
            }
        },
    };

    let scenario = scenario.map(|s| overrides.apply(&s));
    if let (Some(s), Some(nc)) = (&scenario, overrides.nc) {
        let max = max_harmonics(s.slices);
        if nc > max {
            errors.push(ConfigError::Invalid {
                key: "overrides.nc".into(),
                message: format!("N_c = {nc} exceeds the maximum {max} for N = {}", s.slices),
            });
        }
    }
    if errors.is_empty() {
        if let Some(s) = &scenario {
            if let Err(e) = s.validate() {
                errors.push(ConfigError::Invalid {
                    key: "scenario".into(),
                    message: e.to_string(),
                });
            }
        }
    }
    match (scenario, method) {
        (Some(scenario), Some(method)) if errors.is_empty() => Ok(RunConfig {
            scenario,
            method,
            overrides,
            sweep_values,
        }),
        _ => Err(errors),
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![ConfigError::Unreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        }]
    })?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| {
        vec![ConfigError::Syntax {
            path: path.display().to_string(),
            message: e.to_string(),
        }]
    })?;
    parse_value(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_value(&json!({"scenario": "single-x", "method": "cocoa"})).unwrap();
        assert_eq!(cfg.method, Method::Cocoa);
        assert_eq!(cfg.scenario, find_scenario("single-x").unwrap());
        assert_eq!(cfg.overrides, Overrides::default());
    }

    #[test]
    fn misspelt_method_names_the_key() {
        let errs = parse_value(&json!({"scenario": "single-x", "method": "cocao"})).unwrap_err();
        assert_eq!(
            errs,
            vec![ConfigError::UnknownMethod {
                key: "method".into(),
                value: "cocao".into()
            }]
        );
        assert!(errs[0].to_string().contains("`method`"));
    }

    #[test]
    fn oversized_cutoff_reports_the_bound() {
        let errs = parse_value(
            &json!({"scenario": "single-x", "method": "cocoa", "overrides": {"nc": 80}}),
        )
        .unwrap_err();
        assert_eq!(errs.len(), 1);
        let msg = errs[0].to_string();
        assert!(msg.contains("overrides.nc") && msg.contains("73"), "{msg}");
    }

    #[test]
    fn all_errors_are_collected() {
        let errs = parse_value(&json!({
            "scenario": "nope",
            "overrides": {"learning_rate": "fast", "seed": -1, "colour": 1},
            "extra": true
        }))
        .unwrap_err();
        assert!(errs.contains(&ConfigError::MissingField("method".into())));
        assert!(errs.contains(&ConfigError::UnknownField("extra".into())));
        assert!(errs.contains(&ConfigError::UnknownField("overrides.colour".into())));
        assert!(errs.contains(&ConfigError::UnknownScenario {
            key: "scenario".into(),
            name: "nope".into()
        }));
        assert!(errs.iter().any(|e| matches!(e, ConfigError::TypeMismatch { key, .. } if key == "overrides.learning_rate")));
        assert!(errs.iter().any(
            |e| matches!(e, ConfigError::TypeMismatch { key, .. } if key == "overrides.seed")
        ));
        assert_eq!(errs.len(), 6);
    }

    #[test]
    fn overrides_are_applied() {
        let cfg = parse_value(&json!({
            "scenario": "single-x",
            "method": "grape",
            "overrides": {"nc": 3, "learning_rate": 0.02, "max_iterations": 10, "seed": 9, "bounds_mhz": [-20, 25]}
        }))
        .unwrap();
        let s = &cfg.scenario;
        assert_eq!((s.nc, s.stop.max_iterations, s.seed()), (3, 10, Some(9)));
        assert_eq!(s.optimizer.learning_rate, 0.02);
        assert_eq!((s.window.lower_mhz, s.window.upper_mhz), (-20.0, 25.0));
    }

    #[test]
    fn inline_scenario_is_accepted() {
        let mut s = serde_json::to_value(find_scenario("weak-coupling").unwrap()).unwrap();
        s["name"] = json!("custom");
        let cfg = parse_value(&json!({"scenario": s, "method": "crab"})).unwrap();
        assert_eq!(cfg.scenario.name, "custom");
    }
}
