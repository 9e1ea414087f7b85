//! JSON problem files.
//!
//! A file names either a built-in model (`"model": "sp1"`) or carries an
//! expression-tree model (`"expressions": {...}`). For built-ins the
//! variable, parameter and geometry sections are optional overrides.
//!
//! ```json
//! {
//!   "model": "sp1",
//!   "uncertain_params": [{"name": "u", "lower": -0.5, "upper": 0.5, "nominal": 0.0}]
//! }
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::case_study;
use crate::discretization::{BoxLevels, DEFAULT_SCENARIO_CAP};
use crate::error::{MaroError, Result};
use crate::expr::{ExpressionModel, ExpressionModelDef};
use crate::problem::{Geometry, ModelSource, ProblemSpec, UncertainParamSpec, UncertaintySet, VariableSpec};

fn default_cap() -> usize {
    DEFAULT_SCENARIO_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSettings {
    pub levels: BoxLevels,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Built-in model name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expressions: Option<ExpressionModelDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variables: Vec<VariableSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub uncertain_params: Vec<UncertainParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objectives: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization: Option<DiscretizationSettings>,
}

/// A parsed file together with the problem it defines.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub spec: ProblemSpec,
    pub levels: BoxLevels,
    pub cap: usize,
}

/// Deserializes `text` into `T`, reporting the JSON path and position of the
/// first error.
pub fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        MaroError::Schema {
            path,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Line and column of the first `"key"` in `text`, or (0, 0).
fn locate(text: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    // missing keys are reported at the end, as serde does
    let offset = text
        .find(&needle)
        .unwrap_or_else(|| text.trim_end().char_indices().last().map_or(0, |(i, _)| i));
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Schema error for a value that parsed but is not acceptable, positioned at
/// the first occurrence of the path's last key.
pub fn semantic(text: &str, path: &str, message: impl Into<String>) -> MaroError {
    let key = path.rsplit('.').next().unwrap_or(path);
    let key = key.split('[').next().unwrap_or(key);
    let (line, column) = locate(text, key);
    MaroError::Schema {
        path: path.to_string(),
        line,
        column,
        message: message.into(),
    }
}

impl ProblemFile {
    pub fn builtin(name: &str) -> Self {
        Self {
            model: Some(name.to_string()),
            ..Self::default()
        }
    }

    /// Compact serialization used for hashing and embedding.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("problem files serialize")
    }

    /// Builds the problem; `text` only serves to attach line numbers to
    /// semantic errors.
    pub fn build(&self, text: &str) -> Result<LoadedProblem> {
        let spec = match (&self.model, &self.expressions) {
            (Some(_), Some(_)) => {
                return Err(semantic(text, "model", "give either `model` or `expressions`, not both"))
            }
            (None, None) => {
                return Err(semantic(text, "model", "a built-in `model` or an `expressions` model is required"))
            }
            (Some(name), None) => self.build_builtin(name, text)?,
            (None, Some(def)) => self.build_expressions(def, text)?,
        };
        let levels = match &self.discretization {
            Some(d) => d.levels,
            None => match &self.model {
                Some(name) => case_study::default_levels(name),
                None => BoxLevels::VerticesAndMids,
            },
        };
        if let BoxLevels::Uniform(n) = levels {
            if n < 2 {
                return Err(semantic(text, "discretization.levels", "uniform levels need at least 2 points"));
            }
        }
        let cap = self.discretization.as_ref().map_or(DEFAULT_SCENARIO_CAP, |d| d.cap);
        Ok(LoadedProblem {
            file: self.clone(),
            spec,
            levels,
            cap,
        })
    }

    fn uncertainty(&self, params: Vec<UncertainParamSpec>, text: &str) -> Result<UncertaintySet> {
        let geometry = self.geometry.clone().unwrap_or(Geometry::Box);
        let set = UncertaintySet { params, geometry };
        set.validate()
            .map_err(|e| semantic(text, "uncertain_params", e.to_string()))?;
        Ok(set)
    }

    fn build_builtin(&self, name: &str, text: &str) -> Result<ProblemSpec> {
        let base = case_study::builtin(name).map_err(|_| {
            semantic(
                text,
                "model",
                format!("unknown built-in model {name:?}; expected one of {:?}", case_study::BUILTIN_NAMES),
            )
        })?;
        let mut variables = base.variables.clone();
        if !self.variables.is_empty() {
            if self.variables.len() != variables.len() {
                return Err(semantic(
                    text,
                    "variables",
                    format!("built-in {name} has {} variables, got {}", variables.len(), self.variables.len()),
                ));
            }
            for (i, (given, known)) in self.variables.iter().zip(&variables).enumerate() {
                if given.name != known.name || given.role != known.role {
                    return Err(semantic(
                        text,
                        &format!("variables[{i}]"),
                        format!("expected {} ({:?})", known.name, known.role),
                    ));
                }
            }
            variables = self.variables.clone();
        }
        let params = if self.uncertain_params.is_empty() {
            base.uncertainty.params.clone()
        } else {
            if self.uncertain_params.len() != base.uncertainty.dim() {
                return Err(semantic(
                    text,
                    "uncertain_params",
                    format!(
                        "built-in {name} has {} uncertain parameters, got {}",
                        base.uncertainty.dim(),
                        self.uncertain_params.len()
                    ),
                ));
            }
            self.uncertain_params.clone()
        };
        let uncertainty = if self.uncertain_params.is_empty() && self.geometry.is_none() {
            base.uncertainty.clone()
        } else {
            self.uncertainty(params, text)?
        };
        let rename = |given: &[String], known: &[String], what: &str| -> Result<Vec<String>> {
            if given.is_empty() {
                return Ok(known.to_vec());
            }
            if given.len() != known.len() {
                return Err(semantic(
                    text,
                    what,
                    format!("built-in {name} has {} {what}, got {}", known.len(), given.len()),
                ));
            }
            Ok(given.to_vec())
        };
        let objectives = rename(&self.objectives, &base.objective_names, "objectives")?;
        let constraints = rename(&self.constraints, &base.constraint_names, "constraints")?;
        ProblemSpec::new(
            variables,
            uncertainty,
            objectives,
            constraints,
            base.model.clone(),
            ModelSource::Builtin(name.to_string()),
        )
        .map_err(|e| semantic(text, "variables", e.to_string()))
    }

    fn build_expressions(&self, def: &ExpressionModelDef, text: &str) -> Result<ProblemSpec> {
        if self.variables.is_empty() {
            return Err(semantic(text, "variables", "expression models need `variables`"));
        }
        let uncertainty = self.uncertainty(self.uncertain_params.clone(), text)?;
        let objectives = if self.objectives.is_empty() {
            (1..=def.objectives.len()).map(|i| format!("f{i}")).collect()
        } else {
            self.objectives.clone()
        };
        if objectives.len() != def.objectives.len() {
            return Err(semantic(
                text,
                "objectives",
                format!("{} names for {} objective expressions", objectives.len(), def.objectives.len()),
            ));
        }
        let constraints = if self.constraints.is_empty() {
            (1..=def.constraints.len()).map(|i| format!("g{i}")).collect()
        } else {
            self.constraints.clone()
        };
        if constraints.len() != def.constraints.len() {
            return Err(semantic(
                text,
                "constraints",
                format!("{} names for {} constraint expressions", constraints.len(), def.constraints.len()),
            ));
        }
        let model = ExpressionModel::compile(def, &self.variables, &uncertainty)
            .map_err(|e| semantic(text, "expressions", e.to_string()))?;
        ProblemSpec::new(
            self.variables.clone(),
            uncertainty,
            objectives,
            constraints,
            Arc::new(model),
            ModelSource::Expressions(def.clone()),
        )
        .map_err(|e| semantic(text, "variables", e.to_string()))
    }
}

/// Parses and builds a problem file.
pub fn load_problem(text: &str) -> Result<LoadedProblem> {
    let file: ProblemFile = from_json_str(text)?;
    file.build(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_by_name() {
        let p = load_problem(r#"{"model": "sp1"}"#).unwrap();
        assert_eq!(p.spec.objective_names, vec!["f1", "f2"]);
        assert_eq!(p.levels, BoxLevels::Uniform(21));
        let p = load_problem(r#"{"model": "column_surrogate"}"#).unwrap();
        assert_eq!(p.levels, BoxLevels::VerticesAndMids);
        assert_eq!(p.spec.nx(), 5);
    }

    #[test]
    fn builtin_uncertainty_override() {
        let text = r#"{
  "model": "sp1",
  "uncertain_params": [{"name": "u", "lower": -0.5, "upper": 0.5, "nominal": 0.0}]
}"#;
        let p = load_problem(text).unwrap();
        assert_eq!(p.spec.uncertainty.params[0].upper, 0.5);
    }

    #[test]
    fn expression_model_matches_builtin() {
        let text = r#"{
  "variables": [
    {"name": "x", "lower": 0, "upper": 1, "role": "here-and-now", "initial": 0.5},
    {"name": "y", "lower": 0, "upper": 1, "role": "wait-and-see", "initial": 0.5}
  ],
  "uncertain_params": [{"name": "u", "lower": -1, "upper": 1, "nominal": 0}],
  "objectives": ["f1", "f2"],
  "constraints": ["g"],
  "expressions": {
    "objectives": [
      {"op": "add", "args": [{"op": "mul", "args": [{"var": "x"}, {"var": "x"}]}, {"var": "y"},
        {"op": "mul", "args": [0.2, {"var": "u"}, {"op": "sub", "args": [1, {"var": "y"}]}]}]},
      {"op": "add", "args": [{"op": "pow", "args": [{"op": "sub", "args": [1, {"var": "x"}]}, 2]},
        {"op": "mul", "args": [0.5, {"op": "sub", "args": [1, {"var": "y"}]}]},
        {"op": "mul", "args": [0.2, {"var": "u"}, {"var": "y"}]}]}
    ],
    "constraints": [
      {"op": "sub", "args": [{"op": "mul", "args": [{"var": "u"}, {"op": "sub", "args": [0.5, {"var": "y"}]}]}, 0.3]}
    ]
  }
}"#;
        let p = load_problem(text).unwrap();
        let sp1 = case_study::build_sp1();
        for (x, y, u) in [(0.5, 0.5, 0.0), (0.2, 0.9, -0.7), (1.0, 0.0, 1.0)] {
            let a = p.spec.evaluate(&[x], &[y], &[u]).unwrap();
            let b = sp1.evaluate(&[x], &[y], &[u]).unwrap();
            for (l, r) in a.objectives.iter().chain(&a.constraints).zip(b.objectives.iter().chain(&b.constraints)) {
                assert!((l - r).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn type_errors_carry_path_and_line() {
        let text = "{\n  \"model\": \"sp1\",\n  \"uncertain_params\": [\n    {\"name\": \"u\", \"lower\": \"low\", \"upper\": 1, \"nominal\": 0}\n  ]\n}";
        match load_problem(text).unwrap_err() {
            MaroError::Schema { path, line, .. } => {
                assert_eq!(path, "uncertain_params[0].lower");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = load_problem("{\"model\": \"sp1\", \"modle\": 1}").unwrap_err();
        assert!(matches!(err, MaroError::Schema { .. }), "{err}");
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let text = "{\n  \"model\": \"sp9\"\n}";
        match load_problem(text).unwrap_err() {
            MaroError::Schema { path, line, message, .. } => {
                assert_eq!(path, "model");
                assert_eq!(line, 2);
                assert!(message.contains("sp9"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_problem("{}").is_err());
        let bad = r#"{"model": "sp1", "uncertain_params": [{"name": "u", "lower": 1, "upper": -1, "nominal": 0}]}"#;
        assert!(matches!(load_problem(bad).unwrap_err(), MaroError::Schema { .. }));
    }

    #[test]
    fn unknown_symbol_in_expression() {
        let text = r#"{
  "variables": [{"name": "x", "lower": 0, "upper": 1, "role": "here-and-now", "initial": 0.5}],
  "expressions": {"objectives": [{"var": "x"}, {"var": "z"}]}
}"#;
        let err = load_problem(text).unwrap_err();
        assert!(err.to_string().contains("\"z\""), "{err}");
    }

    #[test]
    fn canonical_json_round_trips() {
        let f = ProblemFile::builtin("sp2");
        let json = f.to_canonical_json();
        assert_eq!(json, r#"{"model":"sp2"}"#);
        let back: ProblemFile = from_json_str(&json).unwrap();
        assert_eq!(back, f);
    }
}
