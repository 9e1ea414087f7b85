//! Two-stage uncertain multi-objective problem definition and the evaluation
//! contract shared by every solver in the crate.
//!
//! Variables are split into here-and-now variables (HNV, `x`), fixed before
//! the uncertainty realizes, and wait-and-see variables (WSV, `y`), which may
//! adapt to the realized scenario `u`. Constraints follow the convention
//! `g(x, y, u) <= 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MaroError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariableRole {
    HereAndNow,
    WaitAndSee,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub role: VariableRole,
    pub initial: f64,
}

impl VariableSpec {
    pub fn new(name: &str, lower: f64, upper: f64, role: VariableRole, initial: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            role,
            initial,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(MaroError::InvalidSpec(format!(
                "variable {}: need finite lower < upper, got [{}, {}]",
                self.name, self.lower, self.upper
            )));
        }
        if !(self.lower..=self.upper).contains(&self.initial) {
            return Err(MaroError::InvalidSpec(format!(
                "variable {}: initial {} outside [{}, {}]",
                self.name, self.initial, self.lower, self.upper
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub nominal: f64,
}

impl UncertainParamSpec {
    pub fn new(name: &str, lower: f64, upper: f64, nominal: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            nominal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Box,
    Ellipsoid { center: Vec<f64>, radii: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySet {
    pub params: Vec<UncertainParamSpec>,
    pub geometry: Geometry,
}

impl UncertaintySet {
    pub fn new_box(params: Vec<UncertainParamSpec>) -> Result<Self> {
        let set = Self {
            params,
            geometry: Geometry::Box,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn new_ellipsoid(
        params: Vec<UncertainParamSpec>,
        center: Vec<f64>,
        radii: Vec<f64>,
    ) -> Result<Self> {
        let set = Self {
            params,
            geometry: Geometry::Ellipsoid { center, radii },
        };
        set.validate()?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn nominal(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.nominal).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.params {
            let ok = p.lower.is_finite()
                && p.upper.is_finite()
                && p.lower <= p.nominal
                && p.nominal <= p.upper;
            if !ok {
                return Err(MaroError::InvalidSpec(format!(
                    "uncertain parameter {}: need lower <= nominal <= upper, got {} / {} / {}",
                    p.name, p.lower, p.nominal, p.upper
                )));
            }
        }
        if let Geometry::Ellipsoid { center, radii } = &self.geometry {
            let d = self.params.len();
            if center.len() != d || radii.len() != d {
                return Err(MaroError::InvalidSpec(format!(
                    "ellipsoid center/radii must have {d} entries"
                )));
            }
            for (i, p) in self.params.iter().enumerate() {
                if !(radii[i] > 0.0 && radii[i].is_finite()) {
                    return Err(MaroError::InvalidSpec(format!(
                        "ellipsoid radius for {} must be positive",
                        p.name
                    )));
                }
                if !(p.lower..=p.upper).contains(&center[i]) {
                    return Err(MaroError::InvalidSpec(format!(
                        "ellipsoid center for {} outside parameter bounds",
                        p.name
                    )));
                }
            }
            let nominal = self.nominal();
            if ellipsoid_level(&nominal, center, radii) > 1.0 + 1e-12 {
                return Err(MaroError::InvalidSpec(
                    "nominal scenario lies outside the ellipsoid".into(),
                ));
            }
        }
        Ok(())
    }

    /// Membership test with a small relative slack for boundary points.
    pub fn contains(&self, u: &[f64]) -> bool {
        if u.len() != self.params.len() {
            return false;
        }
        let in_box = self
            .params
            .iter()
            .zip(u)
            .all(|(p, &v)| v >= p.lower - 1e-12 && v <= p.upper + 1e-12);
        match &self.geometry {
            Geometry::Box => in_box,
            Geometry::Ellipsoid { center, radii } => {
                in_box && ellipsoid_level(u, center, radii) <= 1.0 + 1e-10
            }
        }
    }
}

/// `sum(((u_i - c_i) / r_i)^2)`; equals one on the ellipsoid boundary.
pub fn ellipsoid_level(u: &[f64], center: &[f64], radii: &[f64]) -> f64 {
    u.iter()
        .zip(center)
        .zip(radii)
        .map(|((v, c), r)| ((v - c) / r).powi(2))
        .sum()
}

/// Dimensions a model maps between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub here_and_now: usize,
    pub wait_and_see: usize,
    pub uncertain: usize,
    pub objectives: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
}

/// Derivatives of all objectives and constraints with respect to the
/// stacked decision vector `[x; y]`. Row-major, one row per function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Jacobian {
    pub objectives: Vec<Vec<f64>>,
    pub constraints: Vec<Vec<f64>>,
}

impl Jacobian {
    pub fn zeros(sig: Signature) -> Self {
        let n = sig.here_and_now + sig.wait_and_see;
        Self {
            objectives: vec![vec![0.0; n]; sig.objectives],
            constraints: vec![vec![0.0; n]; sig.constraints],
        }
    }

    pub fn row(&self, target: Target) -> &[f64] {
        match target {
            Target::Objective(j) => &self.objectives[j],
            Target::Constraint(c) => &self.constraints[c],
        }
    }
}

/// A deterministic, thread-safe model of objectives and constraints.
///
/// Implementations must be pure: identical inputs give bit-identical output.
/// Equality constraints are expected to be eliminated inside the model.
pub trait Model: Send + Sync + fmt::Debug {
    fn signature(&self) -> Signature;

    fn evaluate(&self, x: &[f64], y: &[f64], u: &[f64]) -> Evaluation;

    /// Analytic derivatives, if the model provides them.
    fn jacobian(&self, _x: &[f64], _y: &[f64], _u: &[f64]) -> Option<Jacobian> {
        None
    }

    fn has_analytic_jacobian(&self) -> bool {
        false
    }
}

/// Where a model came from, so that a problem can be written back to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Builtin(String),
    Expressions(crate::expr::ExpressionModelDef),
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Target {
    Objective(usize),
    Constraint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    X,
    Y,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub variables: Vec<VariableSpec>,
    pub uncertainty: UncertaintySet,
    pub objective_names: Vec<String>,
    pub constraint_names: Vec<String>,
    pub model: Arc<dyn Model>,
    pub source: ModelSource,
    hnv: Vec<usize>,
    wsv: Vec<usize>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("variables", &self.variables)
            .field("uncertainty", &self.uncertainty)
            .field("objective_names", &self.objective_names)
            .field("constraint_names", &self.constraint_names)
            .field("source", &self.source)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        variables: Vec<VariableSpec>,
        uncertainty: UncertaintySet,
        objective_names: Vec<String>,
        constraint_names: Vec<String>,
        model: Arc<dyn Model>,
        source: ModelSource,
    ) -> Result<Self> {
        for v in &variables {
            v.validate()?;
        }
        uncertainty.validate()?;
        let hnv: Vec<usize> = variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == VariableRole::HereAndNow)
            .map(|(i, _)| i)
            .collect();
        let wsv: Vec<usize> = variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == VariableRole::WaitAndSee)
            .map(|(i, _)| i)
            .collect();
        if hnv.is_empty() {
            return Err(MaroError::InvalidSpec(
                "at least one here-and-now variable is required".into(),
            ));
        }
        if objective_names.len() < 2 {
            return Err(MaroError::InvalidSpec(format!(
                "at least two objectives are required, got {}",
                objective_names.len()
            )));
        }
        let sig = model.signature();
        let expected = Signature {
            here_and_now: hnv.len(),
            wait_and_see: wsv.len(),
            uncertain: uncertainty.dim(),
            objectives: objective_names.len(),
            constraints: constraint_names.len(),
        };
        if sig != expected {
            return Err(MaroError::InvalidSpec(format!(
                "model signature {sig:?} does not match declared problem {expected:?}"
            )));
        }
        Ok(Self {
            variables,
            uncertainty,
            objective_names,
            constraint_names,
            model,
            source,
            hnv,
            wsv,
        })
    }

    pub fn num_objectives(&self) -> usize {
        self.objective_names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraint_names.len()
    }

    pub fn nx(&self) -> usize {
        self.hnv.len()
    }

    pub fn ny(&self) -> usize {
        self.wsv.len()
    }

    pub fn hnv(&self) -> impl Iterator<Item = &VariableSpec> {
        self.hnv.iter().map(|&i| &self.variables[i])
    }

    pub fn wsv(&self) -> impl Iterator<Item = &VariableSpec> {
        self.wsv.iter().map(|&i| &self.variables[i])
    }

    pub fn x_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.hnv().map(|v| v.lower).collect(),
            self.hnv().map(|v| v.upper).collect(),
        )
    }

    pub fn y_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.wsv().map(|v| v.lower).collect(),
            self.wsv().map(|v| v.upper).collect(),
        )
    }

    pub fn x_initial(&self) -> Vec<f64> {
        self.hnv().map(|v| v.initial).collect()
    }

    pub fn y_initial(&self) -> Vec<f64> {
        self.wsv().map(|v| v.initial).collect()
    }

    pub fn objective_index(&self, name: &str) -> Result<usize> {
        self.objective_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| MaroError::UnknownObjective(name.to_string()))
    }

    /// Same problem with a different uncertainty set.
    pub fn with_uncertainty(&self, uncertainty: UncertaintySet) -> Result<Self> {
        Self::new(
            self.variables.clone(),
            uncertainty,
            self.objective_names.clone(),
            self.constraint_names.clone(),
            self.model.clone(),
            self.source.clone(),
        )
    }

    fn check_point(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<()> {
        check_len("x", self.nx(), x.len())?;
        check_len("y", self.ny(), y.len())?;
        check_len("u", self.uncertainty.dim(), u.len())?;
        for (v, &val) in self.hnv().zip(x).chain(self.wsv().zip(y)) {
            check_range(&v.name, val, v.lower, v.upper)?;
        }
        for (p, &val) in self.uncertainty.params.iter().zip(u) {
            check_range(&p.name, val, p.lower, p.upper)?;
        }
        Ok(())
    }

    /// Evaluates objectives and constraints at an in-bounds point.
    pub fn evaluate(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<Evaluation> {
        self.check_point(x, y, u)?;
        self.evaluate_unchecked(x, y, u)
    }

    /// Evaluation without the bounds precondition; used by solvers and
    /// finite differences that may step marginally outside the box.
    pub fn evaluate_unchecked(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<Evaluation> {
        let ev = self.model.evaluate(x, y, u);
        check_len("objectives", self.num_objectives(), ev.objectives.len())?;
        check_len("constraints", self.num_constraints(), ev.constraints.len())?;
        if ev
            .objectives
            .iter()
            .chain(&ev.constraints)
            .any(|v| !v.is_finite())
        {
            return Err(MaroError::NonFiniteEvaluation {
                context: format!("x={x:?} y={y:?} u={u:?}"),
            });
        }
        Ok(ev)
    }

    /// Full Jacobian over `[x; y]`: analytic when the model offers it,
    /// central finite differences otherwise.
    pub fn jacobian_unchecked(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<Jacobian> {
        if let Some(jac) = self.model.jacobian(x, y, u) {
            let finite = jac
                .objectives
                .iter()
                .chain(&jac.constraints)
                .flatten()
                .all(|v| v.is_finite());
            if !finite {
                return Err(MaroError::NonFiniteEvaluation {
                    context: format!("jacobian at x={x:?} y={y:?} u={u:?}"),
                });
            }
            return Ok(jac);
        }
        self.finite_difference_jacobian(x, y, u)
    }

    pub fn finite_difference_jacobian(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<Jacobian> {
        let sig = self.model.signature();
        let mut jac = Jacobian::zeros(sig);
        let nx = x.len();
        let mut xp = x.to_vec();
        let mut yp = y.to_vec();
        for k in 0..nx + y.len() {
            let v = if k < nx { x[k] } else { y[k - nx] };
            let h = fd_step(v);
            let (plus, minus) = if k < nx {
                xp[k] = v + h;
                let plus = self.evaluate_unchecked(&xp, y, u)?;
                xp[k] = v - h;
                let minus = self.evaluate_unchecked(&xp, y, u)?;
                xp[k] = v;
                (plus, minus)
            } else {
                yp[k - nx] = v + h;
                let plus = self.evaluate_unchecked(x, &yp, u)?;
                yp[k - nx] = v - h;
                let minus = self.evaluate_unchecked(x, &yp, u)?;
                yp[k - nx] = v;
                (plus, minus)
            };
            for (row, (p, m)) in jac
                .objectives
                .iter_mut()
                .zip(plus.objectives.iter().zip(&minus.objectives))
            {
                row[k] = (p - m) / (2.0 * h);
            }
            for (row, (p, m)) in jac
                .constraints
                .iter_mut()
                .zip(plus.constraints.iter().zip(&minus.constraints))
            {
                row[k] = (p - m) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Gradient of one objective or constraint with respect to one block.
    pub fn gradient(
        &self,
        x: &[f64],
        y: &[f64],
        u: &[f64],
        target: Target,
        wrt: Block,
    ) -> Result<Vec<f64>> {
        self.check_point(x, y, u)?;
        match target {
            Target::Objective(j) if j >= self.num_objectives() => {
                return Err(MaroError::DimensionMismatch {
                    context: "objective index".into(),
                    expected: self.num_objectives(),
                    got: j,
                })
            }
            Target::Constraint(c) if c >= self.num_constraints() => {
                return Err(MaroError::DimensionMismatch {
                    context: "constraint index".into(),
                    expected: self.num_constraints(),
                    got: c,
                })
            }
            _ => {}
        }
        let jac = self.jacobian_unchecked(x, y, u)?;
        let row = jac.row(target);
        Ok(match wrt {
            Block::X => row[..self.nx()].to_vec(),
            Block::Y => row[self.nx()..].to_vec(),
        })
    }
}

/// Relative central-difference step.
pub fn fd_step(v: f64) -> f64 {
    (1e-6 * v.abs()).max(1e-8)
}

fn check_len(context: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(MaroError::DimensionMismatch {
            context: context.to_string(),
            expected,
            got,
        });
    }
    Ok(())
}

fn check_range(what: &str, value: f64, lower: f64, upper: f64) -> Result<()> {
    if !(value >= lower && value <= upper) {
        return Err(MaroError::OutOfBounds {
            what: what.to_string(),
            value,
            lower,
            upper,
        });
    }
    Ok(())
}
