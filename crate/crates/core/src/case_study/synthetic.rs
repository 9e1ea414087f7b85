use std::sync::Arc;

use crate::problem::{
    Evaluation, Jacobian, Model, ModelSource, ProblemSpec, Signature, UncertainParamSpec,
    UncertaintySet, VariableRole, VariableSpec,
};

/// SP1: one HNV `x`, one WSV `y`, one uncertain `u`.
///
/// ```text
/// f1 = x^2 + y + 0.2 u (1 - y)
/// f2 = (1 - x)^2 + 0.5 (1 - y) + 0.2 u y
/// g  = u (0.5 - y) - 0.3
/// ```
///
/// At `x = 1` the nominal and robust optimal HNV coincide, so the price of
/// robustness vanishes at the high-`f1` end of the front.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sp1;

impl Model for Sp1 {
    fn signature(&self) -> Signature {
        Signature {
            here_and_now: 1,
            wait_and_see: 1,
            uncertain: 1,
            objectives: 2,
            constraints: 1,
        }
    }

    fn evaluate(&self, x: &[f64], y: &[f64], u: &[f64]) -> Evaluation {
        let (x, y, u) = (x[0], y[0], u[0]);
        Evaluation {
            objectives: vec![
                x * x + y + 0.2 * u * (1.0 - y),
                (1.0 - x) * (1.0 - x) + 0.5 * (1.0 - y) + 0.2 * u * y,
            ],
            constraints: vec![u * (0.5 - y) - 0.3],
        }
    }

    fn jacobian(&self, x: &[f64], _y: &[f64], u: &[f64]) -> Option<Jacobian> {
        let (x, u) = (x[0], u[0]);
        Some(Jacobian {
            objectives: vec![
                vec![2.0 * x, 1.0 - 0.2 * u],
                vec![-2.0 * (1.0 - x), -0.5 + 0.2 * u],
            ],
            constraints: vec![vec![0.0, -u]],
        })
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }
}

/// SP2: SP1 objectives with a second uncertain parameter that only enters a
/// capacity constraint, binding solely at the `(u1, u2) = (1, 1)` corner:
///
/// ```text
/// g2 = 0.4 (1 + u1)(1 + u2)(1 - 0.5 y) - x - 0.6
/// ```
///
/// At that corner `min_y g2 = 0.2 - x`; everywhere else on the grid it is
/// negative for every `x >= 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sp2;

impl Model for Sp2 {
    fn signature(&self) -> Signature {
        Signature {
            here_and_now: 1,
            wait_and_see: 1,
            uncertain: 2,
            objectives: 2,
            constraints: 2,
        }
    }

    fn evaluate(&self, x: &[f64], y: &[f64], u: &[f64]) -> Evaluation {
        let mut ev = Sp1.evaluate(x, y, &u[..1]);
        let (x, y) = (x[0], y[0]);
        let load = (1.0 + u[0]) * (1.0 + u[1]);
        ev.constraints.push(0.4 * load * (1.0 - 0.5 * y) - x - 0.6);
        ev
    }

    fn jacobian(&self, x: &[f64], y: &[f64], u: &[f64]) -> Option<Jacobian> {
        let mut jac = Sp1.jacobian(x, y, &u[..1])?;
        let load = (1.0 + u[0]) * (1.0 + u[1]);
        jac.constraints.push(vec![-1.0, -0.2 * load]);
        Some(jac)
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }
}

fn xy_variables() -> Vec<VariableSpec> {
    vec![
        VariableSpec::new("x", 0.0, 1.0, VariableRole::HereAndNow, 0.5),
        VariableSpec::new("y", 0.0, 1.0, VariableRole::WaitAndSee, 0.5),
    ]
}

pub fn build_sp1() -> ProblemSpec {
    ProblemSpec::new(
        xy_variables(),
        UncertaintySet::new_box(vec![UncertainParamSpec::new("u", -1.0, 1.0, 0.0)])
            .expect("valid SP1 uncertainty"),
        vec!["f1".into(), "f2".into()],
        vec!["g".into()],
        Arc::new(Sp1),
        ModelSource::Builtin("sp1".into()),
    )
    .expect("valid SP1")
}

pub fn build_sp2() -> ProblemSpec {
    ProblemSpec::new(
        xy_variables(),
        UncertaintySet::new_box(vec![
            UncertainParamSpec::new("u1", -1.0, 1.0, 0.0),
            UncertainParamSpec::new("u2", -1.0, 1.0, 0.0),
        ])
        .expect("valid SP2 uncertainty"),
        vec!["f1".into(), "f2".into()],
        vec!["g".into(), "capacity".into()],
        Arc::new(Sp2),
        ModelSource::Builtin("sp2".into()),
    )
    .expect("valid SP2")
}
