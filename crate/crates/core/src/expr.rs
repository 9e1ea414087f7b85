//! Expression-tree models for problem files.
//!
//! A tree node is a JSON number, `{"var": "name"}`, or
//! `{"op": "...", "args": [...]}`. Derivatives are exact and computed by a
//! forward sweep over the tree.

use serde::{Deserialize, Serialize};

use crate::error::{MaroError, Result};
use crate::problem::{
    Evaluation, Jacobian, Model, Signature, UncertaintySet, VariableRole, VariableSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Const(f64),
    Var { var: String },
    Apply { op: Op, args: Vec<Expr> },
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var {
            var: name.to_string(),
        }
    }

    pub fn apply(op: Op, args: Vec<Expr>) -> Self {
        Expr::Apply { op, args }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionModelDef {
    pub objectives: Vec<Expr>,
    #[serde(default)]
    pub constraints: Vec<Expr>,
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    X(usize),
    Y(usize),
    U(usize),
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(Slot),
    Apply(Op, Vec<Node>),
}

#[derive(Debug, Clone)]
pub struct ExpressionModel {
    sig: Signature,
    objectives: Vec<Node>,
    constraints: Vec<Node>,
}

impl ExpressionModel {
    pub fn compile(
        def: &ExpressionModelDef,
        variables: &[VariableSpec],
        uncertainty: &UncertaintySet,
    ) -> Result<Self> {
        let mut names = Vec::new();
        let (mut nx, mut ny) = (0, 0);
        for v in variables {
            let slot = match v.role {
                VariableRole::HereAndNow => {
                    nx += 1;
                    Slot::X(nx - 1)
                }
                VariableRole::WaitAndSee => {
                    ny += 1;
                    Slot::Y(ny - 1)
                }
            };
            names.push((v.name.clone(), slot));
        }
        for (i, p) in uncertainty.params.iter().enumerate() {
            names.push((p.name.clone(), Slot::U(i)));
        }
        let lookup = |name: &str| -> Result<Slot> {
            names
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, s)| *s)
                .ok_or_else(|| MaroError::InvalidSpec(format!("unknown symbol {name:?} in expression")))
        };
        let compile_all = |exprs: &[Expr], what: &str| -> Result<Vec<Node>> {
            exprs
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    compile_node(e, &lookup)
                        .map_err(|err| MaroError::InvalidSpec(format!("{what}[{i}]: {err}")))
                })
                .collect()
        };
        let objectives = compile_all(&def.objectives, "objectives")?;
        let constraints = compile_all(&def.constraints, "constraints")?;
        Ok(Self {
            sig: Signature {
                here_and_now: nx,
                wait_and_see: ny,
                uncertain: uncertainty.dim(),
                objectives: objectives.len(),
                constraints: constraints.len(),
            },
            objectives,
            constraints,
        })
    }
}

fn compile_node(e: &Expr, lookup: &dyn Fn(&str) -> Result<Slot>) -> Result<Node> {
    Ok(match e {
        Expr::Const(c) => Node::Const(*c),
        Expr::Var { var } => Node::Slot(lookup(var)?),
        Expr::Apply { op, args } => {
            let arity_ok = match op {
                Op::Add | Op::Mul => !args.is_empty(),
                Op::Sub => args.len() == 1 || args.len() == 2,
                Op::Div | Op::Pow => args.len() == 2,
                _ => args.len() == 1,
            };
            if !arity_ok {
                return Err(MaroError::InvalidSpec(format!(
                    "operator {op:?} got {} arguments",
                    args.len()
                )));
            }
            let args = args
                .iter()
                .map(|a| compile_node(a, lookup))
                .collect::<Result<Vec<_>>>()?;
            Node::Apply(*op, args)
        }
    })
}

struct Point<'a> {
    x: &'a [f64],
    y: &'a [f64],
    u: &'a [f64],
}

impl Node {
    fn value(&self, p: &Point) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Slot(Slot::X(i)) => p.x[*i],
            Node::Slot(Slot::Y(i)) => p.y[*i],
            Node::Slot(Slot::U(i)) => p.u[*i],
            Node::Apply(op, args) => {
                let a = |k: usize| args[k].value(p);
                match op {
                    Op::Add => args.iter().map(|n| n.value(p)).sum(),
                    Op::Mul => args.iter().map(|n| n.value(p)).product(),
                    Op::Sub if args.len() == 1 => -a(0),
                    Op::Sub => a(0) - a(1),
                    Op::Neg => -a(0),
                    Op::Div => a(0) / a(1),
                    Op::Pow => pow(a(0), a(1)),
                    Op::Exp => a(0).exp(),
                    Op::Log => a(0).ln(),
                    Op::Sqrt => a(0).sqrt(),
                    Op::Sin => a(0).sin(),
                    Op::Cos => a(0).cos(),
                    Op::Tanh => a(0).tanh(),
                }
            }
        }
    }

    /// Value and gradient over `[x; y]`.
    fn dual(&self, p: &Point, n: usize) -> (f64, Vec<f64>) {
        match self {
            Node::Const(c) => (*c, vec![0.0; n]),
            Node::Slot(slot) => {
                let mut g = vec![0.0; n];
                let v = match *slot {
                    Slot::X(i) => {
                        g[i] = 1.0;
                        p.x[i]
                    }
                    Slot::Y(i) => {
                        g[p.x.len() + i] = 1.0;
                        p.y[i]
                    }
                    Slot::U(i) => p.u[i],
                };
                (v, g)
            }
            Node::Apply(op, args) => {
                let parts: Vec<(f64, Vec<f64>)> = args.iter().map(|a| a.dual(p, n)).collect();
                match op {
                    Op::Add => parts.into_iter().fold((0.0, vec![0.0; n]), |(v, g), (av, ag)| {
                        (v + av, axpy(1.0, &ag, g))
                    }),
                    Op::Mul => parts.into_iter().fold((1.0, vec![0.0; n]), |(v, g), (av, ag)| {
                        // (v a)' = v' a + v a'
                        let g = g.iter().zip(&ag).map(|(gv, ga)| gv * av + v * ga).collect();
                        (v * av, g)
                    }),
                    Op::Sub if parts.len() == 1 => chain(&parts[0], -parts[0].0, -1.0),
                    Op::Neg => chain(&parts[0], -parts[0].0, -1.0),
                    Op::Sub => {
                        let (av, ag) = &parts[0];
                        let (bv, bg) = &parts[1];
                        (av - bv, axpy(-1.0, bg, ag.clone()))
                    }
                    Op::Div => {
                        let (av, ag) = &parts[0];
                        let (bv, bg) = &parts[1];
                        let g = ag
                            .iter()
                            .zip(bg)
                            .map(|(ga, gb)| (ga * bv - av * gb) / (bv * bv))
                            .collect();
                        (av / bv, g)
                    }
                    Op::Pow => {
                        let (av, ag) = &parts[0];
                        let (bv, bg) = &parts[1];
                        let v = pow(*av, *bv);
                        let exponent_varies = bg.iter().any(|&d| d != 0.0);
                        let da = bv * pow(*av, bv - 1.0);
                        let db = if exponent_varies { v * av.ln() } else { 0.0 };
                        let g = ag.iter().zip(bg).map(|(ga, gb)| da * ga + db * gb).collect();
                        (v, g)
                    }
                    Op::Exp => {
                        let v = parts[0].0.exp();
                        chain(&parts[0], v, v)
                    }
                    Op::Log => chain(&parts[0], parts[0].0.ln(), 1.0 / parts[0].0),
                    Op::Sqrt => {
                        let v = parts[0].0.sqrt();
                        chain(&parts[0], v, 0.5 / v)
                    }
                    Op::Sin => chain(&parts[0], parts[0].0.sin(), parts[0].0.cos()),
                    Op::Cos => chain(&parts[0], parts[0].0.cos(), -parts[0].0.sin()),
                    Op::Tanh => {
                        let v = parts[0].0.tanh();
                        chain(&parts[0], v, 1.0 - v * v)
                    }
                }
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b == 2.0 {
        a * a
    } else if b.fract() == 0.0 && b.abs() < 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn chain(inner: &(f64, Vec<f64>), value: f64, slope: f64) -> (f64, Vec<f64>) {
    (value, inner.1.iter().map(|g| slope * g).collect())
}

fn axpy(a: f64, x: &[f64], mut y: Vec<f64>) -> Vec<f64> {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
    y
}

impl Model for ExpressionModel {
    fn signature(&self) -> Signature {
        self.sig
    }

    fn evaluate(&self, x: &[f64], y: &[f64], u: &[f64]) -> Evaluation {
        let p = Point { x, y, u };
        Evaluation {
            objectives: self.objectives.iter().map(|n| n.value(&p)).collect(),
            constraints: self.constraints.iter().map(|n| n.value(&p)).collect(),
        }
    }

    fn jacobian(&self, x: &[f64], y: &[f64], u: &[f64]) -> Option<Jacobian> {
        let p = Point { x, y, u };
        let n = x.len() + y.len();
        Some(Jacobian {
            objectives: self.objectives.iter().map(|e| e.dual(&p, n).1).collect(),
            constraints: self.constraints.iter().map(|e| e.dual(&p, n).1).collect(),
        })
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }
}
