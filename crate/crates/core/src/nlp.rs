//! Smooth box- and inequality-constrained NLP solver.
//!
//! Augmented Lagrangian (Powell–Hestenes–Rockafellar form for `c(z) <= 0`)
//! around a projected BFGS inner solver. Variables are rescaled internally so
//! that badly scaled boxes (stage counts next to heat-exchanger areas) look
//! alike to the quasi-Newton model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Sparse gradient row: `(index, partial derivative)`.
pub type SparseRow = Vec<(usize, f64)>;

/// Objective/constraint value assigned to points where the model fails.
pub const FAILURE_PENALTY: f64 = 1e10;

pub trait NlpProblem: Sync {
    fn dim(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn num_constraints(&self) -> usize;

    /// Objective value and constraint values (`<= 0` is feasible).
    fn evaluate(&self, z: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Dense objective gradient and sparse constraint gradients.
    fn gradients(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<SparseRow>)>;

    /// Typical magnitude of each variable; defaults to the box width capped at
    /// `1e3`.
    fn scales(&self) -> Vec<f64> {
        self.lower()
            .iter()
            .zip(self.upper())
            .map(|(l, u)| {
                let w = u - l;
                if w > 0.0 && w <= 1e3 {
                    w
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Lets a problem repair auxiliary variables of a start point (for
    /// example epigraph bounds) before solving from it.
    fn prepare_start(&self, _z: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlpStatus {
    Optimal,
    FeasibleSuboptimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlpResult {
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    pub max_violation: f64,
    pub status: NlpStatus,
    /// Outer (multiplier) iterations of the winning start.
    pub iterations: usize,
    pub inner_iterations: usize,
    pub stationarity: f64,
    pub multipliers: Vec<f64>,
    /// Maximum violation after every accepted outer iteration.
    pub violation_history: Vec<f64>,
    /// Index of the winning start (0 is the provided initial point).
    pub start_index: usize,
}

impl NlpResult {
    pub fn is_feasible(&self, feas_tol: f64) -> bool {
        self.max_violation <= feas_tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlpOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Total number of starts including the provided one.
    pub starts: usize,
    pub seed: u64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
}

impl Default for NlpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            opt_tol: 1e-6,
            max_outer: 500,
            max_inner: 2000,
            starts: 5,
            seed: 42,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e8,
        }
    }
}

impl NlpOptions {
    pub fn single_start() -> Self {
        Self {
            starts: 1,
            ..Self::default()
        }
    }
}

/// Solves from `initial` plus `opts.starts - 1` Latin-hypercube points and
/// returns the best result (feasible first, then lowest objective, ties to the
/// earliest start).
pub fn solve<P: NlpProblem + ?Sized>(problem: &P, initial: &[f64], opts: &NlpOptions) -> NlpResult {
    let starts = start_points(problem, initial, opts);
    let run = |(k, z0): (usize, &Vec<f64>)| {
        let mut r = Solver::new(problem, opts).run(z0);
        r.start_index = k;
        r
    };
    #[cfg(feature = "parallel")]
    let results: Vec<NlpResult> = {
        use rayon::prelude::*;
        starts.par_iter().enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<NlpResult> = starts.iter().enumerate().map(run).collect();

    let mut best = 0;
    for k in 1..results.len() {
        if better(&results[k], &results[best], opts.feas_tol) {
            best = k;
        }
    }
    results.into_iter().nth(best).expect("at least one start")
}

fn better(a: &NlpResult, b: &NlpResult, feas_tol: f64) -> bool {
    match (a.is_feasible(feas_tol), b.is_feasible(feas_tol)) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.f_opt < b.f_opt - 1e-12 * (1.0 + b.f_opt.abs()),
        (false, false) => a.max_violation < b.max_violation,
    }
}

fn start_points<P: NlpProblem + ?Sized>(problem: &P, initial: &[f64], opts: &NlpOptions) -> Vec<Vec<f64>> {
    let n = problem.dim();
    let (lo, hi) = (problem.lower(), problem.upper());
    let mut first = initial.to_vec();
    project(&mut first, lo, hi);
    problem.prepare_start(&mut first);
    let mut starts = vec![first];
    let extra = opts.starts.saturating_sub(1);
    if extra == 0 {
        return starts;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let strata: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut s: Vec<usize> = (0..extra).collect();
            s.shuffle(&mut rng);
            s
        })
        .collect();
    for k in 0..extra {
        let mut z: Vec<f64> = (0..n)
            .map(|i| {
                let t = (strata[i][k] as f64 + rng.gen::<f64>()) / extra as f64;
                // unbounded-looking auxiliaries keep the provided value
                if hi[i] - lo[i] > 1e6 {
                    starts[0][i]
                } else {
                    lo[i] + t * (hi[i] - lo[i])
                }
            })
            .collect();
        project(&mut z, lo, hi);
        problem.prepare_start(&mut z);
        starts.push(z);
    }
    starts
}

fn project(z: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in z.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn max_violation(c: &[f64]) -> f64 {
    c.iter().fold(0.0f64, |m, &v| m.max(v))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Solver<'a, P: ?Sized> {
    problem: &'a P,
    opts: &'a NlpOptions,
    scale: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

struct Merit {
    value: f64,
    grad: Vec<f64>,
    objective: f64,
    constraints: Vec<f64>,
}

struct InnerOutcome {
    v: Vec<f64>,
    merit: Merit,
    iterations: usize,
    projected_gradient: f64,
}

impl<'a, P: NlpProblem + ?Sized> Solver<'a, P> {
    fn new(problem: &'a P, opts: &'a NlpOptions) -> Self {
        let scale = problem.scales();
        let lo = problem
            .lower()
            .iter()
            .zip(&scale)
            .map(|(l, s)| l / s)
            .collect();
        let hi = problem
            .upper()
            .iter()
            .zip(&scale)
            .map(|(h, s)| h / s)
            .collect();
        Self {
            problem,
            opts,
            scale,
            lo,
            hi,
        }
    }

    fn unscale(&self, v: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = v.iter().zip(&self.scale).map(|(a, s)| a * s).collect();
        project(&mut z, self.problem.lower(), self.problem.upper());
        z
    }

    /// Augmented Lagrangian value and scaled gradient. `None` when the model
    /// fails at `v`.
    fn merit(&self, v: &[f64], mu: &[f64], rho: f64, with_grad: bool) -> Option<Merit> {
        let z = self.unscale(v);
        let (f, c) = self.problem.evaluate(&z).ok()?;
        if !f.is_finite() || c.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let mut value = f;
        let mut shifted = Vec::with_capacity(c.len());
        for (ci, mi) in c.iter().zip(mu) {
            let s = (mi + rho * ci).max(0.0);
            value += (s * s - mi * mi) / (2.0 * rho);
            shifted.push(s);
        }
        let mut grad = Vec::new();
        if with_grad {
            let (gf, rows) = self.problem.gradients(&z).ok()?;
            grad = gf;
            for (row, s) in rows.iter().zip(&shifted) {
                if *s != 0.0 {
                    for &(i, d) in row {
                        grad[i] += s * d;
                    }
                }
            }
            for (g, sc) in grad.iter_mut().zip(&self.scale) {
                *g *= sc;
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return None;
            }
        }
        Some(Merit {
            value,
            grad,
            objective: f,
            constraints: c,
        })
    }

    fn projected_gradient(&self, v: &[f64], g: &[f64]) -> f64 {
        v.iter()
            .zip(g)
            .zip(self.lo.iter().zip(&self.hi))
            .map(|((vi, gi), (l, h))| ((vi - gi).clamp(*l, *h) - vi).abs())
            .fold(0.0, f64::max)
    }

    fn inner(&self, v0: Vec<f64>, start: Merit, mu: &[f64], rho: f64, tol: f64) -> InnerOutcome {
        let n = v0.len();
        let mut v = v0;
        let mut cur = start;
        let mut h = identity(n);
        let mut fresh = true;
        let mut iterations = 0;
        let mut stalls = 0;
        let mut pg = self.projected_gradient(&v, &cur.grad);
        while iterations < self.opts.max_inner && pg > tol {
            iterations += 1;
            let bound_eps = 1e-12;
            let binding: Vec<bool> = (0..n)
                .map(|i| {
                    (v[i] <= self.lo[i] + bound_eps && cur.grad[i] > 0.0)
                        || (v[i] >= self.hi[i] - bound_eps && cur.grad[i] < 0.0)
                })
                .collect();
            let mut d = direction(&h, &cur.grad, &binding);
            if dot(&d, &cur.grad) >= 0.0 {
                h = identity(n);
                fresh = true;
                d = direction(&h, &cur.grad, &binding);
            }
            let Some((v_new, next)) = self.line_search(&v, &d, &cur, mu, rho) else {
                if fresh {
                    break;
                }
                h = identity(n);
                fresh = true;
                continue;
            };
            let s: Vec<f64> = v_new.iter().zip(&v).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() && sy > 0.0 {
                if fresh {
                    let gamma = sy / dot(&yv, &yv);
                    for (i, row) in h.iter_mut().enumerate() {
                        row.iter_mut().for_each(|e| *e = 0.0);
                        row[i] = gamma;
                    }
                    fresh = false;
                }
                bfgs_update(&mut h, &s, &yv, sy);
            }
            let improvement = cur.value - next.value;
            v = v_new;
            cur = next;
            pg = self.projected_gradient(&v, &cur.grad);
            if improvement.abs() <= 1e-15 * (1.0 + cur.value.abs()) && pg > tol {
                // no measurable progress with a full quasi-Newton model
                stalls += 1;
                if fresh || stalls >= 5 {
                    break;
                }
                h = identity(n);
                fresh = true;
            } else {
                stalls = 0;
            }
        }
        InnerOutcome {
            v,
            merit: cur,
            iterations,
            projected_gradient: pg,
        }
    }

    fn line_search(&self, v: &[f64], d: &[f64], cur: &Merit, mu: &[f64], rho: f64) -> Option<(Vec<f64>, Merit)> {
        let mut alpha = 1.0;
        // cap the first trial so that no coordinate moves further than the box
        let longest = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if longest > 1e3 {
            alpha = 1e3 / longest;
        }
        for _ in 0..60 {
            let trial: Vec<f64> = v
                .iter()
                .zip(d)
                .zip(self.lo.iter().zip(&self.hi))
                .map(|((vi, di), (l, h))| (vi + alpha * di).clamp(*l, *h))
                .collect();
            let step: f64 = trial
                .iter()
                .zip(v)
                .zip(&cur.grad)
                .map(|((t, vi), g)| (t - vi) * g)
                .sum();
            if step < 0.0 {
                if let Some(m) = self.merit(&trial, mu, rho, false) {
                    if m.value <= cur.value + 1e-4 * step {
                        let full = self.merit(&trial, mu, rho, true)?;
                        return Some((trial, full));
                    }
                }
            }
            alpha *= 0.5;
        }
        None
    }

    fn run(&self, z0: &[f64]) -> NlpResult {
        let m = self.problem.num_constraints();
        let mut mu = vec![0.0; m];
        let mut rho = self.opts.initial_penalty;
        let mut v: Vec<f64> = z0.iter().zip(&self.scale).map(|(z, s)| z / s).collect();
        let Some(mut cur) = self.merit(&v, &mu, rho, true) else {
            return self.failed(z0);
        };
        let mut viol = max_violation(&cur.constraints);
        let mut accepted_viol = f64::INFINITY;
        let mut history = Vec::new();
        let mut inner_total = 0;
        let mut status = NlpStatus::IterationLimit;
        let mut stationarity = f64::INFINITY;
        let mut outer = 0;
        let mut at_cap = 0;
        let mut stalled = 0;
        while outer < self.opts.max_outer {
            outer += 1;
            let tol = (0.1 * self.opts.opt_tol).max(1e-3 * 0.1f64.powi(outer as i32 - 1));
            let start = match self.merit(&v, &mu, rho, true) {
                Some(s) => s,
                None => break,
            };
            let out = self.inner(v.clone(), start, &mu, rho, tol);
            inner_total += out.iterations;
            let new_viol = max_violation(&out.merit.constraints);
            if new_viol > accepted_viol + 1e-10 {
                if new_viol <= self.opts.feas_tol {
                    // noise inside the feasible band: keep the accepted point
                    stalled += 1;
                    if stalled >= 3 {
                        break;
                    }
                    continue;
                }
                if rho < self.opts.max_penalty {
                    // reject: feasibility regressed, retry with a stiffer penalty
                    rho = (rho * self.opts.penalty_growth).min(self.opts.max_penalty);
                    continue;
                }
            }
            let previous_objective = cur.objective;
            v = out.v;
            cur = out.merit;
            let mut mu_shift = 0.0f64;
            for (mi, ci) in mu.iter_mut().zip(&cur.constraints) {
                let next = (*mi + rho * ci).max(0.0);
                mu_shift = mu_shift.max((next - *mi).abs());
                *mi = next;
            }
            stationarity = out.projected_gradient;
            history.push(new_viol);
            let complementarity = mu
                .iter()
                .zip(&cur.constraints)
                .map(|(mi, ci)| mi.min(-ci).abs())
                .fold(0.0, f64::max);
            log::debug!(
                "outer {outer}: f={:.10e} viol={new_viol:.3e} stat={stationarity:.3e} rho={rho:.1e}",
                cur.objective
            );
            let previous = viol;
            viol = new_viol;
            accepted_viol = new_viol;
            let mu_scale = 1.0 + mu.iter().fold(0.0f64, |a, m| a.max(m.abs()));
            if viol <= self.opts.feas_tol
                && (cur.objective - previous_objective).abs() <= 1e-13 * (1.0 + cur.objective.abs())
                && mu_shift <= 1e-9 * mu_scale
            {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if viol <= self.opts.feas_tol
                && stationarity <= self.opts.opt_tol
                && complementarity <= self.opts.opt_tol
            {
                status = NlpStatus::Optimal;
                break;
            }
            if viol > self.opts.feas_tol && viol > 0.5 * previous {
                rho = (rho * self.opts.penalty_growth).min(self.opts.max_penalty);
            }
            if rho >= self.opts.max_penalty {
                at_cap += 1;
                if at_cap > 20 {
                    status = if viol <= self.opts.feas_tol {
                        NlpStatus::FeasibleSuboptimal
                    } else {
                        NlpStatus::Infeasible
                    };
                    break;
                }
            }
            if stalled >= 3 {
                // feasible, objective and multipliers frozen
                break;
            }
            if out.iterations == 0 && mu_shift <= 1e-14 && tol <= 0.1 * self.opts.opt_tol {
                // fixed point of the multiplier iteration that misses the
                // tolerances: nothing further can change
                status = if viol <= self.opts.feas_tol {
                    NlpStatus::FeasibleSuboptimal
                } else {
                    NlpStatus::Infeasible
                };
                break;
            }
        }
        if status == NlpStatus::IterationLimit && outer < self.opts.max_outer {
            status = if viol <= self.opts.feas_tol {
                NlpStatus::FeasibleSuboptimal
            } else {
                NlpStatus::Infeasible
            };
        }
        NlpResult {
            x_opt: self.unscale(&v),
            f_opt: cur.objective,
            max_violation: viol,
            status,
            iterations: outer,
            inner_iterations: inner_total,
            stationarity,
            multipliers: mu,
            violation_history: history,
            start_index: 0,
        }
    }

    fn failed(&self, z0: &[f64]) -> NlpResult {
        NlpResult {
            x_opt: z0.to_vec(),
            f_opt: FAILURE_PENALTY,
            max_violation: FAILURE_PENALTY,
            status: NlpStatus::Infeasible,
            iterations: 0,
            inner_iterations: 0,
            stationarity: f64::INFINITY,
            multipliers: vec![0.0; self.problem.num_constraints()],
            violation_history: vec![],
            start_index: 0,
        }
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect()
}

/// `-H g` restricted to the free variables.
fn direction(h: &[Vec<f64>], g: &[f64], binding: &[bool]) -> Vec<f64> {
    h.iter()
        .enumerate()
        .map(|(i, row)| {
            if binding[i] {
                0.0
            } else {
                -row.iter()
                    .zip(g)
                    .zip(binding)
                    .filter(|(_, b)| !**b)
                    .map(|((hij, gj), _)| hij * gj)
                    .sum::<f64>()
            }
        })
        .collect()
}

/// Inverse BFGS update `H <- (I - r s y^T) H (I - r y s^T) + r s s^T`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let r = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -r * (hy[i] * s[j] + s[i] * hy[j]) + (r * r * yhy + r) * s[i] * s[j];
        }
    }
}
