//! Adaptive worst-case scenario selection.
//!
//! The master problem is solved on a small scenario set; then every scenario
//! of the reference discretization is checked at the master's HNV:
//!
//! * objective `j`: `max_u min_y f_j(x*, y, u)  s.t.  g(x*, y, u) <= 0`
//! * constraints: `min_y max_c g_c(x*, y, u)`, positive values are violations
//!
//! Scenarios that beat the master's epigraph value `t_j` by more than
//! `add_tol`, or that violate a constraint, are added and the master is
//! re-solved until nothing new turns up.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discretization::{ReferenceDiscretization, Scenario};
use crate::error::{MaroError, Result};
use crate::front::{self, FrontApproximation, FrontPlan};
use crate::nlp::{self, NlpOptions, NlpProblem, SparseRow};
use crate::par;
use crate::problem::ProblemSpec;
use crate::replicated::{
    solve_point, ParetoPoint, ReplicatedSolution, SolveMode, SolveRequest, WarmStart,
};

const S_RANGE: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub add_tol: f64,
    pub feas_tol: f64,
    pub max_alternations: usize,
    pub nlp: NlpOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            add_tol: 1e-6,
            feas_tol: 1e-6,
            max_alternations: 20,
            nlp: NlpOptions::default(),
        }
    }
}

/// Why a scenario belongs to a worst-case set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Reason {
    Initial,
    Objective(usize),
    Constraint(usize),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WcScenarioSet {
    /// Ascending scenario ids.
    pub ids: Vec<usize>,
    pub provenance: BTreeMap<usize, Vec<Reason>>,
}

impl WcScenarioSet {
    /// `{u_nom}`.
    pub fn nominal(reference: &ReferenceDiscretization) -> Self {
        let mut set = Self::default();
        set.insert(reference.nominal_id(), Reason::Initial);
        set
    }

    /// Every reference scenario.
    pub fn full(reference: &ReferenceDiscretization) -> Self {
        let mut set = Self::default();
        for id in reference.ids() {
            set.insert(id, Reason::Initial);
        }
        set
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Returns true if the id was new.
    pub fn insert(&mut self, id: usize, reason: Reason) -> bool {
        let reasons = self.provenance.entry(id).or_default();
        if !reasons.contains(&reason) {
            reasons.push(reason);
            reasons.sort();
        }
        match self.ids.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.ids.insert(pos, id);
                true
            }
        }
    }

    pub fn union_with(&mut self, other: &WcScenarioSet) {
        for (id, reasons) in &other.provenance {
            for r in reasons {
                self.insert(*id, *r);
            }
        }
    }
}

/// Worst inner value of one objective over the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWc {
    pub objective: usize,
    pub scenario_id: usize,
    /// `None` when no feasible WSV exists for that scenario (worse than any
    /// finite value).
    pub value: Option<f64>,
}

impl ObjectiveWc {
    pub fn value_or_inf(&self) -> f64 {
        self.value.unwrap_or(f64::INFINITY)
    }
}

/// Most violating scenario of one constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintWc {
    pub constraint: usize,
    pub scenario_id: usize,
    pub violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    NoNewScenarios,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementIteration {
    pub scenario_ids: Vec<usize>,
    pub t: Vec<f64>,
    pub scalarized: f64,
    pub objective_wc: Vec<ObjectiveWc>,
    pub constraint_wc: Vec<ConstraintWc>,
    pub added: Vec<(usize, Reason)>,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub iterations: Vec<RefinementIteration>,
    pub terminated_reason: Termination,
    pub final_set: WcScenarioSet,
}

impl RefinementTrace {
    /// Alternations that added at least one scenario.
    pub fn refinements(&self) -> usize {
        self.iterations.iter().filter(|it| !it.added.is_empty()).count()
    }

    pub fn replicated_solves(&self) -> usize {
        self.iterations.len()
    }

    /// Total WSV copies over all master solves.
    pub fn replicas(&self) -> usize {
        self.iterations.iter().map(|it| it.replicas).sum()
    }
}

enum InnerKind {
    Objective(usize),
    MaxConstraint,
}

/// `min_y f_j` or `min_{y,s} s  s.t. g_c <= s` at fixed `(x, u)`.
struct InnerProblem<'a> {
    spec: &'a ProblemSpec,
    x: &'a [f64],
    u: &'a [f64],
    kind: InnerKind,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> InnerProblem<'a> {
    fn new(spec: &'a ProblemSpec, x: &'a [f64], u: &'a [f64], kind: InnerKind) -> Self {
        let (mut lower, mut upper) = spec.y_bounds();
        if let InnerKind::MaxConstraint = kind {
            lower.push(-S_RANGE);
            upper.push(S_RANGE);
        }
        Self {
            spec,
            x,
            u,
            kind,
            lower,
            upper,
        }
    }

    fn ny(&self) -> usize {
        self.spec.ny()
    }
}

impl NlpProblem for InnerProblem<'_> {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn num_constraints(&self) -> usize {
        self.spec.num_constraints()
    }

    fn evaluate(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ev = self.spec.evaluate_unchecked(self.x, &z[..self.ny()], self.u)?;
        Ok(match self.kind {
            InnerKind::Objective(j) => (ev.objectives[j], ev.constraints),
            InnerKind::MaxConstraint => {
                let s = z[self.ny()];
                (s, ev.constraints.iter().map(|g| g - s).collect())
            }
        })
    }

    fn gradients(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<SparseRow>)> {
        let ny = self.ny();
        let nx = self.spec.nx();
        let jac = self.spec.jacobian_unchecked(self.x, &z[..ny], self.u)?;
        let y_part = |row: &[f64]| -> SparseRow {
            row[nx..]
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect()
        };
        Ok(match self.kind {
            InnerKind::Objective(j) => (
                jac.objectives[j][nx..].to_vec(),
                jac.constraints.iter().map(|r| y_part(r)).collect(),
            ),
            InnerKind::MaxConstraint => {
                let mut grad = vec![0.0; ny + 1];
                grad[ny] = 1.0;
                let rows = jac
                    .constraints
                    .iter()
                    .map(|r| {
                        let mut row = y_part(r);
                        row.push((ny, -1.0));
                        row
                    })
                    .collect();
                (grad, rows)
            }
        })
    }

    fn prepare_start(&self, z: &mut [f64]) {
        if let InnerKind::MaxConstraint = self.kind {
            let ny = self.ny();
            if let Ok(ev) = self.spec.evaluate_unchecked(self.x, &z[..ny], self.u) {
                let worst = ev.constraints.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                if worst.is_finite() {
                    z[ny] = worst.clamp(-S_RANGE, S_RANGE);
                }
            }
        }
    }
}

/// How the WSV react to a scenario during the worst-case search.
#[derive(Debug, Clone, Copy)]
enum Response<'a> {
    /// Re-optimized per scenario, starting from the given guesses.
    Adjust(&'a ReplicatedSolution),
    /// Fixed to the shared WSV of a non-adjustable solution.
    Fixed(&'a [f64]),
}

impl<'a> Response<'a> {
    fn for_solution(sol: &'a ReplicatedSolution) -> Self {
        match sol.mode {
            SolveMode::NonAdjustable => Response::Fixed(&sol.y_per_scenario[0].y),
            _ => Response::Adjust(sol),
        }
    }
}

fn start_y(spec: &ProblemSpec, response: Response<'_>, scenario: &Scenario) -> Vec<f64> {
    match response {
        Response::Fixed(y) => y.to_vec(),
        Response::Adjust(sol) => sol
            .response(scenario.id)
            .or_else(|| sol.y_per_scenario.iter().find(|r| r.y.len() == spec.ny()))
            .map(|r| r.y.clone())
            .unwrap_or_else(|| spec.y_initial()),
    }
}

/// Inner optimum of objective `j` at one scenario; `None` if no feasible WSV
/// was found.
fn objective_inner(
    spec: &ProblemSpec,
    x: &[f64],
    scenario: &Scenario,
    j: usize,
    y0: Vec<f64>,
    adjust: bool,
    opts: &AdaptiveOptions,
) -> Result<Option<f64>> {
    if !adjust || spec.ny() == 0 {
        let ev = spec.evaluate_unchecked(x, &y0, &scenario.values)?;
        let violation = ev.constraints.iter().fold(0.0f64, |a, &b| a.max(b));
        return Ok((violation <= opts.feas_tol).then_some(ev.objectives[j]));
    }
    let inner = InnerProblem::new(spec, x, &scenario.values, InnerKind::Objective(j));
    let r = nlp::solve(&inner, &y0, &opts.nlp);
    if r.max_violation > opts.feas_tol {
        return Ok(None);
    }
    let ev = spec.evaluate_unchecked(x, &r.x_opt, &scenario.values)?;
    Ok(Some(ev.objectives[j]))
}

/// `min_y max_c g_c` at one scenario, with the constraint attaining the max.
fn constraint_inner(
    spec: &ProblemSpec,
    x: &[f64],
    scenario: &Scenario,
    y0: Vec<f64>,
    adjust: bool,
    opts: &AdaptiveOptions,
) -> Result<(f64, usize)> {
    let y = if !adjust || spec.ny() == 0 {
        y0
    } else {
        let inner = InnerProblem::new(spec, x, &scenario.values, InnerKind::MaxConstraint);
        let mut z0 = y0;
        z0.push(0.0);
        let r = nlp::solve(&inner, &z0, &opts.nlp);
        r.x_opt[..spec.ny()].to_vec()
    };
    let ev = spec.evaluate_unchecked(x, &y, &scenario.values)?;
    let (c, v) = ev
        .constraints
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bc, bv), (c, &v)| if v > bv { (c, v) } else { (bc, bv) });
    Ok((v, c))
}

/// Worst-case scenario of objective `j` at the master solution (ties: lowest
/// id).
pub fn find_objective_wc(
    spec: &ProblemSpec,
    solution: &ReplicatedSolution,
    j: usize,
    reference: &ReferenceDiscretization,
    opts: &AdaptiveOptions,
) -> Result<ObjectiveWc> {
    let all = objective_sweep(spec, solution, j, reference, opts)?;
    Ok(pick_objective_wc(j, &all))
}

fn objective_sweep(
    spec: &ProblemSpec,
    solution: &ReplicatedSolution,
    j: usize,
    reference: &ReferenceDiscretization,
    opts: &AdaptiveOptions,
) -> Result<Vec<(usize, Option<f64>)>> {
    let response = Response::for_solution(solution);
    let adjust = matches!(response, Response::Adjust(_));
    par::map(&reference.scenarios, |s| {
        let y0 = start_y(spec, response, s);
        objective_inner(spec, &solution.x_star, s, j, y0, adjust, opts).map(|v| (s.id, v))
    })
    .into_iter()
    .collect()
}

fn pick_objective_wc(j: usize, values: &[(usize, Option<f64>)]) -> ObjectiveWc {
    let mut best = ObjectiveWc {
        objective: j,
        scenario_id: values[0].0,
        value: values[0].1,
    };
    for &(id, v) in &values[1..] {
        if v.unwrap_or(f64::INFINITY) > best.value_or_inf() {
            best = ObjectiveWc {
                objective: j,
                scenario_id: id,
                value: v,
            };
        }
    }
    best
}

/// Violating scenarios, the most violating one per constraint (ties: lowest
/// id). Each scenario's violation `min_y max_c g_c` is attributed to the
/// constraint attaining the max.
pub fn find_constraint_wc(
    spec: &ProblemSpec,
    solution: &ReplicatedSolution,
    reference: &ReferenceDiscretization,
    opts: &AdaptiveOptions,
) -> Result<Vec<ConstraintWc>> {
    let sweep = constraint_sweep(spec, solution, reference, opts)?;
    Ok(pick_constraint_wc(&sweep, opts.feas_tol))
}

fn constraint_sweep(
    spec: &ProblemSpec,
    solution: &ReplicatedSolution,
    reference: &ReferenceDiscretization,
    opts: &AdaptiveOptions,
) -> Result<Vec<(usize, f64, usize)>> {
    if spec.num_constraints() == 0 {
        return Ok(Vec::new());
    }
    let response = Response::for_solution(solution);
    let adjust = matches!(response, Response::Adjust(_));
    par::map(&reference.scenarios, |s| {
        let y0 = start_y(spec, response, s);
        constraint_inner(spec, &solution.x_star, s, y0, adjust, opts).map(|(v, c)| (s.id, v, c))
    })
    .into_iter()
    .collect()
}

fn pick_constraint_wc(sweep: &[(usize, f64, usize)], feas_tol: f64) -> Vec<ConstraintWc> {
    let mut per: BTreeMap<usize, ConstraintWc> = BTreeMap::new();
    for &(id, v, c) in sweep {
        if v <= feas_tol {
            continue;
        }
        let replace = per.get(&c).is_none_or(|cur| v > cur.violation);
        if replace {
            per.insert(
                c,
                ConstraintWc {
                    constraint: c,
                    scenario_id: id,
                    violation: v,
                },
            );
        }
    }
    per.into_values().collect()
}

/// Full sweep over the reference at a solution: how far each objective's
/// worst inner optimum exceeds `t_j`, and the worst constraint violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `max_u min_y f_j - t_j` per objective; `None` if some scenario had no
    /// feasible WSV.
    pub objective_excess: Vec<Option<f64>>,
    pub max_violation: f64,
    pub holds: bool,
}

pub fn certify(
    spec: &ProblemSpec,
    point: &ParetoPoint,
    reference: &ReferenceDiscretization,
    opts: &AdaptiveOptions,
) -> Result<Certificate> {
    let sol = &point.solution;
    let mut objective_excess = Vec::with_capacity(spec.num_objectives());
    for j in 0..spec.num_objectives() {
        let wc = find_objective_wc(spec, sol, j, reference, opts)?;
        objective_excess.push(wc.value.map(|v| v - sol.t[j]));
    }
    let sweep = constraint_sweep(spec, sol, reference, opts)?;
    let max_violation = sweep.iter().fold(0.0f64, |a, s| a.max(s.1));
    let holds = max_violation <= opts.feas_tol
        && objective_excess
            .iter()
            .all(|e| e.is_some_and(|e| e <= opts.add_tol));
    Ok(Certificate {
        objective_excess,
        max_violation,
        holds,
    })
}

/// Alternates master solves and worst-case searches until no scenario is
/// added or the alternation cap is hit. At the cap the last master solution
/// is returned.
pub fn solve_adaptive_point(
    spec: &ProblemSpec,
    reference: &ReferenceDiscretization,
    request: &SolveRequest,
    initial: &WcScenarioSet,
    mode: SolveMode,
    warm: Option<&WarmStart>,
    opts: &AdaptiveOptions,
) -> Result<(ParetoPoint, RefinementTrace)> {
    let mut set = initial.clone();
    if set.is_empty() {
        return Err(MaroError::EmptyScenarioSet);
    }
    for &id in &set.ids {
        reference.get(id)?;
    }
    let nominal_id = reference.nominal_id();
    let mut warm = warm.cloned();
    let mut iterations = Vec::new();
    let mut last = None;
    let mut reason = Termination::IterationCap;
    for _ in 0..opts.max_alternations.max(1) {
        let scenarios = reference.subset(&set.ids)?;
        let point = solve_point(spec, &scenarios, request, mode, warm.as_ref(), &opts.nlp)?;
        let sol = &point.solution;
        let mut added = Vec::new();
        let mut objective_wc = Vec::new();
        let mut constraint_wc = Vec::new();
        if mode != SolveMode::Nominal {
            for j in 0..spec.num_objectives() {
                let wc = find_objective_wc(spec, sol, j, reference, opts)?;
                if wc.value_or_inf() > sol.t[j] + opts.add_tol && !set.contains(wc.scenario_id) {
                    added.push((wc.scenario_id, Reason::Objective(j)));
                }
                objective_wc.push(wc);
            }
            constraint_wc = find_constraint_wc(spec, sol, reference, opts)?;
            for wc in &constraint_wc {
                if !set.contains(wc.scenario_id) {
                    added.push((wc.scenario_id, Reason::Constraint(wc.constraint)));
                }
            }
        }
        log::debug!(
            "adaptive: {} scenarios, t={:?}, adding {:?}",
            set.len(),
            sol.t,
            added
        );
        iterations.push(RefinementIteration {
            scenario_ids: set.ids.clone(),
            t: sol.t.clone(),
            scalarized: request.scalarization.value(&sol.t),
            objective_wc,
            constraint_wc,
            added: added.clone(),
            replicas: sol.replicas,
        });
        warm = Some(WarmStart::from_solution(sol, nominal_id));
        last = Some(point);
        if added.is_empty() {
            reason = Termination::NoNewScenarios;
            break;
        }
        for (id, r) in added {
            set.insert(id, r);
        }
    }
    let point = last.expect("at least one master solve");
    // record why the final set's members are worst cases at the final point
    let mut final_set = set;
    for (j, id) in point.solution.objective_wc.iter().enumerate() {
        if final_set.contains(*id) {
            final_set.insert(*id, Reason::Objective(j));
        }
    }
    Ok((
        point,
        RefinementTrace {
            iterations,
            terminated_reason: reason,
            final_set,
        },
    ))
}

/// A front computed with adaptive scenario selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveFront {
    pub front: FrontApproximation<ParetoPoint>,
    /// One trace per weighted-sum solve, in solve order.
    pub traces: Vec<RefinementTrace>,
    /// Union of all worst-case sets.
    pub union: WcScenarioSet,
}

impl AdaptiveFront {
    pub fn replicated_solves(&self) -> usize {
        self.traces.iter().map(|t| t.replicated_solves()).sum()
    }

    pub fn replicas(&self) -> usize {
        self.traces.iter().map(|t| t.replicas()).sum()
    }
}

/// Front whose points are solved adaptively; each solve starts from the union
/// of all worst-case sets found so far plus the nominal scenario.
pub fn solve_adaptive_front(
    spec: &ProblemSpec,
    reference: &ReferenceDiscretization,
    plan: &FrontPlan,
    mode: SolveMode,
    opts: &AdaptiveOptions,
) -> Result<AdaptiveFront> {
    let mut union = WcScenarioSet::nominal(reference);
    let mut traces = Vec::new();
    let mut warm: Option<WarmStart> = None;
    let nominal_id = reference.nominal_id();
    let front = front::approximate(
        &mut |req: &SolveRequest| {
            let (point, trace) =
                solve_adaptive_point(spec, reference, req, &union, mode, warm.as_ref(), opts)?;
            union.union_with(&trace.final_set);
            warm = Some(WarmStart::from_solution(&point.solution, nominal_id));
            traces.push(trace);
            Ok(point)
        },
        plan,
    )?;
    Ok(AdaptiveFront {
        front: front.with_mode(mode),
        traces,
        union,
    })
}

/// Front solved on a fixed scenario set (all scenarios, one scenario, or the
/// nominal alone).
pub fn solve_fixed_front(
    spec: &ProblemSpec,
    scenarios: &[Scenario],
    plan: &FrontPlan,
    mode: SolveMode,
    opts: &NlpOptions,
) -> Result<FrontApproximation<ParetoPoint>> {
    let nominal_id = scenarios.iter().find(|s| s.is_nominal).map(|s| s.id).unwrap_or(0);
    let mut warm: Option<WarmStart> = None;
    let front = front::approximate(
        &mut |req: &SolveRequest| {
            let point = solve_point(spec, scenarios, req, mode, warm.as_ref(), opts)?;
            warm = Some(WarmStart::from_solution(&point.solution, nominal_id));
            Ok(point)
        },
        plan,
    )?;
    Ok(front.with_mode(mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study::{build_sp1, build_sp2, default_levels};
    use crate::discretization::{generate_box, DEFAULT_SCENARIO_CAP};
    use crate::replicated::Scalarization;

    fn reference(spec: &ProblemSpec, name: &str) -> ReferenceDiscretization {
        generate_box(&spec.uncertainty, default_levels(name), DEFAULT_SCENARIO_CAP).unwrap()
    }

    /// Brute-force inner optimum of SP1 objective `j` over a y grid.
    fn sp1_inner_grid(x: f64, u: f64, j: usize) -> f64 {
        let spec = build_sp1();
        (0..=10_000)
            .map(|k| k as f64 / 10_000.0)
            .filter_map(|y| {
                let ev = spec.evaluate(&[x], &[y], &[u]).unwrap();
                (ev.constraints[0] <= 0.0).then_some(ev.objectives[j])
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn objective_wc_matches_enumeration() {
        let spec = build_sp1();
        let reference = reference(&spec, "sp1");
        let opts = AdaptiveOptions::default();
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
        let nominal = vec![reference.nominal().clone()];
        let p = solve_point(&spec, &nominal, &req, SolveMode::Nominal, None, &opts.nlp).unwrap();
        let x = p.solution.x_star[0];
        for j in 0..2 {
            let wc = find_objective_wc(&spec, &p.solution, j, &reference, &opts).unwrap();
            let mut best = (0, f64::NEG_INFINITY);
            for s in &reference.scenarios {
                let v = sp1_inner_grid(x, s.values[0], j);
                if v > best.1 + 1e-9 {
                    best = (s.id, v);
                }
            }
            assert_eq!(wc.scenario_id, best.0, "objective {j}");
            assert!((wc.value.unwrap() - best.1).abs() < 1e-3);
        }
    }

    #[test]
    fn single_scenario_reference_is_its_own_worst_case() {
        let spec = build_sp1();
        let reference = ReferenceDiscretization::nominal_only(&spec.uncertainty);
        let opts = AdaptiveOptions::default();
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
        let p = solve_point(&spec, &reference.scenarios, &req, SolveMode::Adjustable, None, &opts.nlp)
            .unwrap();
        let wc = find_objective_wc(&spec, &p.solution, 0, &reference, &opts).unwrap();
        assert_eq!(wc.scenario_id, reference.nominal_id());
    }

    #[test]
    fn feasible_point_has_no_constraint_violators() {
        let spec = build_sp1();
        let reference = reference(&spec, "sp1");
        let opts = AdaptiveOptions::default();
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
        let p = solve_point(&spec, &reference.scenarios, &req, SolveMode::Adjustable, None, &opts.nlp)
            .unwrap();
        assert!(find_constraint_wc(&spec, &p.solution, &reference, &opts)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sp2_capacity_worst_case_is_the_corner() {
        let spec = build_sp2();
        let reference = reference(&spec, "sp2");
        let corner = reference
            .scenarios
            .iter()
            .find(|s| s.values == vec![1.0, 1.0])
            .unwrap()
            .id;
        let opts = AdaptiveOptions::default();
        // nominal extreme for f1 pushes x to 0, which the corner cannot carry
        let req = SolveRequest::new(Scalarization::unit(2, 0));
        let nominal = vec![reference.nominal().clone()];
        let p = solve_point(&spec, &nominal, &req, SolveMode::Nominal, None, &opts.nlp).unwrap();
        let x = p.solution.x_star[0];
        assert!(x < 0.2);
        let wcs = find_constraint_wc(&spec, &p.solution, &reference, &opts).unwrap();
        assert_eq!(wcs.len(), 1);
        assert_eq!(wcs[0].constraint, 1);
        assert_eq!(wcs[0].scenario_id, corner);
        // min_y g2 at the corner is 0.2 - x
        assert!((wcs[0].violation - (0.2 - x)).abs() < 1e-6);
    }

    #[test]
    fn adaptive_point_matches_all_scenarios() {
        for name in ["sp1", "sp2"] {
            let spec = crate::case_study::builtin(name).unwrap();
            let reference = reference(&spec, name);
            let opts = AdaptiveOptions::default();
            let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
            let (p, trace) = solve_adaptive_point(
                &spec,
                &reference,
                &req,
                &WcScenarioSet::nominal(&reference),
                SolveMode::Adjustable,
                None,
                &opts,
            )
            .unwrap();
            let full =
                solve_point(&spec, &reference.scenarios, &req, SolveMode::Adjustable, None, &opts.nlp)
                    .unwrap();
            for j in 0..2 {
                assert!((p.objectives[j] - full.objectives[j]).abs() < 1e-4, "{name}");
            }
            assert!(trace.final_set.len() < reference.len());
            assert_eq!(trace.terminated_reason, Termination::NoNewScenarios);
            assert!(trace.iterations.len() <= reference.len());
            assert!(certify(&spec, &p, &reference, &opts).unwrap().holds);
        }
    }

    #[test]
    fn full_initial_set_needs_one_solve() {
        let spec = build_sp1();
        let reference = reference(&spec, "sp1");
        let opts = AdaptiveOptions::default();
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.3, 0.7]).unwrap());
        let (_, trace) = solve_adaptive_point(
            &spec,
            &reference,
            &req,
            &WcScenarioSet::full(&reference),
            SolveMode::Adjustable,
            None,
            &opts,
        )
        .unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert!(trace.iterations[0].added.is_empty());
    }

    #[test]
    fn uncertainty_free_problem_keeps_initial_set() {
        use crate::problem::{Evaluation, Model, ModelSource, Signature, UncertainParamSpec, UncertaintySet, VariableRole, VariableSpec};
        #[derive(Debug)]
        struct Flat;
        impl Model for Flat {
            fn signature(&self) -> Signature {
                Signature {
                    here_and_now: 1,
                    wait_and_see: 1,
                    uncertain: 1,
                    objectives: 2,
                    constraints: 1,
                }
            }
            fn evaluate(&self, x: &[f64], y: &[f64], _u: &[f64]) -> Evaluation {
                Evaluation {
                    objectives: vec![x[0] * x[0] + y[0], (1.0 - x[0]).powi(2) + 1.0 - y[0]],
                    constraints: vec![0.2 - y[0]],
                }
            }
        }
        let spec = ProblemSpec::new(
            vec![
                VariableSpec::new("x", 0.0, 1.0, VariableRole::HereAndNow, 0.5),
                VariableSpec::new("y", 0.0, 1.0, VariableRole::WaitAndSee, 0.5),
            ],
            UncertaintySet::new_box(vec![UncertainParamSpec::new("u", -1.0, 1.0, 0.0)]).unwrap(),
            vec!["a".into(), "b".into()],
            vec!["c".into()],
            std::sync::Arc::new(Flat),
            ModelSource::Custom,
        )
        .unwrap();
        let reference = generate_box(&spec.uncertainty, crate::discretization::BoxLevels::VerticesAndMids, 100).unwrap();
        let initial = WcScenarioSet::nominal(&reference);
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
        let (_, trace) = solve_adaptive_point(
            &spec,
            &reference,
            &req,
            &initial,
            SolveMode::Adjustable,
            None,
            &AdaptiveOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.final_set.ids, initial.ids);
        assert_eq!(trace.iterations.len(), 1);
    }

    #[test]
    fn non_adjustable_search_evaluates_the_shared_response() {
        let spec = build_sp1();
        let reference = reference(&spec, "sp1");
        let opts = AdaptiveOptions::default();
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
        let (p, _) = solve_adaptive_point(
            &spec,
            &reference,
            &req,
            &WcScenarioSet::nominal(&reference),
            SolveMode::NonAdjustable,
            None,
            &opts,
        )
        .unwrap();
        let full =
            solve_point(&spec, &reference.scenarios, &req, SolveMode::NonAdjustable, None, &opts.nlp)
                .unwrap();
        assert!((req.scalarization.value(&p.objectives) - req.scalarization.value(&full.objectives)).abs() < 1e-4);
        assert!(certify(&spec, &p, &reference, &opts).unwrap().holds);
    }

    #[test]
    fn scenario_set_union_keeps_provenance() {
        let mut a = WcScenarioSet::default();
        a.insert(3, Reason::Initial);
        let mut b = WcScenarioSet::default();
        b.insert(1, Reason::Objective(0));
        b.insert(3, Reason::Constraint(1));
        a.union_with(&b);
        assert_eq!(a.ids, vec![1, 3]);
        assert_eq!(a.provenance[&3], vec![Reason::Initial, Reason::Constraint(1)]);
        let json = serde_json::to_string(&a).unwrap();
        let back: WcScenarioSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
