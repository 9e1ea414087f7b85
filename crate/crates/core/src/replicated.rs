//! Discretized, replicated MARO problem for a fixed scenario set.
//!
//! For scenarios `u_1..u_K` the decision vector is `x ⊕ y_1 ⊕ … ⊕ y_K ⊕ t`
//! and the weighted-sum scalarization becomes
//!
//! ```text
//! min  Σ_j w_j t_j
//! s.t. f_j(x, y_k, u_k) - t_j <= 0   for all j, k
//!      g_c(x, y_k, u_k)       <= 0   for all c, k
//! ```
//!
//! so that at an optimum `t_j = max_k f_j(x, y_k, u_k)`. In the
//! non-adjustable mode one shared `y` replaces all `y_k`.

use serde::{Deserialize, Serialize};

use crate::discretization::Scenario;
use crate::error::{MaroError, Result};
use crate::nlp::{self, NlpOptions, NlpProblem, NlpStatus, SparseRow};
use crate::problem::ProblemSpec;

const T_RANGE: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// Only the nominal scenario.
    Nominal,
    /// One WSV copy per scenario (MARO).
    Adjustable,
    /// One WSV vector shared by all scenarios (MRO).
    NonAdjustable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarizationKind {
    WeightedSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalarization {
    pub kind: ScalarizationKind,
    pub weights: Vec<f64>,
}

impl Scalarization {
    /// Normalized weighted sum; weights must be non-negative with a positive
    /// entry.
    pub fn weighted_sum(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MaroError::InvalidWeights(format!(
                "weights must be finite and non-negative: {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MaroError::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self {
            kind: ScalarizationKind::WeightedSum,
            weights: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Weight vector `e_j`.
    pub fn unit(m: usize, j: usize) -> Self {
        let mut w = vec![0.0; m];
        w[j] = 1.0;
        Self {
            kind: ScalarizationKind::WeightedSum,
            weights: w,
        }
    }

    pub fn value(&self, objectives: &[f64]) -> f64 {
        self.weights.iter().zip(objectives).map(|(w, f)| w * f).sum()
    }
}

/// A scalarization plus optional upper bounds on individual objectives
/// (used by lexicographic extreme compromises).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub scalarization: Scalarization,
    #[serde(default)]
    pub upper_bounds: Vec<Option<f64>>,
}

impl SolveRequest {
    pub fn new(scalarization: Scalarization) -> Self {
        Self {
            scalarization,
            upper_bounds: Vec::new(),
        }
    }

    pub fn with_bound(mut self, objective: usize, bound: f64) -> Self {
        let m = self.scalarization.weights.len();
        if self.upper_bounds.len() < m {
            self.upper_bounds.resize(m, None);
        }
        self.upper_bounds[objective] = Some(bound);
        self
    }

    pub fn bound(&self, objective: usize) -> Option<f64> {
        self.upper_bounds.get(objective).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResponse {
    pub scenario_id: usize,
    pub y: Vec<f64>,
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatedSolution {
    pub x_star: Vec<f64>,
    /// Per-scenario WSV and evaluations, in scenario-set order.
    pub y_per_scenario: Vec<ScenarioResponse>,
    /// Epigraph values `t_j = max_k f_j(x*, y_k, u_k)`.
    pub t: Vec<f64>,
    /// Scenario attaining the maximum of each objective.
    pub objective_wc: Vec<usize>,
    /// Most violated (or least slack) scenario per constraint.
    pub constraint_wc: Vec<usize>,
    pub mode: SolveMode,
    pub nlp_status: NlpStatus,
    pub nlp_iterations: usize,
    pub max_violation: f64,
    /// Number of WSV copies in the solved NLP.
    pub replicas: usize,
}

impl ReplicatedSolution {
    pub fn response(&self, scenario_id: usize) -> Option<&ScenarioResponse> {
        self.y_per_scenario.iter().find(|r| r.scenario_id == scenario_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub objectives: Vec<f64>,
    pub solution: ReplicatedSolution,
    pub scalarization: Scalarization,
    /// Objective bounds of the request (lexicographic second stages).
    #[serde(default)]
    pub upper_bounds: Vec<Option<f64>>,
    pub scenario_set_ids: Vec<usize>,
}

/// Starting values for a replicated solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Vec<(usize, Vec<f64>)>,
    pub fallback_y: Option<Vec<f64>>,
}

impl WarmStart {
    /// Reuses `y_k` for scenarios already solved and the nominal (else first)
    /// response for new ones.
    pub fn from_solution(sol: &ReplicatedSolution, nominal_id: usize) -> Self {
        let fallback_y = sol
            .response(nominal_id)
            .or_else(|| sol.y_per_scenario.first())
            .map(|r| r.y.clone());
        Self {
            x: sol.x_star.clone(),
            y: sol
                .y_per_scenario
                .iter()
                .map(|r| (r.scenario_id, r.y.clone()))
                .collect(),
            fallback_y,
        }
    }

    fn y_for(&self, id: usize) -> Option<&Vec<f64>> {
        self.y
            .iter()
            .find(|(k, _)| *k == id)
            .map(|(_, y)| y)
            .or(self.fallback_y.as_ref())
    }
}

/// The replicated NLP for one scenario set, scalarization and mode.
pub struct ReplicatedNlp<'a> {
    spec: &'a ProblemSpec,
    scenarios: Vec<Scenario>,
    weights: Vec<f64>,
    mode: SolveMode,
    lower: Vec<f64>,
    upper: Vec<f64>,
    nx: usize,
    ny: usize,
    blocks: usize,
}

impl<'a> ReplicatedNlp<'a> {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn replicas(&self) -> usize {
        self.blocks
    }

    fn y_offset(&self, k: usize) -> usize {
        let block = if self.mode == SolveMode::NonAdjustable { 0 } else { k };
        self.nx + block * self.ny
    }

    fn t_offset(&self) -> usize {
        self.nx + self.blocks * self.ny
    }

    fn split<'z>(&self, z: &'z [f64], k: usize) -> (&'z [f64], &'z [f64]) {
        let off = self.y_offset(k);
        (&z[..self.nx], &z[off..off + self.ny])
    }

    fn rows_per_scenario(&self) -> usize {
        self.spec.num_objectives() + self.spec.num_constraints()
    }

    /// Decision vector from a warm start, falling back to the problem's
    /// initial values.
    pub fn initial_point(&self, warm: Option<&WarmStart>) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        let x0 = warm
            .filter(|w| w.x.len() == self.nx)
            .map(|w| w.x.clone())
            .unwrap_or_else(|| self.spec.x_initial());
        z[..self.nx].copy_from_slice(&x0);
        let y_init = self.spec.y_initial();
        for (k, s) in self.scenarios.iter().enumerate() {
            if self.mode == SolveMode::NonAdjustable && k > 0 {
                break;
            }
            let y = warm
                .and_then(|w| w.y_for(s.id))
                .filter(|y| y.len() == self.ny)
                .unwrap_or(&y_init);
            let off = self.y_offset(k);
            z[off..off + self.ny].copy_from_slice(y);
        }
        z
    }
}

impl NlpProblem for ReplicatedNlp<'_> {
    fn dim(&self) -> usize {
        self.t_offset() + self.spec.num_objectives()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn num_constraints(&self) -> usize {
        self.scenarios.len() * self.rows_per_scenario()
    }

    fn evaluate(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let t = &z[self.t_offset()..];
        let objective = self.weights.iter().zip(t).map(|(w, v)| w * v).sum();
        let mut c = Vec::with_capacity(self.num_constraints());
        for (k, s) in self.scenarios.iter().enumerate() {
            let (x, y) = self.split(z, k);
            let ev = self.spec.evaluate_unchecked(x, y, &s.values)?;
            c.extend(ev.objectives.iter().zip(t).map(|(f, tj)| f - tj));
            c.extend_from_slice(&ev.constraints);
        }
        Ok((objective, c))
    }

    fn gradients(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<SparseRow>)> {
        let t_off = self.t_offset();
        let mut grad = vec![0.0; self.dim()];
        grad[t_off..].copy_from_slice(&self.weights);
        let mut rows = Vec::with_capacity(self.num_constraints());
        for (k, s) in self.scenarios.iter().enumerate() {
            let (x, y) = self.split(z, k);
            let jac = self.spec.jacobian_unchecked(x, y, &s.values)?;
            let y_off = self.y_offset(k);
            let to_row = |d: &[f64]| -> SparseRow {
                d.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| {
                        let col = if i < self.nx { i } else { y_off + i - self.nx };
                        (col, *v)
                    })
                    .collect()
            };
            for (j, d) in jac.objectives.iter().enumerate() {
                let mut row = to_row(d);
                row.push((t_off + j, -1.0));
                rows.push(row);
            }
            for d in &jac.constraints {
                rows.push(to_row(d));
            }
        }
        Ok((grad, rows))
    }

    fn prepare_start(&self, z: &mut [f64]) {
        let t_off = self.t_offset();
        let m = self.spec.num_objectives();
        let mut worst = vec![f64::NEG_INFINITY; m];
        for k in 0..self.scenarios.len() {
            let (x, y) = self.split(z, k);
            if let Ok(ev) = self.spec.evaluate_unchecked(x, y, &self.scenarios[k].values) {
                for (w, f) in worst.iter_mut().zip(&ev.objectives) {
                    *w = w.max(*f);
                }
            }
        }
        for j in 0..m {
            if worst[j].is_finite() {
                z[t_off + j] = worst[j].clamp(self.lower[t_off + j], self.upper[t_off + j]);
            }
        }
    }
}

/// Builds the replicated NLP. In nominal mode the scenario set must be the
/// nominal scenario alone.
pub fn build_replicated<'a>(
    spec: &'a ProblemSpec,
    scenarios: &[Scenario],
    request: &SolveRequest,
    mode: SolveMode,
) -> Result<ReplicatedNlp<'a>> {
    if scenarios.is_empty() {
        return Err(MaroError::EmptyScenarioSet);
    }
    if mode == SolveMode::Nominal && !(scenarios.len() == 1 && scenarios[0].is_nominal) {
        return Err(MaroError::InvalidSpec(
            "nominal mode solves the nominal scenario alone".into(),
        ));
    }
    let m = spec.num_objectives();
    let weights = &request.scalarization.weights;
    if weights.len() != m {
        return Err(MaroError::DimensionMismatch {
            context: "scalarization weights".into(),
            expected: m,
            got: weights.len(),
        });
    }
    let (nx, ny) = (spec.nx(), spec.ny());
    let blocks = match mode {
        SolveMode::NonAdjustable => 1,
        _ => scenarios.len(),
    };
    let (xl, xu) = spec.x_bounds();
    let (yl, yu) = spec.y_bounds();
    let mut lower = xl;
    let mut upper = xu;
    for _ in 0..blocks {
        lower.extend_from_slice(&yl);
        upper.extend_from_slice(&yu);
    }
    for j in 0..m {
        lower.push(-T_RANGE);
        upper.push(request.bound(j).unwrap_or(T_RANGE));
    }
    Ok(ReplicatedNlp {
        spec,
        scenarios: scenarios.to_vec(),
        weights: weights.clone(),
        mode,
        lower,
        upper,
        nx,
        ny,
        blocks,
    })
}

/// NLP feasibility tolerance for the two stages of an extreme compromise.
pub const BOUND_FEAS_TOL: f64 = 1e-9;

/// Solves the replicated problem and packages the Pareto point.
pub fn solve_point(
    spec: &ProblemSpec,
    scenarios: &[Scenario],
    request: &SolveRequest,
    mode: SolveMode,
    warm: Option<&WarmStart>,
    opts: &NlpOptions,
) -> Result<ParetoPoint> {
    let nlp = build_replicated(spec, scenarios, request, mode)?;
    let z0 = nlp.initial_point(warm);
    // at a lexicographic optimum the bounded objective is flat, so where the
    // second stage lands moves with the square root of any error in the
    // first stage's value or in the bound
    let lexicographic = request.upper_bounds.iter().any(Option::is_some)
        || request.scalarization.weights.iter().filter(|&&w| w != 0.0).count() == 1;
    let result = if lexicographic {
        let tight = NlpOptions {
            feas_tol: opts.feas_tol.min(BOUND_FEAS_TOL),
            ..opts.clone()
        };
        nlp::solve(&nlp, &z0, &tight)
    } else {
        nlp::solve(&nlp, &z0, opts)
    };
    let z = &result.x_opt;
    let m = spec.num_objectives();
    let x_star = z[..nlp.nx].to_vec();
    let mut responses = Vec::with_capacity(scenarios.len());
    for (k, s) in scenarios.iter().enumerate() {
        let (_, y) = nlp.split(z, k);
        let ev = spec.evaluate_unchecked(&x_star, y, &s.values)?;
        responses.push(ScenarioResponse {
            scenario_id: s.id,
            y: y.to_vec(),
            objectives: ev.objectives,
            constraints: ev.constraints,
        });
    }
    let (constraint_wc, worst_g) = argmax_per(&responses, spec.num_constraints(), |r, c| r.constraints[c]);
    let max_violation = worst_g.iter().fold(0.0f64, |a, &b| a.max(b));
    if max_violation > opts.feas_tol {
        let c = worst_g
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > worst_g[best] { i } else { best });
        return Err(MaroError::InfeasibleModel {
            constraint: spec.constraint_names[c].clone(),
            scenario: constraint_wc[c],
            violation: max_violation,
        });
    }
    let (objective_wc, t) = argmax_per(&responses, m, |r, j| r.objectives[j]);
    let status = if result.status == NlpStatus::Infeasible {
        // epigraph rows may lag behind while the model rows are satisfied
        NlpStatus::FeasibleSuboptimal
    } else {
        result.status
    };
    let solution = ReplicatedSolution {
        x_star,
        y_per_scenario: responses,
        t: t.clone(),
        objective_wc,
        constraint_wc,
        mode,
        nlp_status: status,
        nlp_iterations: result.iterations,
        max_violation,
        replicas: nlp.replicas(),
    };
    Ok(ParetoPoint {
        objectives: t,
        solution,
        scalarization: request.scalarization.clone(),
        upper_bounds: request.upper_bounds.clone(),
        scenario_set_ids: scenarios.iter().map(|s| s.id).collect(),
    })
}

/// Per index, the scenario id with the largest value (ties: first in set
/// order, which is ascending id) and that value.
fn argmax_per(
    responses: &[ScenarioResponse],
    n: usize,
    value: impl Fn(&ScenarioResponse, usize) -> f64,
) -> (Vec<usize>, Vec<f64>) {
    let mut ids = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = &responses[0];
        for r in &responses[1..] {
            if value(r, i) > value(best, i) {
                best = r;
            }
        }
        ids.push(best.scenario_id);
        vals.push(value(best, i));
    }
    (ids, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study::{build_sp1, default_levels};
    use crate::discretization::{generate_box, DEFAULT_SCENARIO_CAP};

    fn sp1_reference() -> crate::discretization::ReferenceDiscretization {
        let spec = build_sp1();
        generate_box(&spec.uncertainty, default_levels("sp1"), DEFAULT_SCENARIO_CAP).unwrap()
    }

    /// Dense grid search for the nominal scalarized SP1 problem.
    fn nominal_grid(weights: [f64; 2]) -> (f64, [f64; 2]) {
        let spec = build_sp1();
        let mut best = (f64::INFINITY, [0.0; 2]);
        for i in 0..=1000 {
            for k in 0..=1000 {
                let (x, y) = (i as f64 / 1000.0, k as f64 / 1000.0);
                let ev = spec.evaluate(&[x], &[y], &[0.0]).unwrap();
                if ev.constraints[0] > 0.0 {
                    continue;
                }
                let v = weights[0] * ev.objectives[0] + weights[1] * ev.objectives[1];
                if v < best.0 {
                    best = (v, [ev.objectives[0], ev.objectives[1]]);
                }
            }
        }
        best
    }

    #[test]
    fn replicated_dimensions() {
        use crate::problem::{
            Evaluation, Model, ModelSource, Signature, UncertainParamSpec, UncertaintySet,
            VariableRole, VariableSpec,
        };
        #[derive(Debug)]
        struct Wide;
        impl Model for Wide {
            fn signature(&self) -> Signature {
                Signature {
                    here_and_now: 5,
                    wait_and_see: 2,
                    uncertain: 1,
                    objectives: 2,
                    constraints: 0,
                }
            }
            fn evaluate(&self, x: &[f64], y: &[f64], _u: &[f64]) -> Evaluation {
                Evaluation {
                    objectives: vec![x.iter().sum(), y.iter().sum()],
                    constraints: vec![],
                }
            }
        }
        let mut vars: Vec<VariableSpec> = (0..5)
            .map(|i| VariableSpec::new(&format!("x{i}"), 0.0, 1.0, VariableRole::HereAndNow, 0.5))
            .collect();
        vars.push(VariableSpec::new("y0", 0.0, 1.0, VariableRole::WaitAndSee, 0.5));
        vars.push(VariableSpec::new("y1", 0.0, 1.0, VariableRole::WaitAndSee, 0.5));
        let spec = crate::problem::ProblemSpec::new(
            vars,
            UncertaintySet::new_box(vec![UncertainParamSpec::new("u", 0.0, 1.0, 0.0)]).unwrap(),
            vec!["a".into(), "b".into()],
            vec![],
            std::sync::Arc::new(Wide),
            ModelSource::Custom,
        )
        .unwrap();
        let reference =
            generate_box(&spec.uncertainty, crate::discretization::BoxLevels::Uniform(6), 100).unwrap();
        assert_eq!(reference.len(), 6);
        let req = SolveRequest::new(Scalarization::weighted_sum(&[1.0, 1.0]).unwrap());
        let adj = build_replicated(&spec, &reference.scenarios, &req, SolveMode::Adjustable).unwrap();
        assert_eq!(adj.dim(), 19);
        let non = build_replicated(&spec, &reference.scenarios, &req, SolveMode::NonAdjustable).unwrap();
        assert_eq!(non.dim(), 9);
        assert!(matches!(
            build_replicated(&spec, &[], &req, SolveMode::Adjustable),
            Err(MaroError::EmptyScenarioSet)
        ));
    }

    #[test]
    fn single_scenario_epigraph_is_tight() {
        let spec = build_sp1();
        let reference = sp1_reference();
        let nominal = vec![reference.nominal().clone()];
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.3, 0.7]).unwrap());
        let p = solve_point(&spec, &nominal, &req, SolveMode::Nominal, None, &NlpOptions::default()).unwrap();
        let r = &p.solution.y_per_scenario[0];
        assert_eq!(p.objectives, r.objectives);
        assert_eq!(p.solution.t, r.objectives);
    }

    #[test]
    fn nominal_extreme_weight_matches_grid() {
        let spec = build_sp1();
        let reference = sp1_reference();
        let nominal = vec![reference.nominal().clone()];
        let req = SolveRequest::new(Scalarization::weighted_sum(&[1.0, 0.0]).unwrap());
        let p = solve_point(&spec, &nominal, &req, SolveMode::Nominal, None, &NlpOptions::default()).unwrap();
        let (best, _) = nominal_grid([1.0, 0.0]);
        assert!((p.objectives[0] - best).abs() < 1e-3);
        assert!(p.objectives[0].abs() < 1e-6);
    }

    #[test]
    fn nominal_weighted_matches_grid() {
        let spec = build_sp1();
        let reference = sp1_reference();
        let nominal = vec![reference.nominal().clone()];
        let w = [0.6, 0.4];
        let req = SolveRequest::new(Scalarization::weighted_sum(&w).unwrap());
        let p = solve_point(&spec, &nominal, &req, SolveMode::Nominal, None, &NlpOptions::default()).unwrap();
        let (best, _) = nominal_grid(w);
        let v = req.scalarization.value(&p.objectives);
        assert!(v <= best + 1e-9 && v > best - 1e-3, "{v} vs grid {best}");
    }

    #[test]
    fn mode_ordering_and_weak_dominance() {
        let spec = build_sp1();
        let reference = sp1_reference();
        let opts = NlpOptions::default();
        for w in [[0.5, 0.5], [0.2, 0.8], [0.85, 0.15]] {
            let req = SolveRequest::new(Scalarization::weighted_sum(&w).unwrap());
            let nom = solve_point(&spec, &[reference.nominal().clone()], &req, SolveMode::Nominal, None, &opts).unwrap();
            let adj = solve_point(&spec, &reference.scenarios, &req, SolveMode::Adjustable, None, &opts).unwrap();
            let non = solve_point(&spec, &reference.scenarios, &req, SolveMode::NonAdjustable, None, &opts).unwrap();
            let s = &req.scalarization;
            assert!(s.value(&nom.objectives) <= s.value(&adj.objectives) + 1e-6);
            assert!(s.value(&adj.objectives) <= s.value(&non.objectives) + 1e-6);
            let shared = &non.solution.y_per_scenario[0].y;
            assert!(non.solution.y_per_scenario.iter().all(|r| &r.y == shared));
            for r in &adj.solution.y_per_scenario {
                assert!(r.constraints[0] <= 1e-6);
            }
            // epigraph tightness
            for j in 0..2 {
                let max = adj
                    .solution
                    .y_per_scenario
                    .iter()
                    .map(|r| r.objectives[j])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((adj.solution.t[j] - max).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn adding_a_scenario_never_helps() {
        let spec = build_sp1();
        let reference = sp1_reference();
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
        let opts = NlpOptions::default();
        let mut ids = vec![reference.nominal_id()];
        let mut last = f64::NEG_INFINITY;
        for extra in [21, 1, 15] {
            ids.push(extra);
            let set = reference.subset(&ids).unwrap();
            let p = solve_point(&spec, &set, &req, SolveMode::Adjustable, None, &opts).unwrap();
            let v = req.scalarization.value(&p.objectives);
            assert!(v >= last - 1e-7);
            last = v;
        }
    }

    #[test]
    fn nominal_mode_requires_nominal_scenario() {
        let spec = build_sp1();
        let reference = sp1_reference();
        let req = SolveRequest::new(Scalarization::weighted_sum(&[0.5, 0.5]).unwrap());
        let err = build_replicated(&spec, &reference.scenarios[..1], &req, SolveMode::Nominal);
        assert!(err.is_err());
    }

    #[test]
    fn weights_are_validated() {
        assert!(Scalarization::weighted_sum(&[0.0, 0.0]).is_err());
        assert!(Scalarization::weighted_sum(&[-1.0, 2.0]).is_err());
        let s = Scalarization::weighted_sum(&[1.0, 3.0]).unwrap();
        assert_eq!(s.weights, vec![0.25, 0.75]);
    }
}
