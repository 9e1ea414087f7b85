//! Tabular views of discretizations, fronts, prices and worst-case reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use maro_core::adaptive::{Reason, RefinementTrace, WcScenarioSet};
use maro_core::discretization::ReferenceDiscretization;
use maro_core::front::FrontApproximation;
use maro_core::price::{nominal_wsv, PriceReport};
use maro_core::problem::ProblemSpec;
use maro_core::replicated::ParetoPoint;

fn to_csv(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn num(v: f64) -> String {
    v.to_string()
}

fn names(spec: &ProblemSpec) -> (Vec<String>, Vec<String>) {
    (
        spec.hnv().map(|v| v.name.clone()).collect(),
        spec.wsv().map(|v| v.name.clone()).collect(),
    )
}

pub fn discretization_csv(spec: &ProblemSpec, reference: &ReferenceDiscretization) -> String {
    let mut header: Vec<String> = vec!["id".into(), "label".into(), "nominal".into()];
    header.extend(spec.uncertainty.params.iter().map(|p| p.name.clone()));
    let rows = reference
        .scenarios
        .iter()
        .map(|s| {
            let mut r = vec![s.id.to_string(), s.label.clone(), s.is_nominal.to_string()];
            r.extend(s.values.iter().copied().map(num));
            r
        })
        .collect();
    to_csv(header, rows)
}

/// Objective columns, then HNV, then the WSV response in the nominal scenario.
pub fn front_csv(spec: &ProblemSpec, front: &FrontApproximation<ParetoPoint>) -> String {
    let (hnv, wsv) = names(spec);
    let mut header: Vec<String> = vec!["point".into()];
    header.extend(spec.objective_names.iter().cloned());
    header.extend(hnv);
    header.extend(wsv.iter().map(|n| format!("{n}_nominal")));
    let rows = front
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = vec![i.to_string()];
            r.extend(p.objectives.iter().copied().map(num));
            r.extend(p.solution.x_star.iter().copied().map(num));
            r.extend(nominal_wsv(p).into_iter().map(num));
            r
        })
        .collect();
    to_csv(header, rows)
}

/// Price of robustness per robust point.
pub fn price_csv(spec: &ProblemSpec, reports: &[PriceReport]) -> String {
    let obj = &spec.objective_names;
    let mut header: Vec<String> = vec!["point".into()];
    for prefix in ["maro", "nsr", "mo", "price"] {
        header.extend(obj.iter().map(|n| format!("{prefix}_{n}")));
    }
    header.extend(["alpha".into(), "d_zero".into(), "ray_misses_front".into()]);
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string()];
            for v in [&r.f_maro, &r.f_nsr, &r.f_mo, &r.p_r] {
                row.extend(v.iter().copied().map(num));
            }
            row.push(num(r.alpha_star));
            row.push(r.flags.d_zero.to_string());
            row.push(r.flags.ray_misses_front.to_string());
            row
        })
        .collect();
    to_csv(header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcRow {
    pub scenario_id: usize,
    pub label: String,
    pub values: Vec<f64>,
    /// Objective and constraint names the scenario is worst case for.
    pub worst_case_for: Vec<String>,
    /// Front points whose final set contains the scenario.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTrace {
    pub point: usize,
    pub weights: Vec<f64>,
    pub alternations: usize,
    pub final_set: Vec<usize>,
}

/// Which scenario is worst case for what, over a whole adaptive front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub reference_size: usize,
    pub union_size: usize,
    pub scenarios: Vec<WcRow>,
    pub points: Vec<PointTrace>,
}

impl TraceReport {
    pub fn new(
        spec: &ProblemSpec,
        reference: &ReferenceDiscretization,
        front: &FrontApproximation<ParetoPoint>,
        traces: &[RefinementTrace],
        union: &WcScenarioSet,
    ) -> Self {
        let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
        for t in traces {
            for id in &t.final_set.ids {
                *hits.entry(*id).or_default() += 1;
            }
        }
        let scenarios = union
            .ids
            .iter()
            .map(|&id| {
                let (label, values) = reference
                    .get(id)
                    .map(|s| (s.label.clone(), s.values.clone()))
                    .unwrap_or_default();
                let worst_case_for = union.provenance.get(&id).map_or_else(Vec::new, |rs| {
                    rs.iter()
                        .map(|r| match r {
                            Reason::Initial => "initial".to_string(),
                            Reason::Objective(j) => spec.objective_names[*j].clone(),
                            Reason::Constraint(c) => spec.constraint_names[*c].clone(),
                        })
                        .collect()
                });
                WcRow {
                    scenario_id: id,
                    label,
                    values,
                    worst_case_for,
                    points: hits.get(&id).copied().unwrap_or(0),
                }
            })
            .collect();
        // traces are in solve order, points in front order; match by the final set and objectives
        let points = front
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let trace = traces.iter().find(|t| {
                    t.final_set.ids == p.scenario_set_ids
                        && t.iterations
                            .last()
                            .is_some_and(|it| it.t.iter().zip(&p.solution.t).all(|(a, b)| a == b))
                });
                PointTrace {
                    point: i,
                    weights: p.scalarization.weights.clone(),
                    alternations: trace.map_or(0, |t| t.iterations.len()),
                    final_set: p.scenario_set_ids.clone(),
                }
            })
            .collect();
        Self {
            reference_size: reference.len(),
            union_size: union.len(),
            scenarios,
            points,
        }
    }

    pub fn to_csv(&self, spec: &ProblemSpec) -> String {
        let mut header: Vec<String> = vec!["scenario".into(), "label".into()];
        header.extend(spec.uncertainty.params.iter().map(|p| p.name.clone()));
        header.extend(["worst_case_for".into(), "points".into()]);
        let rows = self
            .scenarios
            .iter()
            .map(|r| {
                let mut row = vec![r.scenario_id.to_string(), r.label.clone()];
                row.extend(r.values.iter().copied().map(num));
                row.push(r.worst_case_for.join(";"));
                row.push(r.points.to_string());
                row
            })
            .collect();
        to_csv(header, rows)
    }
}
