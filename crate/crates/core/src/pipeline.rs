//! End-to-end runs: fronts for every mode, prices and the run artifact.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adaptive::{
    solve_adaptive_front, solve_fixed_front, AdaptiveOptions, RefinementTrace, WcScenarioSet,
};
use crate::artifact::{Fronts, RunArtifact, ScenarioFront, StageTime, Timestamps, Traces};
use crate::discretization::{generate, ReferenceDiscretization};
use crate::error::{MaroError, Result};
use crate::front::{FrontApproximation, FrontPlan, SandwichOptions};
use crate::par;
use crate::price::price_front;
use crate::problem::ProblemSpec;
use crate::problem_file::LoadedProblem;
use crate::replicated::{ParetoPoint, SolveMode};

/// Which front to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "scenario")]
pub enum FrontMode {
    Nominal,
    Maro,
    Mro,
    /// Both HNV and WSV optimized for one fixed scenario.
    Scenario(usize),
}

impl FromStr for FrontMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "nominal" => Ok(Self::Nominal),
            "maro" => Ok(Self::Maro),
            "mro" => Ok(Self::Mro),
            other => match other.strip_prefix("scenario:") {
                Some(id) => id
                    .parse::<usize>()
                    .map(Self::Scenario)
                    .map_err(|_| format!("bad scenario id in {other:?}")),
                None => Err(format!(
                    "unknown mode {other:?}; expected nominal, maro, mro or scenario:<id>"
                )),
            },
        }
    }
}

impl fmt::Display for FrontMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Nominal => write!(f, "nominal"),
            Self::Maro => write!(f, "maro"),
            Self::Mro => write!(f, "mro"),
            Self::Scenario(id) => write!(f, "scenario:{id}"),
        }
    }
}

/// Result of one front computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRun {
    pub mode: FrontMode,
    pub adaptive: bool,
    pub front: FrontApproximation<ParetoPoint>,
    /// Refinement traces of adaptive runs, one per weighted-sum solve.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<RefinementTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub union: Option<WcScenarioSet>,
    /// Replicated NLP solves and the WSV copies they carried.
    pub replicated_solves: usize,
    pub replicas: usize,
}

/// Computes one front. `adaptive` only matters for the robust modes; with
/// `false` they are solved on the whole reference discretization.
pub fn solve_front(
    spec: &ProblemSpec,
    reference: &ReferenceDiscretization,
    mode: FrontMode,
    adaptive: bool,
    plan: &FrontPlan,
    opts: &AdaptiveOptions,
) -> Result<FrontRun> {
    let fixed = |scenarios: Vec<_>, solve_mode| -> Result<FrontRun> {
        let front = solve_fixed_front(spec, &scenarios, plan, solve_mode, &opts.nlp)?;
        let solves = front.solves;
        let replicas = front.points.first().map_or(0, |p| p.solution.replicas) * solves;
        Ok(FrontRun {
            mode,
            adaptive: false,
            front,
            traces: Vec::new(),
            union: None,
            replicated_solves: solves,
            replicas,
        })
    };
    match mode {
        FrontMode::Nominal => fixed(vec![reference.nominal().clone()], SolveMode::Nominal),
        FrontMode::Scenario(id) => fixed(vec![reference.get(id)?.clone()], SolveMode::Adjustable),
        FrontMode::Maro | FrontMode::Mro => {
            let solve_mode = if mode == FrontMode::Maro {
                SolveMode::Adjustable
            } else {
                SolveMode::NonAdjustable
            };
            if !adaptive {
                return fixed(reference.scenarios.clone(), solve_mode);
            }
            let af = solve_adaptive_front(spec, reference, plan, solve_mode, opts)?;
            Ok(FrontRun {
                mode,
                adaptive: true,
                replicated_solves: af.replicated_solves(),
                replicas: af.replicas(),
                front: af.front,
                traces: af.traces,
                union: Some(af.union),
            })
        }
    }
}

/// Which scenario fronts a full run computes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "ids")]
pub enum ScenarioSelection {
    None,
    /// Scenarios in the union of the robust worst-case sets.
    WorstCase,
    All,
    Ids(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub robust_plan: FrontPlan,
    pub nominal_plan: FrontPlan,
    pub adaptive: bool,
    pub mro: bool,
    pub scenario_fronts: ScenarioSelection,
    pub options: AdaptiveOptions,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            robust_plan: FrontPlan::Sandwich(SandwichOptions::default()),
            nominal_plan: FrontPlan::Sandwich(SandwichOptions::default()),
            adaptive: true,
            mro: true,
            scenario_fronts: ScenarioSelection::WorstCase,
            options: AdaptiveOptions::default(),
        }
    }
}

impl RunSettings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.options.nlp.seed = seed;
        self
    }
}

fn timed<T>(stages: &mut Vec<StageTime>, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f()?;
    stages.push(StageTime {
        stage: stage.to_string(),
        seconds: t.elapsed().as_secs_f64(),
    });
    Ok(out)
}

/// Discretization of a loaded problem.
pub fn discretize(problem: &LoadedProblem) -> Result<ReferenceDiscretization> {
    generate(&problem.spec.uncertainty, problem.levels, problem.cap)
}

/// Computes the nominal, robust (MARO), non-adjustable (MRO) and scenario
/// fronts, prices the robust front and packages everything.
pub fn run(problem: &LoadedProblem, settings: &RunSettings) -> Result<RunArtifact> {
    let spec = &problem.spec;
    if spec.num_objectives() != 2 {
        return Err(MaroError::NotBiObjective(spec.num_objectives()));
    }
    let mut stages = Vec::new();
    let reference = timed(&mut stages, "discretize", || discretize(problem))?;
    let opts = &settings.options;
    let nominal = timed(&mut stages, "nominal", || {
        solve_front(spec, &reference, FrontMode::Nominal, false, &settings.nominal_plan, opts)
    })?;
    let maro = timed(&mut stages, "maro", || {
        solve_front(spec, &reference, FrontMode::Maro, settings.adaptive, &settings.robust_plan, opts)
    })?;
    let mro = if settings.mro {
        Some(timed(&mut stages, "mro", || {
            solve_front(spec, &reference, FrontMode::Mro, settings.adaptive, &settings.robust_plan, opts)
        })?)
    } else {
        None
    };
    let ids: Vec<usize> = match &settings.scenario_fronts {
        ScenarioSelection::None => Vec::new(),
        ScenarioSelection::All => reference.ids(),
        ScenarioSelection::Ids(ids) => ids.clone(),
        ScenarioSelection::WorstCase => match &maro.union {
            Some(u) => u.ids.clone(),
            None => maro
                .front
                .points
                .iter()
                .flat_map(|p| p.solution.objective_wc.iter().chain(&p.solution.constraint_wc).copied())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect(),
        },
    };
    let scenario_fronts = timed(&mut stages, "scenario_fronts", || {
        par::map(&ids, |&id| {
            solve_front(spec, &reference, FrontMode::Scenario(id), false, &settings.nominal_plan, opts)
                .map(|r| ScenarioFront {
                    scenario_id: id,
                    front: r.front,
                })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()
    })?;
    let prices = timed(&mut stages, "price", || price_front(spec, &maro.front, &nominal.front, &opts.nlp))?;
    let traces = Traces {
        maro: maro.traces,
        maro_union: maro.union,
        mro: mro.as_ref().map(|r| r.traces.clone()).unwrap_or_default(),
        mro_union: mro.as_ref().and_then(|r| r.union.clone()),
    };
    let fronts = Fronts {
        nominal: nominal.front,
        maro: maro.front,
        mro: mro.map(|r| r.front),
        scenarios: scenario_fronts,
    };
    Ok(RunArtifact::new(
        problem.file.clone(),
        settings.clone(),
        reference,
        fronts,
        prices,
        traces,
        Timestamps::now(stages),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_mode_parses() {
        assert_eq!("maro".parse::<FrontMode>(), Ok(FrontMode::Maro));
        assert_eq!("scenario:7".parse::<FrontMode>(), Ok(FrontMode::Scenario(7)));
        assert!("scenario:x".parse::<FrontMode>().is_err());
        assert!("robust".parse::<FrontMode>().is_err());
        for m in [FrontMode::Nominal, FrontMode::Mro, FrontMode::Scenario(3)] {
            assert_eq!(m.to_string().parse::<FrontMode>(), Ok(m));
        }
    }
}
