//! Run artifacts: everything needed to inspect a run and to open navigation
//! sessions without re-solving.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adaptive::{RefinementTrace, WcScenarioSet};
use crate::discretization::ReferenceDiscretization;
use crate::error::{MaroError, Result};
use crate::front::FrontApproximation;
use crate::navigation::{Anchor, NavigationData};
use crate::pipeline::RunSettings;
use crate::price::{nominal_wsv, FrontPrices};
use crate::problem::ProblemSpec;
use crate::problem_file::{from_json_str, LoadedProblem, ProblemFile};
use crate::replicated::ParetoPoint;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFront {
    pub scenario_id: usize,
    pub front: FrontApproximation<ParetoPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fronts {
    pub nominal: FrontApproximation<ParetoPoint>,
    pub maro: FrontApproximation<ParetoPoint>,
    #[serde(default)]
    pub mro: Option<FrontApproximation<ParetoPoint>>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioFront>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    pub maro: Vec<RefinementTrace>,
    pub maro_union: Option<WcScenarioSet>,
    #[serde(default)]
    pub mro: Vec<RefinementTrace>,
    #[serde(default)]
    pub mro_union: Option<WcScenarioSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock data; the only part of an artifact that differs between
/// identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    /// RFC 3339, UTC.
    pub created: String,
    pub stages: Vec<StageTime>,
}

impl Timestamps {
    pub fn now(stages: Vec<StageTime>) -> Self {
        Self {
            created: humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string(),
            stages,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub format_version: u32,
    pub tool_version: String,
    pub problem: ProblemFile,
    /// SHA-256 of the problem's canonical JSON, hex encoded.
    pub problem_hash: String,
    pub settings: RunSettings,
    pub discretization: ReferenceDiscretization,
    pub fronts: Fronts,
    pub prices: FrontPrices,
    pub traces: Traces,
    pub timestamps: Timestamps,
}

/// Hex SHA-256 of the canonical problem JSON.
pub fn problem_hash(problem: &ProblemFile) -> String {
    let digest = Sha256::digest(problem.to_canonical_json().as_bytes());
    format!("{digest:x}")
}

impl RunArtifact {
    pub fn new(
        problem: ProblemFile,
        settings: RunSettings,
        discretization: ReferenceDiscretization,
        fronts: Fronts,
        prices: FrontPrices,
        traces: Traces,
        timestamps: Timestamps,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            problem_hash: problem_hash(&problem),
            problem,
            settings,
            discretization,
            fronts,
            prices,
            traces,
            timestamps,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifacts serialize")
    }

    /// Parses and checks an artifact: format version, problem hash, and that
    /// the embedded problem still builds.
    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: RunArtifact = from_json_str(text)?;
        if artifact.format_version != FORMAT_VERSION {
            return Err(MaroError::Schema {
                path: "format_version".into(),
                line: 0,
                column: 0,
                message: format!("unsupported format version {}", artifact.format_version),
            });
        }
        let expected = problem_hash(&artifact.problem);
        if artifact.problem_hash != expected {
            return Err(MaroError::Schema {
                path: "problem_hash".into(),
                line: 0,
                column: 0,
                message: format!("hash {} does not match the embedded problem ({expected})", artifact.problem_hash),
            });
        }
        if artifact.prices.reports.len() != artifact.fronts.maro.points.len() {
            return Err(MaroError::MissingNsr(artifact.prices.reports.len()));
        }
        Ok(artifact)
    }

    /// Rebuilds the problem embedded in the artifact.
    pub fn load_problem(&self) -> Result<LoadedProblem> {
        self.problem.build(&self.problem.to_canonical_json())
    }

    /// The same artifact with timestamps cleared, for reproducibility checks.
    pub fn without_timestamps(&self) -> Self {
        let mut a = self.clone();
        a.timestamps = Timestamps {
            created: String::new(),
            stages: Vec::new(),
        };
        a
    }

    /// Anchors for navigation: the robust front with its NSR values and the
    /// pricing front.
    pub fn navigation_data(&self) -> Result<Arc<NavigationData>> {
        let problem = self.load_problem()?;
        navigation_data(&problem.spec, &self.fronts.maro, &self.prices)
    }
}

/// Navigation anchors from a priced robust front.
pub fn navigation_data(
    spec: &ProblemSpec,
    robust: &FrontApproximation<ParetoPoint>,
    prices: &FrontPrices,
) -> Result<Arc<NavigationData>> {
    if prices.reports.len() != robust.points.len() {
        return Err(MaroError::MissingNsr(prices.reports.len()));
    }
    let anchors = robust
        .points
        .iter()
        .zip(&prices.reports)
        .map(|(p, r)| Anchor {
            objectives: p.objectives.clone(),
            x: p.solution.x_star.clone(),
            y: nominal_wsv(p),
            nsr: Some(r.f_nsr.clone()),
            y_nsr: Some(r.y_nsr.clone()),
        })
        .collect();
    let nominal = prices
        .pricing_front
        .iter()
        .map(|p| Anchor {
            objectives: p.objectives.clone(),
            x: p.x.clone(),
            y: p.y.clone(),
            nsr: None,
            y_nsr: None,
        })
        .collect();
    Ok(Arc::new(NavigationData::new(
        spec.objective_names.clone(),
        spec.hnv().map(|v| v.name.clone()).collect(),
        spec.wsv().map(|v| v.name.clone()).collect(),
        anchors,
        nominal,
    )?))
}
