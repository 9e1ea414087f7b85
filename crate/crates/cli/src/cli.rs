//! `maro` subcommands.

use std::fmt;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use maro_core::adaptive::{AdaptiveOptions, WcScenarioSet};
use maro_core::artifact::RunArtifact;
use maro_core::front::{dominance_check, DominanceReport, FrontApproximation, FrontPlan, Normalization, SandwichOptions};
use maro_core::pipeline::{self, FrontMode, FrontRun, RunSettings, ScenarioSelection};
use maro_core::price::{price_front, FrontPrices};
use maro_core::problem_file::{from_json_str, load_problem, LoadedProblem};
use maro_core::replicated::ParetoPoint;
use maro_core::MaroError;

use crate::service::{self, AppState};
use crate::tables::{self, TraceReport};

#[derive(Debug, Parser)]
#[command(name = "maro", version, about = "Adjustable robust multi-criteria fronts, prices and navigation")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit the reference discretization of a problem.
    Discretize {
        /// Problem file, or `builtin:<model>`.
        problem: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compute one front.
    Front {
        problem: String,
        /// nominal, maro, mro or scenario:<id>.
        #[arg(long, default_value = "maro")]
        mode: FrontMode,
        /// Grow worst-case scenario sets adaptively (default for robust modes).
        #[arg(long, conflicts_with = "all_scenarios")]
        adaptive: bool,
        /// Replicate over every reference scenario instead.
        #[arg(long)]
        all_scenarios: bool,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Price of robustness for every point of the robust front.
    Price {
        #[arg(required_unless_present = "artifact")]
        problem: Option<String>,
        /// Read prices from a run artifact instead of solving.
        #[arg(long, conflicts_with = "problem")]
        artifact: Option<PathBuf>,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Which scenario is worst case for which objective or constraint.
    Trace {
        #[arg(required_unless_present = "artifact")]
        problem: Option<String>,
        #[arg(long, conflicts_with = "problem")]
        artifact: Option<PathBuf>,
        /// Robust mode to trace.
        #[arg(long, value_enum, default_value_t = RobustMode::Maro)]
        mode: RobustMode,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Full pipeline into a run artifact.
    Run {
        problem: String,
        /// Artifact path.
        #[arg(short = 'o', long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = ScenarioFronts::WorstCase)]
        scenario_fronts: ScenarioFronts,
        /// Skip the non-adjustable front.
        #[arg(long)]
        no_mro: bool,
        /// Solve robust fronts on the whole discretization.
        #[arg(long)]
        all_scenarios: bool,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare two fronts pointwise in normalized objectives; exit 1 if they differ.
    CompareFronts {
        /// Front, front-run or artifact file (artifacts contribute their robust front).
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// HTTP navigation service over a run artifact.
    Serve {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RobustMode {
    Maro,
    Mro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioFronts {
    None,
    WorstCase,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// JSON output file (default: stdout).
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    /// Tabular output as CSV, to the given file or to stdout in place of JSON.
    #[arg(long, num_args = 0..=1, default_missing_value = "-", value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Fixed number of evenly spread weighted-sum points instead of sandwiching.
    #[arg(long, conflicts_with_all = ["eps", "max_solves"])]
    pub points: Option<usize>,
    /// Sandwich gap tolerance in normalized objectives.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_solves: Option<usize>,
}

impl PlanArgs {
    pub fn plan(&self) -> FrontPlan {
        match self.points {
            Some(points) => FrontPlan::Schedule { points },
            None => {
                let d = SandwichOptions::default();
                FrontPlan::Sandwich(SandwichOptions {
                    eps: self.eps.unwrap_or(d.eps),
                    max_solves: self.max_solves.unwrap_or(d.max_solves),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// NLP multistarts per solve.
    #[arg(long)]
    pub starts: Option<usize>,
}

impl SolverArgs {
    pub fn options(&self) -> AdaptiveOptions {
        let mut o = AdaptiveOptions::default();
        o.nlp.seed = self.seed;
        if let Some(s) = self.starts {
            o.nlp.starts = s.max(1);
        }
        o
    }
}

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: std::io::Error },
    Core(MaroError),
    Usage(String),
    /// Fronts differ beyond the tolerance.
    Mismatch(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Mismatch(m) => write!(f, "fronts differ: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<MaroError> for CliError {
    fn from(e: MaroError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// 1 for infeasible models and mismatching fronts, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Usage(_) => 2,
            CliError::Mismatch(_) => 1,
            CliError::Core(e) => match e {
                MaroError::Schema { .. }
                | MaroError::InvalidSpec(_)
                | MaroError::UnknownModel(_)
                | MaroError::UnknownScenario(_)
                | MaroError::UnknownObjective(_)
                | MaroError::DimensionTooLarge { .. }
                | MaroError::WrongGeometry { .. }
                | MaroError::InvalidWeights(_)
                | MaroError::NotBiObjective(_)
                | MaroError::DimensionMismatch { .. } => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        return out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io);
    }
    fs::write(path, text).map_err(io)
}

/// Reads a problem file; `builtin:<model>` names a built-in model directly.
pub fn read_problem(arg: &str) -> CliResult<LoadedProblem> {
    let text = match arg.strip_prefix("builtin:") {
        Some(name) => serde_json::json!({ "model": name }).to_string(),
        None => read(Path::new(arg))?,
    };
    load_problem(&text).map_err(|e| match e {
        MaroError::Schema { .. } if !arg.starts_with("builtin:") => CliError::Usage(format!("{arg}: {e}")),
        other => other.into(),
    })
}

pub fn read_artifact(path: &Path) -> CliResult<RunArtifact> {
    RunArtifact::from_json(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(out: &OutputArgs, value: &T, csv: impl FnOnce() -> String) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value).expect("outputs serialize") + "\n";
    let csv_to_stdout = out.csv.as_deref() == Some(Path::new("-"));
    if let Some(path) = &out.csv {
        write(path, &csv())?;
    }
    match &out.output {
        Some(path) => write(path, &json),
        None if csv_to_stdout => Ok(()),
        None => write(Path::new("-"), &json),
    }
}

enum FrontFile {
    Artifact(Box<RunArtifact>),
    Run(Box<FrontRun>),
    Front(FrontApproximation<ParetoPoint>),
    Points(Vec<Vec<f64>>),
}

/// Objective vectors of a front, front-run or artifact file.
pub fn read_front(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = read(path)?;
    let value: serde_json::Value =
        from_json_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    // typed parse of the detected shape, so errors carry a path
    let parsed: MaroResult<FrontFile> = if value.get("fronts").is_some() {
        RunArtifact::from_json(&text).map(|a| FrontFile::Artifact(Box::new(a)))
    } else if value.get("front").is_some() {
        from_json_str(&text).map(|r| FrontFile::Run(Box::new(r)))
    } else if value.is_array() {
        from_json_str(&text).map(FrontFile::Points)
    } else {
        from_json_str(&text).map(FrontFile::Front)
    };
    let file = parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(match file {
        FrontFile::Artifact(a) => a.fronts.maro.objective_vectors(),
        FrontFile::Run(r) => r.front.objective_vectors(),
        FrontFile::Front(f) => f.objective_vectors(),
        FrontFile::Points(p) => p,
    })
}

type MaroResult<T> = Result<T, MaroError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontComparison {
    pub points_a: usize,
    pub points_b: usize,
    pub normalization: Normalization,
    /// Largest normalized difference of matched points, when counts agree.
    pub max_pointwise: Option<f64>,
    pub a_vs_b: DominanceReport,
    pub b_vs_a: DominanceReport,
    pub tol: f64,
    pub matches: bool,
}

/// Sorted by the first objective and normalized over both fronts, the fronts
/// match if every point pair differs by at most `tol`. Fronts with different
/// point counts are compared through their interpolants instead.
pub fn compare_fronts(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> CliResult<FrontComparison> {
    if a.is_empty() || b.is_empty() {
        return Err(MaroError::EmptyFront.into());
    }
    let m = a[0].len();
    if a.iter().chain(b).any(|p| p.len() != m) {
        return Err(CliError::Usage("fronts have different objective counts".into()));
    }
    let mut ideal = vec![f64::INFINITY; m];
    let mut nadir = vec![f64::NEG_INFINITY; m];
    for p in a.iter().chain(b) {
        for j in 0..m {
            ideal[j] = ideal[j].min(p[j]);
            nadir[j] = nadir[j].max(p[j]);
        }
    }
    let norm = Normalization { ideal, nadir };
    let sorted = |f: &[Vec<f64>]| {
        let mut v: Vec<Vec<f64>> = f.iter().map(|p| norm.apply(p)).collect();
        v.sort_by(|x, y| x[0].total_cmp(&y[0]));
        v
    };
    let (sa, sb) = (sorted(a), sorted(b));
    let max_pointwise = (sa.len() == sb.len()).then(|| {
        sa.iter()
            .zip(&sb)
            .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    });
    let a_vs_b = dominance_check(a, b, &norm)?;
    let b_vs_a = dominance_check(b, a, &norm)?;
    let matches = match max_pointwise {
        Some(d) => d <= tol,
        None => a_vs_b.interpolant_exceedance.abs() <= tol && b_vs_a.interpolant_exceedance.abs() <= tol,
    };
    Ok(FrontComparison {
        points_a: a.len(),
        points_b: b.len(),
        normalization: norm,
        max_pointwise,
        a_vs_b,
        b_vs_a,
        tol,
        matches,
    })
}

fn robust_front(
    problem: &LoadedProblem,
    mode: FrontMode,
    plan: &PlanArgs,
    solver: &SolverArgs,
) -> CliResult<(maro_core::discretization::ReferenceDiscretization, FrontRun)> {
    let reference = pipeline::discretize(problem)?;
    let run = pipeline::solve_front(&problem.spec, &reference, mode, true, &plan.plan(), &solver.options())?;
    Ok((reference, run))
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Discretize { problem, out } => {
            let problem = read_problem(&problem)?;
            let reference = pipeline::discretize(&problem)?;
            emit(&out, &reference, || tables::discretization_csv(&problem.spec, &reference))
        }
        Command::Front {
            problem,
            mode,
            adaptive: _,
            all_scenarios,
            plan,
            solver,
            out,
        } => {
            let problem = read_problem(&problem)?;
            let reference = pipeline::discretize(&problem)?;
            let run = pipeline::solve_front(
                &problem.spec,
                &reference,
                mode,
                !all_scenarios,
                &plan.plan(),
                &solver.options(),
            )?;
            log::info!(
                "{mode}: {} points, {} replicated solves, {} WSV copies",
                run.front.len(),
                run.replicated_solves,
                run.replicas
            );
            emit(&out, &run, || tables::front_csv(&problem.spec, &run.front))
        }
        Command::Price {
            problem,
            artifact,
            plan,
            solver,
            out,
        } => {
            let (spec, prices): (_, FrontPrices) = match artifact {
                Some(path) => {
                    let a = read_artifact(&path)?;
                    (a.load_problem()?.spec, a.prices)
                }
                None => {
                    let problem = read_problem(problem.as_deref().expect("clap requires a problem"))?;
                    let (reference, maro) = robust_front(&problem, FrontMode::Maro, &plan, &solver)?;
                    let opts = solver.options();
                    let nominal = pipeline::solve_front(
                        &problem.spec,
                        &reference,
                        FrontMode::Nominal,
                        false,
                        &plan.plan(),
                        &opts,
                    )?;
                    let prices = price_front(&problem.spec, &maro.front, &nominal.front, &opts.nlp)?;
                    (problem.spec, prices)
                }
            };
            emit(&out, &prices, || tables::price_csv(&spec, &prices.reports))
        }
        Command::Trace {
            problem,
            artifact,
            mode,
            plan,
            solver,
            out,
        } => {
            let (problem, reference, front, traces, union) = match artifact {
                Some(path) => {
                    let a = read_artifact(&path)?;
                    let problem = a.load_problem()?;
                    let (front, traces, union) = match mode {
                        RobustMode::Maro => (a.fronts.maro, a.traces.maro, a.traces.maro_union),
                        RobustMode::Mro => (
                            a.fronts.mro.ok_or_else(|| CliError::Usage("artifact has no MRO front".into()))?,
                            a.traces.mro,
                            a.traces.mro_union,
                        ),
                    };
                    (problem, a.discretization, front, traces, union)
                }
                None => {
                    let problem = read_problem(problem.as_deref().expect("clap requires a problem"))?;
                    let mode = match mode {
                        RobustMode::Maro => FrontMode::Maro,
                        RobustMode::Mro => FrontMode::Mro,
                    };
                    let (reference, run) = robust_front(&problem, mode, &plan, &solver)?;
                    (problem, reference, run.front, run.traces, run.union)
                }
            };
            let union = union.unwrap_or_else(|| WcScenarioSet::full(&reference));
            let report = TraceReport::new(&problem.spec, &reference, &front, &traces, &union);
            emit(&out, &report, || report.to_csv(&problem.spec))
        }
        Command::Run {
            problem,
            output,
            scenario_fronts,
            no_mro,
            all_scenarios,
            plan,
            solver,
        } => {
            let problem = read_problem(&problem)?;
            let settings = RunSettings {
                robust_plan: plan.plan(),
                nominal_plan: plan.plan(),
                adaptive: !all_scenarios,
                mro: !no_mro,
                scenario_fronts: match scenario_fronts {
                    ScenarioFronts::None => ScenarioSelection::None,
                    ScenarioFronts::WorstCase => ScenarioSelection::WorstCase,
                    ScenarioFronts::All => ScenarioSelection::All,
                },
                options: solver.options(),
            };
            let artifact = pipeline::run(&problem, &settings)?;
            for s in &artifact.timestamps.stages {
                log::info!("{}: {:.3} s", s.stage, s.seconds);
            }
            write(&output, &artifact.to_json())
        }
        Command::CompareFronts { a, b, tol, out } => {
            let cmp = compare_fronts(&read_front(&a)?, &read_front(&b)?, tol)?;
            emit(&out, &cmp, String::new)?;
            if cmp.matches {
                Ok(())
            } else {
                Err(CliError::Mismatch(match cmp.max_pointwise {
                    Some(d) => format!("max pointwise difference {d:.3e} > {tol:.1e}"),
                    None => format!(
                        "{} vs {} points, interpolant gaps {:.3e} / {:.3e} (tol {tol:.1e})",
                        cmp.points_a, cmp.points_b, cmp.a_vs_b.interpolant_exceedance, cmp.b_vs_a.interpolant_exceedance
                    ),
                }))
            }
        }
        Command::Serve { artifact, port, host } => {
            let state = Arc::new(AppState::new(read_artifact(&artifact)?)?);
            let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: PathBuf::from("<runtime>"),
                source,
            })?;
            let addr = SocketAddr::new(host, port);
            runtime
                .block_on(service::serve(state, addr))
                .map_err(|source| CliError::Io {
                    path: PathBuf::from(addr.to_string()),
                    source,
                })
        }
    }
}
