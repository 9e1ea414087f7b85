//! Acceptance suite: one PASS/FAIL line per criterion, then a single verdict.
//!
//! Runs without the test harness so the lines show in plain `cargo test`
//! output; exits non-zero if any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use maro_cli::service::{router, AppState, SessionView};
use maro_core::adaptive::{certify, AdaptiveOptions};
use maro_core::artifact::RunArtifact;
use maro_core::case_study::{builtin, BUILTIN_NAMES};
use maro_core::discretization::{generate_box, BoxLevels, ReferenceDiscretization, DEFAULT_SCENARIO_CAP};
use maro_core::front::{dominance_check, FrontApproximation, FrontPlan, Normalization};
use maro_core::nlp::{self, NlpOptions, NlpProblem, SparseRow};
use maro_core::pipeline::{discretize, run, solve_front, FrontMode, FrontRun, RunSettings, ScenarioSelection};
use maro_core::problem::{ProblemSpec, UncertainParamSpec, UncertaintySet};
use maro_core::problem_file::{load_problem, LoadedProblem};
use maro_core::replicated::ParetoPoint;

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/sp1_artifact.json");
const TOL: f64 = 1e-6;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { name, passed, detail }
}

fn builtin_problem(name: &str) -> LoadedProblem {
    load_problem(&format!(r#"{{"model": "{name}"}}"#)).unwrap()
}

/// Ideal and nadir over the union of the given fronts.
fn joint(fronts: &[&[Vec<f64>]]) -> Normalization {
    let all: Vec<&Vec<f64>> = fronts.iter().flat_map(|f| f.iter()).collect();
    let m = all[0].len();
    let ideal = (0..m).map(|i| all.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
    let nadir = (0..m).map(|i| all.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    Normalization { ideal, nadir }
}

/// Largest normalized amount by which `below` rises above `above`.
fn exceedance(below: &[Vec<f64>], above: &[Vec<f64>]) -> f64 {
    let norm = joint(&[below, above]);
    match dominance_check(below, above, &norm) {
        Ok(r) => r.max_exceedance,
        Err(e) => {
            eprintln!("dominance check failed: {e}");
            f64::INFINITY
        }
    }
}

fn sorted(front: &FrontApproximation<ParetoPoint>) -> Vec<Vec<f64>> {
    let mut v = front.objective_vectors();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]));
    v
}

/// Pointwise distance of two equally long fronts in a joint normalization.
fn pointwise(a: &FrontApproximation<ParetoPoint>, b: &FrontApproximation<ParetoPoint>) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let norm = joint(&[&a, &b]);
    a.iter()
        .zip(&b)
        .flat_map(|(p, q)| {
            let (p, q) = (norm.apply(p), norm.apply(q));
            (0..p.len()).map(move |i| (p[i] - q[i]).abs())
        })
        .fold(0.0, f64::max)
}

struct OracleRun {
    name: &'static str,
    spec: ProblemSpec,
    reference: ReferenceDiscretization,
    adaptive: FrontRun,
    all: FrontRun,
}

fn oracle_run(name: &'static str, opts: &AdaptiveOptions) -> OracleRun {
    let problem = builtin_problem(name);
    let reference = discretize(&problem).unwrap();
    let plan = FrontPlan::Schedule { points: 8 };
    let solve = |adaptive| solve_front(&problem.spec, &reference, FrontMode::Maro, adaptive, &plan, opts).unwrap();
    let adaptive = solve(true);
    let all = solve(false);
    OracleRun {
        name,
        spec: problem.spec.clone(),
        reference,
        adaptive,
        all,
    }
}

fn oracle_equivalence(runs: &[OracleRun], seconds: f64) -> Outcome {
    let mut passed = seconds < 120.0;
    let mut parts = Vec::new();
    for r in runs {
        let d = pointwise(&r.adaptive.front, &r.all.front);
        passed &= d <= 1e-4 && r.adaptive.front.len() == 8;
        parts.push(format!(
            "{}: {} points vs {} on {} scenarios, max pointwise {d:.2e}",
            r.name,
            r.adaptive.front.len(),
            r.all.front.len(),
            r.reference.len()
        ));
    }
    parts.push(format!("{seconds:.1} s"));
    outcome("oracle equivalence", passed, parts.join("; "))
}

fn scenario_economy(sp1: &OracleRun) -> Outcome {
    let union = sp1.adaptive.union.as_ref().map_or(usize::MAX, |u| u.len());
    let share = union as f64 / sp1.reference.len() as f64;
    let (ad, all) = (&sp1.adaptive, &sp1.all);
    let passed = share <= 0.5 && ad.replicas < all.replicas;
    outcome(
        "scenario economy",
        passed,
        format!(
            "union {union}/{} ({:.0}%); WSV replicas {} adaptive ({} solves) vs {} all-scenario ({} solves)",
            sp1.reference.len(),
            share * 100.0,
            ad.replicas,
            ad.replicated_solves,
            all.replicas,
            all.replicated_solves
        ),
    )
}

fn discretization_count() -> Outcome {
    let column = discretize(&builtin_problem("column_surrogate")).unwrap();
    let square = UncertaintySet::new_box(vec![
        UncertainParamSpec::new("a", -1.0, 1.0, 0.0),
        UncertainParamSpec::new("b", -1.0, 1.0, 0.0),
    ])
    .unwrap();
    let square = generate_box(&square, BoxLevels::VerticesAndMids, DEFAULT_SCENARIO_CAP).unwrap();
    let nominals = |r: &ReferenceDiscretization| r.scenarios.iter().filter(|s| s.is_nominal).count();
    let passed = column.len() == 28 && square.len() == 9 && nominals(&column) == 1 && nominals(&square) == 1;
    outcome(
        "discretization count",
        passed,
        format!("column {} scenarios, centered 2D box {}", column.len(), square.len()),
    )
}

fn front_ordering(artifacts: &[(&str, &RunArtifact)]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, a) in artifacts {
        let nominal = a.fronts.nominal.objective_vectors();
        let maro = a.fronts.maro.objective_vectors();
        let Some(mro) = a.fronts.mro.as_ref().map(|f| f.objective_vectors()) else {
            passed = false;
            parts.push(format!("{name}: no MRO front"));
            continue;
        };
        let (lo, hi) = (exceedance(&nominal, &maro), exceedance(&maro, &mro));
        passed &= lo <= TOL && hi <= TOL;
        parts.push(format!("{name}: nominal/MARO {lo:.2e}, MARO/MRO {hi:.2e}"));
    }
    outcome("front ordering", passed, parts.join("; "))
}

fn scenario_front_bound(sp1: &RunArtifact) -> Outcome {
    let maro = sp1.fronts.maro.objective_vectors();
    let mut worst = (f64::NEG_INFINITY, 0);
    for s in &sp1.fronts.scenarios {
        let e = exceedance(&s.front.objective_vectors(), &maro);
        if e > worst.0 {
            worst = (e, s.scenario_id);
        }
    }
    let count = sp1.fronts.scenarios.len();
    outcome(
        "scenario-front bound",
        count == sp1.discretization.len() && worst.0 <= TOL,
        format!("{count} scenario fronts, worst exceedance {:.2e} (scenario {})", worst.0, worst.1),
    )
}

fn price_properties(artifacts: &[(&str, &RunArtifact)]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, a) in artifacts {
        let (mut nsr_excess, mut min_price, mut min_alpha) = (f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY);
        for r in &a.prices.reports {
            for (n, m) in r.f_nsr.iter().zip(&r.f_maro) {
                nsr_excess = nsr_excess.max(n - m);
            }
            min_price = r.p_r.iter().fold(min_price, |acc, &p| acc.min(p));
            if !r.flags.d_zero {
                min_alpha = min_alpha.min(r.alpha_star);
            }
        }
        passed &= nsr_excess <= TOL && min_price >= -TOL && min_alpha >= 1.0 - TOL;
        parts.push(format!(
            "{name}: F_nsr-F_maro {nsr_excess:.2e}, min p_R {min_price:.2e}, min alpha {min_alpha:.6}"
        ));
    }
    let sp1 = artifacts[0].1;
    let end = sp1
        .prices
        .reports
        .iter()
        .max_by(|a, b| a.f_maro[0].total_cmp(&b.f_maro[0]))
        .map_or(f64::INFINITY, |r| r.p_r[1]);
    passed &= end <= TOL;
    parts.push(format!("sp1 second price component at the max-f1 end {end:.2e}"));
    outcome("price properties", passed, parts.join("; "))
}

fn certificates(runs: &[(&str, &ProblemSpec, &ReferenceDiscretization, &[ParetoPoint], &AdaptiveOptions)]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, spec, reference, points, opts) in runs {
        let (mut excess, mut violation) = (f64::NEG_INFINITY, 0.0f64);
        for p in points.iter() {
            let c = certify(spec, p, reference, opts).unwrap();
            for e in &c.objective_excess {
                excess = excess.max(e.unwrap_or(f64::INFINITY));
            }
            violation = violation.max(c.max_violation);
        }
        passed &= excess <= TOL && violation <= TOL;
        parts.push(format!(
            "{name}: {} points, max excess {excess:.2e}, max violation {violation:.2e}",
            points.len()
        ));
    }
    outcome("certificate", passed, parts.join("; "))
}

struct Micro<F: Fn(f64) -> (f64, Vec<f64>, f64, Vec<f64>)> {
    f: F,
    m: usize,
}

impl<F: Fn(f64) -> (f64, Vec<f64>, f64, Vec<f64>) + Sync> NlpProblem for Micro<F> {
    fn dim(&self) -> usize {
        1
    }
    fn lower(&self) -> &[f64] {
        &[0.0]
    }
    fn upper(&self) -> &[f64] {
        &[1.0]
    }
    fn num_constraints(&self) -> usize {
        self.m
    }
    fn evaluate(&self, z: &[f64]) -> maro_core::Result<(f64, Vec<f64>)> {
        let (v, g, _, _) = (self.f)(z[0]);
        Ok((v, g))
    }
    fn gradients(&self, z: &[f64]) -> maro_core::Result<(Vec<f64>, Vec<SparseRow>)> {
        let (_, _, dv, dg) = (self.f)(z[0]);
        Ok((vec![dv], dg.into_iter().map(|d| vec![(0, d)]).collect()))
    }
}

fn numerical_hygiene() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = (0.0f64, "");
    let mut checked = 0;
    for name in BUILTIN_NAMES {
        let spec = builtin(name).unwrap();
        for _ in 0..100 {
            let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * rng.gen::<f64>();
            let x: Vec<f64> = spec.hnv().map(|v| draw(v.lower, v.upper)).collect();
            let y: Vec<f64> = spec.wsv().map(|v| draw(v.lower, v.upper)).collect();
            let u: Vec<f64> = spec.uncertainty.params.iter().map(|p| draw(p.lower, p.upper)).collect();
            let exact = spec.jacobian_unchecked(&x, &y, &u).unwrap();
            let fd = spec.finite_difference_jacobian(&x, &y, &u).unwrap();
            for (re, rf) in exact.objectives.iter().chain(&exact.constraints).zip(fd.objectives.iter().chain(&fd.constraints)) {
                for (a, b) in re.iter().zip(rf) {
                    let rel = (a - b).abs() / a.abs().max(b.abs()).max(1.0);
                    if rel > worst.0 {
                        worst = (rel, name);
                    }
                }
            }
            checked += 1;
        }
    }
    let opts = NlpOptions::default();
    let quadratic = Micro {
        f: |x| ((x - 0.3).powi(2), vec![], 2.0 * (x - 0.3), vec![]),
        m: 0,
    };
    let bounded = Micro {
        f: |x| (x, vec![0.7 - x], 1.0, vec![-1.0]),
        m: 1,
    };
    let q = nlp::solve(&quadratic, &[0.9], &opts);
    let b = nlp::solve(&bounded, &[0.1], &opts);
    let (eq, eb) = ((q.x_opt[0] - 0.3).abs(), (b.x_opt[0] - 0.7).abs());
    let passed = worst.0 <= 1e-4 && eq <= TOL && eb <= TOL && b.max_violation <= TOL;
    outcome(
        "numerical hygiene",
        passed,
        format!(
            "{checked} points, worst relative gradient error {:.2e} ({}); micro-problems off by {eq:.1e} and {eb:.1e}",
            worst.0, worst.1
        ),
    )
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn open(app: &Router) -> String {
    let (_, body) = call(app, "POST", "/session", None).await;
    serde_json::from_value::<SessionView>(body).unwrap().id
}

async fn service(golden: RunArtifact, offline: RunArtifact, dense: RunArtifact) -> Outcome {
    let mut failures = Vec::new();
    let app = router(Arc::new(AppState::new(golden.clone()).unwrap()));
    let id = open(&app).await;
    let cmd = |c: Value| {
        let app = app.clone();
        let uri = format!("/session/{id}/command");
        async move { call(&app, "POST", &uri, Some(c)).await }
    };

    // command suite
    let (s, snap) = cmd(json!({"command": "restrict", "objective": "f2", "value": 0.5})).await;
    if s != StatusCode::OK || snap["f_nav"][1].as_f64().unwrap_or(f64::INFINITY) > 0.5 + 1e-12 {
        failures.push("restrict".to_string());
    }
    let (s, snap) = cmd(json!({"command": "move", "objective": "f2", "value": 1.5})).await;
    if s != StatusCode::OK || snap["last_move"]["clamped"] != true {
        failures.push("clamped move".to_string());
    }
    let (s, _) = cmd(json!({"command": "restrict", "objective": "f2", "value": -100.0})).await;
    if s != StatusCode::CONFLICT {
        failures.push(format!("infeasible restriction gave {s}"));
    }
    let (s, snap) = cmd(json!({"command": "reset"})).await;
    if s != StatusCode::OK || snap["restrictions"] != json!([null, null]) {
        failures.push("reset".to_string());
    }
    let (s, _) = cmd(json!({"command": "move", "objective": "f9", "value": 1.0})).await;
    if s != StatusCode::UNPROCESSABLE_ENTITY {
        failures.push(format!("unknown objective gave {s}"));
    }

    // anchors against a fresh offline run
    if golden.without_timestamps() != offline.without_timestamps() {
        failures.push("golden artifact differs from an offline run".to_string());
    }
    let mut anchors = 0;
    for (point, report) in offline.fronts.maro.points.iter().zip(&offline.prices.reports) {
        let (_, snap) = cmd(json!({"command": "move", "objective": "f1", "value": point.objectives[0]})).await;
        let same = |v: &Value, want: &[f64]| serde_json::from_value::<Vec<f64>>(v.clone()).ok().as_deref() == Some(want);
        if same(&snap["f_nav"], &point.objectives)
            && same(&snap["markers"]["nsr"], &report.f_nsr)
            && same(&snap["markers"]["mo"], &report.f_mo)
            && same(&snap["markers"]["price"], &report.p_r)
            && snap["markers"]["alpha"].as_f64() == Some(report.alpha_star)
        {
            anchors += 1;
        }
    }
    let total = offline.fronts.maro.len();
    if anchors != total {
        failures.push(format!("{anchors}/{total} anchors exact"));
    }

    // latency on a 100-point front
    let app = router(Arc::new(AppState::new(dense.clone()).unwrap()));
    let id = open(&app).await;
    let uri = format!("/session/{id}/command");
    let (lo, hi) = (
        dense.fronts.maro.points.first().unwrap().objectives[0],
        dense.fronts.maro.points.last().unwrap().objectives[0],
    );
    let mut samples = Vec::new();
    for i in 0..300 {
        let t = (i as f64 * 0.618_033_988_7).fract();
        let body = match i % 10 {
            7 => json!({"command": "restrict", "objective": "f2", "value": null}),
            9 => json!({"command": "reset"}),
            k if k % 2 == 0 => json!({"command": "move", "objective": "f1", "value": lo + t * (hi - lo)}),
            _ => json!({"command": "move", "objective": "f2", "value": 0.2 + t}),
        };
        let start = Instant::now();
        let (s, _) = call(&app, "POST", &uri, Some(body)).await;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        if s != StatusCode::OK {
            failures.push(format!("latency command {i} gave {s}"));
            break;
        }
    }
    samples.sort_by(f64::total_cmp);
    let p95 = samples[((samples.len() as f64) * 0.95).ceil() as usize - 1];
    if p95 > 50.0 {
        failures.push(format!("p95 {p95:.2} ms"));
    }
    let detail = format!(
        "command suite, {anchors}/{total} anchors exact, p95 {p95:.2} ms on {} points{}",
        dense.fronts.maro.len(),
        if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
    );
    outcome("service", failures.is_empty() && dense.fronts.maro.len() >= 95, detail)
}

fn main() {
    let opts = AdaptiveOptions::default();
    let mut outcomes = Vec::new();

    let start = Instant::now();
    let oracles = [oracle_run("sp1", &opts), oracle_run("sp2", &opts)];
    outcomes.push(oracle_equivalence(&oracles, start.elapsed().as_secs_f64()));
    outcomes.push(scenario_economy(&oracles[0]));
    outcomes.push(discretization_count());

    let sp1 = run(
        &builtin_problem("sp1"),
        &RunSettings {
            scenario_fronts: ScenarioSelection::All,
            ..RunSettings::default()
        },
    )
    .unwrap();
    let column = run(
        &builtin_problem("column_surrogate"),
        &RunSettings {
            scenario_fronts: ScenarioSelection::None,
            ..RunSettings::default()
        },
    )
    .unwrap();
    let artifacts = [("sp1", &sp1), ("column", &column)];
    outcomes.push(front_ordering(&artifacts));
    outcomes.push(scenario_front_bound(&sp1));
    outcomes.push(price_properties(&artifacts));

    let column_spec = column.load_problem().unwrap().spec;
    let mut runs: Vec<(&str, &ProblemSpec, &ReferenceDiscretization, &[ParetoPoint], &AdaptiveOptions)> = oracles
        .iter()
        .map(|r| (r.name, &r.spec, &r.reference, r.adaptive.front.points.as_slice(), &opts))
        .collect();
    runs.push((
        "column",
        &column_spec,
        &column.discretization,
        &column.fronts.maro.points,
        &column.settings.options,
    ));
    outcomes.push(certificates(&runs));
    outcomes.push(numerical_hygiene());

    let golden = RunArtifact::from_json(&std::fs::read_to_string(GOLDEN).unwrap()).unwrap();
    let offline = run(&golden.load_problem().unwrap(), &golden.settings).unwrap();
    let dense = run(
        &builtin_problem("sp1"),
        &RunSettings {
            robust_plan: FrontPlan::Schedule { points: 100 },
            mro: false,
            scenario_fronts: ScenarioSelection::None,
            ..RunSettings::default()
        },
    )
    .unwrap();
    let runtime = tokio::runtime::Runtime::new().unwrap();
    outcomes.push(runtime.block_on(service(golden, offline, dense)));

    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", outcomes.len());
}
