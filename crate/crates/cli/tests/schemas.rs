use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use maro_cli::service::{router, AppState};
use maro_core::artifact::RunArtifact;
use maro_core::problem_file::load_problem;

const DOCS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs");
const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/sp1_artifact.json");

fn schema(file: &str, def: Option<&str>) -> jsonschema::Validator {
    let text = std::fs::read_to_string(format!("{DOCS}/{file}")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    if let Some(def) = def {
        doc["$ref"] = json!(format!("#/$defs/{def}"));
    }
    jsonschema::draft202012::new(&doc).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, instance: &Value) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

const EXPRESSION_PROBLEM: &str = r#"{
  "variables": [
    {"name": "x", "lower": 0, "upper": 1, "role": "here-and-now", "initial": 0.5},
    {"name": "y", "lower": 0, "upper": 1, "role": "wait-and-see", "initial": 0.5}
  ],
  "uncertain_params": [{"name": "u", "lower": -1, "upper": 1, "nominal": 0}],
  "objectives": ["f1", "f2"],
  "constraints": ["g"],
  "expressions": {
    "objectives": [{"op": "pow", "args": [{"var": "x"}, 2]}, {"op": "sub", "args": [1, {"var": "y"}]}],
    "constraints": [{"op": "sub", "args": [{"var": "y"}, {"op": "add", "args": [{"var": "x"}, {"var": "u"}]}]}]
  },
  "discretization": {"levels": {"uniform": 5}}
}"#;

#[test]
fn problem_schema_agrees_with_the_loader() {
    let v = schema("problem.schema.json", None);
    let good = [
        r#"{"model": "sp1"}"#,
        r#"{"model": "column_surrogate", "discretization": {"levels": "vertices_and_mids"}}"#,
        r#"{"model": "sp2", "geometry": {"kind": "ellipsoid", "center": [0, 0], "radii": [1, 1]}}"#,
        EXPRESSION_PROBLEM,
    ];
    for text in good {
        let value: Value = serde_json::from_str(text).unwrap();
        assert_valid(&v, &value);
        load_problem(text).unwrap();
    }
    let bad = [
        r#"{"model": "sp1", "speed": 3}"#,
        r#"{"model": "sp1", "discretization": {"levels": "corners"}}"#,
        r#"{"model": "sp1", "uncertain_params": [{"name": "u", "lower": "low", "upper": 1, "nominal": 0}]}"#,
        r#"{"objectives": ["f1"]}"#,
    ];
    for text in bad {
        let value: Value = serde_json::from_str(text).unwrap();
        assert!(!v.is_valid(&value), "{text}");
        assert!(load_problem(text).is_err(), "{text}");
    }
}

#[test]
fn golden_artifact_matches_its_schema() {
    let text = std::fs::read_to_string(GOLDEN).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    assert_valid(&schema("artifact.schema.json", None), &value);
    assert_valid(&schema("problem.schema.json", None), &value["problem"]);
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
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn service_bodies_match_the_session_schema() {
    let artifact = RunArtifact::from_json(&std::fs::read_to_string(GOLDEN).unwrap()).unwrap();
    let app = router(Arc::new(AppState::new(artifact).unwrap()));
    let (_, meta) = call(&app, "GET", "/meta", None).await;
    assert_valid(&schema("session.schema.json", Some("meta")), &meta);
    let (_, fronts) = call(&app, "GET", "/fronts", None).await;
    assert_valid(&schema("session.schema.json", Some("fronts")), &fronts);

    let (status, session) = call(&app, "POST", "/session", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_valid(&schema("session.schema.json", Some("session")), &session);
    let id = session["id"].as_str().unwrap().to_string();
    let uri = format!("/session/{id}/command");

    let command = schema("session.schema.json", Some("command"));
    let snapshot = schema("session.schema.json", Some("snapshot"));
    let error = schema("session.schema.json", Some("error"));
    for cmd in [
        json!({"command": "move", "objective": "f1", "value": 0.7}),
        json!({"command": "restrict", "objective": "f2", "value": 0.9}),
        json!({"command": "restrict", "objective": "f2", "value": null}),
        json!({"command": "restrict", "objective": "f2"}),
        json!({"command": "reset"}),
    ] {
        assert_valid(&command, &cmd);
        let (status, body) = call(&app, "POST", &uri, Some(cmd)).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_valid(&snapshot, &body);
    }
    for cmd in [
        json!({"command": "mov"}),
        json!({"command": "move", "objective": "f1"}),
        json!({"command": "reset", "speed": 2}),
        json!({"command": "move", "objective": "f1", "value": "far"}),
    ] {
        assert!(!command.is_valid(&cmd), "{cmd}");
        let (status, body) = call(&app, "POST", &uri, Some(cmd)).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_valid(&error, &body);
    }
    let (status, body) = call(&app, "POST", &uri, Some(json!({"command": "restrict", "objective": "f2", "value": -5}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_valid(&error, &body);
    let (status, body) = call(&app, "GET", "/session/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_valid(&error, &body);
}
