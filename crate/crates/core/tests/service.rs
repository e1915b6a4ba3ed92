use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use sentinel::scenario::io;
use sentinel::service::{router, AppState};

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(value["schema_version"], 1, "{uri}: {value}");
    (status, value)
}

async fn create(app: &Router, text: &str) -> String {
    let (status, v) = call(app, "POST", "/api/scenarios", Some(text.to_string())).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

async fn wait(app: &Router, job: &str) -> Value {
    for _ in 0..600 {
        let (status, v) = call(app, "GET", &format!("/api/jobs/{job}"), None).await;
        assert_eq!(status, StatusCode::OK);
        if !matches!(v["status"].as_str(), Some("queued") | Some("running")) {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("job {job} did not finish");
}

async fn solve(app: &Router, id: &str, body: Value) -> Value {
    let (status, v) = call(app, "POST", &format!("/api/scenarios/{id}/solve"), Some(body.to_string())).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{v}");
    wait(app, v["job_id"].as_str().unwrap()).await
}

fn app(dir: &std::path::Path) -> Router {
    router(AppState::open(dir, Duration::from_secs(60)).unwrap())
}

#[tokio::test]
async fn b0_on_bundled_example() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, io::example_json()).await;
    let job = solve(&app, &id, json!({"engine": "b0", "case": 1})).await;
    assert_eq!(job["status"], "done", "{job}");
    assert_eq!(job["result"]["plan"]["time_to_target"], 10);
    assert_eq!(job["result"]["validation"]["feasible"], true);
}

#[tokio::test]
async fn forced_knockouts_give_nine_steps() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, io::example_json()).await;
    for engine in ["b0", "exact"] {
        let job = solve(&app, &id, json!({"engine": engine, "case": 1, "budget": 0.0, "forced_knockouts": [2, 4]})).await;
        assert_eq!(job["status"], "done", "{job}");
        assert_eq!(job["result"]["plan"]["time_to_target"], 9, "{engine}");
    }
    let job = solve(&app, &id, json!({"engine": "exact", "case": 1, "budget": 0.0})).await;
    assert_eq!(job["result"]["plan"]["time_to_target"], 10);
}

#[tokio::test]
async fn repeated_solves_agree() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, io::example_json()).await;
    let a = solve(&app, &id, json!({"engine": "exact", "case": 4, "horizon": 9, "budget": 1.0})).await;
    let b = solve(&app, &id, json!({"engine": "exact", "case": 4, "horizon": 9, "budget": 1.0})).await;
    assert_eq!(a["result"]["plan"]["objective"], b["result"]["plan"]["objective"]);
    let ped = a["result"]["plan"]["ped"].as_f64().unwrap();
    assert!((0.93..=0.97).contains(&ped), "{ped}");
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, _) = call(&app, "GET", "/api/scenarios/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/api/jobs/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "POST", "/api/scenarios/nope/solve", Some("{}".into())).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    // Unparseable scenario: 422 with the offending field.
    let mut bad: Value = serde_json::from_str(io::example_json()).unwrap();
    bad.as_object_mut().unwrap().remove("omega");
    let (s, v) = call(&app, "POST", "/api/scenarios", Some(bad.to_string())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["diagnostics"][0]["field"], "omega", "{v}");
    let (s, _) = call(&app, "POST", "/api/scenarios", Some("{not json".into())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    // Malformed solve body.
    let id = create(&app, io::example_json()).await;
    let (s, _) = call(&app, "POST", &format!("/api/scenarios/{id}/solve"), Some("{\"engine\": 5".into())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(&app, "POST", &format!("/api/scenarios/{id}/solve"), Some("{\"enigne\": \"b0\"}".into())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unvalidated_scenario_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut sc = io::example();
    sc.omega = 0;
    let (s, v) = call(&app, "POST", "/api/scenarios", Some(io::to_json(&sc))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert_eq!(v["validated"], false);
    assert!(v["diagnostics"].as_array().unwrap().iter().any(|d| d["field"] == "omega"), "{v}");
    let id = v["id"].as_str().unwrap();
    let (s, _) = call(&app, "POST", &format!("/api/scenarios/{id}/solve"), Some("{}".into())).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "GET", &format!("/api/scenarios/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn tables_for_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, io::example_json()).await;
    let (s, v) = call(&app, "GET", &format!("/api/scenarios/{id}/tables"), None).await;
    assert_eq!(s, StatusCode::OK);
    let n = v["n"].as_u64().unwrap() as usize;
    assert_eq!(n, 169);
    assert_eq!(v["evade"].as_array().unwrap().len(), n);
    assert_eq!(v["positions"].as_array().unwrap().len(), n);
    let sc = io::example();
    let tb = sc.derive_tables();
    assert_eq!(v["multi_covered"].as_array().unwrap().len(), tb.multi_covered.len());
}

#[tokio::test]
async fn state_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (id, job_id) = {
        let app = app(dir.path());
        let id = create(&app, io::example_json()).await;
        let (_, v) = call(&app, "POST", &format!("/api/scenarios/{id}/solve"), Some(json!({"engine": "b0"}).to_string())).await;
        let job_id = v["job_id"].as_str().unwrap().to_string();
        wait(&app, &job_id).await;
        (id, job_id)
    };
    let app = app(dir.path());
    let (s, v) = call(&app, "GET", &format!("/api/scenarios/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["validated"], true);
    let (s, v) = call(&app, "GET", &format!("/api/jobs/{job_id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "done");
    assert!(dir.path().join("scenarios").join(format!("{id}.json")).exists());
}

#[tokio::test]
async fn concurrent_jobs_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let a = create(&app, io::example_json()).await;
    let mut other = io::example();
    other.sensors.clear();
    let b = create(&app, &io::to_json(&other)).await;
    let (ra, rb) = tokio::join!(
        solve(&app, &a, json!({"engine": "exact", "case": 1, "budget": 0.0})),
        solve(&app, &b, json!({"engine": "exact", "case": 1, "budget": 0.0})),
    );
    assert_eq!(ra["result"]["plan"]["time_to_target"], 10);
    let d = other.derive_tables().min_start_distance(other.target()).unwrap();
    assert_eq!(rb["result"]["plan"]["time_to_target"], d);
}
