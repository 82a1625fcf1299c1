use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use crossfield::mesh::{preset_domain, write_msh, Preset};
use crossfield_cli::{router, AppState};

struct Reply {
    status: StatusCode,
    content_type: String,
    result_id: Option<String>,
    body: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

fn app() -> Router {
    router(Arc::new(AppState::new(None)))
}

async fn call(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> Reply {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(body.into()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let (status, content_type, result_id) = {
        let header = |k: &str| res.headers().get(k).map(|v| v.to_str().unwrap().to_string());
        (res.status(), header("content-type").unwrap_or_default(), header("x-result-id"))
    };
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    Reply { status, content_type, result_id, body: String::from_utf8(bytes.to_vec()).unwrap() }
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, "POST", uri, body.to_string()).await
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, "GET", uri, Body::empty()).await
}

async fn poll(app: &Router, id: &str) -> Reply {
    for _ in 0..600 {
        let r = get(app, &format!("/api/result/{id}")).await;
        if r.status != StatusCode::ACCEPTED {
            return r;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job {id} still pending");
}

fn four_holes(r: f64, d: i32) -> Value {
    json!([[r, 0.0], [-r, 0.0], [0.0, r], [0.0, -r]]
        .iter()
        .map(|c| json!({"center": c, "radius": 0.1, "degree": d}))
        .collect::<Vec<_>>())
}

#[tokio::test]
async fn check_passes_for_four_vortices_in_the_disk() {
    let app = app();
    let r = post(&app, "/api/check", json!({"mesh": {"preset": "disk:1", "h": 0.1}, "holes": four_holes(0.6, 1)})).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "application/json");
    let v = r.json();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["u_target"], 4);
    assert_eq!(v["placed"], 4);
    let id = r.result_id.clone().unwrap();
    let again = get(&app, &format!("/api/result/{id}")).await;
    assert_eq!(again.status, StatusCode::OK);
    assert_eq!(again.body, r.body);
}

#[tokio::test]
async fn failing_check_is_a_result_not_an_error() {
    let app = app();
    let r = post(&app, "/api/check", json!({"mesh": {"preset": "disk:1"}, "holes": [{"center": [0, 0], "radius": 0.1, "degree": 3}]})).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["verdict"], "fail");
    assert_eq!(r.json()["deficit"], 1);
}

#[tokio::test]
async fn annulus_solve_is_queued_and_converges_linearly() {
    let app = app();
    let body = json!({"mesh": {"preset": "annulus:0.4,1", "h": 0.1}, "holes": []});
    let t = post(&app, "/api/solve", body.clone()).await;
    assert_eq!(t.status, StatusCode::ACCEPTED);
    let ticket = t.json();
    assert_eq!(ticket["status"], "pending");
    let id = ticket["id"].as_str().unwrap().to_string();
    assert_eq!(ticket["result"], format!("/api/result/{id}"));
    let r = poll(&app, &id).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["report"]["converged"], true);
    assert_eq!(v["report"]["iterations"], 1);
    assert_eq!(v["ledger"]["verdict"], "pass");
    let again = post(&app, "/api/solve", body).await;
    assert_eq!(again.status, StatusCode::OK);
    assert_eq!(again.json()["status"], "done");
    assert_eq!(again.json()["id"], id);
}

#[tokio::test]
async fn unknown_results_are_404() {
    let app = app();
    for uri in ["/api/result/0000000000000000000000000000000000000000000000000000000000000000", "/api/result/nope", "/api/result/..%2Fetc/svg"] {
        assert_eq!(get(&app, uri).await.status, StatusCode::NOT_FOUND, "{uri}");
    }
    let r = get(&app, &format!("/api/result/{}/svg", "a".repeat(64))).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"], "not_found");
}

#[tokio::test]
async fn schema_violations_name_the_field() {
    let app = app();
    let cases = [
        (json!({"mesh": {"preset": "disk:1"}, "holes": [{"center": [0, 0], "radius": "big", "degree": 4}]}), "holes[0].radius"),
        (json!({"mesh": {"preset": "disk:1"}, "holes": [], "colour": 1}), "colour"),
        (json!({"mesh": {"preset": "disk:1", "h": -1.0}, "holes": []}), "mesh"),
        (json!({"mesh": {}, "holes": []}), "mesh"),
        (json!({"mesh": {"preset": "disk:1"}, "holes": [], "options": {"max_iter": "x"}}), "options.max_iter"),
    ];
    for (body, field) in cases {
        let r = post(&app, "/api/solve", body.clone()).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body}");
        let v = r.json();
        assert_eq!(v["error"], "schema");
        assert_eq!(v["errors"][0]["field"], field, "{}", r.body);
        assert!(!v["errors"][0]["message"].as_str().unwrap().is_empty());
    }
    let r = call(&app, "POST", "/api/check", "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post(&app, "/api/corners", json!({"mesh": {"preset": "torus:1"}})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"], "invalid");
}

#[tokio::test]
async fn infeasible_solve_is_409_unless_overridden() {
    let app = app();
    let holes = json!([{"center": [0, 0], "radius": 0.1, "degree": 3}]);
    let r = post(&app, "/api/solve", json!({"mesh": {"preset": "disk:1", "h": 0.1}, "holes": holes})).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let v = r.json();
    assert_eq!(v["error"], "infeasible");
    assert_eq!((v["u_target"].as_i64(), v["placed"].as_i64()), (Some(4), Some(3)));
    let body = json!({"mesh": {"preset": "disk:1", "h": 0.1}, "holes": holes, "options": {"override_topology": true}});
    let t = post(&app, "/api/solve", body).await;
    assert_eq!(t.status, StatusCode::ACCEPTED);
    let r = poll(&app, t.json()["id"].as_str().unwrap()).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["ledger"]["deficit"], 1);
}

#[tokio::test]
async fn incompatible_neumann_data_is_422() {
    let app = app();
    let r = post(&app, "/api/hfield", json!({"mesh": {"preset": "disk:1", "h": 0.1}, "sources": [{"point": [0, 0], "k": 3}]})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"], "incompatible");
    let r = post(
        &app,
        "/api/energy/renorm",
        json!({
            "mesh": {"preset": "disk:1", "h": 0.1},
            "config": {"points": [[0.5, 0], [-0.5, 0], [0, 0.5], [0, -0.5]], "degrees": [1, 1, 1, 1]},
            "flux": {"kind": "tangent_power", "value": 3}
        }),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn uploaded_meshes_are_referenced_by_id() {
    let app = app();
    let up = post(&app, "/api/mesh", json!({"preset": "polygon:square", "h": 0.1})).await;
    assert_eq!(up.status, StatusCode::OK);
    let v = up.json();
    let id = v["mesh_id"].as_str().unwrap().to_string();
    assert_eq!(v["chi"], 1);
    assert_eq!(v["mesh"]["loops"].as_array().unwrap().len(), 1);
    let r = post(&app, "/api/corners", json!({"mesh": {"mesh_id": id}})).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let ks: Vec<f64> = r.json()["corners"].as_array().unwrap().iter().map(|c| c["chosen_k"].as_f64().unwrap()).collect();
    assert_eq!(ks, vec![0.25; 4]);
    assert_eq!(r.json()["energy"], 0);

    let msh = write_msh(&preset_domain(&Preset::Disk { r: 1.0 }, 0.2).unwrap());
    let up = call(&app, "POST", "/api/mesh", msh).await;
    assert_eq!(up.status, StatusCode::OK, "{}", up.body);
    let mid = up.json()["mesh_id"].as_str().unwrap().to_string();
    let r = post(&app, "/api/check", json!({"mesh": {"mesh_id": mid}, "holes": four_holes(0.5, 1)})).await;
    assert_eq!(r.json()["verdict"], "pass");

    let r = post(&app, "/api/check", json!({"mesh": {"mesh_id": "f".repeat(64)}, "holes": []})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["errors"][0]["field"], "mesh.mesh_id");
    let r = post(&app, "/api/mesh", json!({"mesh_id": mid})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = call(&app, "POST", "/api/mesh", "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn svg_results_are_served() {
    let app = app();
    let r = post(&app, "/api/energy/holes", json!({"mesh": {"preset": "disk:1", "h": 0.2}, "holes": four_holes(0.5, 1)})).await;
    assert_eq!(r.status, StatusCode::OK);
    let id = r.result_id.unwrap();
    let svg = get(&app, &format!("/api/result/{id}/svg")).await;
    assert_eq!(svg.status, StatusCode::OK);
    assert_eq!(svg.content_type, "image/svg+xml");
    assert!(svg.body.starts_with("<svg") && svg.body.trim_end().ends_with("</svg>"));

    let body = json!({"mesh": {"preset": "disk:1", "h": 0.2}, "holes": four_holes(0.5, 1), "outputs": {"svg": true}});
    let t = post(&app, "/api/solve", body).await;
    let id = t.json()["id"].as_str().unwrap().to_string();
    assert_eq!(poll(&app, &id).await.status, StatusCode::OK);
    let svg = get(&app, &format!("/api/result/{id}/svg")).await;
    assert_eq!(svg.status, StatusCode::OK);
    assert!(svg.body.contains("<g id=\"crosses\""));

    let c = post(&app, "/api/check", json!({"mesh": {"preset": "disk:1"}, "holes": []})).await;
    assert_eq!(get(&app, &format!("/api/result/{}/svg", c.result_id.unwrap())).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cache_dir_survives_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let first = router(Arc::new(AppState::new(Some(dir.path().to_path_buf()))));
    let r = post(&first, "/api/hfield", json!({"mesh": {"preset": "disk:1", "h": 0.15}, "sources": [{"point": [0.1, 0.2], "k": 4}], "levels": 5})).await;
    assert_eq!(r.status, StatusCode::OK);
    let id = r.result_id.unwrap();
    assert!(dir.path().join(format!("{id}.json")).exists());
    let second = router(Arc::new(AppState::new(Some(dir.path().to_path_buf()))));
    let again = get(&second, &format!("/api/result/{id}")).await;
    assert_eq!(again.status, StatusCode::OK);
    assert_eq!(again.body, r.body);
    assert_eq!(get(&second, &format!("/api/result/{id}/svg")).await.status, StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_identical_requests_agree() {
    let app = app();
    let body = json!({"mesh": {"preset": "disk:1", "h": 0.1}, "holes": [{"center": [0.4, 0], "radius": 0.1, "degree": 2}, {"center": [-0.4, 0], "radius": 0.1, "degree": 2}]});
    let mut set = tokio::task::JoinSet::new();
    for _ in 0..8 {
        let (app, body) = (app.clone(), body.clone());
        set.spawn(async move { post(&app, "/api/solve", body).await.json()["id"].as_str().unwrap().to_string() });
    }
    let ids: Vec<String> = set.join_all().await;
    assert!(ids.iter().all(|i| *i == ids[0]));
    let r = poll(&app, &ids[0]).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["report"]["converged"], true);
}
