mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use latnav::server::router;
use latnav::service::EditService;
use latnav_core::synthgen::Split;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    _dir: tempfile::TempDir,
    service: Arc<EditService>,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let layout = common::service_workspace(dir.path());
    let service = Arc::new(EditService::load(&layout).unwrap());
    Fixture { _dir: dir, service }
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), Body::from)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn first_heldout(s: &EditService) -> String {
    s.dataset.manifest.objects[s.dataset.indices(Split::Heldout)[0]].id.clone()
}

#[tokio::test]
async fn health_reports_the_checkpoint() {
    let f = fixture();
    let (status, body) = call(&router(f.service.clone()), "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&body);
    assert_eq!(v["checkpoint_hash"], json!(f.service.checkpoint_hash));
    assert_eq!(v["consistent"], json!(true));
    assert!(v["version"].is_string());
}

#[tokio::test]
async fn semantics_list_the_bank() {
    let f = fixture();
    let (status, body) = call(&router(f.service.clone()), "GET", "/api/semantics", None).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&body);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), f.service.bank.directions.len());
    for (item, d) in list.iter().zip(&f.service.bank.directions) {
        assert_eq!(item["id"], json!(d.id));
        assert_eq!(item["dist_std"], json!(d.dist_std));
    }
}

#[tokio::test]
async fn objects_return_decoded_thumbnails() {
    let f = fixture();
    let app = router(f.service.clone());
    let (status, body) = call(&app, "GET", "/api/objects?n=3", None).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&body);
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[0]["id"], json!(first_heldout(&f.service)));
    assert_eq!(v[0]["cloud"].as_array().unwrap().len(), 64 * 3);
    for bad in ["/api/objects?n=0", "/api/objects?n=x"] {
        assert_eq!(call(&app, "GET", bad, None).await.0, StatusCode::BAD_REQUEST);
    }
}

#[tokio::test]
async fn object_lookup_and_unknown_ids() {
    let f = fixture();
    let app = router(f.service.clone());
    let id = first_heldout(&f.service);
    let (status, body) = call(&app, "GET", &format!("/api/object/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&body);
    assert_eq!(v["labels"].as_array().unwrap().len(), 64);
    assert_eq!(v["cloud"].as_array().unwrap().len(), 64 * 3);
    let (status, body) = call(&app, "GET", "/api/object/no-such-chair", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(json_of(&body)["error"].as_str().unwrap().contains("no-such-chair"));
}

#[tokio::test]
async fn empty_edit_is_the_original_decode() {
    let f = fixture();
    let id = first_heldout(&f.service);
    let body = json!({"object_id": id, "terms": []}).to_string();
    let (status, bytes) = call(&router(f.service.clone()), "POST", "/api/edit", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&bytes);
    assert_eq!(v["edited"], v["original"]);
    assert_eq!(v["edited_latent"], v["original_latent"]);
    let decoded = f.service.ae.reconstruct(&f.service.object(&id).unwrap().unlabeled()).unwrap().to_flat();
    let served: Vec<f64> = serde_json::from_value(v["edited"].clone()).unwrap();
    assert_eq!(served.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), decoded.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
}

#[tokio::test]
async fn edit_moves_the_latent_along_the_direction() {
    let f = fixture();
    let d = &f.service.bank.directions[0];
    let body = json!({"object_id": first_heldout(&f.service), "terms": [{"direction_id": d.id, "alpha": 2.0}]}).to_string();
    let (status, bytes) = call(&router(f.service.clone()), "POST", "/api/edit", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&bytes);
    let z0: Vec<f64> = serde_json::from_value(v["original_latent"].clone()).unwrap();
    let z1: Vec<f64> = serde_json::from_value(v["edited_latent"].clone()).unwrap();
    let step: f64 = z1.iter().zip(&z0).zip(&d.normal).map(|((a, b), n)| (a - b) * n).sum();
    assert!((step - 2.0 * d.dist_std).abs() < 1e-9, "{step}");
    assert_eq!(v["sls"].as_object().unwrap().len(), 4);
}

#[tokio::test]
async fn unknown_direction_is_404_with_the_id() {
    let f = fixture();
    let body = json!({"object_id": first_heldout(&f.service), "terms": [{"direction_id": "legs/hovering", "alpha": 1.0}]}).to_string();
    let (status, bytes) = call(&router(f.service.clone()), "POST", "/api/edit", Some(body)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(json_of(&bytes)["error"].as_str().unwrap().contains("legs/hovering"));
}

#[tokio::test]
async fn malformed_edits_are_400() {
    let f = fixture();
    let app = router(f.service.clone());
    let id = first_heldout(&f.service);
    for body in [
        "{not json".to_string(),
        json!({"object_id": id, "terms": [], "extra": 1}).to_string(),
        json!({"terms": []}).to_string(),
        json!({"object_id": id, "latent": [0.0], "terms": []}).to_string(),
        json!({"latent": [0.0, 1.0], "terms": []}).to_string(),
        json!({"object_id": id, "terms": [{"direction_id": "x"}]}).to_string(),
    ] {
        let (status, _) = call(&app, "POST", "/api/edit", Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    }
}

#[tokio::test]
async fn stale_checkpoint_is_409() {
    let f = fixture();
    let app = router(f.service.clone());
    let body = json!({"object_id": first_heldout(&f.service), "terms": [], "checkpoint_hash": "feed"}).to_string();
    assert_eq!(call(&app, "POST", "/api/edit", Some(body)).await.0, StatusCode::CONFLICT);

    let dir = tempfile::tempdir().unwrap();
    let layout = common::service_workspace(dir.path());
    let mut svc = EditService::load(&layout).unwrap();
    svc.bank.checkpoint_hash = "0".repeat(64);
    let app = router(Arc::new(svc));
    assert_eq!(call(&app, "GET", "/api/semantics", None).await.0, StatusCode::CONFLICT);
    let body = json!({"object_id": first_heldout(&f.service), "terms": []}).to_string();
    assert_eq!(call(&app, "POST", "/api/edit", Some(body)).await.0, StatusCode::CONFLICT);
    let (_, health) = call(&app, "GET", "/api/health", None).await;
    assert_eq!(json_of(&health)["consistent"], json!(false));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_identical_edits_agree() {
    let f = fixture();
    let app = router(f.service.clone());
    let terms: Vec<Value> = f.service.bank.directions.iter().take(2).map(|d| json!({"direction_id": d.id, "alpha": -1.5})).collect();
    let body = json!({"object_id": first_heldout(&f.service), "terms": terms}).to_string();
    let handles: Vec<_> = (0..16)
        .map(|_| {
            let (app, body) = (app.clone(), body.clone());
            tokio::spawn(async move { call(&app, "POST", "/api/edit", Some(body)).await })
        })
        .collect();
    let mut out = Vec::new();
    for h in handles {
        let (status, bytes) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        out.push(bytes);
    }
    assert!(out.iter().all(|b| *b == out[0]));
}
