use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::Request;
use axum::Router;
use lingkit_cli::server::router;
use lingkit_cli::session::{load_presets, Service};
use serde_json::{json, Value};
use tower::ServiceExt;

const TOY: &str = "S -> NP VP\nNP -> 'I'\nVP -> 'sleep'\n";

fn app() -> Router {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/presets.json");
    let presets = load_presets(&std::fs::read_to_string(path).unwrap()).unwrap();
    router(Arc::new(Service::new(presets)))
}

async fn call(app: &Router, method: &str, path: &str, body: Value) -> (u16, Value) {
    let body = if body.is_null() { String::new() } else { body.to_string() };
    let req = Request::builder().method(method).uri(path).body(Body::from(body)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn create(app: &Router, grammar: &str, sentence: &str, strategy: &str) -> String {
    let (status, body) = call(app, "POST", "/api/v1/sessions", json!({ "grammar": grammar, "sentence": sentence, "strategy": strategy })).await;
    assert_eq!(status, 201, "{body}");
    body["id"].as_str().unwrap().to_owned()
}

async fn chart(app: &Router, id: &str) -> Value {
    let (status, body) = call(app, "GET", &format!("/api/v1/sessions/{id}/chart"), Value::Null).await;
    assert_eq!(status, 200);
    body
}

fn describe(edge: &Value) -> String {
    let mut rhs: Vec<String> = edge["rhs"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_owned()).collect();
    rhs.insert(edge["dot"].as_u64().unwrap() as usize, "•".into());
    format!("({},{},{} -> {})", edge["i"], edge["j"], edge["lhs"].as_str().unwrap(), rhs.join(" "))
}

#[tokio::test]
async fn each_step_adds_one_edge_until_done() {
    let app = app();
    let id = create(&app, TOY, "I sleep", "td").await;
    let mut count = 0;
    loop {
        let (status, body) = call(&app, "POST", &format!("/api/v1/sessions/{id}/step"), json!({})).await;
        assert_eq!(status, 200);
        if body["done"] == json!(true) {
            break;
        }
        count += 1;
        assert_eq!(body["new_edge"]["id"], json!(count - 1));
        assert_eq!(chart(&app, &id).await["edges"].as_array().unwrap().len(), count);
    }
    let (_, parses) = call(&app, "GET", &format!("/api/v1/sessions/{id}/parses"), Value::Null).await;
    assert_eq!(parses["parses"], json!(["(S (NP I) (VP sleep))"]));
}

#[tokio::test]
async fn fundamental_rule_on_selected_edges() {
    let app = app();
    let id = create(&app, TOY, "I sleep", "td").await;
    let apply = |rule: &'static str, ids: Option<Vec<u64>>| {
        let app = app.clone();
        let path = format!("/api/v1/sessions/{id}/apply");
        async move {
            let body = match ids {
                Some(ids) => json!({ "rule": rule, "edge_ids": ids }),
                None => json!({ "rule": rule }),
            };
            call(&app, "POST", &path, body).await
        }
    };
    let (_, lex) = apply("LexicalInsert", None).await;
    assert_eq!(lex["new_edges"].as_array().unwrap().len(), 2);
    let (_, init) = apply("TopDownInit", None).await;
    assert_eq!(describe(&init["new_edges"][0]), "(0,0,S -> • NP VP)");
    let (status, fund) = apply("Fundamental", Some(vec![0, 2])).await;
    assert_eq!(status, 200);
    let added: Vec<String> = fund["new_edges"].as_array().unwrap().iter().map(describe).collect();
    assert_eq!(added, ["(0,1,S -> NP • VP)"]);

    let (status, tree) = call(&app, "GET", &format!("/api/v1/sessions/{id}/tree?edge=3"), Value::Null).await;
    assert_eq!(status, 200);
    assert_eq!(tree["bracketed"], json!("(S (NP I) VP?)"));
}

#[tokio::test]
async fn reset_to_preset_is_byte_identical() {
    let app = app();
    let presets: Value =
        serde_json::from_str(&std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/presets.json")).unwrap()).unwrap();
    let id = create(&app, "S -> 'x'", "x", "bu").await;
    for preset in presets.as_array().unwrap() {
        let name = preset["name"].as_str().unwrap();
        let (status, _) = call(&app, "POST", &format!("/api/v1/sessions/{id}/reset"), json!({ "preset": name })).await;
        assert_eq!(status, 200);
        let mut expected = preset.clone();
        expected.as_object_mut().unwrap().remove("name");
        assert_eq!(chart(&app, &id).await.to_string(), expected.to_string(), "{name}");
    }
    let (status, _) = call(&app, "POST", &format!("/api/v1/sessions/{id}/reset"), json!({ "preset": "nope" })).await;
    assert_eq!(status, 409);
}

#[tokio::test]
async fn undo_restores_the_previous_chart() {
    let app = app();
    let id = create(&app, TOY, "I sleep", "bu").await;
    call(&app, "POST", &format!("/api/v1/sessions/{id}/step"), json!({})).await;
    let before = chart(&app, &id).await;
    call(&app, "POST", &format!("/api/v1/sessions/{id}/apply"), json!({ "rule": "LexicalInsert" })).await;
    call(&app, "POST", &format!("/api/v1/sessions/{id}/step"), json!({})).await;
    call(&app, "POST", &format!("/api/v1/sessions/{id}/undo"), Value::Null).await;
    let (_, undone) = call(&app, "POST", &format!("/api/v1/sessions/{id}/undo"), Value::Null).await;
    assert_eq!(undone["removed"], json!([1]));
    assert_eq!(chart(&app, &id).await, before);
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    assert_eq!(call(&app, "GET", "/api/v1/sessions/s42/chart", Value::Null).await.0, 404);
    assert_eq!(call(&app, "GET", "/api/v2/presets", Value::Null).await.0, 404);
    assert_eq!(call(&app, "POST", "/api/v1/sessions", json!({ "grammar": "S ->", "sentence": "x" })).await.0, 400);
    assert_eq!(call(&app, "POST", "/api/v1/sessions", json!({ "grammar": TOY, "sentence": "I sleep", "colour": 1 })).await.0, 400);
    let id = create(&app, TOY, "I sleep", "td").await;
    assert_eq!(call(&app, "POST", &format!("/api/v1/sessions/{id}/apply"), json!({ "rule": "Telepathy" })).await.0, 400);
    assert_eq!(call(&app, "GET", &format!("/api/v1/sessions/{id}/tree?edge=99"), Value::Null).await.0, 404);
    assert_eq!(call(&app, "GET", &format!("/api/v1/sessions/{id}/tree"), Value::Null).await.0, 400);
    let (status, body) = call(&app, "POST", "/api/v1/sessions", json!({ "grammar": TOY, "sentence": "you sleep" })).await;
    assert_eq!(status, 400);
    assert!(body["error"].as_str().unwrap().contains("you"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn sessions_progress_independently() {
    let app = app();
    let grammar = "S -> NP VP\nNP -> NP PP | 'I' | 'men' | 'telescopes'\nVP -> V NP | VP PP\nPP -> P NP\nV -> 'saw'\nP -> 'with'";
    let sentence = "I saw men with telescopes with telescopes";
    let mut ids = Vec::new();
    for _ in 0..4 {
        ids.push(create(&app, grammar, sentence, "bu").await);
    }
    let tasks: Vec<_> = ids
        .iter()
        .map(|id| {
            let app = app.clone();
            let path = format!("/api/v1/sessions/{id}/step");
            tokio::spawn(async move {
                let mut steps = 0;
                while call(&app, "POST", &path, json!({})).await.1["done"] != json!(true) {
                    steps += 1;
                }
                steps
            })
        })
        .collect();
    let mut counts = Vec::new();
    for t in tasks {
        counts.push(t.await.unwrap());
    }
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    let first = chart(&app, &ids[0]).await;
    for id in &ids[1..] {
        assert_eq!(chart(&app, id).await, first);
    }
}
