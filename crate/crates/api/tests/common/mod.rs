#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use learnmate_core::clock::ManualClock;
use learnmate_core::provider::{Concept, FixtureAuthor, Provider, ScriptedProvider};
use learnmate_core::workflow::{Workspace, WorkspaceConfig};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/world_history")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

pub fn at(text: &str) -> DateTime<Utc> {
    text.parse().unwrap()
}

pub fn author() -> Arc<dyn Provider> {
    let concepts: Vec<Concept> = serde_json::from_str(&read("concepts.json")).unwrap();
    Arc::new(FixtureAuthor::new(concepts))
}

pub fn golden_script() -> Arc<dyn Provider> {
    Arc::new(ScriptedProvider::from_json(&read("golden_script.json")).unwrap())
}

pub fn clock() -> Arc<ManualClock> {
    Arc::new(ManualClock::with_tick(at("2025-09-05T12:00:00Z"), Duration::seconds(30)))
}

pub fn workspace(dir: &Path, provider: Arc<dyn Provider>, clock: Arc<ManualClock>) -> Arc<Workspace> {
    Arc::new(Workspace::open(dir, provider, clock, WorkspaceConfig::default()).unwrap().0)
}

#[derive(Debug, Clone)]
pub struct Reply {
    pub status: StatusCode,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.body).unwrap()
    }

    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap()
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap().to_string()
    }
}

/// An in-process server plus every body it returned, in order.
pub struct Client {
    pub app: Router,
    pub log: Vec<(String, Reply)>,
}

impl Client {
    pub fn new(ws: Arc<Workspace>) -> Self {
        Self {
            app: learnmate_api::router(ws),
            log: Vec::new(),
        }
    }

    pub async fn send(&mut self, method: Method, uri: &str, body: Option<&str>) -> Reply {
        let mut req = Request::builder().method(method.clone()).uri(uri);
        if body.is_some() {
            req = req.header(header::CONTENT_TYPE, "application/json");
        }
        let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let content_type = res
            .headers()
            .get(header::CONTENT_TYPE)
            .map(|v| v.to_str().unwrap().to_string())
            .unwrap_or_default();
        let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
        let reply = Reply {
            status,
            content_type,
            body,
        };
        self.log.push((format!("{method} {uri}"), reply.clone()));
        reply
    }

    pub async fn get(&mut self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None).await
    }

    pub async fn post(&mut self, uri: &str, body: &str) -> Reply {
        self.send(Method::POST, uri, Some(body)).await
    }

    pub async fn post_empty(&mut self, uri: &str) -> Reply {
        self.send(Method::POST, uri, None).await
    }

    /// Ingests the fixture course and profile and creates plan `p1`.
    pub async fn seed(&mut self) -> Reply {
        let manifest = fixtures().join("manifest.json");
        let body = serde_json::json!({ "manifest_path": manifest }).to_string();
        assert_eq!(self.post("/courses", &body).await.status, StatusCode::CREATED);
        assert_eq!(self.post("/profiles", &read("profile.json")).await.status, StatusCode::CREATED);
        let plan = self
            .post("/plans", r#"{"learner_id":"learner-1","course_id":"world-history-era2"}"#)
            .await;
        assert_eq!(plan.status, StatusCode::CREATED, "{}", plan.text());
        plan
    }
}
