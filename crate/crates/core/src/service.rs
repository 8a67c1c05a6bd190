//! Local review service over a finding store.
//!
//! | method | path                          | body                          |
//! |--------|-------------------------------|-------------------------------|
//! | GET    | `/api/findings`               |                               |
//! | GET    | `/api/findings/{id}`          |                               |
//! | POST   | `/api/findings/{id}/decision` | `{"decision": "accepted"}`    |
//! | POST   | `/api/apply`                  |                               |
//! | GET    | `/api/status`                 |                               |
//!
//! Errors are `{"error": "..."}` with 400 (bad body), 404 (unknown id or
//! route), 405 (wrong method), 409 (decision on an applied candidate or a
//! finding without one) or 500. Requests are handled one at a time.

use std::net::SocketAddr;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;
use tiny_http::{Header, Method, Response, Server};

use crate::solver::Solver;
use crate::store::{Decision, FindingStore, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("refusing to bind non-loopback address {0}")]
    NotLoopback(SocketAddr),
    #[error("cannot bind {addr}: {message}")]
    Bind { addr: SocketAddr, message: String },
}

/// A JSON reply.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Value,
}

impl ApiResponse {
    fn ok(body: impl serde::Serialize) -> ApiResponse {
        ApiResponse {
            status: 200,
            body: serde_json::to_value(body).expect("response serializes"),
        }
    }

    fn error(status: u16, message: impl std::fmt::Display) -> ApiResponse {
        ApiResponse {
            status,
            body: json!({ "error": message.to_string() }),
        }
    }
}

fn store_error(e: StoreError) -> ApiResponse {
    let status = match e {
        StoreError::UnknownId(_) => 404,
        StoreError::AlreadyApplied(_) | StoreError::NoCandidate(_) => 409,
        _ => 500,
    };
    ApiResponse::error(status, e)
}

#[derive(Deserialize)]
struct DecisionBody {
    decision: String,
}

/// Request routing against one store.
pub struct ReviewService<S: Solver> {
    store: FindingStore,
    solver: S,
}

impl<S: Solver> ReviewService<S> {
    pub fn new(store: FindingStore, solver: S) -> Self {
        ReviewService { store, solver }
    }

    pub fn store(&self) -> &FindingStore {
        &self.store
    }

    pub fn handle(&mut self, method: &str, url: &str, body: &[u8]) -> ApiResponse {
        let path = url.split('?').next().unwrap_or("");
        let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
        match (method, parts.as_slice()) {
            ("GET", ["api", "findings"]) => ApiResponse::ok(self.store.findings()),
            ("GET", ["api", "findings", id]) => match self.store.finding(id) {
                Ok(f) => ApiResponse::ok(f),
                Err(e) => store_error(e),
            },
            ("POST", ["api", "findings", id, "decision"]) => self.decide(id, body),
            ("POST", ["api", "apply"]) => match self.store.apply_accepted(&self.solver) {
                Ok(s) => ApiResponse::ok(s),
                Err(e) => store_error(e),
            },
            ("GET", ["api", "status"]) => ApiResponse::ok(self.store.status()),
            (_, ["api", "findings"])
            | (_, ["api", "findings", _])
            | (_, ["api", "findings", _, "decision"])
            | (_, ["api", "apply"])
            | (_, ["api", "status"]) => ApiResponse::error(405, format!("{method} not allowed on {path}")),
            _ => ApiResponse::error(404, format!("no route for {path}")),
        }
    }

    fn decide(&mut self, id: &str, body: &[u8]) -> ApiResponse {
        let parsed: DecisionBody = match serde_json::from_slice(body) {
            Ok(b) => b,
            Err(e) => return ApiResponse::error(400, format!("invalid body: {e}")),
        };
        let decision = match parsed.decision.as_str() {
            "accepted" => Decision::Accepted,
            "rejected" => Decision::Rejected,
            other => {
                return ApiResponse::error(400, format!("decision must be accepted or rejected, got `{other}`"))
            }
        };
        match self.store.decide(id, decision) {
            Ok(()) => match self.store.finding(id) {
                Ok(f) => ApiResponse::ok(f.decision),
                Err(e) => store_error(e),
            },
            Err(e) => store_error(e),
        }
    }
}

/// Stops a running [`ReviewServer`] from another thread.
#[derive(Clone)]
pub struct StopHandle(Arc<Server>);

impl StopHandle {
    pub fn stop(&self) {
        self.0.unblock();
    }
}

pub struct ReviewServer<S: Solver> {
    server: Arc<Server>,
    addr: SocketAddr,
    service: ReviewService<S>,
}

impl<S: Solver> ReviewServer<S> {
    /// Bind `addr`; non-loopback addresses need `allow_remote`.
    pub fn bind(addr: SocketAddr, allow_remote: bool, service: ReviewService<S>) -> Result<Self, ServiceError> {
        if !allow_remote && !addr.ip().is_loopback() {
            return Err(ServiceError::NotLoopback(addr));
        }
        let server = Server::http(addr).map_err(|e| ServiceError::Bind {
            addr,
            message: e.to_string(),
        })?;
        let addr = server
            .server_addr()
            .to_ip()
            .expect("bound to an IP address");
        Ok(ReviewServer {
            server: Arc::new(server),
            addr,
            service,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop_handle(&self) -> StopHandle {
        StopHandle(self.server.clone())
    }

    /// Serve until stopped; returns the service for inspection.
    pub fn run(mut self) -> ReviewService<S> {
        let json = Header::from_bytes("Content-Type", "application/json").expect("valid header");
        for mut req in self.server.incoming_requests() {
            let mut body = Vec::new();
            let reply = match req.as_reader().read_to_end(&mut body) {
                Ok(_) => {
                    let method = match req.method() {
                        Method::Get => "GET",
                        Method::Post => "POST",
                        _ => "OTHER",
                    };
                    self.service.handle(method, req.url(), &body)
                }
                Err(e) => ApiResponse::error(400, e),
            };
            let text = serde_json::to_string_pretty(&reply.body).expect("json value serializes");
            let resp = Response::from_string(text)
                .with_status_code(reply.status)
                .with_header(json.clone());
            // A client that hung up does not stop the service.
            let _ = req.respond(resp);
        }
        self.service
    }
}
