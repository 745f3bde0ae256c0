//! HTTP front end. Every page request is timed from receipt until the
//! response body is ready and the timing is appended to the shared collector.

use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tiny_http::{Header, Method, Server};
use url::Url;

use crate::engine::{
    load_database, Backend, Database, EngineError, LoadError, MetricsCollector, MetricsRecord, RequestMetrics,
    SqliteBackend,
};
use crate::tagtext::escape_html;

use super::model::{build_page, AppError, Page};
use super::render::render_page;
use super::schema::validate_references;

/// JSON service configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeConfig {
    pub data_dir: PathBuf,
    pub port: u16,
    /// Connection string of an alternative backend; the in-memory engine when absent.
    #[serde(default)]
    pub backend: Option<String>,
    #[serde(default)]
    pub metrics_path: Option<PathBuf>,
}

impl ServeConfig {
    pub fn from_file(path: &Path) -> Result<ServeConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Loads `schema.json` and the table CSVs from `dir` and checks cross-table references.
pub fn load_dir(dir: &Path) -> Result<Database, LoadError> {
    let db = load_database(&dir.join("schema.json"), dir)?;
    validate_references(&db)?;
    Ok(db)
}

/// Wraps `db` in the backend named by `conn`.
pub fn make_backend(db: Database, conn: Option<&str>) -> Result<Arc<dyn Backend>, EngineError> {
    Ok(match conn {
        None => Arc::new(db),
        Some(c) => Arc::new(SqliteBackend::connect(c, &db)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
}

const HTML: &str = "text/html; charset=utf-8";

impl Response {
    fn html(status: u16, body: String) -> Response {
        Response { status, content_type: HTML, body }
    }

    fn error(status: u16, message: &str) -> Response {
        let title = match status {
            400 => "Bad Request",
            404 => "Not Found",
            405 => "Method Not Allowed",
            _ => "Internal Server Error",
        };
        Response::html(
            status,
            format!(
                "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{status} {title}</title></head>\n\
                 <body data-error=\"{status}\">\n<h1>{status} {title}</h1>\n<p>{}</p>\n</body>\n</html>\n",
                escape_html(message)
            ),
        )
    }
}

/// The application: immutable data behind a backend plus the metrics sink.
#[derive(Clone)]
pub struct App {
    backend: Arc<dyn Backend>,
    metrics: Arc<MetricsCollector>,
}

impl App {
    pub fn new(backend: Arc<dyn Backend>) -> App {
        App::with_metrics(backend, Arc::new(MetricsCollector::new()))
    }

    pub fn with_metrics(backend: Arc<dyn Backend>, metrics: Arc<MetricsCollector>) -> App {
        App { backend, metrics }
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend.as_ref()
    }

    pub fn metrics(&self) -> &MetricsCollector {
        &self.metrics
    }

    /// Builds and renders one page, recording its timing.
    pub fn request(&self, page: &Page) -> (Result<String, AppError>, MetricsRecord) {
        let start = Instant::now();
        let mut m = RequestMetrics::default();
        let html = build_page(page, self.backend.as_ref(), &mut m).and_then(|model| render_page(&model));
        let record = m.finish(page.path(), start.elapsed());
        self.metrics.record(record.clone());
        (html, record)
    }

    /// Answers a GET for `target`, a path with optional query string.
    pub fn handle(&self, target: &str) -> Response {
        let Ok(url) = Url::parse("http://localhost").and_then(|base| base.join(target)) else {
            return Response::error(400, "unparseable request target");
        };
        let segments: Vec<&str> = url.path().trim_matches('/').split('/').collect();
        let filter = url.query_pairs().find(|(k, _)| k == "filter").map(|(_, v)| v.into_owned());
        let page = match segments.as_slice() {
            ["health"] => return Response { status: 200, content_type: "text/plain", body: "ok\n".into() },
            ["metrics"] => {
                return Response { status: 200, content_type: "application/x-ndjson", body: self.metrics.to_jsonl() }
            }
            [kind @ ("ligands" | "diseases")] => Page::parse(kind, filter.as_deref().filter(|f| !f.is_empty())),
            [kind @ ("object" | "disease"), id] => Page::parse(kind, Some(id)),
            _ => return Response::error(404, &format!("no route for {}", url.path())),
        };
        let page = match page {
            Ok(p) => p,
            Err(e) => return Response::error(400, &e.to_string()),
        };
        match self.request(&page).0 {
            Ok(html) => Response::html(200, html),
            Err(AppError::NotFound(what)) => Response::error(404, &format!("{what} does not exist")),
            Err(AppError::BadRequest(m)) => Response::error(400, &m),
            Err(e) => Response::error(500, &e.to_string()),
        }
    }
}

/// A running HTTP server; dropping it leaves the workers running, `stop` shuts them down.
pub struct ServerHandle {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn port(&self) -> u16 {
        self.server.server_addr().to_ip().map(|a| a.port()).unwrap_or_default()
    }

    /// Blocks until every worker exits.
    pub fn join(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }

    pub fn stop(self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        self.join();
    }
}

/// Starts `workers` threads answering requests on `addr` (port 0 picks a free port).
pub fn start(app: App, addr: &str, workers: usize) -> io::Result<ServerHandle> {
    let server = Arc::new(Server::http(addr).map_err(io::Error::other)?);
    let workers = (0..workers.max(1))
        .map(|_| {
            let (server, app) = (Arc::clone(&server), app.clone());
            thread::spawn(move || {
                while let Ok(req) = server.recv() {
                    let resp = if *req.method() == Method::Get {
                        app.handle(req.url())
                    } else {
                        Response::error(405, "only GET is supported")
                    };
                    let header = Header::from_bytes("Content-Type", resp.content_type).expect("valid header");
                    let out =
                        tiny_http::Response::from_string(resp.body).with_status_code(resp.status).with_header(header);
                    // A client that hung up is not a server error.
                    let _ = req.respond(out);
                }
            })
        })
        .collect();
    Ok(ServerHandle { server, workers })
}

/// Loads the configured data and serves until the process is killed.
pub fn serve(cfg: &ServeConfig) -> Result<(), String> {
    let db = load_dir(&cfg.data_dir).map_err(|e| e.to_string())?;
    let backend = make_backend(db, cfg.backend.as_deref()).map_err(|e| e.to_string())?;
    let metrics = match &cfg.metrics_path {
        Some(p) => MetricsCollector::with_file(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => MetricsCollector::new(),
    };
    let app = App::with_metrics(backend, Arc::new(metrics));
    let threads = thread::available_parallelism().map(|n| n.get()).unwrap_or(4);
    let handle = start(app, &format!("0.0.0.0:{}", cfg.port), threads).map_err(|e| e.to_string())?;
    eprintln!("listening on port {}", handle.port());
    handle.join();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::app::gen::{gen_data, GenConfig};
    use std::io::{Read, Write};
    use std::net::TcpStream;

    fn app() -> App {
        App::new(Arc::new(gen_data(&GenConfig::new(42, 1)).db))
    }

    #[test]
    fn routes_and_statuses() {
        let app = app();
        assert_eq!(app.handle("/health").status, 200);
        assert_eq!(app.handle("/ligands?filter=approved").status, 200);
        assert_eq!(app.handle("/ligands").status, 200);
        assert_eq!(app.handle("/diseases?filter=immuno").status, 200);
        assert_eq!(app.handle("/object/1").status, 200);
        assert_eq!(app.handle("/disease/1").status, 200);
        assert_eq!(app.handle("/object/999999").status, 404);
        assert!(app.handle("/object/999999").body.contains("<html>"));
        assert_eq!(app.handle("/object/abc").status, 400);
        assert_eq!(app.handle("/ligands?filter=nonsense").status, 400);
        assert_eq!(app.handle("/nowhere").status, 404);
    }

    #[test]
    fn metrics_lines_after_a_page_view() {
        let app = app();
        app.handle("/object/2");
        let body = app.handle("/metrics").body;
        let line: serde_json::Value = serde_json::from_str(body.lines().next().unwrap()).unwrap();
        for k in ["query_count", "query_time", "build_time_excl", "build_time_incl"] {
            assert!(line.get(k).is_some(), "{k}");
        }
        assert_eq!(line["query_count"], 7);
    }

    #[test]
    fn serves_over_tcp() {
        let handle = start(app(), "127.0.0.1:0", 2).unwrap();
        let mut s = TcpStream::connect(("127.0.0.1", handle.port())).unwrap();
        s.write_all(b"GET /object/999999 HTTP/1.0\r\nHost: x\r\n\r\n").unwrap();
        let mut out = String::new();
        s.read_to_string(&mut out).unwrap();
        assert!(out.starts_with("HTTP/1.0 404") || out.starts_with("HTTP/1.1 404"), "{out}");
        handle.stop();
    }
}
