//! Command-line interface. Exit codes: 0 success, 1 verification failure or
//! runtime error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::app::{self, gen_data, App, GenConfig, Manifest, Page, ServeConfig};
use crate::engine::{compile, Backend};
use crate::harness::{self, BenchConfig, DEFAULT_SAMPLE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lq", version, about = "Nested-query pages over a miniature pharmacology database")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Data directory from `gen-data`; without it, seed 42 at scale 1 is generated in memory.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Backend connection string (`sqlite::memory:`); the in-memory engine when absent.
    #[arg(long, global = true)]
    backend: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve the pages over HTTP.
    Serve {
        /// JSON config file with data_dir, port, backend and metrics_path.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Append one JSON line per request to this file.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Print the HTML of one page.
    Render {
        /// ligands, diseases, object or disease
        page: String,
        /// Filter for list pages, id for data pages.
        arg: Option<String>,
    },
    /// Print the flat SQL queries and stitching plan of a page's main query.
    Explain { page: String, arg: Option<String> },
    /// Time repeated page requests and report statistics.
    Bench {
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        /// Data pages benchmarked per kind.
        #[arg(long, default_value_t = DEFAULT_SAMPLE)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV report path; a JSON mirror is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// After the report, load-test with this many concurrent clients (timings not reported).
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Compare rendered page summaries with summaries computed from page models.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SAMPLE)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write failures as JSON Lines here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a deterministic dataset.
    GenData {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        scale: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        malformed_fraction: f64,
    },
}

struct Loaded {
    backend: Arc<dyn Backend>,
    manifest: Option<Manifest>,
}

fn load(data: Option<&Path>, backend: Option<&str>) -> Result<Loaded, String> {
    let (db, manifest) = match data {
        Some(dir) => {
            let db = app::load_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let manifest = if dir.join("manifest.json").exists() {
                Some(Manifest::load(dir).map_err(|e| e.to_string())?)
            } else {
                None
            };
            (db, manifest)
        }
        None => {
            let g = gen_data(&GenConfig::new(42, 1));
            (g.db, Some(g.manifest))
        }
    };
    let backend = app::make_backend(db, backend).map_err(|e| e.to_string())?;
    Ok(Loaded { backend, manifest })
}

/// Runs the CLI on `argv` (including the program name).
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().ansi().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_FAILED
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn parse_page(kind: &str, arg: Option<&str>) -> Result<Page, Failure> {
    Page::parse(kind, arg).map_err(|e| Failure::Usage(e.to_string()))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let data = cli.data.as_deref();
    let conn = cli.backend.as_deref();
    match cli.command {
        Command::Serve { config, port, metrics } => {
            let cfg = match config {
                Some(path) => ServeConfig::from_file(&path).map_err(Failure::Usage)?,
                None => {
                    let data_dir = data.ok_or_else(|| Failure::Usage("serve needs --data or --config".into()))?;
                    ServeConfig {
                        data_dir: data_dir.to_path_buf(),
                        port,
                        backend: cli.backend.clone(),
                        metrics_path: metrics,
                    }
                }
            };
            app::serve(&cfg).map_err(Failure::Runtime)?;
        }
        Command::Render { page, arg } => {
            let page = parse_page(&page, arg.as_deref())?;
            let loaded = load(data, conn).map_err(Failure::Runtime)?;
            let (html, _) = App::new(loaded.backend).request(&page);
            out.write_all(html.map_err(runtime)?.as_bytes()).map_err(runtime)?;
        }
        Command::Explain { page, arg } => {
            let page = parse_page(&page, arg.as_deref())?;
            let loaded = load(data, conn).map_err(Failure::Runtime)?;
            let compiled = compile(&page.main_query(), loaded.backend.as_ref()).map_err(runtime)?;
            writeln!(out, "-- {} ({} flat queries)", page.path(), compiled.plan.queries.len()).map_err(runtime)?;
            out.write_all(compiled.plan.explain().as_bytes()).map_err(runtime)?;
        }
        Command::Bench { iterations, sample, seed, out: path, concurrency } => {
            if iterations == 0 {
                return Err(Failure::Usage("--iterations must be positive".into()));
            }
            let loaded = load(data, conn).map_err(Failure::Runtime)?;
            let app = App::new(loaded.backend);
            let pages = harness::pages_to_check(app.backend(), sample, seed).map_err(runtime)?;
            let report = harness::bench(&app, &pages, &BenchConfig { iterations });
            match &path {
                Some(p) => {
                    fs::write(p, report.to_csv()).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
                    let json = p.with_extension("json");
                    fs::write(&json, report.to_json()).map_err(|e| runtime(format!("{}: {e}", json.display())))?;
                    writeln!(out, "wrote {} and {}", p.display(), json.display()).map_err(runtime)?;
                }
                None => out.write_all(report.to_csv().as_bytes()).map_err(runtime)?,
            }
            if let Some(threads) = concurrency {
                let n = harness::load_test(&app, &pages, threads.max(1), 1);
                writeln!(out, "load test: {n} requests from {threads} clients").map_err(runtime)?;
            }
            if let Some(e) = &report.error {
                return Err(Failure::Runtime(format!("partial report; request failed: {e}")));
            }
        }
        Command::Verify { sample, seed, out: path } => {
            let loaded = load(data, conn).map_err(Failure::Runtime)?;
            let report = harness::verify(loaded.backend.as_ref(), sample, seed).map_err(runtime)?;
            if let Some(p) = &path {
                fs::write(p, report.failures_jsonl()).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
            } else {
                out.write_all(report.failures_jsonl().as_bytes()).map_err(runtime)?;
            }
            let untraced = report.untraced(loaded.manifest.as_ref());
            writeln!(out, "checked {} pages, {} mismatches", report.checked, report.failures.len()).map_err(runtime)?;
            if !report.failures.is_empty() {
                writeln!(
                    out,
                    "{} of {} mismatches trace to fields flagged malformed by the generator",
                    report.failures.len() - untraced.len(),
                    report.failures.len()
                )
                .map_err(runtime)?;
            }
            if !untraced.is_empty() {
                return Ok(EXIT_FAILED);
            }
        }
        Command::GenData { seed, scale, out: dir, malformed_fraction } => {
            if scale == 0 {
                return Err(Failure::Usage("--scale must be positive".into()));
            }
            if !(0.0..=1.0).contains(&malformed_fraction) {
                return Err(Failure::Usage("--malformed-fraction must lie in [0, 1]".into()));
            }
            fs::create_dir_all(&dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
            let g = gen_data(&GenConfig { seed, scale, malformed_fraction });
            g.write(&dir).map_err(runtime)?;
            let rows: usize = g.manifest.row_counts.values().sum();
            writeln!(
                out,
                "wrote {rows} rows in {} tables to {} ({} malformed text fields)",
                g.manifest.row_counts.len(),
                dir.display(),
                g.manifest.malformed.len()
            )
            .map_err(runtime)?;
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("lq").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn no_arguments_is_a_usage_error() {
        let (code, _, err) = run_args(&[]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"), "{err}");
    }

    #[test]
    fn bad_page_arguments_are_usage_errors() {
        assert_eq!(run_args(&["render", "ligands", "nonsense"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["render", "object", "x"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["explain", "nowhere"]).0, EXIT_USAGE);
    }

    #[test]
    fn explain_ligands_approved_prints_two_queries() {
        let (code, out, _) = run_args(&["explain", "ligands", "approved"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.matches("-- query ").count(), 2, "{out}");
        assert!(out.contains("EXISTS"));
    }

    #[test]
    fn render_missing_object_fails() {
        let (code, _, err) = run_args(&["render", "object", "999999"]);
        assert_eq!(code, EXIT_FAILED);
        assert!(err.contains("not found"));
    }
}
