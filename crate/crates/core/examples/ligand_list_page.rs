//! Builds and renders the ligand list page for one filter.
//!
//! cargo run --example ligand_list_page -- approved

use std::sync::Arc;

use lq::app::{gen_data, App, GenConfig, Page};

fn main() {
    let filter = std::env::args().nth(1).unwrap_or_else(|| "approved".into());
    let page = Page::parse("ligands", Some(&filter)).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    let app = App::new(Arc::new(gen_data(&GenConfig::new(42, 1)).db));
    let (html, record) = app.request(&page);
    print!("{}", html.expect("page builds"));
    eprintln!(
        "{}: {} queries, {:.3} ms in queries, {:.3} ms total",
        record.page, record.query_count, record.query_time, record.build_time_incl
    );
}
