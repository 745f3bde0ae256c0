//! Query counts of the shredded pages against a naive per-row evaluation,
//! across data scales. The naive side evaluates by nested loops, so scales
//! stay small.
//!
//! cargo run --release --example n_plus_one

use lq::app::{gen_data, DiseaseFilter, Filter, GenConfig, Page};
use lq::engine::eval_naive;
use lq::{run_query, RequestMetrics};

fn main() {
    println!("{:<28} {:>6} {:>10} {:>10}", "page", "scale", "shredded", "naive");
    for scale in [1, 5, 10] {
        let db = gen_data(&GenConfig::new(42, scale)).db;
        for page in [Page::LigandList(Filter::All), Page::DiseaseList(DiseaseFilter::All), Page::Object(1)] {
            let q = page.main_query();
            let mut m = RequestMetrics::default();
            let shredded = run_query(&q, &db, &mut m).expect("runs");
            let (naive, naive_count) = eval_naive(&q, &db).expect("runs");
            assert!(shredded.bag_eq(&naive));
            println!("{:<28} {:>6} {:>10} {:>10}", page.path(), scale, m.query_count(), naive_count);
        }
    }
}
