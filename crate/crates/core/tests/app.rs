//! The mini application end to end: query counts per route, section headers,
//! filters against brute-force scans, HTTP routes and generated data.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use lq::app::{build_page, catalog, gen_data, render_page, App, DiseaseFilter, Filter, GenConfig, Page, PageModel};
use lq::engine::Table;
use lq::harness::{pages_to_check, summarize_page};
use lq::ir::Scalar;
use lq::tagtext::parse_tagtext;
use lq::{eval_direct, run_query, Database, RequestMetrics, Value};

fn db(scale: u32) -> Database {
    gen_data(&GenConfig::new(42, scale)).db
}

fn all_pages(db: &Database) -> Vec<Page> {
    pages_to_check(db, usize::MAX, 0).unwrap()
}

fn col<'t>(t: &'t Table, row: &'t [Scalar], name: &str) -> &'t Scalar {
    &row[t.schema.column_index(name).unwrap()]
}

fn ids_of(v: &Value) -> BTreeSet<i64> {
    v.as_list().unwrap().iter().map(|r| r.field("id").unwrap().as_int().unwrap()).collect()
}

#[test]
fn every_route_issues_collection_count_queries() {
    let cat = catalog();
    for scale in [1, 10] {
        let db = db(scale);
        for page in all_pages(&db) {
            let mut m = RequestMetrics::default();
            build_page(&page, &db, &mut m).unwrap();
            let bound = page.result_type(&cat).unwrap().collection_count();
            assert_eq!(m.query_count(), bound, "{page} at scale {scale}");
        }
    }
}

#[test]
fn list_pages_on_an_empty_database_still_take_two_queries() {
    let empty = Database::empty(catalog());
    for page in [Page::LigandList(Filter::Approved), Page::DiseaseList(DiseaseFilter::All)] {
        let mut m = RequestMetrics::default();
        let model = build_page(&page, &empty, &mut m).unwrap();
        assert!(model.rows().is_empty());
        assert_eq!(m.query_count(), 2);
    }
}

fn ligand_matches(t: &Table, row: &[Scalar], f: Filter) -> bool {
    let flag = |c: &str| col(t, row, c).as_bool().unwrap();
    let ty = col(t, row, "type").as_str().unwrap();
    match f {
        Filter::All => true,
        Filter::Approved => flag("approved"),
        Filter::SyntheticOrganic => ty == "Synthetic organic",
        Filter::EndogenousPeptide => ty == "Peptide" && flag("endogenous"),
        Filter::Immuno => flag("in_gtip"),
        Filter::Malaria => flag("in_gtmp"),
        Filter::Labelled => flag("labelled"),
        Filter::Radioactive => flag("radioactive"),
    }
}

#[test]
fn ligand_filters_agree_with_a_table_scan() {
    let db = db(2);
    let t = db.table("ligand").unwrap();
    for f in Filter::ALL {
        let model = build_page(&Page::LigandList(f), &db, &mut RequestMetrics::default()).unwrap();
        let expected: BTreeSet<i64> = t
            .rows
            .iter()
            .filter(|r| ligand_matches(t, r, f))
            .map(|r| col(t, r, "ligand_id").as_int().unwrap())
            .collect();
        assert_eq!(ids_of(&model.data), expected, "{f}");
    }
}

#[test]
fn ligand_rows_carry_synonyms_and_pdb_flags_from_their_tables() {
    let db = db(1);
    let syn = db.table("ligand2synonym").unwrap();
    let pdb = db.table("pdb_structure").unwrap();
    let model = build_page(&Page::LigandList(Filter::All), &db, &mut RequestMetrics::default()).unwrap();
    for r in model.rows() {
        let id = r.field("id").unwrap().as_int().unwrap();
        let mut expected: Vec<&str> = syn
            .rows
            .iter()
            .filter(|s| col(syn, s, "ligand_id").as_int() == Some(id) && col(syn, s, "display").as_bool() == Some(true))
            .map(|s| col(syn, s, "synonym").as_str().unwrap())
            .collect();
        let mut actual: Vec<&str> =
            r.field("synonyms").unwrap().as_list().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        expected.sort_unstable();
        actual.sort_unstable();
        assert_eq!(actual, expected, "ligand {id}");
        let has_pdb = pdb.rows.iter().any(|p| col(pdb, p, "ligand_id").as_int() == Some(id));
        assert_eq!(r.field("hasPDB").unwrap().as_bool(), Some(has_pdb), "ligand {id}");
    }
}

#[test]
fn immuno_diseases_are_a_subset_of_all() {
    let db = db(1);
    let get = |f| ids_of(&build_page(&Page::DiseaseList(f), &db, &mut RequestMetrics::default()).unwrap().data);
    let (all, immuno) = (get(DiseaseFilter::All), get(DiseaseFilter::Immuno));
    assert!(immuno.is_subset(&all));
    assert!(!immuno.is_empty() && immuno.len() < all.len());
}

#[test]
fn page_queries_match_direct_evaluation() {
    let db = db(1);
    for page in all_pages(&db) {
        let e = page.main_query();
        let shredded = run_query(&e, &db, &mut RequestMetrics::default()).unwrap();
        assert!(shredded.bag_eq(&eval_direct(&e, &db).unwrap()), "{page}");
    }
}

fn section_nonempty(model: &PageModel, header: &str) -> bool {
    let e = || model.entity().unwrap();
    let list = |f: &str| !e().field(f).unwrap().as_list().unwrap().is_empty();
    let text = |f: &str| !e().field(f).unwrap().as_str().unwrap().trim().is_empty();
    match (model.page, header) {
        (Page::LigandList(_) | Page::DiseaseList(_), _) => !model.rows().is_empty(),
        (Page::Object(_), "Overview") => text("overview"),
        (Page::Object(_), "Interactions") => list("interactions"),
        (Page::Object(_), "Diseases") => list("diseases"),
        (Page::Object(_), "Database Links") => list("links"),
        (Page::Object(_), "Previous and Unofficial Names") => list("previous_names"),
        (Page::Disease(_), "Description") => text("description"),
        (Page::Disease(_), "Targets") => list("targets"),
        (Page::Disease(_), "Ligands") => list("ligands"),
        (p, h) => panic!("no section {h} on {p}"),
    }
}

fn headers_of(page: &Page) -> &'static [&'static str] {
    match page {
        Page::LigandList(_) => &["Ligands"],
        Page::DiseaseList(_) => &["Diseases"],
        Page::Object(_) => &["Overview", "Interactions", "Diseases", "Database Links", "Previous and Unofficial Names"],
        Page::Disease(_) => &["Description", "Targets", "Ligands"],
    }
}

#[test]
fn header_present_exactly_when_section_has_data() {
    let db = db(1);
    let mut seen_absent = BTreeSet::new();
    for page in all_pages(&db) {
        let model = build_page(&page, &db, &mut RequestMetrics::default()).unwrap();
        let summary = summarize_page(&render_page(&model).unwrap()).unwrap();
        for h in headers_of(&page) {
            let present = summary.data_headers.iter().any(|x| x == h);
            assert_eq!(present, section_nonempty(&model, h), "{page}: {h}");
            if !present {
                seen_absent.insert(*h);
            }
        }
    }
    // The seeded data exercises the absent case for most sections.
    assert!(seen_absent.len() >= 3, "{seen_absent:?}");
}

#[test]
fn identical_requests_give_identical_html() {
    let db = Arc::new(db(1));
    let app = App::new(db.clone());
    let other = App::new(db);
    for page in [Page::Object(5), Page::Disease(3), Page::LigandList(Filter::Labelled)] {
        assert_eq!(app.request(&page).0.unwrap(), other.request(&page).0.unwrap());
    }
}

#[test]
fn approved_route_lists_only_approved_ligands() {
    let db = Arc::new(db(1));
    let t = db.table("ligand").unwrap();
    let approved: BTreeSet<String> = t
        .rows
        .iter()
        .filter(|r| col(t, r, "approved").as_bool() == Some(true))
        .map(|r| col(t, r, "ligand_id").as_int().unwrap().to_string())
        .collect();
    let resp = App::new(db.clone()).handle("/ligands?filter=approved");
    assert_eq!(resp.status, 200);
    let listed: BTreeSet<String> =
        resp.body.split("<tr data-id=\"").skip(1).map(|s| s.split('"').next().unwrap().to_string()).collect();
    assert_eq!(listed, approved);
}

#[test]
fn absent_entities_are_not_found() {
    let app = App::new(Arc::new(db(1)));
    assert_eq!(app.handle("/object/999999").status, 404);
    assert_eq!(app.handle("/disease/999999").status, 404);
    assert_eq!(app.handle("/disease/0").status, 404);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn same_seed_and_scale_write_byte_identical_directories() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = GenConfig { seed: 9, scale: 2, malformed_fraction: 0.1 };
    gen_data(&cfg).write(a.path()).unwrap();
    gen_data(&cfg).write(b.path()).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.iter().any(|(n, _)| n == "manifest.json"));
    assert_eq!(fa, fb);
}

#[test]
fn written_directory_loads_back_to_the_same_database() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen_data(&GenConfig::new(3, 1));
    g.write(dir.path()).unwrap();
    assert_eq!(lq::app::load_dir(dir.path()).unwrap(), g.db);
}

#[test]
fn malformed_fraction_matches_a_parser_sweep() {
    let p = 0.05;
    let g = gen_data(&GenConfig { seed: 42, scale: 10, malformed_fraction: p });
    let mut failing = BTreeSet::new();
    let mut nonempty = 0usize;
    for t in g.db.tables() {
        let key = t.schema.columns.iter().position(|c| c.name == t.schema.key[0]).unwrap();
        for (i, c) in t.schema.columns.iter().enumerate().filter(|(_, c)| c.name.ends_with("_text")) {
            for r in &t.rows {
                let raw = r[i].as_str().unwrap();
                if raw.is_empty() {
                    continue;
                }
                nonempty += 1;
                if parse_tagtext(raw).is_err() {
                    failing.insert((t.schema.name.clone(), r[key].as_int().unwrap(), c.name.clone()));
                }
            }
        }
    }
    let flagged: BTreeSet<_> =
        g.manifest.malformed.iter().map(|f| (f.table.clone(), f.key, f.column.clone())).collect();
    assert_eq!(failing, flagged);
    assert_eq!(nonempty, g.manifest.text_fields);
    // Binomial tolerance: four standard deviations.
    let frac = failing.len() as f64 / nonempty as f64;
    let sigma = (p * (1.0 - p) / nonempty as f64).sqrt();
    assert!((frac - p).abs() < 4.0 * sigma, "{frac} of {nonempty} fields");
}
