//! Deterministic synthetic data.
//!
//! The dataset is `scale` copies of one block. The block's structure is drawn
//! from a generator seeded by `seed` alone, and copy `b` offsets every id by
//! `b * BLOCK_STRIDE`, so row counts grow exactly linearly with `scale`.
//! Which text fields get corrupted is drawn from a separate stream, so the
//! malformed fraction never changes the structure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Database, LoadError};
use crate::ir::Scalar;
use crate::tagtext::{to_source, HtmlTag, Segment};

use super::model::FieldRef;
use super::schema::catalog;

/// Id distance between consecutive blocks; every per-block id is below it.
pub const BLOCK_STRIDE: i64 = 1000;

const LIGANDS: usize = 50;
const OBJECTS: usize = 20;
const DISEASES: usize = 10;
const FAMILIES: usize = 6;
const REFERENCES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub scale: u32,
    /// Probability that a non-empty text field is corrupted.
    pub malformed_fraction: f64,
}

impl GenConfig {
    pub fn new(seed: u64, scale: u32) -> Self {
        GenConfig { seed, scale, malformed_fraction: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub scale: u32,
    pub malformed_fraction: f64,
    pub row_counts: BTreeMap<String, usize>,
    /// Number of non-empty text fields across all tables.
    pub text_fields: usize,
    /// Text fields deliberately corrupted so that strict parsing fails.
    pub malformed: Vec<FieldRef>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, LoadError> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text)
            .map_err(|e| LoadError::SchemaViolation { table: "manifest.json".into(), reason: e.to_string() })
    }
}

pub struct Generated {
    pub db: Database,
    pub manifest: Manifest,
}

impl Generated {
    /// Writes `schema.json`, one CSV per table and `manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<(), LoadError> {
        self.db.write_dir(dir)?;
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}

const SYLLABLES: &[&str] = &[
    "ami", "bro", "cal", "dex", "eta", "flu", "gli", "halo", "iso", "keto", "lor", "meta", "nor", "oxa", "pra", "quin",
    "rami", "sulf", "tri", "val", "xan", "zol",
];
const SUFFIXES: &[&str] = &["ol", "ine", "ide", "ate", "an", "one", "il", "azole"];
const LIGAND_TYPES: &[&str] =
    &["Synthetic organic", "Peptide", "Natural product", "Metabolite", "Inorganic", "Antibody"];
const ACTIONS: &[&str] = &["Agonist", "Antagonist", "Inhibitor", "Activator", "Partial agonist", "Channel blocker"];
const DATABASES: &[&str] = &["UniProtKB", "Ensembl", "ChEMBL Target", "Entrez Gene"];
const TARGET_TYPES: &[&str] = &["GPCR", "Ion channel", "NHR", "Kinase", "Enzyme", "Transporter"];
const WORDS: &[&str] = &[
    "binding",
    "selective",
    "receptor",
    "affinity",
    "signalling",
    "expression",
    "potent",
    "tissue",
    "activity",
    "agonism",
    "modulates",
    "pathway",
    "response",
    "inhibits",
    "cells",
    "studies",
    "reported",
    "high",
];
const DISEASE_WORDS: &[&str] =
    &["syndrome", "disease", "disorder", "deficiency", "carcinoma", "fever", "anaemia", "arthritis"];
const CORRUPTIONS: &[&str] = &[" (IC50 < 10 nM)", " Ki > 5 uM", " see <Reference id=>", " & co", " <p>"];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
}

/// One block's contents with block-local ids starting at 1.
struct Block {
    families: Vec<(i64, String, i64, String)>,
    references: Vec<(i64, i64, String, String, i64)>,
    ligands: Vec<LigandRow>,
    synonyms: Vec<(i64, String, bool)>,
    pdb: Vec<(i64, i64)>,
    objects: Vec<(i64, String, i64, String, Vec<Segment>)>,
    interactions: Vec<(i64, i64, i64, String, f64, Vec<Segment>)>,
    diseases: Vec<(i64, String, Vec<Segment>, bool)>,
    disease2object: Vec<(i64, i64)>,
    disease2ligand: Vec<(i64, i64)>,
    links: Vec<(i64, String, String)>,
    previous: Vec<(i64, String)>,
}

struct LigandRow {
    id: i64,
    name: String,
    ty: &'static str,
    flags: [bool; 6],
    clinical: Vec<Segment>,
    comments: Vec<Segment>,
}

struct BlockGen {
    rng: ChaCha8Rng,
}

impl BlockGen {
    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        xs.choose(&mut self.rng).expect("non-empty")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn drug_name(&mut self) -> String {
        let n = self.rng.gen_range(2..=3);
        let mut s: String = (0..n).map(|_| *self.pick(SYLLABLES)).collect();
        s.push_str(self.pick(SUFFIXES));
        capitalize(&s)
    }

    fn sentence(&mut self) -> String {
        let n = self.rng.gen_range(4..=9);
        let words: Vec<&str> = (0..n).map(|_| *self.pick(WORDS)).collect();
        capitalize(&words.join(" "))
    }

    /// Curation text citing references and ligands drawn from the block.
    fn curation(&mut self, refs: usize, ligands: usize) -> Vec<Segment> {
        let mut segs = Vec::new();
        let sentences = self.rng.gen_range(1..=3);
        for s in 0..sentences {
            if s > 0 {
                segs.push(Segment::Text(" ".into()));
            }
            segs.push(Segment::Text(self.sentence()));
            match self.rng.gen_range(0..6) {
                0 => {
                    segs.push(Segment::Text(" at the ".into()));
                    segs.push(Segment::Entity(self.pick(&["alpha", "beta", "gamma"]).to_string()));
                    segs.push(Segment::Text("-subunit".into()));
                }
                1 => {
                    segs.push(Segment::Text(" via G".into()));
                    let sub = self.pick(&["q", "s", "i", "1"]).to_string();
                    segs.push(Segment::Html { tag: HtmlTag::Sub, children: vec![Segment::Text(sub)] });
                }
                2 => {
                    segs.push(Segment::Text(" with ".into()));
                    segs.push(Segment::Html { tag: HtmlTag::I, children: vec![Segment::Text("in vivo".into())] });
                    segs.push(Segment::Text(" efficacy".into()));
                }
                _ => {}
            }
            if ligands > 0 && self.chance(0.3) {
                segs.push(Segment::Text(", as shown for ".into()));
                segs.push(Segment::LigandTag(self.rng.gen_range(1..=ligands as i64)));
            }
            if refs > 0 && self.chance(0.7) {
                segs.push(Segment::Text(" ".into()));
                for _ in 0..self.rng.gen_range(1..=2) {
                    segs.push(Segment::RefTag(self.rng.gen_range(1..=refs as i64)));
                }
            }
            segs.push(Segment::Text(".".into()));
            if s + 1 < sentences && self.chance(0.2) {
                segs.push(Segment::Html { tag: HtmlTag::Br, children: vec![] });
            }
        }
        segs
    }

    fn distinct(&mut self, n: usize, max: usize) -> Vec<i64> {
        let mut ids: Vec<i64> = (1..=max as i64).collect();
        ids.shuffle(&mut self.rng);
        ids.truncate(n.min(max));
        ids.sort_unstable();
        ids
    }

    fn block(mut self) -> Block {
        let families = (1..=FAMILIES as i64)
            .map(|id| {
                let parent = if id <= 2 { 0 } else { self.rng.gen_range(1..id) };
                (id, format!("{} family {id}", self.drug_name()), parent, self.pick(TARGET_TYPES).to_string())
            })
            .collect();

        let mut pubmed: Vec<i64> = Vec::with_capacity(REFERENCES);
        while pubmed.len() < REFERENCES {
            let p = self.rng.gen_range(1_000_000..9_000_000);
            if !pubmed.contains(&p) {
                pubmed.push(p);
            }
        }
        let references = pubmed
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let authors = format!("{} {}", capitalize(self.pick(SYLLABLES)), capitalize(self.pick(SUFFIXES)));
                let title = self.sentence();
                (i as i64 + 1, p, title, authors, self.rng.gen_range(1975..=2020))
            })
            .collect();

        let mut ligands = Vec::new();
        let mut synonyms = Vec::new();
        let mut pdb = Vec::new();
        for id in 1..=LIGANDS as i64 {
            let name = self.drug_name();
            let ty = *self.pick(LIGAND_TYPES);
            let flags = [
                self.chance(0.3),
                self.chance(0.1),
                self.chance(0.15),
                self.chance(0.25),
                self.chance(0.1),
                self.chance(if ty == "Peptide" { 0.6 } else { 0.2 }),
            ];
            let clinical = if self.chance(0.4) { self.curation(REFERENCES, 0) } else { vec![] };
            let comments = if self.chance(0.5) { self.curation(REFERENCES, LIGANDS) } else { vec![] };
            if self.chance(0.7) {
                for k in 0..self.rng.gen_range(1..=3) {
                    let syn =
                        if k == 0 { format!("{}-{}", name[..3].to_uppercase(), 100 + id) } else { self.drug_name() };
                    if !synonyms.iter().any(|(l, s, _)| *l == id && *s == syn) {
                        synonyms.push((id, syn, self.chance(0.8)));
                    }
                }
            }
            if self.chance(0.1) {
                pdb.push((id, id));
            }
            ligands.push(LigandRow { id, name, ty, flags, clinical, comments });
        }

        let mut objects = Vec::new();
        let mut interactions = Vec::new();
        let mut links = Vec::new();
        let mut previous = Vec::new();
        for id in 1..=OBJECTS as i64 {
            let gene = format!("{}{}", self.pick(SYLLABLES).to_uppercase(), self.rng.gen_range(1..30));
            let name = format!("{gene} receptor");
            let family = self.rng.gen_range(1..=FAMILIES as i64);
            let nomenclature = format!("{}, {}", capitalize(self.pick(WORDS)), self.rng.gen_range(1..40));
            let overview = if self.chance(0.8) { self.curation(REFERENCES, LIGANDS) } else { vec![] };
            objects.push((id, name, family, nomenclature, overview));
            let n = if self.chance(0.15) { 0 } else { self.rng.gen_range(1..=5) };
            for l in self.distinct(n, LIGANDS) {
                let iid = interactions.len() as i64 + 1;
                let affinity = (self.rng.gen_range(4.0..10.0f64) * 100.0).round() / 100.0;
                let comments = if self.chance(0.5) { self.curation(REFERENCES, LIGANDS) } else { vec![] };
                interactions.push((iid, id, l, self.pick(ACTIONS).to_string(), affinity, comments));
            }
            let dbs = self.rng.gen_range(0..=3);
            let mut names: Vec<&str> = DATABASES.to_vec();
            names.shuffle(&mut self.rng);
            for db in names.into_iter().take(dbs) {
                links.push((id, db.to_string(), format!("{}{:05}", &db[..1], self.rng.gen_range(0..100_000))));
            }
            for k in 0..self.rng.gen_range(0..=2) {
                previous.push((id, format!("{gene}-{}", ["R", "L"][k])));
            }
        }

        let mut diseases = Vec::new();
        let mut disease2object = Vec::new();
        let mut disease2ligand = Vec::new();
        for id in 1..=DISEASES as i64 {
            let name = format!("{} {}", self.drug_name(), self.pick(DISEASE_WORDS));
            let description = if self.chance(0.8) { self.curation(REFERENCES, LIGANDS) } else { vec![] };
            diseases.push((id, name, description, self.chance(0.4)));
            let n = self.rng.gen_range(0..=3);
            disease2object.extend(self.distinct(n, OBJECTS).into_iter().map(|o| (id, o)));
            let n = self.rng.gen_range(0..=3);
            disease2ligand.extend(self.distinct(n, LIGANDS).into_iter().map(|l| (id, l)));
        }

        Block {
            families,
            references,
            ligands,
            synonyms,
            pdb,
            objects,
            interactions,
            diseases,
            disease2object,
            disease2ligand,
            links,
            previous,
        }
    }
}

/// Shifts every id inside tags by `off`.
fn offset_segments(segs: &[Segment], off: i64) -> Vec<Segment> {
    segs.iter()
        .map(|s| match s {
            Segment::RefTag(id) => Segment::RefTag(id + off),
            Segment::LigandTag(id) => Segment::LigandTag(id + off),
            Segment::Html { tag, children } => Segment::Html { tag: *tag, children: offset_segments(children, off) },
            s => s.clone(),
        })
        .collect()
}

struct Texts<'a> {
    rng: ChaCha8Rng,
    fraction: f64,
    malformed: &'a mut Vec<FieldRef>,
    count: usize,
}

impl Texts<'_> {
    /// Source text for a field, corrupted with the configured probability.
    fn field(&mut self, segs: &[Segment], off: i64, table: &str, key: i64, column: &str) -> Scalar {
        if segs.is_empty() {
            return Scalar::Str(String::new());
        }
        self.count += 1;
        let mut src = to_source(&offset_segments(segs, off));
        if self.fraction > 0.0 && self.rng.gen_bool(self.fraction.min(1.0)) {
            let c = CORRUPTIONS.choose(&mut self.rng).expect("non-empty");
            src.push_str(c);
            self.malformed.push(FieldRef { table: table.into(), key, column: column.into() });
        }
        Scalar::Str(src)
    }
}

fn s(x: &str) -> Scalar {
    Scalar::Str(x.to_string())
}

/// Generates the dataset for `cfg`.
pub fn gen_data(cfg: &GenConfig) -> Generated {
    let block = BlockGen { rng: ChaCha8Rng::seed_from_u64(cfg.seed) }.block();
    let mut rows: BTreeMap<String, Vec<Vec<Scalar>>> = BTreeMap::new();
    let mut malformed = Vec::new();
    let mut texts = Texts {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6d61_6c66_6f72_6d65),
        fraction: cfg.malformed_fraction,
        malformed: &mut malformed,
        count: 0,
    };
    let mut push = |t: &str, r: Vec<Scalar>| rows.entry(t.to_string()).or_default().push(r);

    for b in 0..cfg.scale as i64 {
        let off = b * BLOCK_STRIDE;
        let int = |x: i64| Scalar::Int(x + off);
        for (id, name, parent, tt) in &block.families {
            let parent = if *parent == 0 { Scalar::Int(0) } else { int(*parent) };
            push("family", vec![int(*id), s(name), parent, s(tt)]);
        }
        for (id, pubmed, title, authors, year) in &block.references {
            push(
                "reference",
                vec![int(*id), Scalar::Int(pubmed + b * 10_000_000), s(title), s(authors), Scalar::Int(*year)],
            );
        }
        for l in &block.ligands {
            let [approved, radioactive, labelled, gtip, gtmp, endogenous] = l.flags;
            let clinical = texts.field(&l.clinical, off, "ligand", l.id + off, "clinical_use_text");
            let comments = texts.field(&l.comments, off, "ligand", l.id + off, "comments_text");
            push(
                "ligand",
                vec![
                    int(l.id),
                    s(&l.name),
                    s(l.ty),
                    Scalar::Bool(approved),
                    Scalar::Bool(radioactive),
                    Scalar::Bool(labelled),
                    Scalar::Bool(gtip),
                    Scalar::Bool(gtmp),
                    Scalar::Bool(endogenous),
                    clinical,
                    comments,
                ],
            );
        }
        for (l, syn, display) in &block.synonyms {
            push("ligand2synonym", vec![int(*l), s(syn), Scalar::Bool(*display)]);
        }
        for (n, l) in &block.pdb {
            push("pdb_structure", vec![s(&format!("{}P{:02}", b + 1, n)), int(*l)]);
        }
        for (id, name, family, nomenclature, overview) in &block.objects {
            let overview = texts.field(overview, off, "object", id + off, "overview_text");
            push("object", vec![int(*id), s(name), int(*family), s(nomenclature), overview]);
        }
        for (id, object, ligand, action, affinity, comments) in &block.interactions {
            let comments = texts.field(comments, off, "interaction", id + off, "comments_text");
            push(
                "interaction",
                vec![int(*id), int(*object), int(*ligand), s(action), Scalar::Float(*affinity), comments],
            );
        }
        for (id, name, description, gtip) in &block.diseases {
            let description = texts.field(description, off, "disease", id + off, "description_text");
            push("disease", vec![int(*id), s(name), description, Scalar::Bool(*gtip)]);
        }
        for (d, o) in &block.disease2object {
            push("disease2object", vec![int(*d), int(*o)]);
        }
        for (d, l) in &block.disease2ligand {
            push("disease2ligand", vec![int(*d), int(*l)]);
        }
        for (o, db, acc) in &block.links {
            push("object_database_link", vec![int(*o), s(db), s(acc)]);
        }
        for (o, name) in &block.previous {
            push("object_previous_name", vec![int(*o), s(name)]);
        }
    }

    let text_fields = texts.count;
    let db = Database::from_rows(catalog(), rows).expect("generated rows fit the schema");
    let manifest = Manifest {
        seed: cfg.seed,
        scale: cfg.scale,
        malformed_fraction: cfg.malformed_fraction,
        row_counts: db.row_counts(),
        text_fields,
        malformed,
    };
    Generated { db, manifest }
}
