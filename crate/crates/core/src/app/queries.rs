//! The page queries, each one composite nested query built by host functions.

use std::fmt;
use std::str::FromStr;

use crate::ir::build::*;
use crate::ir::{Expr, PrimOp};

/// Ligand categories offered by the ligand list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Filter {
    All,
    Approved,
    SyntheticOrganic,
    EndogenousPeptide,
    Immuno,
    Malaria,
    Labelled,
    Radioactive,
}

impl Filter {
    pub const ALL: [Filter; 8] = [
        Filter::All,
        Filter::Approved,
        Filter::SyntheticOrganic,
        Filter::EndogenousPeptide,
        Filter::Immuno,
        Filter::Malaria,
        Filter::Labelled,
        Filter::Radioactive,
    ];

    /// URL spelling, e.g. `synthetic-organic`.
    pub fn slug(self) -> &'static str {
        match self {
            Filter::All => "all",
            Filter::Approved => "approved",
            Filter::SyntheticOrganic => "synthetic-organic",
            Filter::EndogenousPeptide => "endogenous-peptide",
            Filter::Immuno => "immuno",
            Filter::Malaria => "malaria",
            Filter::Labelled => "labelled",
            Filter::Radioactive => "radioactive",
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownFilter(pub String);

impl fmt::Display for UnknownFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown filter `{}`", self.0)
    }
}

impl std::error::Error for UnknownFilter {}

fn normalize_slug(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace(['_', ' '], "-")
}

impl FromStr for Filter {
    type Err = UnknownFilter;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = normalize_slug(s);
        let n = if n.is_empty() { "all".to_string() } else { n };
        Filter::ALL
            .into_iter()
            .find(|f| f.slug() == n || f.slug().replace('-', "") == n)
            .ok_or_else(|| UnknownFilter(s.to_string()))
    }
}

/// Filters offered by the disease list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiseaseFilter {
    All,
    Immuno,
}

impl DiseaseFilter {
    pub const ALL: [DiseaseFilter; 2] = [DiseaseFilter::All, DiseaseFilter::Immuno];

    pub fn slug(self) -> &'static str {
        match self {
            DiseaseFilter::All => "all",
            DiseaseFilter::Immuno => "immuno",
        }
    }
}

impl fmt::Display for DiseaseFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for DiseaseFilter {
    type Err = UnknownFilter;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_slug(s).as_str() {
            "" | "all" => Ok(DiseaseFilter::All),
            "immuno" => Ok(DiseaseFilter::Immuno),
            _ => Err(UnknownFilter(s.to_string())),
        }
    }
}

/// Host helper: whether a ligand row is endogenous.
pub fn is_endogenous() -> Expr {
    lambda(&["ligand"], var("ligand").field("endogenous"))
}

/// The filter predicate for a ligand row expression `l`.
pub fn ligand_filter(l: Expr, f: Filter) -> Expr {
    match f {
        Filter::All => lit(true),
        Filter::Approved => l.field("approved"),
        Filter::SyntheticOrganic => eq(l.field("type"), lit("Synthetic organic")),
        Filter::EndogenousPeptide => and(eq(l.clone().field("type"), lit("Peptide")), apply(is_endogenous(), vec![l])),
        Filter::Immuno => l.field("in_gtip"),
        Filter::Malaria => l.field("in_gtmp"),
        Filter::Labelled => l.field("labelled"),
        Filter::Radioactive => l.field("radioactive"),
    }
}

/// [`ligand_filter`] as a query-level function, so calls to it are inlined by normalization.
pub fn ligand_filter_fn(f: Filter) -> Expr {
    lambda(&["ligand"], ligand_filter(var("ligand"), f))
}

/// A ligand's displayed synonyms, as a function of its id.
pub fn get_synonyms() -> Expr {
    lambda(
        &["id"],
        for_in(
            "l2s",
            table("ligand2synonym"),
            where_(
                and(eq(var("l2s").field("ligand_id"), var("id")), var("l2s").field("display")),
                yield_(var("l2s").field("synonym")),
            ),
        ),
    )
}

pub fn ligand_list(f: Filter) -> Expr {
    let l = || var("l");
    for_in(
        "l",
        table("ligand"),
        where_(
            apply(ligand_filter_fn(f), vec![l()]),
            yield_(record([
                ("id", l().field("ligand_id")),
                ("name", l().field("name")),
                ("approved", l().field("approved")),
                ("radioactive", l().field("radioactive")),
                ("labelled", l().field("labelled")),
                ("immuno", l().field("in_gtip")),
                ("malaria", l().field("in_gtmp")),
                ("synonyms", apply(get_synonyms(), vec![l().field("ligand_id")])),
                (
                    "hasPDB",
                    not(is_empty(for_in(
                        "p",
                        table("pdb_structure"),
                        where_(eq(var("p").field("ligand_id"), l().field("ligand_id")), yield_(var("p"))),
                    ))),
                ),
            ])),
        ),
    )
}

pub fn disease_list(f: DiseaseFilter) -> Expr {
    let d = || var("d");
    let cond = match f {
        DiseaseFilter::All => lit(true),
        DiseaseFilter::Immuno => d().field("in_gtip"),
    };
    for_in(
        "d",
        table("disease"),
        where_(
            cond,
            yield_(record([
                ("id", d().field("disease_id")),
                ("name", d().field("name")),
                ("objects", objects_of_disease(d())),
            ])),
        ),
    )
}

fn objects_of_disease(d: Expr) -> Expr {
    for_in(
        "x",
        table("disease2object"),
        for_in(
            "o",
            table("object"),
            where_(
                and(
                    eq(var("x").field("disease_id"), d.field("disease_id")),
                    eq(var("o").field("object_id"), var("x").field("object_id")),
                ),
                yield_(record([("id", var("o").field("object_id")), ("name", var("o").field("name"))])),
            ),
        ),
    )
}

fn ligands_of_disease(d: Expr) -> Expr {
    for_in(
        "x",
        table("disease2ligand"),
        for_in(
            "l",
            table("ligand"),
            where_(
                and(
                    eq(var("x").field("disease_id"), d.field("disease_id")),
                    eq(var("l").field("ligand_id"), var("x").field("ligand_id")),
                ),
                yield_(record([("id", var("l").field("ligand_id")), ("name", var("l").field("name"))])),
            ),
        ),
    )
}

/// Everything the object page shows, for the object with the given id.
pub fn object_page(object_id: i64) -> Expr {
    let o = || var("o");
    let by_object = |binder: &str, tbl: &str, head: Expr| {
        for_in(binder, table(tbl), where_(eq(var(binder).field("object_id"), o().field("object_id")), yield_(head)))
    };
    let interactions = for_in(
        "i",
        table("interaction"),
        for_in(
            "l",
            table("ligand"),
            where_(
                and(
                    eq(var("i").field("object_id"), o().field("object_id")),
                    eq(var("l").field("ligand_id"), var("i").field("ligand_id")),
                ),
                yield_(record([
                    ("id", var("i").field("interaction_id")),
                    ("ligand_id", var("l").field("ligand_id")),
                    ("ligand", var("l").field("name")),
                    ("action", var("i").field("action")),
                    ("affinity", var("i").field("affinity")),
                    ("comments", var("i").field("comments_text")),
                ])),
            ),
        ),
    );
    let diseases = for_in(
        "x",
        table("disease2object"),
        for_in(
            "d",
            table("disease"),
            where_(
                and(
                    eq(var("x").field("object_id"), o().field("object_id")),
                    eq(var("d").field("disease_id"), var("x").field("disease_id")),
                ),
                yield_(record([("id", var("d").field("disease_id")), ("name", var("d").field("name"))])),
            ),
        ),
    );
    let links = by_object(
        "k",
        "object_database_link",
        record([("database", var("k").field("database")), ("accession", var("k").field("accession"))]),
    );
    let previous = by_object("p", "object_previous_name", var("p").field("name"));
    for_in(
        "o",
        table("object"),
        for_in(
            "f",
            table("family"),
            where_(
                and(
                    eq(o().field("object_id"), lit(object_id)),
                    eq(var("f").field("family_id"), o().field("family_id")),
                ),
                yield_(record([
                    ("id", o().field("object_id")),
                    ("name", o().field("name")),
                    ("nomenclature", o().field("nomenclature")),
                    ("family", var("f").field("name")),
                    ("overview", o().field("overview_text")),
                    ("interactions", interactions),
                    ("diseases", diseases),
                    ("links", links),
                    ("previous_names", previous),
                ])),
            ),
        ),
    )
}

/// Everything the disease page shows, for the disease with the given id.
pub fn disease_page(disease_id: i64) -> Expr {
    let d = || var("d");
    for_in(
        "d",
        table("disease"),
        where_(
            eq(d().field("disease_id"), lit(disease_id)),
            yield_(record([
                ("id", d().field("disease_id")),
                ("name", d().field("name")),
                ("description", d().field("description_text")),
                ("targets", objects_of_disease(d())),
                ("ligands", ligands_of_disease(d())),
            ])),
        ),
    )
}

/// `key == ids[0] || key == ids[1] || ...`, or `false` for no ids.
fn any_of(key: Expr, ids: &[i64]) -> Expr {
    ids.iter()
        .map(|&i| eq(key.clone(), lit(i)))
        .reduce(|a, b| prim(PrimOp::Or, vec![a, b]))
        .unwrap_or_else(|| lit(false))
}

/// Reference rows for the given ids.
pub fn reference_lookup(ids: &[i64]) -> Expr {
    let r = || var("r");
    for_in(
        "r",
        table("reference"),
        where_(
            any_of(r().field("reference_id"), ids),
            yield_(record([
                ("reference_id", r().field("reference_id")),
                ("pubmed_id", r().field("pubmed_id")),
                ("title", r().field("title")),
                ("authors", r().field("authors")),
                ("year", r().field("year")),
            ])),
        ),
    )
}

/// Ligand names (`ligand_id`, `name`) for the given ids.
pub fn ligand_lookup(ids: &[i64]) -> Expr {
    for_in(
        "l",
        table("ligand"),
        where_(
            any_of(var("l").field("ligand_id"), ids),
            yield_(record([("ligand_id", var("l").field("ligand_id")), ("name", var("l").field("name"))])),
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::app::schema::catalog;
    use crate::ir::{typecheck, QueryType};

    #[test]
    fn filters_parse_from_their_slugs() {
        for f in Filter::ALL {
            assert_eq!(f.slug().parse::<Filter>(), Ok(f));
        }
        assert_eq!("Approved".parse::<Filter>(), Ok(Filter::Approved));
        assert_eq!("synthetic_organic".parse::<Filter>(), Ok(Filter::SyntheticOrganic));
        assert!("nonsense".parse::<Filter>().is_err());
        assert_eq!("IMMUNO".parse::<DiseaseFilter>(), Ok(DiseaseFilter::Immuno));
        assert!("approved".parse::<DiseaseFilter>().is_err());
    }

    #[test]
    fn approved_is_a_projection_and_all_is_true() {
        assert_eq!(ligand_filter(var("l"), Filter::Approved), var("l").field("approved"));
        assert_eq!(ligand_filter(var("l"), Filter::All), lit(true));
    }

    #[test]
    fn page_queries_have_the_expected_collection_counts() {
        let c = catalog();
        let count = |e: &Expr| typecheck(e, &c).unwrap().collection_count();
        for f in Filter::ALL {
            assert_eq!(count(&ligand_list(f)), 2);
        }
        for f in DiseaseFilter::ALL {
            assert_eq!(count(&disease_list(f)), 2);
        }
        assert_eq!(count(&object_page(1)), 5);
        assert_eq!(count(&disease_page(1)), 3);
        assert_eq!(count(&reference_lookup(&[])), 1);
        assert_eq!(count(&ligand_lookup(&[1, 2, 3])), 1);
        let ty = typecheck(&ligand_list(Filter::All), &c).unwrap();
        assert_eq!(
            ty.element().unwrap().field("synonyms"),
            Some(&QueryType::collection(QueryType::Scalar(crate::ir::ScalarType::String)))
        );
    }
}
