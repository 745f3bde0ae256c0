//! HTML rendering of page models.
//!
//! Contract consumed by the harness: every data section is a `<section>`
//! with a `data-header` attribute, present only when the section has data;
//! the basic-info block is `<dl data-basic-info>` with one `data-field`
//! marker per entry; the reference list is `<section data-references>` with
//! items `<li id="ref-N" data-pubmed="P">`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::tagtext::{escape_html, render_segments};
use crate::value::Value;

use super::model::{get, get_bool, get_int, get_list, get_str, AppError, FieldRef, Page, PageModel};

struct Html {
    out: String,
    ligand_names: HashMap<i64, String>,
}

impl Html {
    fn basic_info(&mut self, fields: &[(&str, &str, String)]) {
        self.out.push_str("<dl class=\"basic-info\" data-basic-info>\n");
        for (key, label, value) in fields {
            let _ = writeln!(
                self.out,
                "<dt>{}</dt><dd data-field=\"{key}\">{}</dd>",
                escape_html(label),
                escape_html(value)
            );
        }
        self.out.push_str("</dl>\n");
    }

    fn section(&mut self, header: &str, body: &str) {
        let h = escape_html(header);
        let _ = write!(self.out, "<section data-header=\"{h}\">\n<h2>{h}</h2>\n{body}</section>\n");
    }

    fn curation(&self, model: &PageModel, source: &FieldRef) -> String {
        let Some(field) = model.text(source) else { return String::new() };
        let rendered =
            field.parsed.as_ref().ok().and_then(|segs| render_segments(segs, &model.refs, &self.ligand_names).ok());
        match rendered {
            Some(html) => format!("<div class=\"curation\">{html}</div>"),
            None => format!("<div class=\"curation\" data-malformed=\"true\">{}</div>", escape_html(&field.raw)),
        }
    }
}

fn link(href: &str, text: &str) -> String {
    format!("<a href=\"{}\">{}</a>", escape_html(href), escape_html(text))
}

fn entries(rows: &[Value]) -> Result<String, AppError> {
    let mut ids = rows.iter().map(|r| get_int(r, "id")).collect::<Result<Vec<_>, _>>()?;
    ids.sort_unstable();
    Ok(ids.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
}

/// Renders a complete HTML document. Output is a pure function of the model.
pub fn render_page(model: &PageModel) -> Result<String, AppError> {
    let mut h =
        Html { out: String::new(), ligand_names: model.ligand_names.iter().map(|(k, v)| (*k, v.clone())).collect() };
    let title = match model.page {
        Page::LigandList(f) => format!("Ligands ({f})"),
        Page::DiseaseList(f) => format!("Diseases ({f})"),
        Page::Object(_) | Page::Disease(_) => get_str(model.entity()?, "name")?.to_string(),
    };
    let _ = write!(
        h.out,
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{0}</title></head>\n<body data-page=\"{1}\">\n<h1>{0}</h1>\n",
        escape_html(&title),
        model.page.kind()
    );
    match model.page {
        Page::LigandList(f) => ligand_list(&mut h, model, &f.to_string())?,
        Page::DiseaseList(f) => disease_list(&mut h, model, &f.to_string())?,
        Page::Object(_) => object(&mut h, model)?,
        Page::Disease(_) => disease(&mut h, model)?,
    }
    if !model.refs.is_empty() {
        h.out.push_str("<section id=\"references\" data-references>\n<h2>References</h2>\n<ol>\n");
        for e in &model.refs.entries {
            let r = &model.references[&e.reference_id];
            let _ = writeln!(
                h.out,
                "<li id=\"ref-{}\" data-pubmed=\"{}\">{} ({}) {}. PMID {}</li>",
                e.position,
                e.pubmed_id,
                escape_html(&r.authors),
                r.year,
                escape_html(&r.title),
                e.pubmed_id
            );
        }
        h.out.push_str("</ol>\n</section>\n");
    }
    h.out.push_str("</body>\n</html>\n");
    Ok(h.out)
}

fn flag(on: bool, label: &str) -> String {
    if on {
        format!("<span class=\"flag\" title=\"{label}\">{label}</span>")
    } else {
        String::new()
    }
}

fn ligand_list(h: &mut Html, model: &PageModel, filter: &str) -> Result<(), AppError> {
    let rows = model.rows();
    h.basic_info(&[
        ("filter", "Filter", filter.to_string()),
        ("count", "Ligands", rows.len().to_string()),
        ("entries", "IDs", entries(rows)?),
    ]);
    if rows.is_empty() {
        return Ok(());
    }
    let mut body = String::from("<table>\n<tr><th>ID</th><th>Name</th><th>Synonyms</th><th>Flags</th></tr>\n");
    for r in rows {
        let id = get_int(r, "id")?;
        let synonyms: Vec<&str> = get_list(r, "synonyms")?.iter().filter_map(Value::as_str).collect();
        let flags = [
            flag(get_bool(r, "approved")?, "approved"),
            flag(get_bool(r, "radioactive")?, "radioactive"),
            flag(get_bool(r, "labelled")?, "labelled"),
            flag(get_bool(r, "immuno")?, "immuno"),
            flag(get_bool(r, "malaria")?, "malaria"),
            flag(get_bool(r, "hasPDB")?, "PDB"),
        ]
        .concat();
        let _ = writeln!(
            body,
            "<tr data-id=\"{id}\"><td>{id}</td><td>{}</td><td>{}</td><td>{flags}</td></tr>",
            link(&format!("/ligand/{id}"), get_str(r, "name")?),
            escape_html(&synonyms.join(", "))
        );
    }
    body.push_str("</table>\n");
    h.section("Ligands", &body);
    Ok(())
}

fn named_links(items: &[Value], prefix: &str) -> Result<String, AppError> {
    let mut out = String::from("<ul>\n");
    for i in items {
        let _ = writeln!(out, "<li>{}</li>", link(&format!("{prefix}/{}", get_int(i, "id")?), get_str(i, "name")?));
    }
    out.push_str("</ul>\n");
    Ok(out)
}

fn disease_list(h: &mut Html, model: &PageModel, filter: &str) -> Result<(), AppError> {
    let rows = model.rows();
    h.basic_info(&[
        ("filter", "Filter", filter.to_string()),
        ("count", "Diseases", rows.len().to_string()),
        ("entries", "IDs", entries(rows)?),
    ]);
    if rows.is_empty() {
        return Ok(());
    }
    let mut body = String::from("<table>\n<tr><th>Disease</th><th>Targets</th></tr>\n");
    for r in rows {
        let id = get_int(r, "id")?;
        let targets: Vec<String> = get_list(r, "objects")?
            .iter()
            .map(|o| Ok(link(&format!("/object/{}", get_int(o, "id")?), get_str(o, "name")?)))
            .collect::<Result<_, AppError>>()?;
        let _ = writeln!(
            body,
            "<tr data-id=\"{id}\"><td>{}</td><td>{}</td></tr>",
            link(&format!("/disease/{id}"), get_str(r, "name")?),
            targets.join(", ")
        );
    }
    body.push_str("</table>\n");
    h.section("Diseases", &body);
    Ok(())
}

fn object(h: &mut Html, model: &PageModel) -> Result<(), AppError> {
    let e = model.entity()?;
    let id = get_int(e, "id")?;
    h.basic_info(&[
        ("id", "Object ID", id.to_string()),
        ("name", "Name", get_str(e, "name")?.to_string()),
        ("nomenclature", "Nomenclature", get_str(e, "nomenclature")?.to_string()),
        ("family", "Family", get_str(e, "family")?.to_string()),
    ]);

    if !get_str(e, "overview")?.trim().is_empty() {
        let body = h.curation(model, &FieldRef { table: "object".into(), key: id, column: "overview_text".into() });
        h.section("Overview", &(body + "\n"));
    }

    let interactions = get_list(e, "interactions")?;
    if !interactions.is_empty() {
        let mut body =
            String::from("<table>\n<tr><th>Ligand</th><th>Action</th><th>Affinity</th><th>Comments</th></tr>\n");
        for i in interactions {
            let source =
                FieldRef { table: "interaction".into(), key: get_int(i, "id")?, column: "comments_text".into() };
            let affinity = get(i, "affinity")?.as_float().unwrap_or_default();
            let _ = writeln!(
                body,
                "<tr><td>{}</td><td>{}</td><td>{affinity:.2}</td><td>{}</td></tr>",
                link(&format!("/ligand/{}", get_int(i, "ligand_id")?), get_str(i, "ligand")?),
                escape_html(get_str(i, "action")?),
                h.curation(model, &source)
            );
        }
        body.push_str("</table>\n");
        h.section("Interactions", &body);
    }

    let diseases = get_list(e, "diseases")?;
    if !diseases.is_empty() {
        h.section("Diseases", &named_links(diseases, "/disease")?);
    }

    let links = get_list(e, "links")?;
    if !links.is_empty() {
        let mut body = String::from("<ul>\n");
        for l in links {
            let _ = writeln!(
                body,
                "<li>{}: {}</li>",
                escape_html(get_str(l, "database")?),
                escape_html(get_str(l, "accession")?)
            );
        }
        body.push_str("</ul>\n");
        h.section("Database Links", &body);
    }

    let previous = get_list(e, "previous_names")?;
    if !previous.is_empty() {
        let mut body = String::from("<ul>\n");
        for p in previous {
            let _ = writeln!(body, "<li>{}</li>", escape_html(p.as_str().unwrap_or_default()));
        }
        body.push_str("</ul>\n");
        h.section("Previous and Unofficial Names", &body);
    }
    Ok(())
}

fn disease(h: &mut Html, model: &PageModel) -> Result<(), AppError> {
    let e = model.entity()?;
    let id = get_int(e, "id")?;
    h.basic_info(&[("id", "Disease ID", id.to_string()), ("name", "Name", get_str(e, "name")?.to_string())]);
    if !get_str(e, "description")?.trim().is_empty() {
        let body = h.curation(model, &FieldRef { table: "disease".into(), key: id, column: "description_text".into() });
        h.section("Description", &(body + "\n"));
    }
    let targets = get_list(e, "targets")?;
    if !targets.is_empty() {
        h.section("Targets", &named_links(targets, "/object")?);
    }
    let ligands = get_list(e, "ligands")?;
    if !ligands.is_empty() {
        h.section("Ligands", &named_links(ligands, "/ligand")?);
    }
    Ok(())
}
