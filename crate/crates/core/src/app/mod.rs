//! A miniature curated pharmacology database: four pages, each fetched by one
//! composite nested query and rendered to HTML on the server.

pub mod gen;
pub mod model;
pub mod queries;
pub mod render;
pub mod schema;
pub mod server;

pub use gen::{gen_data, GenConfig, Generated, Manifest};
pub use model::{build_page, scan_tag_ids, AppError, FieldRef, Page, PageModel, Reference, TextField};
pub use queries::{DiseaseFilter, Filter};
pub use render::render_page;
pub use schema::{catalog, validate_references};
pub use server::{load_dir, make_backend, serve, start, App, Response, ServeConfig, ServerHandle};
