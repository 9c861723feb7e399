//! Toolchain for Flowthings Machine (FM) conceptual models.
//!
//! Models are written in a small textual language ([`dsl`]), checked against
//! the structural rules of flow machines ([`validate`]), executed as
//! deterministic token flows ([`sim`]) and drawn as Graphviz diagrams
//! ([`render`]). [`corpus`] bundles worked example models.

pub mod corpus;
pub mod dsl;
pub mod model;
pub mod render;
pub mod sim;
pub mod validate;

pub use model::{Endpoint, Model, ModelBuilder, StageKind};
