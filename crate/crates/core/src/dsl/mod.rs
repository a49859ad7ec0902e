//! Schematic-term language: model, parser, normal forms and the equation catalog.

pub mod catalog;
pub mod normalize;
pub mod parse;
pub mod term;

pub use catalog::{load_catalog, Direction, EquationCatalog, TransportEquation};
pub use normalize::{normalize_sum, normalize_term};
pub use parse::{parse_raw, parse_term};
pub use term::{render_sum, Constraint, Factor, Idx, SchematicTerm, Total, GLOBAL};
