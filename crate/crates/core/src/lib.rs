//! Signature calculus, schematic commutation, power-counting certificates,
//! trapped-surface verification and δ-rescaling for double null foliations.
//!
//! The crate is organised by concern:
//!
//! * [`quantity`] holds the geometric symbols, their signatures and weights.
//! * [`monomial`] is the exact exponent arithmetic over `a`, `|u|`, `|u∞|`, `O`, `R`, `δ`.
//! * [`dsl`] parses and normalizes schematic terms and loads the equation catalog.
//! * [`signature`] checks signature homogeneity.
//! * [`commute`] expands angular commutators.
//! * [`budget`] certifies estimate chains by power counting.
//! * [`formation`] runs the validated trapped-surface verification.
//! * [`rescale`] implements the δ-rescaling map.
//! * [`report`] renders deterministic JSON and Markdown.

pub mod budget;
pub mod commute;
pub mod dsl;
pub mod error;
pub mod formation;
pub mod monomial;
pub mod quantity;
pub mod rational;
pub mod report;
pub mod rescale;
pub mod signature;

pub use error::{Error, Result};
pub use monomial::{Base, CoeffClass, WeightMonomial};
pub use quantity::{Quantity, QuantityKind, RegimeParameters, SignatureValue};
pub use rational::Q;
