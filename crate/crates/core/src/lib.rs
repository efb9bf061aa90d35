//! Logical geometry over finite models.
//!
//! Formulas are valued into the algebra of subsets of the affine space
//! `Hom(W(X), H)`; the crate computes definable and algebraic sets, both
//! Galois closures, the categories of definable sets and closed filters,
//! LG-types with separating witnesses, and isomorphism verdicts for the
//! resulting knowledge bases. Everything is exact and exhaustive.

pub mod category;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod galois;
pub mod halmos;
pub mod kb;
pub mod model;
pub mod oracle;
pub mod syntax;
pub mod types;

pub use error::{Error, ParseError, Result};
pub use halmos::DefSet;
pub use model::{Elem, FiniteModel, Limits, ModelRef, Point};
pub use syntax::{Formula, Sort, Term};
