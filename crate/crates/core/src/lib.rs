//! Exact symbolic integration-by-parts bookkeeping for weighted energy
//! identities of `γ∂t + ∂x⁴` and its second-order warm-up.

pub mod classify;
pub mod codec;
pub mod conjugation;
pub mod engine;
pub mod error;
pub mod lincomb;
pub mod oracle;
pub mod presets;
pub mod rational;
pub mod term;
pub mod weight;

pub use error::{Error, Result};
pub use term::{
    merge, term_order, BilinearPart, Deriv, DivergenceFlags, FactorExponents, ScalarExponents,
    Schema, Symbol, Term, TermKey, TermList, UnaryKey, UnaryList, UnaryTerm, Weight,
};
pub use weight::{Direction, WeightModel, WeightPoly};
