//! Finite Set-valued semantics: trajectory categories, knowledge
//! presheaves, model instances over a Kripke skeleton, and an evaluator
//! for the finite fragment of the term language.

use thiserror::Error;

pub mod category;
pub mod eval;
pub mod instance;
pub mod separation;

pub use category::{
    enrichment_example, FailureReport, FunctorReport, Generator, Law, LawViolation, Path, Presheaf,
    TraceCategory, DEFAULT_MORPHISM_BOUND,
};
pub use eval::{bot_is_false, soundness_check, Evaluator, Frame, SemType, Soundness, Value};
pub use instance::{causal_chain_check, CausalChain, SetModelInstance, Skeleton};
pub use separation::{separation_demo, SeparationReport};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown arrow `{0}`")]
    UnknownArrow(String),
    #[error("`{element}` is not in the fibre over `{object}`")]
    NotInFibre { object: String, element: String },
    #[error("depth {depth} exceeds the morphism bound {bound}")]
    DepthExceedsBound { depth: usize, bound: usize },
    #[error("presheaf `{name}` violates the functor laws: {detail}")]
    Functor { name: String, detail: String },
    #[error("outside the evaluable fragment: {0}")]
    Fragment(String),
    #[error("the instance refutes `{0}`")]
    Refuted(String),
    #[error(transparent)]
    Mu(#[from] crate::mu::MuError),
}
