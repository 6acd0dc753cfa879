//! Explicit-state model checking: the modal μ-calculus, its Prop_μ image,
//! LTL on lassos and CTL.

use thiserror::Error;

pub mod formula;
pub mod gen;
pub mod kripke;
pub mod parse;
pub mod temporal;

pub use formula::{dec, enc, mc_mu, mc_propmu, mu_alpha_eq, MuFormula, PropMuFormula};
pub use kripke::{FixpointStats, KripkeStructure, StateSet};
pub use parse::{parse_ctl, parse_ltl, parse_mu, parse_propmu};
pub use temporal::{ctl_eval, ctl_to_mu, ltl_eval, CtlFormula, LassoStep, LassoTrace, LtlFormula};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MuError {
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("free fixpoint variable `{0}`")]
    FreeVariable(String),
    #[error("fixpoint iteration is not monotone")]
    NonMonotone,
    #[error("untranslatable: {0}")]
    Untranslatable(String),
    #[error("transition relation is not total: no successor for {}", .0.join(", "))]
    NotTotal(Vec<String>),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("no evidence available for K_f({0})")]
    MissingEvidence(String),
    #[error("inconsistent lasso: {0}")]
    InconsistentLasso(String),
}
