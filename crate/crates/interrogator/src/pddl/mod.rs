//! The STRIPS subset of PDDL: vocabularies, models, states, parsing and
//! canonical emission.

mod emit;
mod model;
mod parse;
pub mod sexpr;
mod state;
mod vocab;

use thiserror::Error;

pub use emit::{emit_domain, emit_problem};
pub use model::{GroundedStrips, Location, Mode, Model, PalTuple, PalmTuple, Palms};
pub use parse::{parse_domain, parse_problem};
pub use sexpr::Pos;
pub use state::{GroundAction, GroundAtom, Object, ProblemInstance, State};
pub use vocab::{
    instantiate_predicates, ActionHeader, CanonicalAtom, LiftedAtom, Parameter, PredicateSchema,
    TypeHierarchy, Vocabulary, RESERVED_MARKER, ROOT_SORT,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PddlError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("unsupported construct `{construct}` at {pos}")]
    Unsupported { construct: String, pos: Pos },
    #[error("{}{message}", pos.map(|p| format!("at {p}: ")).unwrap_or_default())]
    Semantic { pos: Option<Pos>, message: String },
    #[error("variant conflict: `{pal}` already has a different mode")]
    VariantConflict { pal: String },
    #[error("action `{action}` takes {expected} arguments, got {found}")]
    Arity {
        action: String,
        expected: usize,
        found: usize,
    },
    #[error("action `{action}` applied to repeated objects")]
    RepeatedObject { action: String },
}

impl PddlError {
    pub(crate) fn semantic(message: impl Into<String>) -> Self {
        PddlError::Semantic {
            pos: None,
            message: message.into(),
        }
    }

    /// Attach a source position to an error that lacks one.
    pub(crate) fn at(self, pos: Pos) -> Self {
        match self {
            PddlError::Semantic { pos: None, message } => PddlError::Semantic {
                pos: Some(pos),
                message,
            },
            PddlError::VariantConflict { pal } => PddlError::Semantic {
                pos: Some(pos),
                message: format!("variant conflict: `{pal}` already has a different mode"),
            },
            other => other,
        }
    }
}
