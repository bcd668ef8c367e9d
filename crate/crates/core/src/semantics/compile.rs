//! Compilation of EET expressions into automata.

use thiserror::Error;

use super::automaton::InteractionAutomaton;
use crate::model::{expand, Document, EetExpr, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("unresolved reference to eet `{0}`; resolve the expression first")]
    UnresolvedRef(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Builds an automaton accepting exactly the trace language of `e`.
///
/// Formal parameters are expanded first: every scope becomes the union of
/// its instantiations over all domain assignments, and guards filter the
/// assignments they reject.
pub fn compile(e: &EetExpr, doc: &Document) -> Result<InteractionAutomaton, CompileError> {
    if let Some(name) = e.refs().into_iter().next() {
        return Err(CompileError::UnresolvedRef(name));
    }
    let closed = expand(e, doc)?;
    Ok(build(&closed))
}

fn build(e: &EetExpr) -> InteractionAutomaton {
    match e {
        EetExpr::Empty => InteractionAutomaton::epsilon(),
        EetExpr::Dead => InteractionAutomaton::empty_language(),
        EetExpr::Message(m) => {
            InteractionAutomaton::symbol(m.ground().expect("expanded message is ground"))
        }
        EetExpr::Seq(a, b) => build(a).concat(&build(b)),
        EetExpr::Choice(alts) => alts
            .iter()
            .map(build)
            .reduce(|acc, a| acc.union(&a))
            .unwrap_or_else(InteractionAutomaton::empty_language),
        EetExpr::Loop { body, min, max } => build(body).repeat(*min, *max),
        EetExpr::Interleave(a, b) => build(a).shuffle(&build(b)),
        EetExpr::Guarded(..) | EetExpr::Ref(_) => {
            unreachable!("expansion removes guards and references are rejected")
        }
    }
}
