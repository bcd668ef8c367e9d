//! Trace semantics of EETs as finite automata.

mod automaton;
mod compile;

pub use automaton::{InteractionAutomaton, StateId};
pub use compile::{compile, CompileError};
