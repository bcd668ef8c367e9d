pub mod analysis;
pub mod cli;
pub mod dsl;
pub mod model;
pub mod monitor;
pub mod oracle;
pub mod render;
pub mod semantics;

pub use dsl::{parse, parse_trace_log, resolve, ParseError, ParseErrorKind};
pub use model::{Document, EetExpr, Interaction, ModelError, Trace};
pub use semantics::{compile, CompileError, InteractionAutomaton};
