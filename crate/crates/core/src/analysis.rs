//! Conformance questions over EET languages: membership, loose scenario
//! consistency, refinement as language inclusion, conjunction and
//! equivalence.
//!
//! Every check returns a [`CheckReport`]. Witnesses are least in shortlex
//! order, so reports are stable across runs.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Document, EetExpr, ModelError, Trace};
use crate::semantics::{compile, CompileError, InteractionAutomaton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Question {
    Member,
    LooseSegment,
    LooseEmbed,
    Refines,
    ConjoinNonEmpty,
    Equivalent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LooseMode {
    /// Some scenario word occurs as a whole behavior word.
    Segment,
    /// Some scenario word occurs as a subsequence of a behavior word.
    Embed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub question: Question,
    pub holds: bool,
    pub witness: Option<Trace>,
    /// Sizes of the automata built along the way.
    pub stats: BTreeMap<String, usize>,
}

impl CheckReport {
    fn new(question: Question, holds: bool, witness: Option<Trace>) -> Self {
        CheckReport {
            question,
            holds,
            witness,
            stats: BTreeMap::new(),
        }
    }

    fn record(mut self, name: &str, a: &InteractionAutomaton) -> Self {
        self.stats.insert(format!("{name}_states"), a.state_count());
        self.stats
            .insert(format!("{name}_transitions"), a.transition_count());
        self
    }

    /// The stable JSON object consumed by the command line.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("event {position} is not declared: {source}")]
    UnknownInteraction { position: usize, source: ModelError },
    #[error("conjunction of an empty list")]
    EmptyConjunction,
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Checks that every event of `t` is declared in `doc`. Positions are
/// 1-based.
pub fn check_trace(t: &Trace, doc: &Document) -> Result<(), AnalysisError> {
    for (i, ev) in t.iter().enumerate() {
        doc.check_interaction(ev)
            .map_err(|source| AnalysisError::UnknownInteraction {
                position: i + 1,
                source,
            })?;
    }
    Ok(())
}

/// Complete interpretation: is `t` one of the words of `e`?
pub fn member(t: &Trace, e: &EetExpr, doc: &Document) -> Result<CheckReport, AnalysisError> {
    check_trace(t, doc)?;
    let a = compile(e, doc)?;
    Ok(CheckReport::new(Question::Member, a.accepts(t), None).record("expr", &a))
}

/// Loose membership: does `t` contain some word of `e` as a subsequence,
/// other events being allowed in between? The witness is `t` itself.
pub fn member_embedded(t: &Trace, e: &EetExpr, doc: &Document) -> Result<CheckReport, AnalysisError> {
    check_trace(t, doc)?;
    let scenario = compile(e, doc)?;
    let behavior = InteractionAutomaton::word(t);
    Ok(loose_report(&scenario, &behavior, LooseMode::Embed))
}

/// Is the scenario consistent with the behavior under a loose reading?
pub fn loose_consistent(
    scenario: &EetExpr,
    behavior: &EetExpr,
    mode: LooseMode,
    doc: &Document,
) -> Result<CheckReport, AnalysisError> {
    let s = compile(scenario, doc)?;
    let b = compile(behavior, doc)?;
    Ok(loose_report(&s, &b, mode))
}

fn loose_report(s: &InteractionAutomaton, b: &InteractionAutomaton, mode: LooseMode) -> CheckReport {
    let (question, lhs) = match mode {
        LooseMode::Segment => (Question::LooseSegment, s.clone()),
        LooseMode::Embed => {
            let alphabet = union_alphabet(s, b);
            (Question::LooseEmbed, s.upward_closure(&alphabet))
        }
    };
    let product = lhs.intersect(b);
    let witness = product.shortest_word();
    CheckReport::new(question, witness.is_some(), witness)
        .record("scenario", s)
        .record("behavior", b)
        .record("product", &product)
}

fn union_alphabet(a: &InteractionAutomaton, b: &InteractionAutomaton) -> Vec<crate::model::Interaction> {
    let mut alphabet: Vec<_> = a.alphabet().iter().chain(b.alphabet()).cloned().collect();
    alphabet.sort();
    alphabet.dedup();
    alphabet
}

/// The least word of `concrete` outside `abstract_`, if any.
fn inclusion_counterexample(
    concrete: &InteractionAutomaton,
    abstract_: &InteractionAutomaton,
) -> (Option<Trace>, InteractionAutomaton, InteractionAutomaton) {
    let alphabet = union_alphabet(concrete, abstract_);
    let complement = abstract_.complement_over(&alphabet);
    let product = concrete.intersect(&complement);
    (product.shortest_word(), complement, product)
}

/// Refinement as language inclusion: every word of `concrete` is a word of
/// `abstract_`. On failure the witness is the least word that is not.
pub fn refines(
    concrete: &EetExpr,
    abstract_: &EetExpr,
    doc: &Document,
) -> Result<CheckReport, AnalysisError> {
    let c = compile(concrete, doc)?;
    let a = compile(abstract_, doc)?;
    let (witness, complement, product) = inclusion_counterexample(&c, &a);
    Ok(CheckReport::new(Question::Refines, witness.is_none(), witness)
        .record("concrete", &c)
        .record("abstract", &a)
        .record("complement", &complement)
        .record("product", &product))
}

/// Do the languages of all expressions share a word?
pub fn conjoin_nonempty(es: &[EetExpr], doc: &Document) -> Result<CheckReport, AnalysisError> {
    let mut automata = es.iter().map(|e| compile(e, doc));
    let first = automata.next().ok_or(AnalysisError::EmptyConjunction)??;
    let mut product = first;
    let mut report_stats = BTreeMap::new();
    for (i, a) in automata.enumerate() {
        let a = a?;
        report_stats.insert(format!("operand{}_states", i + 2), a.state_count());
        product = product.intersect(&a).trim();
    }
    let witness = product.shortest_word();
    let mut report = CheckReport::new(Question::ConjoinNonEmpty, witness.is_some(), witness)
        .record("product", &product);
    report.stats.extend(report_stats);
    Ok(report)
}

/// Language equality. On failure the witness is the least word in the
/// symmetric difference.
pub fn equivalent(a: &EetExpr, b: &EetExpr, doc: &Document) -> Result<CheckReport, AnalysisError> {
    let x = compile(a, doc)?;
    let y = compile(b, doc)?;
    let (w1, _, p1) = inclusion_counterexample(&x, &y);
    let (w2, _, p2) = inclusion_counterexample(&y, &x);
    let witness = match (w1, w2) {
        (Some(u), Some(v)) => Some(shortlex_min(u, v)),
        (u, v) => u.or(v),
    };
    Ok(CheckReport::new(Question::Equivalent, witness.is_none(), witness)
        .record("left", &x)
        .record("right", &y)
        .record("left_minus_right", &p1)
        .record("right_minus_left", &p2))
}

fn shortlex_min(u: Trace, v: Trace) -> Trace {
    if (u.len(), &u) <= (v.len(), &v) {
        u
    } else {
        v
    }
}
