//! Online conformance monitoring against a complete interaction
//! description.
//!
//! The expression is compiled once into a complete DFA shared by every
//! [`MonitorState`]; stepping is a pure function of state and event.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Document, EetExpr, Interaction, ModelError, Trace};
use crate::semantics::{compile, CompileError, InteractionAutomaton, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("event {position} is not declared ({event}): {source}")]
    UnknownInteraction {
        position: usize,
        event: String,
        source: ModelError,
    },
    #[error(transparent)]
    Compile(#[from] CompileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    AcceptedLive,
    AcceptedFinal,
    Pending,
    Violated,
}

impl Verdict {
    pub fn from_flags(in_language: bool, extensible: bool) -> Self {
        match (in_language, extensible) {
            (true, true) => Verdict::AcceptedLive,
            (true, false) => Verdict::AcceptedFinal,
            (false, true) => Verdict::Pending,
            (false, false) => Verdict::Violated,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Verdict::AcceptedLive => "ACCEPTED-LIVE",
            Verdict::AcceptedFinal => "ACCEPTED-FINAL",
            Verdict::Pending => "PENDING",
            Verdict::Violated => "VIOLATED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

/// One line of the verdict stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictRecord {
    pub i: usize,
    pub event: String,
    pub verdict: Verdict,
}

impl VerdictRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Debug)]
struct Compiled {
    doc: Document,
    dfa: InteractionAutomaton,
    /// Some accepting state is reachable in one or more steps.
    extensible: Vec<bool>,
}

/// A compiled description, cheap to clone and share between threads.
#[derive(Debug, Clone)]
pub struct Monitor {
    inner: Arc<Compiled>,
}

impl Monitor {
    pub fn new(e: &EetExpr, doc: &Document) -> Result<Self, MonitorError> {
        let dfa = compile(e, doc)?.determinize();
        let live = dfa.live_states();
        let mut extensible = vec![false; dfa.state_count()];
        for (p, _, q) in dfa.transitions() {
            if live[q] {
                extensible[p] = true;
            }
        }
        Ok(Monitor {
            inner: Arc::new(Compiled {
                doc: doc.clone(),
                dfa,
                extensible,
            }),
        })
    }

    pub fn automaton(&self) -> &InteractionAutomaton {
        &self.inner.dfa
    }

    pub fn start(&self) -> MonitorState {
        let initial = self.inner.dfa.initial().iter().next().copied();
        MonitorState {
            monitor: self.clone(),
            current: initial,
            consumed: 0,
        }
    }
}

/// Position of a monitor in its automaton. `current` is `None` once an
/// event outside the description's alphabet has been seen.
#[derive(Debug, Clone)]
pub struct MonitorState {
    monitor: Monitor,
    current: Option<StateId>,
    consumed: usize,
}

impl PartialEq for MonitorState {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.monitor.inner, &other.monitor.inner)
            && self.current == other.current
            && self.consumed == other.consumed
    }
}

impl MonitorState {
    pub fn current(&self) -> Option<StateId> {
        self.current
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn in_language(&self) -> bool {
        self.current
            .is_some_and(|s| self.monitor.inner.dfa.is_accepting(s))
    }

    pub fn extensible(&self) -> bool {
        self.current.is_some_and(|s| self.monitor.inner.extensible[s])
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_flags(self.in_language(), self.extensible())
    }

    /// Advances by one event. Undeclared events are errors, not violations.
    pub fn step(&self, ev: &Interaction) -> Result<MonitorState, MonitorError> {
        let position = self.consumed + 1;
        self.monitor
            .inner
            .doc
            .check_interaction(ev)
            .map_err(|source| MonitorError::UnknownInteraction {
                position,
                event: ev.to_string(),
                source,
            })?;
        let dfa = &self.monitor.inner.dfa;
        Ok(MonitorState {
            monitor: self.monitor.clone(),
            current: self.current.and_then(|s| dfa.next_state(s, ev)),
            consumed: position,
        })
    }
}

pub fn start(e: &EetExpr, doc: &Document) -> Result<MonitorState, MonitorError> {
    Ok(Monitor::new(e, doc)?.start())
}

/// Folds `step` over the log, recording the verdict after every event.
pub fn run_log(
    e: &EetExpr,
    doc: &Document,
    log: &Trace,
) -> Result<(MonitorState, Vec<VerdictRecord>), MonitorError> {
    run_from(start(e, doc)?, log)
}

pub fn run_from(
    mut state: MonitorState,
    log: &Trace,
) -> Result<(MonitorState, Vec<VerdictRecord>), MonitorError> {
    let mut records = Vec::with_capacity(log.len());
    for ev in log.iter() {
        state = state.step(ev)?;
        records.push(VerdictRecord {
            i: state.consumed,
            event: ev.to_string(),
            verdict: state.verdict(),
        });
    }
    Ok((state, records))
}
