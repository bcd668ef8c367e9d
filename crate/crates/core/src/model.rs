//! Domain types shared by every other module: declarations, interactions,
//! traces and the EET expression tree.
//!
//! Formal parameters are scoped to one EET definition. Equal names inside a
//! definition denote the same value, except that every `Loop` body rebinds
//! the parameters occurring in it on each iteration. The parameters that a
//! scope (the definition root or a loop body) binds are the ones occurring
//! in it outside of nested loops; see [`scope_params`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Parameter name to domain name.
pub type ParamTypes = BTreeMap<String, String>;

/// Parameter name to concrete domain value.
pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown message `{0}`")]
    UnknownMessage(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("unknown eet `{0}`")]
    UnknownEet(String),
    #[error("parameter `{0}` does not occur in a message of the guarded body")]
    UnknownParam(String),
    #[error("message `{message}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        message: String,
        expected: usize,
        found: usize,
    },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("no value bound for parameter `{0}`")]
    IncompleteBinding(String),
    #[error("invalid declaration: {0}")]
    InvalidDeclaration(String),
    #[error("choice without alternatives")]
    EmptyChoice,
    #[error("loop bounds {min}..{max} are inverted")]
    BadLoopBounds { min: u32, max: u32 },
    #[error("cyclic reference through eet `{0}`")]
    CyclicRef(String),
}

/// One atomic synchronous message exchange.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    pub sender: String,
    pub receiver: String,
    pub message: String,
    pub args: Vec<String>,
}

impl Interaction {
    pub fn new<S: Into<String>>(sender: S, receiver: S, message: S, args: Vec<String>) -> Self {
        Interaction {
            sender: sender.into(),
            receiver: receiver.into(),
            message: message.into(),
            args,
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} : {}({})",
            self.sender,
            self.receiver,
            self.message,
            self.args.join(", ")
        )
    }
}

impl Serialize for Interaction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A finite interaction sequence. Ordering is lexicographic on the events.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Trace(pub Vec<Interaction>);

impl Trace {
    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn events(&self) -> &[Interaction] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interaction> {
        self.0.iter()
    }

    pub fn concat(&self, other: &Trace) -> Trace {
        let mut events = self.0.clone();
        events.extend(other.0.iter().cloned());
        Trace(events)
    }
}

impl From<Vec<Interaction>> for Trace {
    fn from(events: Vec<Interaction>) -> Self {
        Trace(events)
    }
}

impl FromIterator<Interaction> for Trace {
    fn from_iter<I: IntoIterator<Item = Interaction>>(iter: I) -> Self {
        Trace(iter.into_iter().collect())
    }
}

/// Renders the trace in the trace-log format, one event per line.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ev in &self.0 {
            writeln!(f, "{ev}")?;
        }
        Ok(())
    }
}

/// A message argument: a domain constant or a formal parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Param(String),
}

impl Term {
    pub fn param(&self) -> Option<&str> {
        match self {
            Term::Param(p) => Some(p),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(v) | Term::Param(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub lhs: Term,
    pub op: CmpOp,
    pub rhs: Term,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        };
        write!(f, "{} {} {}", self.lhs, op, self.rhs)
    }
}

/// Conjunction of (in)equality atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Predicate {
    pub atoms: Vec<Atom>,
}

impl Predicate {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Predicate { atoms }
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.atoms
            .iter()
            .flat_map(|a| [a.lhs.param(), a.rhs.param()])
            .flatten()
    }

    /// Evaluates under `binding`. Fails if a parameter is unbound.
    pub fn eval(&self, binding: &Binding) -> Result<bool, ModelError> {
        let value = |t: &Term| -> Result<String, ModelError> {
            match t {
                Term::Const(v) => Ok(v.clone()),
                Term::Param(p) => binding
                    .get(p)
                    .cloned()
                    .ok_or_else(|| ModelError::IncompleteBinding(p.clone())),
            }
        };
        for atom in &self.atoms {
            let equal = value(&atom.lhs)? == value(&atom.rhs)?;
            let holds = match atom.op {
                CmpOp::Eq => equal,
                CmpOp::Ne => !equal,
            };
            if !holds {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

/// A message arrow in an EET.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageNode {
    pub sender: String,
    pub receiver: String,
    pub message: String,
    pub args: Vec<Term>,
}

impl MessageNode {
    /// The concrete interaction, if every argument is a constant.
    pub fn ground(&self) -> Option<Interaction> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(v) => Some(v.clone()),
                Term::Param(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Interaction {
            sender: self.sender.clone(),
            receiver: self.receiver.clone(),
            message: self.message.clone(),
            args,
        })
    }
}

impl fmt::Display for MessageNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} : {}(", self.sender, self.receiver, self.message)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EetExpr {
    Empty,
    Message(MessageNode),
    Seq(Box<EetExpr>, Box<EetExpr>),
    Choice(Vec<EetExpr>),
    /// `max == None` means unbounded repetition.
    Loop {
        body: Box<EetExpr>,
        min: u32,
        max: Option<u32>,
    },
    Interleave(Box<EetExpr>, Box<EetExpr>),
    Ref(String),
    Guarded(Box<EetExpr>, Predicate),
    /// The empty language. Only produced by guards that evaluate to false.
    Dead,
}

impl EetExpr {
    pub fn message<S: Into<String>>(sender: S, receiver: S, message: S, args: Vec<Term>) -> Self {
        EetExpr::Message(MessageNode {
            sender: sender.into(),
            receiver: receiver.into(),
            message: message.into(),
            args,
        })
    }

    /// A closed message node for a concrete interaction.
    pub fn from_interaction(ev: &Interaction) -> Self {
        EetExpr::Message(MessageNode {
            sender: ev.sender.clone(),
            receiver: ev.receiver.clone(),
            message: ev.message.clone(),
            args: ev.args.iter().cloned().map(Term::Const).collect(),
        })
    }

    /// The single-word expression for a trace.
    pub fn from_trace(t: &Trace) -> Self {
        EetExpr::seq_all(t.iter().map(EetExpr::from_interaction).collect())
    }

    pub fn seq(a: EetExpr, b: EetExpr) -> Self {
        EetExpr::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of `steps`; `Empty` when there are none.
    pub fn seq_all(steps: Vec<EetExpr>) -> Self {
        let mut iter = steps.into_iter().rev();
        match iter.next() {
            None => EetExpr::Empty,
            Some(last) => iter.fold(last, |acc, s| EetExpr::seq(s, acc)),
        }
    }

    pub fn choice(alts: Vec<EetExpr>) -> Self {
        EetExpr::Choice(alts)
    }

    pub fn repeat(body: EetExpr, min: u32, max: Option<u32>) -> Self {
        EetExpr::Loop {
            body: Box::new(body),
            min,
            max,
        }
    }

    pub fn interleave(a: EetExpr, b: EetExpr) -> Self {
        EetExpr::Interleave(Box::new(a), Box::new(b))
    }

    pub fn guarded(body: EetExpr, pred: Predicate) -> Self {
        EetExpr::Guarded(Box::new(body), pred)
    }

    pub fn children(&self) -> Vec<&EetExpr> {
        match self {
            EetExpr::Empty | EetExpr::Message(_) | EetExpr::Ref(_) | EetExpr::Dead => vec![],
            EetExpr::Seq(a, b) | EetExpr::Interleave(a, b) => vec![a, b],
            EetExpr::Choice(alts) => alts.iter().collect(),
            EetExpr::Loop { body, .. } | EetExpr::Guarded(body, _) => vec![body],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Number of message nodes.
    pub fn message_count(&self) -> usize {
        match self {
            EetExpr::Message(_) => 1,
            _ => self.children().iter().map(|c| c.message_count()).sum(),
        }
    }

    pub fn contains_ref(&self) -> bool {
        match self {
            EetExpr::Ref(_) => true,
            _ => self.children().iter().any(|c| c.contains_ref()),
        }
    }

    /// Names of the EETs referenced anywhere in the expression.
    pub fn refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let EetExpr::Ref(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Components mentioned by message nodes.
    pub fn components(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let EetExpr::Message(m) = e {
                out.insert(m.sender.clone());
                out.insert(m.receiver.clone());
            }
        });
        out
    }

    fn visit<F: FnMut(&EetExpr)>(&self, f: &mut F) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Applies `f` to every parameter name (in messages and predicates).
    pub fn rename_params<F: Fn(&str) -> String>(&self, f: &F) -> EetExpr {
        let term = |t: &Term| match t {
            Term::Param(p) => Term::Param(f(p)),
            c => c.clone(),
        };
        match self {
            EetExpr::Message(m) => EetExpr::Message(MessageNode {
                args: m.args.iter().map(term).collect(),
                ..m.clone()
            }),
            EetExpr::Guarded(body, pred) => EetExpr::guarded(
                body.rename_params(f),
                Predicate::new(
                    pred.atoms
                        .iter()
                        .map(|a| Atom {
                            lhs: term(&a.lhs),
                            op: a.op,
                            rhs: term(&a.rhs),
                        })
                        .collect(),
                ),
            ),
            other => other.map_children(|c| c.rename_params(f)),
        }
    }

    /// Rebuilds a node with `f` applied to each direct child.
    pub fn map_children<F: FnMut(&EetExpr) -> EetExpr>(&self, mut f: F) -> EetExpr {
        match self {
            EetExpr::Empty | EetExpr::Message(_) | EetExpr::Ref(_) | EetExpr::Dead => self.clone(),
            EetExpr::Seq(a, b) => EetExpr::seq(f(a), f(b)),
            EetExpr::Interleave(a, b) => EetExpr::interleave(f(a), f(b)),
            EetExpr::Choice(alts) => EetExpr::Choice(alts.iter().map(f).collect()),
            EetExpr::Loop { body, min, max } => EetExpr::repeat(f(body), *min, *max),
            EetExpr::Guarded(body, pred) => EetExpr::guarded(f(body), pred.clone()),
        }
    }
}

/// Compact single-line form, close to the DSL surface syntax.
impl fmt::Display for EetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EetExpr::Empty => f.write_str("empty"),
            EetExpr::Dead => f.write_str("dead"),
            EetExpr::Message(m) => write!(f, "{m}"),
            EetExpr::Seq(a, b) => write!(f, "({a} ; {b})"),
            EetExpr::Choice(alts) => {
                f.write_str("choice { ")?;
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(" }")
            }
            EetExpr::Loop { body, min, max } => match max {
                Some(n) => write!(f, "loop {min}..{n} {{ {body} }}"),
                None => write!(f, "loop {min}..* {{ {body} }}"),
            },
            EetExpr::Interleave(a, b) => write!(f, "par {{ {a} | {b} }}"),
            EetExpr::Ref(n) => write!(f, "ref {n}"),
            EetExpr::Guarded(body, pred) => write!(f, "{{ {body} where {pred} }}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MessageSig {
    pub params: Vec<ParamDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub domains: BTreeMap<String, Vec<String>>,
    /// Declaration order is kept; renderers use it for column order.
    pub components: Vec<String>,
    pub messages: BTreeMap<String, MessageSig>,
    pub eets: BTreeMap<String, EetExpr>,
}

impl Document {
    pub fn has_component(&self, name: &str) -> bool {
        self.components.iter().any(|c| c == name)
    }

    pub fn domain(&self, name: &str) -> Option<&[String]> {
        self.domains.get(name).map(Vec::as_slice)
    }

    pub fn message(&self, name: &str) -> Result<&MessageSig, ModelError> {
        self.messages
            .get(name)
            .ok_or_else(|| ModelError::UnknownMessage(name.to_string()))
    }

    pub fn eet(&self, name: &str) -> Result<&EetExpr, ModelError> {
        self.eets
            .get(name)
            .ok_or_else(|| ModelError::UnknownEet(name.to_string()))
    }

    /// Checks that a concrete interaction is declared: known components and
    /// message, matching arity, every value drawn from its parameter's domain.
    pub fn check_interaction(&self, ev: &Interaction) -> Result<(), ModelError> {
        for c in [&ev.sender, &ev.receiver] {
            if !self.has_component(c) {
                return Err(ModelError::UnknownComponent(c.clone()));
            }
        }
        let sig = self.message(&ev.message)?;
        if sig.params.len() != ev.args.len() {
            return Err(ModelError::ArityMismatch {
                message: ev.message.clone(),
                expected: sig.params.len(),
                found: ev.args.len(),
            });
        }
        for (decl, value) in sig.params.iter().zip(&ev.args) {
            let values = self
                .domain(&decl.domain)
                .ok_or_else(|| ModelError::UnknownDomain(decl.domain.clone()))?;
            if !values.contains(value) {
                return Err(ModelError::DomainMismatch(format!(
                    "`{value}` is not a value of domain `{}`",
                    decl.domain
                )));
            }
        }
        Ok(())
    }

    /// Re-checks every structural invariant of a document, collecting all
    /// violations.
    pub fn validate(&self) -> Result<(), Vec<ModelError>> {
        let mut errors = Vec::new();
        for (name, values) in &self.domains {
            if values.is_empty() {
                errors.push(ModelError::InvalidDeclaration(format!(
                    "domain `{name}` has no values"
                )));
            }
            let distinct: BTreeSet<_> = values.iter().collect();
            if distinct.len() != values.len() {
                errors.push(ModelError::InvalidDeclaration(format!(
                    "domain `{name}` repeats a value"
                )));
            }
        }
        let distinct: BTreeSet<_> = self.components.iter().collect();
        if distinct.len() != self.components.len() {
            errors.push(ModelError::InvalidDeclaration(
                "component declared twice".into(),
            ));
        }
        for (name, sig) in &self.messages {
            let mut seen = BTreeSet::new();
            for p in &sig.params {
                if !self.domains.contains_key(&p.domain) {
                    errors.push(ModelError::UnknownDomain(p.domain.clone()));
                }
                if !seen.insert(&p.name) {
                    errors.push(ModelError::InvalidDeclaration(format!(
                        "message `{name}` repeats parameter `{}`",
                        p.name
                    )));
                }
            }
        }
        for (name, e) in &self.eets {
            if let Err(err) = self.check_expr(e) {
                errors.push(err);
            }
            for r in e.refs() {
                if !self.eets.contains_key(&r) {
                    errors.push(ModelError::UnknownEet(r));
                }
            }
            if self.reaches(name, name, &mut BTreeSet::new()) {
                errors.push(ModelError::CyclicRef(name.clone()));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    fn reaches(&self, from: &str, target: &str, seen: &mut BTreeSet<String>) -> bool {
        let Some(e) = self.eets.get(from) else {
            return false;
        };
        for r in e.refs() {
            if r == target {
                return true;
            }
            if seen.insert(r.clone()) && self.reaches(&r, target, seen) {
                return true;
            }
        }
        false
    }

    /// Structural checks on one expression: components, choice, loop bounds
    /// and parameter typing.
    pub fn check_expr(&self, e: &EetExpr) -> Result<(), ModelError> {
        check_shape(e, self)?;
        free_params(e, self).map(|_| ())
    }
}

fn check_shape(e: &EetExpr, doc: &Document) -> Result<(), ModelError> {
    match e {
        EetExpr::Message(m) => {
            for c in [&m.sender, &m.receiver] {
                if !doc.has_component(c) {
                    return Err(ModelError::UnknownComponent(c.clone()));
                }
            }
        }
        EetExpr::Choice(alts) if alts.is_empty() => return Err(ModelError::EmptyChoice),
        EetExpr::Loop {
            min, max: Some(max), ..
        } if min > max => {
            return Err(ModelError::BadLoopBounds {
                min: *min,
                max: *max,
            })
        }
        _ => {}
    }
    e.children().into_iter().try_for_each(|c| check_shape(c, doc))
}

fn record_param(
    types: &mut ParamTypes,
    name: &str,
    domain: &str,
) -> Result<(), ModelError> {
    match types.get(name) {
        Some(d) if d != domain => Err(ModelError::DomainMismatch(format!(
            "parameter `{name}` used with domains `{d}` and `{domain}`"
        ))),
        Some(_) => Ok(()),
        None => {
            types.insert(name.to_string(), domain.to_string());
            Ok(())
        }
    }
}

fn collect_params(e: &EetExpr, doc: &Document, types: &mut ParamTypes) -> Result<(), ModelError> {
    match e {
        EetExpr::Message(m) => {
            let sig = doc.message(&m.message)?;
            if sig.params.len() != m.args.len() {
                return Err(ModelError::ArityMismatch {
                    message: m.message.clone(),
                    expected: sig.params.len(),
                    found: m.args.len(),
                });
            }
            for (decl, term) in sig.params.iter().zip(&m.args) {
                match term {
                    Term::Param(p) => record_param(types, p, &decl.domain)?,
                    Term::Const(v) => {
                        let values = doc
                            .domain(&decl.domain)
                            .ok_or_else(|| ModelError::UnknownDomain(decl.domain.clone()))?;
                        if !values.contains(v) {
                            return Err(ModelError::DomainMismatch(format!(
                                "`{v}` is not a value of domain `{}`",
                                decl.domain
                            )));
                        }
                    }
                }
            }
            Ok(())
        }
        EetExpr::Guarded(body, pred) => {
            let mut inner = ParamTypes::new();
            collect_params(body, doc, &mut inner)?;
            check_predicate(pred, &inner, doc)?;
            for (p, d) in inner {
                record_param(types, &p, &d)?;
            }
            Ok(())
        }
        EetExpr::Ref(_) => Ok(()),
        _ => e
            .children()
            .into_iter()
            .try_for_each(|c| collect_params(c, doc, types)),
    }
}

/// Every atom must mention at least one body parameter, and both sides
/// must share a domain.
fn check_predicate(pred: &Predicate, body: &ParamTypes, doc: &Document) -> Result<(), ModelError> {
    let domain_of = |t: &Term| -> Result<Option<String>, ModelError> {
        match t {
            Term::Param(p) => body
                .get(p)
                .cloned()
                .map(Some)
                .ok_or_else(|| ModelError::UnknownParam(p.clone())),
            Term::Const(_) => Ok(None),
        }
    };
    for atom in &pred.atoms {
        let (l, r) = (domain_of(&atom.lhs)?, domain_of(&atom.rhs)?);
        let check_const = |domain: &str, t: &Term| -> Result<(), ModelError> {
            if let Term::Const(v) = t {
                if !doc.domain(domain).is_some_and(|vs| vs.contains(v)) {
                    return Err(ModelError::DomainMismatch(format!(
                        "`{v}` is not a value of domain `{domain}`"
                    )));
                }
            }
            Ok(())
        };
        match (l, r) {
            (Some(a), Some(b)) if a != b => {
                return Err(ModelError::DomainMismatch(format!(
                    "`{atom}` compares domains `{a}` and `{b}`"
                )))
            }
            (Some(_), Some(_)) => {}
            (Some(d), None) => check_const(&d, &atom.rhs)?,
            (None, Some(d)) => check_const(&d, &atom.lhs)?,
            (None, None) => {
                return Err(ModelError::DomainMismatch(format!(
                    "`{atom}` mentions no parameter"
                )))
            }
        }
    }
    Ok(())
}

/// Every formal parameter of `e` with its domain. Parameters of referenced
/// EETs are not included.
pub fn free_params(e: &EetExpr, doc: &Document) -> Result<ParamTypes, ModelError> {
    let mut types = ParamTypes::new();
    collect_params(e, doc, &mut types)?;
    Ok(types)
}

/// The parameters bound by the scope rooted at `e`: occurrences in messages
/// and predicates that are not beneath a nested `Loop`.
pub fn scope_params(e: &EetExpr, types: &ParamTypes) -> ParamTypes {
    fn walk(e: &EetExpr, out: &mut BTreeSet<String>) {
        match e {
            EetExpr::Loop { .. } | EetExpr::Ref(_) => {}
            EetExpr::Message(m) => out.extend(m.args.iter().filter_map(|t| t.param()).map(String::from)),
            EetExpr::Guarded(body, pred) => {
                out.extend(pred.params().map(String::from));
                walk(body, out);
            }
            _ => e.children().into_iter().for_each(|c| walk(c, out)),
        }
    }
    let root = match e {
        EetExpr::Loop { .. } => return ParamTypes::new(),
        other => other,
    };
    let mut names = BTreeSet::new();
    walk(root, &mut names);
    names
        .into_iter()
        .filter_map(|n| types.get(&n).map(|d| (n, d.clone())))
        .collect()
}

/// All assignments of the given parameters over their domains, in
/// lexicographic order of (parameter, value).
pub fn assignments(params: &ParamTypes, doc: &Document) -> Result<Vec<Binding>, ModelError> {
    let mut out = vec![Binding::new()];
    for (name, domain) in params {
        let values = doc
            .domain(domain)
            .ok_or_else(|| ModelError::UnknownDomain(domain.clone()))?;
        out = out
            .into_iter()
            .flat_map(|b| {
                values.iter().map(move |v| {
                    let mut b = b.clone();
                    b.insert(name.clone(), v.clone());
                    b
                })
            })
            .collect();
    }
    Ok(out)
}

/// Replaces every parameter occurrence by its bound value. Guards are
/// evaluated: satisfied guards disappear, failed ones become `Dead`.
/// `Ref` nodes are left untouched.
pub fn substitute(e: &EetExpr, binding: &Binding, doc: &Document) -> Result<EetExpr, ModelError> {
    let types = free_params(e, doc)?;
    for (p, d) in &types {
        let v = binding
            .get(p)
            .ok_or_else(|| ModelError::IncompleteBinding(p.clone()))?;
        if !doc.domain(d).is_some_and(|vs| vs.contains(v)) {
            return Err(ModelError::DomainMismatch(format!(
                "`{v}` bound to `{p}` is not a value of domain `{d}`"
            )));
        }
    }
    ground(e, binding, true)
}

fn ground(e: &EetExpr, binding: &Binding, through_loops: bool) -> Result<EetExpr, ModelError> {
    Ok(match e {
        EetExpr::Message(m) => {
            let args = m
                .args
                .iter()
                .map(|t| match t {
                    Term::Param(p) => binding
                        .get(p)
                        .cloned()
                        .map(Term::Const)
                        .ok_or_else(|| ModelError::IncompleteBinding(p.clone())),
                    c => Ok(c.clone()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            EetExpr::Message(MessageNode { args, ..m.clone() })
        }
        EetExpr::Guarded(body, pred) => {
            if pred.eval(binding)? {
                ground(body, binding, through_loops)?
            } else {
                EetExpr::Dead
            }
        }
        EetExpr::Loop { .. } if !through_loops => e.clone(),
        other => {
            let mut err = None;
            let out = other.map_children(|c| {
                ground(c, binding, through_loops).unwrap_or_else(|x| {
                    err.get_or_insert(x);
                    EetExpr::Dead
                })
            });
            if let Some(x) = err {
                return Err(x);
            }
            out
        }
    })
}

/// Expands all formal parameters into a closed expression: each scope (the
/// root, then every loop body) becomes the choice over all assignments of
/// its scope parameters, with guards evaluated per assignment.
///
/// A parameter is bound at the lowest node covering all of its occurrences.
/// Existential choice distributes over alternatives and over the factors
/// that do not mention it, so this yields the same language while keeping
/// independent parameters from multiplying.
pub fn expand(e: &EetExpr, doc: &Document) -> Result<EetExpr, ModelError> {
    let types = free_params(e, doc)?;
    expand_scope(e, &types, doc)
}

fn expand_scope(e: &EetExpr, types: &ParamTypes, doc: &Document) -> Result<EetExpr, ModelError> {
    // An empty domain empties the whole scope, not only the branch that
    // happens to bind it.
    for domain in scope_params(e, types).values() {
        match doc.domain(domain) {
            None => return Err(ModelError::UnknownDomain(domain.clone())),
            Some([]) => return Ok(EetExpr::Dead),
            Some(_) => {}
        }
    }
    bind(e, &Binding::new(), types, doc)
}

fn unbound(e: &EetExpr, env: &Binding, types: &ParamTypes) -> ParamTypes {
    let mut ps = scope_params(e, types);
    ps.retain(|p, _| !env.contains_key(p));
    ps
}

/// Expands `e` under `env`, binding here the parameters that cannot be
/// pushed further down.
fn bind(e: &EetExpr, env: &Binding, types: &ParamTypes, doc: &Document) -> Result<EetExpr, ModelError> {
    let here: ParamTypes = match e {
        EetExpr::Message(_) => unbound(e, env, types),
        EetExpr::Guarded(_, pred) => {
            let mut ps = ParamTypes::new();
            for p in pred.params() {
                if !env.contains_key(p) {
                    let domain = types.get(p).ok_or_else(|| ModelError::UnknownParam(p.into()))?;
                    ps.insert(p.into(), domain.clone());
                }
            }
            ps
        }
        EetExpr::Seq(a, b) | EetExpr::Interleave(a, b) => {
            let mut ps = unbound(a, env, types);
            let rhs = unbound(b, env, types);
            ps.retain(|p, _| rhs.contains_key(p));
            ps
        }
        _ => ParamTypes::new(),
    };
    let mut alts = Vec::new();
    for sigma in assignments(&here, doc)? {
        let mut env = env.clone();
        env.extend(sigma);
        let closed = bind_node(e, &env, types, doc)?;
        if !alts.contains(&closed) {
            alts.push(closed);
        }
    }
    Ok(if alts.len() == 1 {
        alts.pop().unwrap()
    } else {
        EetExpr::Choice(alts)
    })
}

fn bind_node(e: &EetExpr, env: &Binding, types: &ParamTypes, doc: &Document) -> Result<EetExpr, ModelError> {
    Ok(match e {
        EetExpr::Message(_) => ground(e, env, false)?,
        EetExpr::Guarded(body, pred) => {
            if pred.eval(env)? {
                bind(body, env, types, doc)?
            } else {
                EetExpr::Dead
            }
        }
        // Loop bodies rebind their parameters on every iteration.
        EetExpr::Loop { body, min, max } => {
            EetExpr::repeat(expand_scope(body, types, doc)?, *min, *max)
        }
        other => {
            let mut err = None;
            let out = other.map_children(|c| {
                bind(c, env, types, doc).unwrap_or_else(|x| {
                    err.get_or_insert(x);
                    EetExpr::Dead
                })
            });
            if let Some(x) = err {
                return Err(x);
            }
            out
        }
    })
}
