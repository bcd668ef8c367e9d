//! Bounded enumeration of trace languages, straight from the inductive
//! set semantics. It shares nothing with the automaton path except the
//! model types and parameter typing, and serves as the reference against
//! which compiled automata are tested.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::model::{free_params, CmpOp, Document, EetExpr, Interaction, ModelError, Term, Trace};

/// Largest supported bound.
pub const MAX_BOUND: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("bound {0} exceeds the maximum of {MAX_BOUND}")]
    BoundTooLarge(usize),
    #[error("unresolved reference to eet `{0}`")]
    UnresolvedRef(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Every word of a language up to a length bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedDenotation {
    pub bound: usize,
    /// Sorted lexicographically.
    pub traces: BTreeSet<Trace>,
    pub exhaustive_to_bound: bool,
}

impl BoundedDenotation {
    pub fn contains(&self, t: &Trace) -> bool {
        self.traces.contains(t)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

type Word = Vec<u16>;
type Lang = HashSet<Word>;
type Env<'a> = BTreeMap<&'a str, &'a str>;

struct Enumerator<'a> {
    bound: usize,
    /// Parameter name to domain values.
    domains: BTreeMap<&'a str, &'a [String]>,
    /// Every interaction the expression could produce, sorted; words are
    /// sequences of indices into it.
    letters: Vec<Interaction>,
}

/// The words of length at most `bound` in the language of `e`.
pub fn denote(e: &EetExpr, doc: &Document, bound: usize) -> Result<BoundedDenotation, OracleError> {
    if bound > MAX_BOUND {
        return Err(OracleError::BoundTooLarge(bound));
    }
    if let Some(r) = e.refs().into_iter().next() {
        return Err(OracleError::UnresolvedRef(r));
    }
    let types = free_params(e, doc)?;
    let mut domains = BTreeMap::new();
    for (p, d) in &types {
        let values = doc
            .domain(d)
            .ok_or_else(|| ModelError::UnknownDomain(d.clone()))?;
        domains.insert(p.as_str(), values);
    }
    let mut en = Enumerator {
        bound,
        domains,
        letters: Vec::new(),
    };
    let mut letters = BTreeSet::new();
    en.collect_letters(e, &mut letters);
    en.letters = letters.into_iter().collect();
    let lang = en.scope(e);
    let traces = lang
        .into_iter()
        .map(|w| w.into_iter().map(|i| en.letters[i as usize].clone()).collect())
        .collect();
    Ok(BoundedDenotation {
        bound,
        traces,
        exhaustive_to_bound: true,
    })
}

impl<'a> Enumerator<'a> {
    fn collect_letters(&self, e: &'a EetExpr, out: &mut BTreeSet<Interaction>) {
        if let EetExpr::Message(m) = e {
            let mut partial: Vec<Vec<String>> = vec![Vec::new()];
            for t in &m.args {
                let choices: Vec<String> = match t {
                    Term::Const(v) => vec![v.clone()],
                    Term::Param(p) => self.domains[p.as_str()].to_vec(),
                };
                partial = partial
                    .into_iter()
                    .flat_map(|prefix| {
                        choices.iter().map(move |c| {
                            let mut v = prefix.clone();
                            v.push(c.clone());
                            v
                        })
                    })
                    .collect();
            }
            for args in partial {
                out.insert(Interaction {
                    sender: m.sender.clone(),
                    receiver: m.receiver.clone(),
                    message: m.message.clone(),
                    args,
                });
            }
        }
        for c in e.children() {
            self.collect_letters(c, out);
        }
    }

    /// Parameters a scope binds: those outside nested loops.
    fn scope_names(e: &'a EetExpr, out: &mut BTreeSet<&'a str>) {
        match e {
            EetExpr::Loop { .. } => {}
            EetExpr::Message(m) => out.extend(m.args.iter().filter_map(Term::param)),
            EetExpr::Guarded(body, pred) => {
                for a in &pred.atoms {
                    out.extend([a.lhs.param(), a.rhs.param()].into_iter().flatten());
                }
                Self::scope_names(body, out);
            }
            _ => {
                for c in e.children() {
                    Self::scope_names(c, out);
                }
            }
        }
    }

    /// Union over every assignment of the scope's own parameters.
    fn scope(&self, e: &'a EetExpr) -> Lang {
        let mut names = BTreeSet::new();
        if !matches!(e, EetExpr::Loop { .. }) {
            Self::scope_names(e, &mut names);
        }
        let mut envs: Vec<Env<'a>> = vec![Env::new()];
        for name in names {
            let values = self.domains[name];
            envs = envs
                .into_iter()
                .flat_map(|env| {
                    values.iter().map(move |v| {
                        let mut env = env.clone();
                        env.insert(name, v.as_str());
                        env
                    })
                })
                .collect();
        }
        let mut out = Lang::new();
        for env in &envs {
            out.extend(self.eval(e, env));
        }
        out
    }

    fn eval(&self, e: &'a EetExpr, env: &Env<'a>) -> Lang {
        match e {
            EetExpr::Empty => Lang::from([Word::new()]),
            EetExpr::Dead | EetExpr::Ref(_) => Lang::new(),
            EetExpr::Message(m) => {
                if self.bound == 0 {
                    return Lang::new();
                }
                let args = m
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Const(v) => v.clone(),
                        Term::Param(p) => env[p.as_str()].to_string(),
                    })
                    .collect();
                let ev = Interaction {
                    sender: m.sender.clone(),
                    receiver: m.receiver.clone(),
                    message: m.message.clone(),
                    args,
                };
                let idx = self.letters.binary_search(&ev).expect("letter collected");
                Lang::from([vec![idx as u16]])
            }
            EetExpr::Choice(alts) => alts.iter().flat_map(|a| self.eval(a, env)).collect(),
            EetExpr::Seq(a, b) => {
                let left = self.eval(a, env);
                if left.is_empty() {
                    return left;
                }
                self.concat(&left, &self.eval(b, env))
            }
            EetExpr::Loop { body, min, max } => {
                let body = self.scope(body);
                self.iterate(&body, *min as usize, max.map(|m| m as usize))
            }
            EetExpr::Interleave(a, b) => {
                let (left, right) = (self.eval(a, env), self.eval(b, env));
                let mut out = Lang::new();
                for u in &left {
                    for v in &right {
                        if u.len() + v.len() <= self.bound {
                            interleavings(u, v, &mut Vec::new(), &mut out);
                        }
                    }
                }
                out
            }
            EetExpr::Guarded(body, pred) => {
                let value = |t: &'a Term| match t {
                    Term::Const(v) => v.as_str(),
                    Term::Param(p) => env[p.as_str()],
                };
                let holds = pred.atoms.iter().all(|a| {
                    let eq = value(&a.lhs) == value(&a.rhs);
                    match a.op {
                        CmpOp::Eq => eq,
                        CmpOp::Ne => !eq,
                    }
                });
                if holds {
                    self.eval(body, env)
                } else {
                    Lang::new()
                }
            }
        }
    }

    fn concat(&self, left: &Lang, right: &Lang) -> Lang {
        let mut out = Lang::new();
        for u in left {
            for v in right {
                if u.len() + v.len() <= self.bound {
                    let mut w = u.clone();
                    w.extend_from_slice(v);
                    out.insert(w);
                }
            }
        }
        out
    }

    /// Union of `body^k` for `k` in `min..=max`. Without a maximum, stops
    /// once a power adds nothing new.
    fn iterate(&self, body: &Lang, min: usize, max: Option<usize>) -> Lang {
        let mut power = Lang::from([Word::new()]);
        let mut acc = Lang::new();
        let mut k = 0;
        loop {
            if k >= min {
                if max.is_none() && k > min && power.iter().all(|w| acc.contains(w)) {
                    break;
                }
                acc.extend(power.iter().cloned());
            }
            if max == Some(k) || power.is_empty() {
                break;
            }
            power = self.concat(&power, body);
            k += 1;
        }
        acc
    }
}

fn interleavings(u: &[u16], v: &[u16], prefix: &mut Word, out: &mut Lang) {
    match (u.split_first(), v.split_first()) {
        (None, _) => {
            let mut w = prefix.clone();
            w.extend_from_slice(v);
            out.insert(w);
        }
        (_, None) => {
            let mut w = prefix.clone();
            w.extend_from_slice(u);
            out.insert(w);
        }
        (Some((x, ur)), Some((y, vr))) => {
            prefix.push(*x);
            interleavings(ur, v, prefix, out);
            prefix.pop();
            prefix.push(*y);
            interleavings(u, vr, prefix, out);
            prefix.pop();
        }
    }
}
