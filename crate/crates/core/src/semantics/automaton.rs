//! Finite automata over interaction alphabets.
//!
//! Automata are ε-free NFAs with a set of initial states. The alphabet is
//! kept sorted, so symbol indices order like the interactions they stand
//! for; witnesses found by [`InteractionAutomaton::shortest_word`] are the
//! least words in shortlex order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::model::{Interaction, Trace};

pub type StateId = usize;
type Sym = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionAutomaton {
    alphabet: Vec<Interaction>,
    delta: Vec<BTreeMap<Sym, BTreeSet<StateId>>>,
    initial: BTreeSet<StateId>,
    accepting: Vec<bool>,
    deterministic: bool,
}

/// Sorted union of two alphabets plus the index maps into it.
fn merge_alphabets(a: &[Interaction], b: &[Interaction]) -> (Vec<Interaction>, Vec<Sym>, Vec<Sym>) {
    let merged: Vec<Interaction> = a
        .iter()
        .chain(b)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |xs: &[Interaction]| {
        xs.iter()
            .map(|x| merged.binary_search(x).expect("symbol in merged alphabet"))
            .collect()
    };
    let (ia, ib) = (index(a), index(b));
    (merged, ia, ib)
}

impl InteractionAutomaton {
    /// Accepts nothing.
    pub fn empty_language() -> Self {
        InteractionAutomaton {
            alphabet: Vec::new(),
            delta: Vec::new(),
            initial: BTreeSet::new(),
            accepting: Vec::new(),
            deterministic: false,
        }
    }

    /// Accepts exactly the empty word.
    pub fn epsilon() -> Self {
        InteractionAutomaton {
            alphabet: Vec::new(),
            delta: vec![BTreeMap::new()],
            initial: BTreeSet::from([0]),
            accepting: vec![true],
            deterministic: true,
        }
    }

    /// Accepts exactly the one-letter word `ev`.
    pub fn symbol(ev: Interaction) -> Self {
        let mut delta = vec![BTreeMap::new(), BTreeMap::new()];
        delta[0].insert(0, BTreeSet::from([1]));
        InteractionAutomaton {
            alphabet: vec![ev],
            delta,
            initial: BTreeSet::from([0]),
            accepting: vec![false, true],
            deterministic: true,
        }
    }

    /// Accepts exactly `t`.
    pub fn word(t: &Trace) -> Self {
        t.iter()
            .fold(Self::epsilon(), |acc, ev| acc.concat(&Self::symbol(ev.clone())))
    }

    pub fn alphabet(&self) -> &[Interaction] {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.delta.len()
    }

    pub fn transition_count(&self) -> usize {
        self.delta
            .iter()
            .flat_map(|m| m.values())
            .map(BTreeSet::len)
            .sum()
    }

    pub fn initial(&self) -> &BTreeSet<StateId> {
        &self.initial
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting[s]
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// Every transition as `(from, interaction, to)`, sorted by state and
    /// symbol.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, &Interaction, StateId)> + '_ {
        self.delta.iter().enumerate().flat_map(move |(p, m)| {
            m.iter()
                .flat_map(move |(sym, ts)| ts.iter().map(move |q| (p, &self.alphabet[*sym], *q)))
        })
    }

    fn symbol_of(&self, ev: &Interaction) -> Option<Sym> {
        self.alphabet.binary_search(ev).ok()
    }

    /// The successor of `s` on `ev` in a deterministic automaton.
    pub fn next_state(&self, s: StateId, ev: &Interaction) -> Option<StateId> {
        let sym = self.symbol_of(ev)?;
        self.delta[s].get(&sym).and_then(|ts| ts.iter().next().copied())
    }

    /// Checks the structural invariants; used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.delta.len();
        if self.accepting.len() != n {
            return Err("accepting flags do not cover all states".into());
        }
        if self.initial.iter().any(|&s| s >= n) {
            return Err("unknown initial state".into());
        }
        if self.alphabet.windows(2).any(|w| w[0] >= w[1]) {
            return Err("alphabet not sorted and unique".into());
        }
        for m in &self.delta {
            for (sym, ts) in m {
                if *sym >= self.alphabet.len() {
                    return Err("label outside alphabet".into());
                }
                if ts.iter().any(|&t| t >= n) {
                    return Err("transition to unknown state".into());
                }
                if self.deterministic && ts.len() > 1 {
                    return Err("two successors in a deterministic automaton".into());
                }
            }
        }
        if self.deterministic && self.initial.len() != 1 {
            return Err("deterministic automaton needs exactly one initial state".into());
        }
        Ok(())
    }

    /// Same language over a larger sorted alphabet.
    pub fn with_alphabet(&self, alphabet: &[Interaction]) -> Self {
        let map: Vec<Sym> = self
            .alphabet
            .iter()
            .map(|x| alphabet.binary_search(x).expect("alphabet is a superset"))
            .collect();
        self.relabel(alphabet.to_vec(), &map)
    }

    fn relabel(&self, alphabet: Vec<Interaction>, map: &[Sym]) -> Self {
        InteractionAutomaton {
            alphabet,
            delta: self
                .delta
                .iter()
                .map(|m| m.iter().map(|(s, ts)| (map[*s], ts.clone())).collect())
                .collect(),
            initial: self.initial.clone(),
            accepting: self.accepting.clone(),
            deterministic: self.deterministic,
        }
    }

    /// Places `a` and `b` side by side over their merged alphabet; the
    /// states of `b` are shifted by `a.state_count()`.
    fn disjoint(a: &Self, b: &Self) -> (Self, usize) {
        let (alphabet, ma, mb) = merge_alphabets(&a.alphabet, &b.alphabet);
        let ra = a.relabel(alphabet.clone(), &ma);
        let rb = b.relabel(alphabet, &mb);
        let shift = ra.delta.len();
        let mut out = ra;
        out.deterministic = false;
        for m in rb.delta {
            out.delta.push(
                m.into_iter()
                    .map(|(s, ts)| (s, ts.into_iter().map(|t| t + shift).collect()))
                    .collect(),
            );
        }
        out.accepting.extend(rb.accepting);
        (out, shift)
    }

    fn add_edges_from(&mut self, target: StateId, sources: &BTreeSet<StateId>) {
        let copied: Vec<(Sym, BTreeSet<StateId>)> = sources
            .iter()
            .flat_map(|s| self.delta[*s].iter().map(|(a, ts)| (*a, ts.clone())))
            .collect();
        for (a, ts) in copied {
            self.delta[target].entry(a).or_default().extend(ts);
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let (mut out, shift) = Self::disjoint(self, other);
        out.initial.extend(other.initial.iter().map(|s| s + shift));
        out.trim()
    }

    pub fn concat(&self, other: &Self) -> Self {
        let (mut out, shift) = Self::disjoint(self, other);
        let other_init: BTreeSet<StateId> = other.initial.iter().map(|s| s + shift).collect();
        let other_nullable = other_init.iter().any(|&s| out.accepting[s]);
        for q in 0..shift {
            if out.accepting[q] {
                out.add_edges_from(q, &other_init);
                out.accepting[q] = other_nullable;
            }
        }
        out.trim()
    }

    /// Kleene star: zero or more repetitions.
    pub fn star(&self) -> Self {
        let mut out = self.clone();
        out.deterministic = false;
        let start = out.delta.len();
        out.delta.push(BTreeMap::new());
        out.accepting.push(true);
        let init = out.initial.clone();
        out.add_edges_from(start, &init);
        for q in 0..start {
            if out.accepting[q] {
                out.add_edges_from(q, &init);
            }
        }
        out.initial = BTreeSet::from([start]);
        out.trim()
    }

    /// Between `min` and `max` repetitions; `None` is unbounded.
    pub fn repeat(&self, min: u32, max: Option<u32>) -> Self {
        let mut out = Self::epsilon().with_alphabet(&self.alphabet);
        for _ in 0..min {
            out = out.concat(self);
        }
        match max {
            None => out.concat(&self.star()),
            Some(max) => {
                let optional = Self::epsilon().union(self);
                for _ in min..max {
                    out = out.concat(&optional);
                }
                out
            }
        }
    }

    /// All interleavings: either side moves on its own.
    pub fn shuffle(&self, other: &Self) -> Self {
        let (alphabet, ma, mb) = merge_alphabets(&self.alphabet, &other.alphabet);
        let a = self.relabel(alphabet.clone(), &ma);
        let b = other.relabel(alphabet.clone(), &mb);
        let starts = a
            .initial
            .iter()
            .flat_map(|p| b.initial.iter().map(move |q| (*p, *q)));
        Self::explore(alphabet, starts, |(p, q)| {
            let mut out: Vec<(Sym, (StateId, StateId))> = Vec::new();
            for (sym, ts) in &a.delta[p] {
                out.extend(ts.iter().map(|t| (*sym, (*t, q))));
            }
            for (sym, ts) in &b.delta[q] {
                out.extend(ts.iter().map(|t| (*sym, (p, *t))));
            }
            out
        }, |(p, q)| a.accepting[p] && b.accepting[q])
        .trim()
    }

    /// Synchronous product over the merged alphabet.
    pub fn intersect(&self, other: &Self) -> Self {
        let (alphabet, ma, mb) = merge_alphabets(&self.alphabet, &other.alphabet);
        let a = self.relabel(alphabet.clone(), &ma);
        let b = other.relabel(alphabet.clone(), &mb);
        let starts = a
            .initial
            .iter()
            .flat_map(|p| b.initial.iter().map(move |q| (*p, *q)));
        let out = Self::explore(alphabet, starts, |(p, q)| {
            let mut out = Vec::new();
            for (sym, ts) in &a.delta[p] {
                if let Some(us) = b.delta[q].get(sym) {
                    for t in ts {
                        out.extend(us.iter().map(|u| (*sym, (*t, *u))));
                    }
                }
            }
            out
        }, |(p, q)| a.accepting[p] && b.accepting[q]);
        let det = self.deterministic && other.deterministic;
        InteractionAutomaton {
            deterministic: det,
            ..out
        }
    }

    /// Breadth-first construction of the reachable part of a product whose
    /// states are keys of type `K`; states are numbered in discovery order.
    fn explore<K, I, F, A>(alphabet: Vec<Interaction>, starts: I, mut succ: F, accept: A) -> Self
    where
        K: Copy + Eq + std::hash::Hash,
        I: IntoIterator<Item = K>,
        F: FnMut(K) -> Vec<(Sym, K)>,
        A: Fn(K) -> bool,
    {
        let mut ids: HashMap<K, StateId> = HashMap::new();
        let mut keys = Vec::new();
        let mut queue = VecDeque::new();
        let mut initial = BTreeSet::new();
        for k in starts {
            let id = *ids.entry(k).or_insert_with(|| {
                keys.push(k);
                queue.push_back(k);
                keys.len() - 1
            });
            initial.insert(id);
        }
        let mut delta: Vec<BTreeMap<Sym, BTreeSet<StateId>>> = vec![BTreeMap::new(); keys.len()];
        while let Some(k) = queue.pop_front() {
            let from = ids[&k];
            for (sym, t) in succ(k) {
                let to = *ids.entry(t).or_insert_with(|| {
                    keys.push(t);
                    queue.push_back(t);
                    delta.push(BTreeMap::new());
                    keys.len() - 1
                });
                delta[from].entry(sym).or_default().insert(to);
            }
        }
        let accepting = keys.iter().map(|k| accept(*k)).collect();
        InteractionAutomaton {
            alphabet,
            delta,
            initial,
            accepting,
            deterministic: false,
        }
    }

    /// Subset construction over the automaton's own alphabet.
    pub fn determinize(&self) -> Self {
        self.determinize_over(&self.alphabet.clone())
    }

    /// Subset construction over a superset `alphabet`. The result is
    /// complete: every state has a successor on every symbol, the empty
    /// subset acting as the sink.
    pub fn determinize_over(&self, alphabet: &[Interaction]) -> Self {
        let a = self.with_alphabet(alphabet);
        let mut ids: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::new();
        let mut subsets = vec![a.initial.clone()];
        ids.insert(a.initial.clone(), 0);
        let mut delta = vec![BTreeMap::new()];
        let mut next = 0;
        while next < subsets.len() {
            let current = subsets[next].clone();
            for sym in 0..a.alphabet.len() {
                let succ: BTreeSet<StateId> = current
                    .iter()
                    .filter_map(|s| a.delta[*s].get(&sym))
                    .flatten()
                    .copied()
                    .collect();
                let id = match ids.get(&succ) {
                    Some(id) => *id,
                    None => {
                        ids.insert(succ.clone(), subsets.len());
                        subsets.push(succ);
                        delta.push(BTreeMap::new());
                        subsets.len() - 1
                    }
                };
                delta[next].insert(sym, BTreeSet::from([id]));
            }
            next += 1;
        }
        let accepting = subsets
            .iter()
            .map(|set| set.iter().any(|s| a.accepting[*s]))
            .collect();
        InteractionAutomaton {
            alphabet: a.alphabet,
            delta,
            initial: BTreeSet::from([0]),
            accepting,
            deterministic: true,
        }
    }

    /// Complement relative to the automaton's own alphabet.
    pub fn complement(&self) -> Self {
        self.complement_over(&self.alphabet.clone())
    }

    /// Complement relative to `alphabet`, which must contain the
    /// automaton's alphabet.
    pub fn complement_over(&self, alphabet: &[Interaction]) -> Self {
        let mut d = self.determinize_over(alphabet);
        for f in d.accepting.iter_mut() {
            *f = !*f;
        }
        d
    }

    /// Adds a self-loop on every symbol of `alphabet` at every state: the
    /// result accepts every word that contains an accepted word as a
    /// (not necessarily contiguous) subsequence.
    pub fn upward_closure(&self, alphabet: &[Interaction]) -> Self {
        let mut out = self.with_alphabet(alphabet);
        out.deterministic = false;
        for (s, m) in out.delta.iter_mut().enumerate() {
            for sym in 0..alphabet.len() {
                m.entry(sym).or_default().insert(s);
            }
        }
        out
    }

    /// States from which an accepting state is reachable (in zero or more
    /// steps).
    pub fn live_states(&self) -> Vec<bool> {
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); self.delta.len()];
        for (p, m) in self.delta.iter().enumerate() {
            for t in m.values().flatten() {
                rev[*t].push(p);
            }
        }
        let mut live = self.accepting.clone();
        let mut stack: Vec<StateId> = (0..live.len()).filter(|s| live[*s]).collect();
        while let Some(s) = stack.pop() {
            for &p in &rev[s] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        live
    }

    /// Drops states that are unreachable or cannot reach acceptance.
    pub fn trim(&self) -> Self {
        let mut reach = vec![false; self.delta.len()];
        let mut stack: Vec<StateId> = self.initial.iter().copied().collect();
        for s in &stack {
            reach[*s] = true;
        }
        while let Some(s) = stack.pop() {
            for t in self.delta[s].values().flatten() {
                if !reach[*t] {
                    reach[*t] = true;
                    stack.push(*t);
                }
            }
        }
        let live = self.live_states();
        let keep: Vec<bool> = reach.iter().zip(&live).map(|(r, l)| *r && *l).collect();
        let mut renum = vec![usize::MAX; keep.len()];
        let mut n = 0;
        for (s, k) in keep.iter().enumerate() {
            if *k {
                renum[s] = n;
                n += 1;
            }
        }
        let delta = (0..keep.len())
            .filter(|s| keep[*s])
            .map(|s| {
                self.delta[s]
                    .iter()
                    .filter_map(|(sym, ts)| {
                        let ts: BTreeSet<StateId> = ts
                            .iter()
                            .filter(|t| keep[**t])
                            .map(|t| renum[*t])
                            .collect();
                        (!ts.is_empty()).then_some((*sym, ts))
                    })
                    .collect()
            })
            .collect();
        let initial: BTreeSet<StateId> = self
            .initial
            .iter()
            .filter(|s| keep[**s])
            .map(|s| renum[*s])
            .collect();
        InteractionAutomaton {
            alphabet: self.alphabet.clone(),
            delta,
            deterministic: self.deterministic && initial.len() == 1,
            initial,
            accepting: (0..keep.len())
                .filter(|s| keep[*s])
                .map(|s| self.accepting[s])
                .collect(),
        }
    }

    pub fn accepts(&self, t: &Trace) -> bool {
        let mut current = self.initial.clone();
        for ev in t.iter() {
            let Some(sym) = self.symbol_of(ev) else {
                return false;
            };
            current = current
                .iter()
                .filter_map(|s| self.delta[*s].get(&sym))
                .flatten()
                .copied()
                .collect();
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|s| self.accepting[*s])
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_word().is_none()
    }

    /// The least accepted word in shortlex order (length first, then
    /// lexicographic over the sorted alphabet), if any.
    ///
    /// Breadth-first over groups of states that share their least word:
    /// each state is claimed by the first group reaching it, and groups of
    /// one layer are generated in lexicographic order of their words.
    pub fn shortest_word(&self) -> Option<Trace> {
        let mut seen = vec![false; self.delta.len()];
        for s in &self.initial {
            seen[*s] = true;
        }
        let mut layer: Vec<(Vec<Sym>, BTreeSet<StateId>)> = vec![(Vec::new(), self.initial.clone())];
        while !layer.is_empty() {
            for (word, states) in &layer {
                if states.iter().any(|s| self.accepting[*s]) {
                    return Some(word.iter().map(|s| self.alphabet[*s].clone()).collect());
                }
            }
            let mut next = Vec::new();
            for (word, states) in &layer {
                for sym in 0..self.alphabet.len() {
                    let fresh: BTreeSet<StateId> = states
                        .iter()
                        .filter_map(|s| self.delta[*s].get(&sym))
                        .flatten()
                        .copied()
                        .filter(|t| !seen[*t])
                        .collect();
                    if fresh.is_empty() {
                        continue;
                    }
                    for t in &fresh {
                        seen[*t] = true;
                    }
                    let mut w = word.clone();
                    w.push(sym);
                    next.push((w, fresh));
                }
            }
            layer = next;
        }
        None
    }

    /// All accepted words up to `max_len`, sorted. Intended for tests and
    /// small automata.
    pub fn words_up_to(&self, max_len: usize) -> BTreeSet<Trace> {
        let mut out = BTreeSet::new();
        let mut frontier: Vec<(Vec<Sym>, BTreeSet<StateId>)> = vec![(Vec::new(), self.initial.clone())];
        for len in 0..=max_len {
            let mut next = Vec::new();
            for (word, states) in frontier {
                if states.is_empty() {
                    continue;
                }
                if states.iter().any(|s| self.accepting[*s]) {
                    out.insert(word.iter().map(|s| self.alphabet[*s].clone()).collect());
                }
                if len == max_len {
                    continue;
                }
                for sym in 0..self.alphabet.len() {
                    let succ: BTreeSet<StateId> = states
                        .iter()
                        .filter_map(|s| self.delta[*s].get(&sym))
                        .flatten()
                        .copied()
                        .collect();
                    if !succ.is_empty() {
                        let mut w = word.clone();
                        w.push(sym);
                        next.push((w, succ));
                    }
                }
            }
            frontier = next;
        }
        out
    }

    /// Stable text dump: header lines, then one sorted edge per line as
    /// `from\t-> to : interaction`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let join = |it: &mut dyn Iterator<Item = StateId>| {
            it.map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "states: {}", self.state_count());
        let _ = writeln!(out, "initial: {}", join(&mut self.initial.iter().copied()));
        let _ = writeln!(
            out,
            "accepting: {}",
            join(&mut (0..self.delta.len()).filter(|s| self.accepting[*s]))
        );
        for (p, ev, q) in self.transitions() {
            let _ = writeln!(out, "{p}\t-> {q} : {ev}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(name: &str) -> Interaction {
        Interaction::new("A", "B", name, vec![])
    }

    fn word(names: &[&str]) -> Trace {
        names.iter().map(|n| ev(n)).collect()
    }

    fn aut(names: &[&str]) -> InteractionAutomaton {
        InteractionAutomaton::word(&word(names))
    }

    fn words(a: &InteractionAutomaton, max: usize) -> Vec<Vec<String>> {
        a.words_up_to(max)
            .into_iter()
            .map(|t| t.iter().map(|e| e.message.clone()).collect())
            .collect()
    }

    #[test]
    fn epsilon_and_empty() {
        let e = InteractionAutomaton::epsilon();
        assert!(e.accepts(&Trace::empty()));
        assert_eq!(e.shortest_word(), Some(Trace::empty()));
        assert!(InteractionAutomaton::empty_language().is_empty());
    }

    #[test]
    fn bounded_loop() {
        let a = aut(&["a"]).repeat(0, Some(2));
        assert_eq!(words(&a, 5), vec![vec![], vec!["a"], vec!["a", "a"]]);
        let a = aut(&["a"]).repeat(2, None);
        assert_eq!(words(&a, 3), vec![vec!["a", "a"], vec!["a", "a", "a"]]);
    }

    #[test]
    fn interleave_two_symbols() {
        let s = aut(&["a"]).shuffle(&aut(&["b"]));
        assert_eq!(words(&s, 4), vec![vec!["a", "b"], vec!["b", "a"]]);
    }

    #[test]
    fn shuffle_counts() {
        let s = aut(&["a", "a"]).shuffle(&aut(&["b", "b"]));
        let ws = s.words_up_to(4);
        assert_eq!(ws.len(), 6);
        assert!(ws.iter().all(|w| w.len() == 4));
    }

    #[test]
    fn shuffle_with_overlap() {
        let s = aut(&["a"]).shuffle(&aut(&["a"]));
        assert_eq!(words(&s, 4), vec![vec!["a", "a"]]);
    }

    #[test]
    fn shuffle_epsilon_identity() {
        let x = aut(&["a", "b"]).union(&aut(&["c"]).star());
        let s = x.shuffle(&InteractionAutomaton::epsilon());
        assert_eq!(s.words_up_to(5), x.words_up_to(5));
    }

    #[test]
    fn complement_and_intersection() {
        let x = aut(&["a", "b"]).union(&aut(&["a"]).star());
        let c = x.complement();
        assert!(c.is_deterministic());
        assert!(x.intersect(&c).is_empty());
        assert!(!c.accepts(&word(&["a", "b"])));
        assert!(c.accepts(&word(&["b"])));
        let cc = c.complement();
        assert_eq!(cc.words_up_to(4), x.words_up_to(4));
    }

    #[test]
    fn complement_over_larger_alphabet() {
        let x = aut(&["a"]);
        let alphabet = vec![ev("a"), ev("b")];
        let c = x.complement_over(&alphabet);
        assert!(c.accepts(&word(&["b"])));
        assert!(c.accepts(&Trace::empty()));
        assert!(!c.accepts(&word(&["a"])));
    }

    #[test]
    fn determinize_is_complete_and_deterministic() {
        let x = aut(&["a", "b"]).union(&aut(&["a", "a"]));
        let d = x.determinize();
        d.check_invariants().unwrap();
        assert!(d.is_deterministic());
        for s in 0..d.state_count() {
            for e in d.alphabet() {
                assert!(d.next_state(s, e).is_some());
            }
        }
        assert_eq!(d.words_up_to(3), x.words_up_to(3));
    }

    #[test]
    fn shortest_word_is_shortlex_least() {
        // Two initial states; the one listed first only offers `c`.
        let x = aut(&["c"]).union(&aut(&["b", "a"])).union(&aut(&["b"]));
        assert_eq!(x.shortest_word(), Some(word(&["b"])));
        let y = aut(&["c", "a"]).union(&aut(&["b", "z"]));
        assert_eq!(y.shortest_word(), Some(word(&["b", "z"])));
    }

    #[test]
    fn upward_closure_accepts_superwords() {
        let x = aut(&["a", "c"]);
        let alphabet = vec![ev("a"), ev("b"), ev("c")];
        let up = x.upward_closure(&alphabet);
        assert!(up.accepts(&word(&["b", "a", "b", "b", "c", "a"])));
        assert!(!up.accepts(&word(&["c", "a"])));
    }

    #[test]
    fn dump_is_sorted_and_stable() {
        let x = aut(&["a", "b"]);
        let d = x.dump();
        assert_eq!(d, x.clone().dump());
        assert!(d.contains("0\t-> 1 : A -> B : a()"));
        assert!(d.starts_with("states: 3\ninitial: 0\naccepting: 2\n"));
    }

    #[test]
    fn invariants_hold_after_operations() {
        let x = aut(&["a", "b"]).star();
        let y = aut(&["b"]).repeat(1, Some(3));
        for a in [
            x.union(&y),
            x.concat(&y),
            x.shuffle(&y),
            x.intersect(&y),
            x.determinize(),
            y.complement(),
            x.trim(),
        ] {
            a.check_invariants().unwrap();
        }
    }
}
