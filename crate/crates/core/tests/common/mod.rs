#![allow(dead_code)]

use eet::model::{Atom, CmpOp, Predicate, Term};
use eet::{parse, Document, EetExpr, Interaction, Trace};
use rand::seq::SliceRandom;
use rand::Rng;

pub const SMALL: &str = "\
domain Bit = { lo, hi }
component A, B
msg m0()
msg m1()
msg m2()
msg p(v: Bit)
";

pub fn small_doc() -> Document {
    parse(SMALL).unwrap()
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn car_doc() -> Document {
    parse(&std::fs::read_to_string(fixture_path("car_rental.eet")).unwrap()).unwrap()
}

/// The five interactions of the small document.
pub fn small_alphabet() -> Vec<Interaction> {
    vec![
        Interaction::new("A", "B", "m0", vec![]),
        Interaction::new("B", "A", "m1", vec![]),
        Interaction::new("A", "A", "m2", vec![]),
        Interaction::new("A", "B", "p", vec!["lo".into()]),
        Interaction::new("A", "B", "p", vec!["hi".into()]),
    ]
}

fn leaf<R: Rng>(rng: &mut R) -> EetExpr {
    match rng.gen_range(0..12) {
        0 => EetExpr::Empty,
        1 => EetExpr::message("A", "B", "m0", vec![]),
        2 | 3 => EetExpr::message("B", "A", "m1", vec![]),
        4 => EetExpr::message("A", "A", "m2", vec![]),
        5 => EetExpr::message("A", "B", "p", vec![Term::Const("lo".into())]),
        6 => EetExpr::message("A", "B", "p", vec![Term::Const("hi".into())]),
        7 | 8 => EetExpr::message("A", "B", "p", vec![Term::Param("x".into())]),
        9 | 10 => EetExpr::message("A", "B", "p", vec![Term::Param("y".into())]),
        _ => EetExpr::message("A", "B", "m0", vec![]),
    }
}

fn params_in(e: &EetExpr, out: &mut Vec<String>) {
    if let EetExpr::Message(m) = e {
        for t in &m.args {
            if let Some(p) = t.param() {
                if !out.iter().any(|q| q == p) {
                    out.push(p.to_string());
                }
            }
        }
    }
    for c in e.children() {
        params_in(c, out);
    }
}

fn guard<R: Rng>(rng: &mut R, params: &[String]) -> Predicate {
    let p = params.choose(rng).unwrap().clone();
    let op = if rng.gen_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
    let rhs = match params.iter().find(|q| **q != p) {
        Some(q) if rng.gen_bool(0.4) => Term::Param(q.clone()),
        _ => Term::Const(if rng.gen_bool(0.5) { "lo" } else { "hi" }.into()),
    };
    Predicate {
        atoms: vec![Atom {
            lhs: Term::Param(p),
            op,
            rhs,
        }],
    }
}

/// A random Ref-free expression over the small document, at most `depth`
/// operator levels deep.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> EetExpr {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng);
    }
    let sub = |rng: &mut R| random_expr(rng, depth - 1);
    match rng.gen_range(0..10) {
        0 | 1 => EetExpr::seq(sub(rng), sub(rng)),
        2 | 3 => {
            let n = rng.gen_range(2..=3);
            EetExpr::choice((0..n).map(|_| sub(rng)).collect())
        }
        4 | 5 => {
            let max = [Some(1), Some(2), None][rng.gen_range(0..3)];
            EetExpr::repeat(sub(rng), 0, max)
        }
        6 | 7 => EetExpr::interleave(sub(rng), sub(rng)),
        8 => {
            let body = sub(rng);
            let mut params = Vec::new();
            params_in(&body, &mut params);
            if params.is_empty() {
                body
            } else {
                let pred = guard(rng, &params);
                EetExpr::guarded(body, pred)
            }
        }
        _ => EetExpr::seq(sub(rng), leaf(rng)),
    }
}

pub fn random_trace<R: Rng>(rng: &mut R, max_len: usize) -> Trace {
    let alphabet = small_alphabet();
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| alphabet.choose(rng).unwrap().clone()).collect()
}

/// A small edit of `t`: a prefix, an insertion, a deletion or a swap.
pub fn mutate<R: Rng>(rng: &mut R, t: &Trace) -> Trace {
    let alphabet = small_alphabet();
    let mut v = t.0.clone();
    match rng.gen_range(0..4) {
        0 => v.truncate(rng.gen_range(0..=v.len())),
        1 => {
            let i = rng.gen_range(0..=v.len());
            v.insert(i, alphabet.choose(rng).unwrap().clone());
        }
        2 if !v.is_empty() => {
            v.remove(rng.gen_range(0..v.len()));
        }
        _ if v.len() >= 2 => {
            let i = rng.gen_range(0..v.len() - 1);
            v.swap(i, i + 1);
        }
        _ => v.push(alphabet.choose(rng).unwrap().clone()),
    }
    Trace(v)
}

/// Shortlex order on traces.
pub fn shortlex(a: &Trace, b: &Trace) -> std::cmp::Ordering {
    (a.len(), a).cmp(&(b.len(), b))
}
