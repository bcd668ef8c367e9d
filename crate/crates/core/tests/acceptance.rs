//! Acceptance criteria, one pass/fail line each. Run with
//! `cargo test --test acceptance`.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use eet::analysis::{self, LooseMode};
use eet::monitor;
use eet::oracle::denote;
use eet::{compile, parse_trace_log, resolve, EetExpr, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Automaton membership against the enumeration oracle on random
/// expressions.
fn oracle_equivalence() -> Outcome {
    const EXPRS: usize = 1000;
    const BOUND: usize = 8;
    const EXHAUSTIVE_LIMIT: usize = 20_000;
    let doc = small_doc();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let started = Instant::now();
    let (mut exhaustive, mut sampled, mut checked) = (0, 0, 0usize);
    for k in 0..EXPRS {
        let e = random_expr(&mut rng, 4);
        let a = compile(&e, &doc).map_err(|err| format!("expr {k}: {err}"))?;
        let o = denote(&e, &doc, BOUND).map_err(|err| format!("expr {k}: {err}"))?;
        if o.len() <= EXHAUSTIVE_LIMIT {
            // Equal word sets up to the bound means agreement on every
            // trace up to the bound.
            let words = a.words_up_to(BOUND);
            if words != o.traces {
                let diff = words.symmetric_difference(&o.traces).next().cloned();
                return Err(format!("expr {k} `{e}`: languages differ at {diff:?}"));
            }
            exhaustive += 1;
            checked += o.len();
        } else {
            sampled += 1;
        }
        // Sampled traces: uniform, oracle words and edits of them.
        let known: Vec<&Trace> = o.traces.iter().collect();
        let mut probes: Vec<Trace> = (0..200).map(|_| random_trace(&mut rng, BOUND)).collect();
        for _ in 0..100 {
            if let Some(w) = rand::seq::SliceRandom::choose(known.as_slice(), &mut rng) {
                probes.push((*w).clone());
                probes.push(mutate(&mut rng, w));
            }
        }
        for t in &probes {
            if t.len() <= BOUND && a.accepts(t) != o.contains(t) {
                return Err(format!("expr {k} `{e}`: disagreement on {:?}", t.0));
            }
        }
        checked += probes.len();
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{EXPRS} expressions ({exhaustive} exhaustive, {sampled} sampled), {checked} checks, 0 disagreements, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

/// Algebraic laws as language equivalences.
fn algebraic_laws() -> Outcome {
    let doc = small_doc();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut checks = 0;
    for k in 0..200 {
        let a = random_expr(&mut rng, 2);
        let b = random_expr(&mut rng, 2);
        let c = random_expr(&mut rng, 2);
        let star = |x: EetExpr| EetExpr::repeat(x, 0, None);
        let seq = EetExpr::seq;
        let par = EetExpr::interleave;
        let laws: Vec<(&str, EetExpr, EetExpr)> = vec![
            (
                "seq associativity",
                seq(seq(a.clone(), b.clone()), c.clone()),
                seq(a.clone(), seq(b.clone(), c.clone())),
            ),
            (
                "choice commutativity",
                EetExpr::choice(vec![a.clone(), b.clone()]),
                EetExpr::choice(vec![b.clone(), a.clone()]),
            ),
            (
                "choice idempotence",
                EetExpr::choice(vec![a.clone(), a.clone()]),
                a.clone(),
            ),
            ("left seq identity", seq(EetExpr::Empty, a.clone()), a.clone()),
            ("right seq identity", seq(a.clone(), EetExpr::Empty), a.clone()),
            (
                "shuffle commutativity",
                par(a.clone(), b.clone()),
                par(b.clone(), a.clone()),
            ),
            (
                "shuffle associativity",
                par(par(a.clone(), b.clone()), c.clone()),
                par(a.clone(), par(b.clone(), c.clone())),
            ),
            ("shuffle identity", par(a.clone(), EetExpr::Empty), a.clone()),
            ("star idempotence", star(star(a.clone())), star(a.clone())),
        ];
        for (law, lhs, rhs) in laws {
            let r = analysis::equivalent(&lhs, &rhs, &doc).map_err(|e| e.to_string())?;
            if !r.holds {
                return Err(format!(
                    "triple {k}, {law}: `{lhs}` vs `{rhs}` differ on {:?}",
                    r.witness
                ));
            }
            checks += 1;
        }
    }
    Ok(format!("200 triples, {checks} equivalences, 0 failures"))
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

/// Distinct interleavings of two disjoint words.
fn shuffle_cardinality() -> Outcome {
    let doc = small_doc();
    let a = EetExpr::message("A", "B", "m0", vec![]);
    let b = EetExpr::message("B", "A", "m1", vec![]);
    let word = |x: &EetExpr, n: u64| EetExpr::seq_all((0..n).map(|_| x.clone()).collect());
    let mut cases = Vec::new();
    for m in 1..=4u64 {
        for n in 1..=4u64 {
            let e = EetExpr::interleave(word(&a, m), word(&b, n));
            let len = (m + n) as usize;
            let engine = compile(&e, &doc)
                .map_err(|x| x.to_string())?
                .words_up_to(len)
                .into_iter()
                .filter(|w| w.len() == len)
                .count() as u64;
            let oracle = denote(&e, &doc, len).map_err(|x| x.to_string())?;
            let oracle = oracle.traces.iter().filter(|w| w.len() == len).count() as u64;
            let expected = binomial(m + n, m);
            check(engine == expected && oracle == expected, || {
                format!("m={m} n={n}: engine {engine}, oracle {oracle}, expected {expected}")
            })?;
            if m == 3 && n == 3 {
                cases.push(format!("3x3={engine}"));
            }
        }
    }
    Ok(format!("16 cases match C(m+n,m); {}", cases.join(" ")))
}

/// Member according to both the automaton and the oracle.
fn both_accept(e: &EetExpr, doc: &eet::Document, t: &Trace) -> Result<(bool, bool), String> {
    let engine = analysis::member(t, e, doc).map_err(|x| x.to_string())?.holds;
    let oracle = denote(e, doc, t.len()).map_err(|x| x.to_string())?.contains(t);
    Ok((engine, oracle))
}

fn car_rental() -> Outcome {
    let doc = car_doc();
    let success = resolve(&doc, "SuccessfulReservation").map_err(|x| x.to_string())?;
    let whole = resolve(&doc, "CarReservation").map_err(|x| x.to_string())?;
    let reservation = parse_trace_log(&std::fs::read_to_string(fixture_path("reservation.log")).unwrap())
        .map_err(|x| x.to_string())?;
    let failure = parse_trace_log(
        "Customer -> ReservationBranch : request(p2, p2, van)\n\
         ReservationBranch -> PickupBranch : check_availability(p2, p2, van)\n\
         PickupBranch -> ReservationBranch : not_available()\n\
         ReservationBranch -> Customer : no_offer()\n",
    )
    .map_err(|x| x.to_string())?;
    let cases = [
        ("reservation in SuccessfulReservation", &success, reservation.clone(), true),
        ("reservation in CarReservation", &whole, reservation.clone(), true),
        ("empty trace in CarReservation", &whole, Trace::empty(), true),
        ("failure then success", &whole, failure.concat(&reservation), true),
        ("success then failure", &whole, reservation.concat(&failure), false),
    ];
    for (name, e, t, expected) in cases {
        let (engine, oracle) = both_accept(e, &doc, &t)?;
        check(engine == expected && oracle == expected, || {
            format!("{name}: engine {engine}, oracle {oracle}, expected {expected}")
        })?;
    }
    Ok("5 membership facts, engine and oracle agree".into())
}

fn consistency_and_refinement() -> Outcome {
    let doc = car_doc();
    let success = resolve(&doc, "SuccessfulReservation").map_err(|x| x.to_string())?;
    let whole = resolve(&doc, "CarReservation").map_err(|x| x.to_string())?;
    let err = |x: analysis::AnalysisError| x.to_string();

    let r = analysis::loose_consistent(&success, &whole, LooseMode::Segment, &doc).map_err(err)?;
    check(r.holds, || "scenario not consistent".into())?;
    let r = analysis::refines(&success, &whole, &doc).map_err(err)?;
    check(r.holds, || format!("success does not refine: {:?}", r.witness))?;
    let r = analysis::refines(&whole, &success, &doc).map_err(err)?;
    check(!r.holds, || "whole refines success".into())?;
    let w = r.witness.ok_or("no counterexample")?;
    let (in_whole, in_whole_oracle) = both_accept(&whole, &doc, &w)?;
    let (in_success, in_success_oracle) = both_accept(&success, &doc, &w)?;
    check(in_whole && in_whole_oracle && !in_success && !in_success_oracle, || {
        format!("counterexample {:?} does not replay", w.0)
    })?;
    let r = analysis::conjoin_nonempty(&[whole.clone(), whole], &doc).map_err(err)?;
    check(r.holds && r.witness == Some(Trace::empty()), || {
        format!("conjunction: {:?}", r.witness)
    })?;
    Ok(format!(
        "consistent, refines one way, counterexample of {} events replays, conjunction witness is empty",
        w.len()
    ))
}

fn monitor_agreement() -> Outcome {
    let doc = small_doc();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut verdicts = 0;
    for k in 0..500 {
        let e = random_expr(&mut rng, 4);
        let words: Vec<Trace> = denote(&e, &doc, 6)
            .map_err(|x| x.to_string())?
            .traces
            .into_iter()
            .collect();
        let log = match rand::Rng::gen_range(&mut rng, 0..3) {
            0 if !words.is_empty() => words[rand::Rng::gen_range(&mut rng, 0..words.len())].clone(),
            1 if !words.is_empty() => {
                let w = &words[rand::Rng::gen_range(&mut rng, 0..words.len())];
                mutate(&mut rng, w)
            }
            _ => random_trace(&mut rng, 8),
        };
        let m = monitor::Monitor::new(&e, &doc).map_err(|x| x.to_string())?;
        let mut state = m.start();
        let mut lost = !state.extensible();
        for ev in log.iter() {
            state = state.step(ev).map_err(|x| x.to_string())?;
            if lost && state.extensible() {
                return Err(format!("pair {k}: extensible regained on {:?}", log.0));
            }
            lost |= !state.extensible();
            verdicts += 1;
        }
        let member = analysis::member(&log, &e, &doc).map_err(|x| x.to_string())?.holds;
        check(state.in_language() == member, || {
            format!("pair {k} `{e}` on {:?}: monitor {}, member {member}", log.0, state.in_language())
        })?;
        let (_, records) = monitor::run_log(&e, &doc, &log).map_err(|x| x.to_string())?;
        check(records.len() == log.len(), || format!("pair {k}: record count"))?;
    }
    Ok(format!("500 pairs agree, {verdicts} verdicts monotone"))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_eetc");
    let car = fixture_path("car_rental.eet");
    let reservation = fixture_path("reservation.log");
    let runs: Vec<Vec<&str>> = vec![
        vec!["enumerate", &car, "--eet", "CarReservation", "--max-len", "9"],
        vec!["--json", "enumerate", &car, "--eet", "CarReservation", "--max-len", "5"],
        vec!["render", &car, "--eet", "CarReservation", "--format", "svg"],
        vec!["render", &car, "--eet", "FailedReservation", "--format", "text"],
        vec!["render", &car, "--trace", &reservation, "--format", "svg"],
        vec!["render", &car, "--trace", &reservation, "--format", "text"],
        vec!["--json", "member", &car, "--eet", "CarReservation", "--trace", &reservation],
        vec!["--json", "member", &car, "--eet", "CarReservation", "--trace", &reservation, "--mode", "embed"],
        vec!["--json", "refine", &car, "--abstract", "SuccessfulReservation", "--concrete", "CarReservation"],
        vec!["--json", "refine", &car, "--abstract", "CarReservation", "--concrete", "SuccessfulReservation"],
        vec!["--json", "consistent", &car, "--scenario", "SuccessfulReservation", "--complete", "CarReservation", "--mode", "embed"],
        vec!["--json", "conjoin", &car, "--eets", "CarReservation,FailedReservation"],
        vec!["monitor", &car, "--eet", "CarReservation", "--trace", &reservation],
    ];
    let mut bytes = 0;
    for args in &runs {
        let first = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        let second = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        check(first.status.code() == Some(0) || first.status.code() == Some(1), || {
            format!("{args:?} exited {:?}: {}", first.status, String::from_utf8_lossy(&first.stderr))
        })?;
        check(first.stdout == second.stdout && first.status == second.status, || {
            format!("{args:?} differs between runs")
        })?;
        check(!first.stdout.is_empty(), || format!("{args:?} printed nothing"))?;
        if args[0] == "--json" {
            for line in String::from_utf8_lossy(&first.stdout).lines() {
                serde_json::from_str::<serde_json::Value>(line)
                    .map_err(|e| format!("{args:?}: bad JSON: {e}"))?;
            }
        }
        bytes += first.stdout.len();
    }
    Ok(format!("{} commands byte-identical across runs ({bytes} bytes)", runs.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 algebraic laws", algebraic_laws),
        ("3 shuffle cardinality", shuffle_cardinality),
        ("4 car-rental fixture", car_rental),
        ("5 consistency, refinement, conjunction", consistency_and_refinement),
        ("6 monitor agrees with membership", monitor_agreement),
        ("7 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.2}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
