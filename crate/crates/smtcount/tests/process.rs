mod common;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smtcount::backend::{bounded_smt, OracleConfig};
use smtcount::corpus::{Generator, DESK};
use smtcount::process::{process_backend, ProcessOracle, SolverCommand};
use smtcount_core::bvformula::{normalize_widths, parse_smt2};
use smtcount_core::hashfamily::{sample_cell, sample_hash, HashConfig};
use smtcount_core::oracle::{BoundedOracle, EnumOracle, OracleError, Query, Unlimited};
use smtcount_core::{BoundedResult, Formula};
use std::collections::BTreeSet;
use std::time::Duration;

const BUDGET: Duration = Duration::from_secs(60);

fn models(r: &BoundedResult) -> BTreeSet<Vec<u64>> {
    r.models.iter().map(|m| m.values().to_vec()).collect()
}

fn with_solver(what: &str, body: impl FnOnce(SolverCommand)) {
    match common::solver() {
        Some(cmd) => body(cmd),
        None => common::skip_notice(what),
    }
}

fn formula(text: &str) -> Formula {
    parse_smt2(text).unwrap()
}

#[test]
fn small_cases() {
    with_solver("small_cases", |cmd| {
        let f = formula("(declare-fun x () (_ BitVec 8)) (assert (= x #x03))");
        let r = process_backend(&f, 4, &cmd, BUDGET).unwrap();
        assert!(!r.saturated);
        assert_eq!(models(&r), BTreeSet::from([vec![3]]));

        let f = formula("(declare-fun x () (_ BitVec 4)) (assert (bvult x #x0))");
        let r = process_backend(&f, 4, &cmd, BUDGET).unwrap();
        assert!(!r.saturated && r.is_empty());

        let f = formula("(declare-fun x () (_ BitVec 4)) (assert true)");
        let r = process_backend(&f, 4, &cmd, BUDGET).unwrap();
        assert!(r.saturated);
        assert_eq!(models(&r).len(), 5);
    });
}

#[test]
fn odd_names_and_multiline_values() {
    with_solver("odd_names", |cmd| {
        let f = formula(
            "(declare-fun |a b| () (_ BitVec 3)) (declare-fun y () (_ BitVec 64))
             (assert (= y ((_ zero_extend 61) |a b|)))",
        );
        let r = process_backend(&f, 10, &cmd, BUDGET).unwrap();
        assert!(!r.saturated);
        let expect: BTreeSet<Vec<u64>> = (0..8).map(|v| vec![v, v]).collect();
        assert_eq!(models(&r), expect);
    });
}

#[test]
fn monotone_in_limit() {
    with_solver("monotone_in_limit", |cmd| {
        for e in DESK.iter().filter(|e| e.count <= 16) {
            let f = e.formula();
            let mut previous: Option<BTreeSet<Vec<u64>>> = None;
            for limit in [1usize, 2, 4, 8, 16, 32] {
                let r = process_backend(&f, limit, &cmd, BUDGET).unwrap();
                if let Some(p) = &previous {
                    assert_eq!(&models(&r), p, "{} at {limit}", e.id);
                }
                if !r.saturated {
                    previous = Some(models(&r));
                }
            }
        }
    });
}

/// Full model sets from the solver match the builtin evaluator, which
/// checks the evaluator's operator semantics against the solver's.
#[test]
fn evaluator_agrees_with_solver() {
    with_solver("evaluator_agrees_with_solver", |cmd| {
        let mut gen = Generator::new(ChaCha8Rng::seed_from_u64(99));
        let mut checked = 0;
        while checked < 40 {
            let f = gen.formula();
            if f.total_bits() > 10 {
                continue;
            }
            let all = 1usize << f.total_bits();
            let ours = bounded_smt(&f, all, &OracleConfig::default()).unwrap();
            let theirs = process_backend(&f, all, &cmd, BUDGET).unwrap();
            assert_eq!(
                models(&ours),
                models(&theirs),
                "{}",
                smtcount_core::bvformula::print_smt2(&f)
            );
            checked += 1;
        }
    });
}

#[test]
fn hashed_queries_agree() {
    with_solver("hashed_queries_agree", |cmd| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut solver = ProcessOracle::new(cmd, BUDGET);
        let mut builtin = EnumOracle::new(Unlimited);
        for e in DESK.iter().filter(|e| e.count > 4).take(6) {
            let g = normalize_widths(&e.formula());
            let k = g.max_width().unwrap().bits();
            let config = HashConfig::new(g.support().len(), k, &[0, 1]).unwrap();
            for _ in 0..3 {
                let h = sample_hash(&config, &mut rng);
                let cell = sample_cell(&h, &mut rng);
                let q = Query::in_cell(&g, &h, &cell);
                let a = builtin.bounded(&q, 4).unwrap();
                let b = solver.bounded(&q, 4).unwrap();
                assert_eq!(a.saturated, b.saturated, "{}", e.id);
                if !a.saturated {
                    assert_eq!(models(&a), models(&b), "{}", e.id);
                }
            }
        }
    });
}

#[test]
fn zero_budget_times_out() {
    with_solver("zero_budget_times_out", |cmd| {
        let f = formula("(declare-fun x () (_ BitVec 8)) (assert true)");
        let r = process_backend(&f, 4, &cmd, Duration::ZERO);
        assert_eq!(r.unwrap_err(), OracleError::Timeout);
    });
}

fn sh(script: &str) -> SolverCommand {
    SolverCommand {
        program: "sh".into(),
        args: vec!["-c".into(), script.into()],
    }
}

#[test]
fn broken_solvers() {
    let f = formula("(declare-fun x () (_ BitVec 2)) (assert true)");
    let missing = SolverCommand::parse("/nonexistent/solver -in").unwrap();
    assert!(matches!(
        process_backend(&f, 1, &missing, BUDGET),
        Err(OracleError::Misconfigured(_))
    ));
    let crash = sh("echo dying >&2; exit 3");
    match process_backend(&f, 1, &crash, BUDGET) {
        Err(OracleError::Crash(msg)) => assert!(msg.contains("dying"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let chatter = sh("echo maybe; cat >/dev/null");
    assert!(matches!(
        process_backend(&f, 1, &chatter, BUDGET),
        Err(OracleError::Protocol(_))
    ));
    let silent = sh("cat >/dev/null");
    assert_eq!(
        process_backend(&f, 1, &silent, Duration::from_millis(200)).unwrap_err(),
        OracleError::Timeout
    );
}
