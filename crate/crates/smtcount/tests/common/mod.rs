#![allow(dead_code)]

use smtcount::process::{process_backend, SolverCommand};
use smtcount_core::bvformula::parse_smt2;
use std::time::Duration;

/// The external solver for process-backend tests: `SMTCOUNT_SOLVER` if set,
/// otherwise `z3 -in -smt2`. `None` when it cannot be started.
pub fn solver() -> Option<SolverCommand> {
    let cmd = match std::env::var("SMTCOUNT_SOLVER") {
        Ok(s) => SolverCommand::parse(&s)?,
        Err(_) => SolverCommand::z3(),
    };
    let f = parse_smt2("(declare-fun x () (_ BitVec 2)) (assert (= x #b01))").unwrap();
    process_backend(&f, 1, &cmd, Duration::from_secs(20)).ok()?;
    Some(cmd)
}

pub fn skip_notice(what: &str) {
    eprintln!(
        "NOTICE: skipping {what}: no external SMT solver (install z3 or set SMTCOUNT_SOLVER)"
    );
}
