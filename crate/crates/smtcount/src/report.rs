//! JSON and plain-text output.
//!
//! Big integers are written as decimal strings.

use crate::validate::CorpusReport;
use num_bigint::BigUint;
use serde::{Serialize, Serializer};
use smtcount_core::counter::{CoreOutcome, CoreTrace, CountEstimate, Failure, Params, Status};
use std::fmt::Write as _;

pub fn big<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

pub fn opt_big<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => big(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Iteration {
    #[serde(rename = "C")]
    pub counts: Vec<u32>,
    #[serde(serialize_with = "big")]
    pub num_cells: BigUint,
    pub leaf: usize,
    pub outcome: &'static str,
}

impl From<&CoreTrace> for Iteration {
    fn from(t: &CoreTrace) -> Self {
        Iteration {
            counts: t.counts.clone(),
            num_cells: t.num_cells.clone(),
            leaf: t.leaf,
            outcome: outcome_name(&t.outcome),
        }
    }
}

pub fn outcome_name(o: &CoreOutcome) -> &'static str {
    match o {
        CoreOutcome::Exact(_) => "exact",
        CoreOutcome::Estimate(_) => "estimate",
        CoreOutcome::Failed(Failure::EmptyCell) => "empty-cell",
        CoreOutcome::Failed(Failure::TooManyCells) => "too-many-cells",
        CoreOutcome::Failed(Failure::Timeout) => "timeout",
    }
}

/// Output of `count`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountReport {
    #[serde(serialize_with = "opt_big")]
    pub final_count: Option<BigUint>,
    pub t: usize,
    pub pivot: usize,
    pub successes: usize,
    pub iterations: Vec<Iteration>,
    pub status: &'static str,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl CountReport {
    pub fn new(est: &CountEstimate, params: &Params) -> Self {
        CountReport {
            final_count: est.final_count.clone(),
            t: est.t,
            pivot: est.pivot,
            successes: est.successes,
            iterations: est.traces.iter().map(Iteration::from).collect(),
            status: match est.status() {
                Status::Ok => "ok",
                Status::AllFailed => "all-failed",
            },
            epsilon: params.epsilon,
            delta: params.delta,
            seed: params.seed,
        }
    }

    /// Human-readable summary: the count, then outcome tallies.
    pub fn to_text(&self) -> String {
        let mut s = match &self.final_count {
            Some(c) => format!("{c}\n"),
            None => "no estimate: every core invocation failed\n".to_owned(),
        };
        let mut tally: Vec<(&str, usize)> = Vec::new();
        for it in &self.iterations {
            match tally.iter_mut().find(|(name, _)| *name == it.outcome) {
                Some((_, n)) => *n += 1,
                None => tally.push((it.outcome, 1)),
            }
        }
        let _ = write!(
            s,
            "t={} pivot={} successes={} outcomes:",
            self.t, self.pivot, self.successes
        );
        for (name, n) in tally {
            let _ = write!(s, " {name}={n}");
        }
        s.push('\n');
        s
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Table with one row per formula: id, benchmark, exact and estimated count.
pub fn corpus_table(report: &CorpusReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# epsilon={} delta={}; estimate = median over seeds; {}",
        report.epsilon, report.delta, report.aggregation
    );
    let _ = writeln!(
        s,
        "{:>3}  {:<16} {:>10} {:>10} {:>8}",
        "id", "benchmark", "exact", "estimate", "within"
    );
    for (i, f) in report.formulas.iter().enumerate() {
        let est = f
            .estimate
            .as_ref()
            .map_or_else(|| "-".to_owned(), BigUint::to_string);
        let _ = writeln!(
            s,
            "{:>3}  {:<16} {:>10} {:>10} {:>4}/{:<3}",
            i + 1,
            f.id,
            f.exact,
            est,
            f.within,
            f.runs
        );
    }
    let gm = report
        .geometric_mean_eps_obs
        .map_or_else(|| "undefined".to_owned(), |g| format!("{g:.4}"));
    let _ = writeln!(
        s,
        "within tolerance: {:.4}; geometric mean eps_obs: {gm}",
        report.within_fraction
    );
    s
}
