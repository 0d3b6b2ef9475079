//! The approximate counting loop and its median-of-runs driver.

use crate::bvformula::{normalize_widths, Formula};
use crate::hashfamily::{self, level_count, levels_for_width, HashConfig, HashError, Level};
use crate::oracle::{BoundedOracle, OracleError, Query};
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigUint;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CountError {
    #[error("epsilon must be positive and finite")]
    InvalidEpsilon,
    #[error("delta must lie strictly between 0 and 1")]
    InvalidDelta,
    #[error("every core invocation failed")]
    AllIterationsFailed,
    #[error("median of an empty list")]
    EmptyMedian,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Hash(#[from] HashError),
}

/// Small-cell threshold `2 * ceil(e^(-3/2) * (1 + 1/eps)^2)`.
pub fn compute_pivot(epsilon: f64) -> Result<usize, CountError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CountError::InvalidEpsilon);
    }
    let base = 1.0 + 1.0 / epsilon;
    let inner = libm::exp(-1.5) * base * base;
    Ok(2 * libm::ceil(inner) as usize)
}

/// Number of core invocations `ceil(35 * log2(3 / delta))`.
pub fn compute_t(delta: f64) -> Result<usize, CountError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CountError::InvalidDelta);
    }
    Ok(libm::ceil(35.0 * libm::log2(3.0 / delta)) as usize)
}

/// Tolerance, confidence and seed, with the derived pivot and repetition count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub epsilon: f64,
    pub delta: f64,
    pub pivot: usize,
    pub t: usize,
    pub seed: u64,
}

impl Params {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self, CountError> {
        Ok(Params {
            epsilon,
            delta,
            pivot: compute_pivot(epsilon)?,
            t: compute_t(delta)?,
            seed,
        })
    }
}

/// Why a core invocation returned no estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    /// The chosen cell was empty with no finer level to move to.
    EmptyCell,
    /// Cells stayed large until there were more cells than assignments.
    TooManyCells,
    /// A bounded call exceeded its budget.
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreOutcome {
    /// The formula has at most `pivot` models; this is their exact number.
    Exact(u64),
    /// `leaf * num_cells`.
    Estimate(BigUint),
    Failed(Failure),
}

/// One pass through the hashing loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreStep {
    /// `C` used for this step's hash.
    pub counts: Vec<u32>,
    /// Level index `i` at the time of the query.
    pub level: usize,
    pub num_cells: BigUint,
    /// Number of models returned for the chosen cell (at most `pivot + 1`).
    pub leaf: usize,
}

/// Record of one core invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreTrace {
    /// Final `C` (empty on the exact path).
    pub counts: Vec<u32>,
    pub num_cells: BigUint,
    pub leaf: usize,
    pub outcome: CoreOutcome,
    pub steps: Vec<CoreStep>,
}

impl CoreTrace {
    /// The count this invocation contributes to the median, if any.
    pub fn value(&self) -> Option<BigUint> {
        match &self.outcome {
            CoreOutcome::Exact(n) => Some(BigUint::from(*n)),
            CoreOutcome::Estimate(m) => Some(m.clone()),
            CoreOutcome::Failed(_) => None,
        }
    }

    fn exact(count: usize) -> Self {
        CoreTrace {
            counts: Vec::new(),
            num_cells: BigUint::from(1u32),
            leaf: count,
            outcome: CoreOutcome::Exact(count as u64),
            steps: Vec::new(),
        }
    }

    fn failed(failure: Failure, steps: Vec<CoreStep>) -> Self {
        let (counts, num_cells, leaf) = match steps.last() {
            Some(s) => (s.counts.clone(), s.num_cells.clone(), s.leaf),
            None => (Vec::new(), BigUint::from(1u32), 0),
        };
        CoreTrace {
            counts,
            num_cells,
            leaf,
            outcome: CoreOutcome::Failed(failure),
            steps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    AllFailed,
}

/// Result of a full run: the median and every invocation's trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountEstimate {
    pub final_count: Option<BigUint>,
    pub pivot: usize,
    pub t: usize,
    pub successes: usize,
    pub traces: Vec<CoreTrace>,
}

impl CountEstimate {
    pub fn status(&self) -> Status {
        if self.final_count.is_some() {
            Status::Ok
        } else {
            Status::AllFailed
        }
    }

    pub fn count(&self) -> Result<&BigUint, CountError> {
        self.final_count
            .as_ref()
            .ok_or(CountError::AllIterationsFailed)
    }

    /// True when every invocation took the exact small-count path.
    pub fn is_exact(&self) -> bool {
        !self.traces.is_empty()
            && self
                .traces
                .iter()
                .all(|t| matches!(t.outcome, CoreOutcome::Exact(_)))
    }
}

/// Lower median: the element at index `(len - 1) / 2` after sorting.
pub fn find_median(values: &[BigUint]) -> Result<BigUint, CountError> {
    if values.is_empty() {
        return Err(CountError::EmptyMedian);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    Ok(sorted.swap_remove((sorted.len() - 1) / 2))
}

/// Random stream for invocation `index` of a run seeded with `seed`.
///
/// Streams are independent of each other and of the order in which
/// invocations are executed.
pub fn invocation_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Hash-family tables for a normalized formula.
#[derive(Clone, Debug)]
pub struct CoreSetup {
    n: usize,
    k: u32,
    levels: Vec<Level>,
    base_config: HashConfig,
    /// `2^(n*k)`, the cap on the number of cells.
    space: BigUint,
}

impl CoreSetup {
    /// Requires every support variable to have the same width.
    pub fn new(f: &Formula) -> Result<Self, CountError> {
        let n = f.support().len();
        let k = f.max_width().map_or(1, |w| w.bits());
        debug_assert!(f.support().iter().all(|v| v.width.bits() == k));
        let levels = levels_for_width(k)?;
        let base_config = HashConfig::new(n.max(1), k, &[0])?;
        Ok(CoreSetup {
            n,
            k,
            levels,
            base_config,
            space: BigUint::from(1u32) << (n as u64 * k as u64),
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// First level the loop hashes at: level 1 when it exists.
    pub fn start_level(&self) -> usize {
        1.min(level_count(self.k) - 1)
    }
}

/// One core invocation on a width-normalized formula.
///
/// Returns the exact count when `F` has at most `pivot` models; otherwise
/// searches for a `C` whose random cell holds between 1 and `pivot` models
/// and returns `leaf * num_cells`, or a failure.
pub fn approx_mc_core<O: BoundedOracle + ?Sized, R: RngCore>(
    f: &Formula,
    pivot: usize,
    oracle: &mut O,
    rng: &mut R,
) -> Result<CoreTrace, CountError> {
    run_core(f, &CoreSetup::new(f), pivot, oracle, rng)
}

fn run_core<O: BoundedOracle + ?Sized, R: RngCore>(
    f: &Formula,
    setup: &Result<CoreSetup, CountError>,
    pivot: usize,
    oracle: &mut O,
    rng: &mut R,
) -> Result<CoreTrace, CountError> {
    let initial = match oracle.bounded(&Query::plain(f), pivot) {
        Ok(r) => r,
        Err(OracleError::Timeout) => return Ok(CoreTrace::failed(Failure::Timeout, Vec::new())),
        Err(e) => return Err(e.into()),
    };
    if initial.len() <= pivot {
        return Ok(CoreTrace::exact(initial.len()));
    }
    // widths the hash family cannot handle only matter once hashing starts
    let setup = setup.as_ref().map_err(Clone::clone)?;

    let mut level = setup.start_level();
    let mut counts = vec![0u32; level + 1];
    counts[level] = 1;
    let mut steps = Vec::new();
    loop {
        let num_cells = hashfamily::num_cells(&setup.levels, &counts);
        let config = setup.base_config.with_counts(&counts)?;
        let h = hashfamily::sample_hash(&config, rng);
        let cell = hashfamily::sample_cell(&h, rng);
        let leaf = match oracle.bounded(&Query::in_cell(f, &h, &cell), pivot) {
            Ok(r) => r.len(),
            Err(OracleError::Timeout) => return Ok(CoreTrace::failed(Failure::Timeout, steps)),
            Err(e) => return Err(e.into()),
        };
        steps.push(CoreStep {
            counts: counts.clone(),
            level,
            num_cells: num_cells.clone(),
            leaf,
        });

        if leaf > 0 && leaf <= pivot {
            return Ok(CoreTrace {
                counts,
                leaf,
                outcome: CoreOutcome::Estimate(num_cells.clone() * leaf),
                num_cells,
                steps,
            });
        }
        if leaf > pivot {
            counts[level] += 1;
        } else {
            // empty cell: trade one level-i factor for a level-(i+1) one
            let next = level + 1;
            if setup.levels[level].prime.value() > 2 && next < setup.levels.len() {
                counts[level] -= 1;
                level = next;
                if counts.len() <= level {
                    counts.push(0);
                }
                counts[level] += 1;
            } else {
                return Ok(CoreTrace::failed(Failure::EmptyCell, steps));
            }
        }
        if hashfamily::num_cells(&setup.levels, &counts) > setup.space {
            return Ok(CoreTrace::failed(Failure::TooManyCells, steps));
        }
    }
}

/// Approximate model count of `f` with the `(epsilon, delta)` guarantee.
///
/// Widths are normalized first. Each of the `t` core invocations draws from
/// its own random stream (see [`invocation_rng`]); a budget timeout inside an
/// invocation fails only that invocation, while any other oracle error
/// aborts the run.
pub fn approx_mc<O: BoundedOracle + ?Sized>(
    f: &Formula,
    params: &Params,
    oracle: &mut O,
) -> Result<CountEstimate, CountError> {
    let g = normalize_widths(f);
    approx_mc_normalized(&g, params, oracle)
}

/// As [`approx_mc`] for a formula that is already width-normalized, e.g.
/// when the oracle was prepared for the normalized formula.
pub fn approx_mc_normalized<O: BoundedOracle + ?Sized>(
    g: &Formula,
    params: &Params,
    oracle: &mut O,
) -> Result<CountEstimate, CountError> {
    let setup = CoreSetup::new(g);
    let mut traces = Vec::with_capacity(params.t);
    for index in 0..params.t {
        let mut rng = invocation_rng(params.seed, index as u64);
        traces.push(run_core(g, &setup, params.pivot, oracle, &mut rng)?);
    }
    Ok(summarize(params, traces))
}

/// Median aggregation over finished traces.
pub fn summarize(params: &Params, traces: Vec<CoreTrace>) -> CountEstimate {
    let values: Vec<BigUint> = traces.iter().filter_map(CoreTrace::value).collect();
    CountEstimate {
        final_count: find_median(&values).ok(),
        pivot: params.pivot,
        t: params.t,
        successes: values.len(),
        traces,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvformula::parse_smt2;
    use crate::oracle::{BoundedResult, EnumOracle, ModelCacheOracle};

    #[test]
    fn pivot_values() {
        assert_eq!(compute_pivot(0.8).unwrap(), 4);
        assert_eq!(compute_pivot(0.1).unwrap(), 54);
        assert_eq!(compute_pivot(1.0).unwrap(), 2);
        assert!(compute_pivot(0.0).is_err());
        assert!(compute_pivot(-1.0).is_err());
        assert!(compute_pivot(f64::NAN).is_err());
    }

    #[test]
    fn t_values() {
        assert_eq!(compute_t(0.2).unwrap(), 137);
        assert_eq!(compute_t(0.375).unwrap(), 105);
        assert_eq!(compute_t(0.9999999).unwrap(), 56);
        assert!(compute_t(0.0).is_err());
        assert!(compute_t(1.0).is_err());
    }

    #[test]
    fn median_rule() {
        let v = |xs: &[u32]| xs.iter().map(|&x| BigUint::from(x)).collect::<Vec<_>>();
        assert_eq!(find_median(&v(&[5])).unwrap(), BigUint::from(5u32));
        assert_eq!(find_median(&v(&[1, 2, 3, 4])).unwrap(), BigUint::from(2u32));
        assert_eq!(find_median(&v(&[4, 1, 3, 2])).unwrap(), BigUint::from(2u32));
        assert_eq!(
            find_median(&v(&[240, 260, 255])).unwrap(),
            BigUint::from(255u32)
        );
        assert_eq!(find_median(&[]), Err(CountError::EmptyMedian));
    }

    #[test]
    fn small_count_is_exact() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 8)) (assert (= x #x03))").unwrap();
        let mut o = EnumOracle::<crate::oracle::Unlimited>::default();
        let mut rng = invocation_rng(1, 0);
        let tr = approx_mc_core(&f, 4, &mut o, &mut rng).unwrap();
        assert_eq!(tr.outcome, CoreOutcome::Exact(1));
        assert!(tr.steps.is_empty());

        let params = Params::new(0.8, 0.2, 42).unwrap();
        let est = approx_mc(&f, &params, &mut o).unwrap();
        assert_eq!(est.final_count, Some(BigUint::from(1u32)));
        assert_eq!(est.traces.len(), 137);
        assert!(est.is_exact());
    }

    #[test]
    fn unsat_is_exact_zero() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 8)) (assert (bvult x #x00))").unwrap();
        let mut o = EnumOracle::<crate::oracle::Unlimited>::default();
        let tr = approx_mc_core(&f, 4, &mut o, &mut invocation_rng(0, 0)).unwrap();
        assert_eq!(tr.outcome, CoreOutcome::Exact(0));
    }

    #[test]
    fn true_over_byte_estimates_in_range_mostly() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 8))").unwrap();
        let mut o = ModelCacheOracle::build(&f, 1 << 10).unwrap();
        let (mut ok, mut total) = (0, 0);
        for i in 0..200 {
            let tr = approx_mc_core(&f, 4, &mut o, &mut invocation_rng(99, i)).unwrap();
            if let Some(v) = tr.value() {
                total += 1;
                let v: u64 = v.try_into().unwrap();
                if (256.0 / 1.8..=256.0 * 1.8).contains(&(v as f64)) {
                    ok += 1;
                }
            }
        }
        assert!(total > 0);
        assert!(ok as f64 >= 0.6 * total as f64, "{ok}/{total}");
    }

    struct TimesOutAfter {
        calls: usize,
        limit: usize,
        inner: EnumOracle,
    }

    impl BoundedOracle for TimesOutAfter {
        fn bounded(&mut self, q: &Query<'_>, pivot: usize) -> Result<BoundedResult, OracleError> {
            self.calls += 1;
            if self.calls > self.limit {
                return Err(OracleError::Timeout);
            }
            self.inner.bounded(q, pivot)
        }
    }

    #[test]
    fn timeouts_fail_only_their_invocation() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 6))").unwrap();
        let mut o = TimesOutAfter {
            calls: 0,
            limit: 40,
            inner: EnumOracle::default(),
        };
        let params = Params::new(0.8, 0.2, 5).unwrap();
        let est = approx_mc(&f, &params, &mut o).unwrap();
        assert_eq!(est.traces.len(), params.t);
        assert!(est.successes > 0);
        assert!(est.successes < params.t);
        let last = est.traces.last().unwrap();
        assert_eq!(last.outcome, CoreOutcome::Failed(Failure::Timeout));
        assert!(est.final_count.is_some());

        let mut always = TimesOutAfter {
            calls: 0,
            limit: 0,
            inner: EnumOracle::default(),
        };
        let est = approx_mc(&f, &params, &mut always).unwrap();
        assert_eq!(est.status(), Status::AllFailed);
        assert_eq!(est.count(), Err(CountError::AllIterationsFailed));
    }

    #[test]
    fn other_oracle_errors_abort() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 30))").unwrap();
        let mut o = EnumOracle::<crate::oracle::Unlimited>::default();
        let params = Params::new(0.8, 0.2, 5).unwrap();
        assert!(matches!(
            approx_mc(&f, &params, &mut o),
            Err(CountError::Oracle(OracleError::SpaceTooLarge { .. }))
        ));
    }

    #[test]
    fn boolean_support_hashes_with_parity() {
        // k = 1: the only level is the parity level
        let f = parse_smt2(
            "(declare-fun a () (_ BitVec 1)) (declare-fun b () (_ BitVec 1))
             (declare-fun c () (_ BitVec 1)) (declare-fun d () (_ BitVec 1))
             (declare-fun e () (_ BitVec 1)) (declare-fun g () (_ BitVec 1))",
        )
        .unwrap();
        let mut o = ModelCacheOracle::build(&f, 1 << 10).unwrap();
        let tr = approx_mc_core(&f, 4, &mut o, &mut invocation_rng(3, 0)).unwrap();
        assert!(tr.steps.iter().all(|s| s.level == 0));
        let params = Params::new(0.8, 0.2, 3).unwrap();
        let est = approx_mc(&f, &params, &mut o).unwrap();
        let v: u64 = est.count().unwrap().try_into().unwrap();
        assert!((64.0 / 1.8..=64.0 * 1.8).contains(&(v as f64)), "{v}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let f = parse_smt2(
            "(declare-fun x () (_ BitVec 4)) (declare-fun y () (_ BitVec 4)) (assert (bvule x y))",
        )
        .unwrap();
        let params = Params::new(0.8, 0.2, 17).unwrap();
        let mut o1 = ModelCacheOracle::build(&f, 1 << 10).unwrap();
        let mut o2 = EnumOracle::<crate::oracle::Unlimited>::default();
        let a = approx_mc(&f, &params, &mut o1).unwrap();
        let b = approx_mc(&f, &params, &mut o2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invocation_streams_differ() {
        let mut a = invocation_rng(1, 0);
        let mut b = invocation_rng(1, 1);
        let mut c = invocation_rng(1, 0);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_ne!(x, y);
        assert_eq!(x, z);
    }
}
