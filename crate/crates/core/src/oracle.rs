//! Bounded model enumeration.
//!
//! A [`BoundedOracle`] answers "give me up to `pivot + 1` distinct models of
//! this formula". The counter only needs the number of models returned, so
//! which witnesses come back is up to the backend; the built-in backends
//! return them in lexicographic order over the support (first declared
//! variable most significant).

use crate::bvformula::{Assignment, Formula, FormulaError};
use crate::hashfamily::{Cell, HashError, HashFunction};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// Largest assignment space (in bits) the exhaustive backends will scan.
pub const MAX_ENUM_BITS: u32 = 28;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("per-call budget exceeded")]
    Timeout,
    #[error("solver process failed: {0}")]
    Crash(String),
    #[error("could not understand solver output: {0}")]
    Protocol(String),
    #[error("assignment space of 2^{bits} exceeds the enumeration limit 2^{MAX_ENUM_BITS}")]
    SpaceTooLarge { bits: u32 },
    #[error("oracle misconfigured: {0}")]
    Misconfigured(String),
    #[error("query is not well-formed: {0}")]
    Formula(#[from] FormulaError),
    #[error("hash constraint: {0}")]
    Hash(#[from] HashError),
}

/// Outcome of a bounded enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedResult {
    /// Distinct models; `pivot + 1` of them when saturated.
    pub models: Vec<Assignment>,
    /// True iff the formula has more than `pivot` models.
    pub saturated: bool,
}

impl BoundedResult {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// A formula, optionally restricted to one cell of a hash function.
#[derive(Clone, Copy, Debug)]
pub struct Query<'a> {
    pub formula: &'a Formula,
    pub cell: Option<(&'a HashFunction, &'a Cell)>,
}

impl<'a> Query<'a> {
    pub fn plain(formula: &'a Formula) -> Self {
        Query {
            formula,
            cell: None,
        }
    }

    pub fn in_cell(formula: &'a Formula, h: &'a HashFunction, cell: &'a Cell) -> Self {
        Query {
            formula,
            cell: Some((h, cell)),
        }
    }

    /// The query as one formula: `F` conjoined with the encoded `h(X) = alpha`.
    pub fn to_formula(&self) -> Result<Formula, OracleError> {
        match self.cell {
            None => Ok(self.formula.clone()),
            Some((h, cell)) => {
                let c = crate::hashfamily::encode_constraint(h, cell)?;
                Ok(self.formula.conjoin(c)?)
            }
        }
    }
}

/// The bounded-enumeration subroutine used by the counter.
pub trait BoundedOracle {
    /// Up to `pivot + 1` distinct models of the query.
    fn bounded(&mut self, query: &Query<'_>, pivot: usize) -> Result<BoundedResult, OracleError>;
}

impl<O: BoundedOracle + ?Sized> BoundedOracle for &mut O {
    fn bounded(&mut self, query: &Query<'_>, pivot: usize) -> Result<BoundedResult, OracleError> {
        (**self).bounded(query, pivot)
    }
}

/// Per-call resource budget. `start` is called at the beginning of each
/// bounded call; `expired` is polled during the search.
pub trait Budget {
    fn start(&mut self);
    fn expired(&mut self) -> bool;
}

/// A budget that never runs out.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unlimited;

impl Budget for Unlimited {
    fn start(&mut self) {}
    fn expired(&mut self) -> bool {
        false
    }
}

const POLL_INTERVAL: u64 = 1 << 12;

/// Visits every assignment of `f`'s support in lexicographic order, passing
/// models to `visit` until it returns `false`.
pub fn for_each_model<B: Budget + ?Sized>(
    f: &Formula,
    budget: &mut B,
    mut visit: impl FnMut(&[u64]) -> bool,
) -> Result<(), OracleError> {
    let bits = f.total_bits();
    if bits > MAX_ENUM_BITS {
        return Err(OracleError::SpaceTooLarge { bits });
    }
    let widths: Vec<u32> = f.support().iter().map(|v| v.width.bits()).collect();
    let mut values = alloc::vec![0u64; widths.len()];
    let total = 1u64 << bits;
    for step in 0..total {
        if step % POLL_INTERVAL == POLL_INTERVAL - 1 && budget.expired() {
            return Err(OracleError::Timeout);
        }
        if f.holds(&values) && !visit(&values) {
            return Ok(());
        }
        // odometer increment, last variable fastest
        for (v, &w) in values.iter_mut().zip(&widths).rev() {
            *v += 1;
            if *v >> w == 0 {
                break;
            }
            *v = 0;
        }
    }
    Ok(())
}

/// Exhaustive scan of `f`, stopping at `pivot + 1` models.
pub fn enum_backend(f: &Formula, pivot: usize) -> Result<BoundedResult, OracleError> {
    enum_with_budget(f, pivot, &mut Unlimited)
}

pub fn enum_with_budget<B: Budget + ?Sized>(
    f: &Formula,
    pivot: usize,
    budget: &mut B,
) -> Result<BoundedResult, OracleError> {
    budget.start();
    let mut models = Vec::new();
    for_each_model(f, budget, |vals| {
        models.push(Assignment::new(vals.to_vec()));
        models.len() <= pivot
    })?;
    let saturated = models.len() > pivot;
    Ok(BoundedResult { models, saturated })
}

/// Exhaustive backend: conjoins the hash constraint and scans the space.
#[derive(Clone, Debug, Default)]
pub struct EnumOracle<B = Unlimited> {
    budget: B,
}

impl<B: Budget> EnumOracle<B> {
    pub fn new(budget: B) -> Self {
        EnumOracle { budget }
    }
}

impl<B: Budget> BoundedOracle for EnumOracle<B> {
    fn bounded(&mut self, query: &Query<'_>, pivot: usize) -> Result<BoundedResult, OracleError> {
        let f = query.to_formula()?;
        enum_with_budget(&f, pivot, &mut self.budget)
    }
}

/// Exhaustive backend that enumerates the models of one base formula once
/// and answers cell queries by filtering them through the hash function.
///
/// Gives the same answers as [`EnumOracle`] on queries over its base formula
/// (in the same order) at a fraction of the cost when `F` is solved many
/// times under different hash constraints.
#[derive(Clone, Debug)]
pub struct ModelCacheOracle<B = Unlimited> {
    base: Arc<Formula>,
    /// Models of `base`, flattened with stride `base.support().len()`.
    models: Arc<[u64]>,
    budget: B,
}

impl ModelCacheOracle<Unlimited> {
    /// Enumerates `f`, refusing if it has more than `max_models` models.
    pub fn build(f: &Formula, max_models: usize) -> Result<Self, OracleError> {
        let mut flat = Vec::new();
        let mut count = 0usize;
        let mut overflow = false;
        for_each_model(f, &mut Unlimited, |vals| {
            count += 1;
            if count > max_models {
                overflow = true;
                return false;
            }
            flat.extend_from_slice(vals);
            true
        })?;
        if overflow {
            return Err(OracleError::Misconfigured(alloc::format!(
                "more than {max_models} models to cache"
            )));
        }
        Ok(ModelCacheOracle {
            base: Arc::new(f.clone()),
            models: flat.into(),
            budget: Unlimited,
        })
    }
}

impl<B> ModelCacheOracle<B> {
    /// Shares the cached models with a different budget.
    pub fn with_budget<B2: Budget>(&self, budget: B2) -> ModelCacheOracle<B2> {
        ModelCacheOracle {
            base: self.base.clone(),
            models: self.models.clone(),
            budget,
        }
    }

    pub fn base(&self) -> &Formula {
        &self.base
    }

    pub fn model_count(&self) -> usize {
        // an empty support has one assignment, stored as zero values
        self.models
            .len()
            .checked_div(self.base.support().len())
            .unwrap_or_else(|| usize::from(self.base.holds(&[])))
    }
}

impl<B: Budget> BoundedOracle for ModelCacheOracle<B> {
    fn bounded(&mut self, query: &Query<'_>, pivot: usize) -> Result<BoundedResult, OracleError> {
        if !core::ptr::eq(query.formula, &*self.base) && *query.formula != *self.base {
            return Err(OracleError::Misconfigured(
                "query formula differs from the cached formula".into(),
            ));
        }
        self.budget.start();
        let n = self.base.support().len();
        let mut models = Vec::new();
        let mut scratch = Vec::new();
        let total = self.model_count();
        for i in 0..total {
            if i as u64 % POLL_INTERVAL == POLL_INTERVAL - 1 && self.budget.expired() {
                return Err(OracleError::Timeout);
            }
            let vals = &self.models[i * n..(i + 1) * n];
            let keep = match query.cell {
                None => true,
                Some((h, cell)) => h.maps_to(vals, cell, &mut scratch),
            };
            if keep {
                models.push(Assignment::new(vals.to_vec()));
                if models.len() > pivot {
                    return Ok(BoundedResult {
                        models,
                        saturated: true,
                    });
                }
            }
        }
        Ok(BoundedResult {
            models,
            saturated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvformula::{evaluate, parse_smt2};
    use crate::hashfamily::{make_config, sample_cell, sample_hash};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x8(body: &str) -> Formula {
        parse_smt2(&format!("(declare-fun x () (_ BitVec 8)) {body}")).unwrap()
    }

    #[test]
    fn singleton() {
        let f = x8("(assert (= x #x03))");
        let r = enum_backend(&f, 4).unwrap();
        assert_eq!(r.models, vec![Assignment::new(vec![3])]);
        assert!(!r.saturated);
    }

    #[test]
    fn saturates_at_pivot_plus_one() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 4))").unwrap();
        let r = enum_backend(&f, 4).unwrap();
        assert_eq!(r.len(), 5);
        assert!(r.saturated);
        let got: Vec<u64> = r.models.iter().map(|a| a.values()[0]).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn unsatisfiable() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 4)) (assert (bvult x #x0))").unwrap();
        let r = enum_backend(&f, 4).unwrap();
        assert!(r.is_empty());
        assert!(!r.saturated);
    }

    #[test]
    fn lexicographic_order_first_variable_most_significant() {
        let f = parse_smt2(
            "(declare-fun a () (_ BitVec 2)) (declare-fun b () (_ BitVec 2)) (assert (= (bvand a b) #b00))",
        )
        .unwrap();
        let r = enum_backend(&f, 100).unwrap();
        let pairs: Vec<_> = r
            .models
            .iter()
            .map(|m| (m.values()[0], m.values()[1]))
            .collect();
        let mut sorted = pairs.clone();
        sorted.sort();
        assert_eq!(pairs, sorted);
        assert_eq!(pairs.len(), 9);
    }

    #[test]
    fn space_guard() {
        let f = parse_smt2("(declare-fun a () (_ BitVec 16)) (declare-fun b () (_ BitVec 16))")
            .unwrap();
        assert_eq!(
            enum_backend(&f, 1),
            Err(OracleError::SpaceTooLarge { bits: 32 })
        );
    }

    struct Expired;
    impl Budget for Expired {
        fn start(&mut self) {}
        fn expired(&mut self) -> bool {
            true
        }
    }

    #[test]
    fn budget_expiry_is_a_timeout() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 16)) (assert (= x #xffff))").unwrap();
        assert_eq!(
            enum_with_budget(&f, 1, &mut Expired),
            Err(OracleError::Timeout)
        );
    }

    #[test]
    fn empty_support() {
        let t = Formula::new(vec![], vec![]).unwrap();
        let r = enum_backend(&t, 4).unwrap();
        assert_eq!(r.len(), 1);
        let cache = ModelCacheOracle::build(&t, 10).unwrap();
        assert_eq!(cache.model_count(), 1);
        let f = Formula::new(vec![], vec![crate::BoolExpr::Const(false)]).unwrap();
        assert!(enum_backend(&f, 4).unwrap().is_empty());
        assert_eq!(ModelCacheOracle::build(&f, 10).unwrap().model_count(), 0);
    }

    #[test]
    fn cache_agrees_with_scan_on_hashed_queries() {
        let f = parse_smt2(
            "(declare-fun x () (_ BitVec 6)) (declare-fun y () (_ BitVec 6))
             (assert (bvule (bvadd x y) #b101000))",
        )
        .unwrap();
        let mut cache = ModelCacheOracle::build(&f, 1 << 20).unwrap();
        let mut scan = EnumOracle::<Unlimited>::default();
        let config = make_config(2, 6, &[0, 1, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let h = sample_hash(&config, &mut rng);
            let c = sample_cell(&h, &mut rng);
            let q = Query::in_cell(&f, &h, &c);
            for pivot in [1, 4, 16] {
                let a = cache.bounded(&q, pivot).unwrap();
                let b = scan.bounded(&q, pivot).unwrap();
                assert_eq!(a, b);
                let g = q.to_formula().unwrap();
                assert!(a.models.iter().all(|m| evaluate(&g, m).unwrap()));
            }
        }
    }

    #[test]
    fn cache_rejects_foreign_formula_and_caps_size() {
        let f = x8("(assert (bvult x #x10))");
        let g = x8("(assert (bvult x #x20))");
        let mut cache = ModelCacheOracle::build(&f, 100).unwrap();
        assert!(matches!(
            cache.bounded(&Query::plain(&g), 4),
            Err(OracleError::Misconfigured(_))
        ));
        assert!(ModelCacheOracle::build(&g, 16).is_err());
    }

    #[test]
    fn monotone_in_pivot() {
        let f = x8("(assert (bvult x #x07))");
        let small = enum_backend(&f, 3).unwrap();
        assert!(small.saturated);
        let big = enum_backend(&f, 7).unwrap();
        let bigger = enum_backend(&f, 20).unwrap();
        assert!(!big.saturated);
        assert_eq!(big, bigger);
    }
}
