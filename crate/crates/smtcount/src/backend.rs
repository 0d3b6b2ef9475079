//! Backend selection and wall-clock budgets.

use crate::process::{process_backend, ProcessOracle, SolverCommand};
use smtcount_core::bvformula::normalize_widths;
use smtcount_core::counter::{approx_mc_normalized, CountError, CountEstimate, Params};
use smtcount_core::oracle::{
    BoundedOracle, BoundedResult, Budget, EnumOracle, ModelCacheOracle, OracleError, Query,
    MAX_ENUM_BITS,
};
use smtcount_core::Formula;
use std::time::{Duration, Instant};

/// Largest model set the enum backend keeps in memory before falling back
/// to rescanning the assignment space on every call.
pub const CACHE_LIMIT: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Enum,
    Process,
}

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub backend: Backend,
    pub solver: SolverCommand,
    /// Per bounded call.
    pub budget: Duration,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            backend: Backend::Enum,
            solver: SolverCommand::z3(),
            budget: Duration::from_secs(60),
        }
    }
}

/// Restarts its deadline at the beginning of every bounded call.
#[derive(Clone, Copy, Debug)]
pub struct WallClock {
    limit: Duration,
    deadline: Option<Instant>,
}

impl WallClock {
    pub fn new(limit: Duration) -> Self {
        WallClock {
            limit,
            deadline: None,
        }
    }
}

impl Budget for WallClock {
    fn start(&mut self) {
        self.deadline = Some(Instant::now() + self.limit);
    }

    fn expired(&mut self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

pub enum AnyOracle {
    Cache(ModelCacheOracle<WallClock>),
    Scan(EnumOracle<WallClock>),
    Process(ProcessOracle),
}

impl AnyOracle {
    /// An oracle for queries over `f`. With the enum backend, models of `f`
    /// are cached when there are at most [`CACHE_LIMIT`] of them, so the
    /// queries must then be over `f` itself.
    pub fn for_formula(f: &Formula, cfg: &OracleConfig) -> Result<Self, OracleError> {
        let clock = WallClock::new(cfg.budget);
        match cfg.backend {
            Backend::Process => Ok(AnyOracle::Process(ProcessOracle::new(
                cfg.solver.clone(),
                cfg.budget,
            ))),
            Backend::Enum => {
                let bits = f.total_bits();
                if bits > MAX_ENUM_BITS {
                    return Err(OracleError::SpaceTooLarge { bits });
                }
                match ModelCacheOracle::build(f, CACHE_LIMIT) {
                    Ok(cache) => Ok(AnyOracle::Cache(cache.with_budget(clock))),
                    Err(OracleError::Misconfigured(_)) => {
                        Ok(AnyOracle::Scan(EnumOracle::new(clock)))
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

impl BoundedOracle for AnyOracle {
    fn bounded(&mut self, query: &Query<'_>, pivot: usize) -> Result<BoundedResult, OracleError> {
        match self {
            AnyOracle::Cache(o) => o.bounded(query, pivot),
            AnyOracle::Scan(o) => o.bounded(query, pivot),
            AnyOracle::Process(o) => o.bounded(query, pivot),
        }
    }
}

/// Up to `pivot + 1` models of `f` with the configured backend.
pub fn bounded_smt(
    f: &Formula,
    pivot: usize,
    cfg: &OracleConfig,
) -> Result<BoundedResult, OracleError> {
    match cfg.backend {
        Backend::Enum => {
            EnumOracle::new(WallClock::new(cfg.budget)).bounded(&Query::plain(f), pivot)
        }
        Backend::Process => process_backend(f, pivot, &cfg.solver, cfg.budget),
    }
}

/// Normalizes `f`, prepares an oracle for it and runs the counter.
pub fn count(
    f: &Formula,
    params: &Params,
    cfg: &OracleConfig,
) -> Result<CountEstimate, CountError> {
    let g = normalize_widths(f);
    let mut oracle = AnyOracle::for_formula(&g, cfg)?;
    approx_mc_normalized(&g, params, &mut oracle)
}
