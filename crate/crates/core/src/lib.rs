//! Word-level approximate model counting for fixed-width bit-vector formulas.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation: the formula representation with its SMT-LIB2 reader and
//! printer, prime selection, the sliced word-level hash family, the bounded
//! enumeration oracle interface with an exhaustive backend, and the counting
//! loop itself. Process management, reporting and the command line live in
//! the `smtcount` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod bvformula;
pub mod counter;
pub mod hashfamily;
pub mod modmath;
pub mod oracle;
pub mod sexpr;
pub mod validate;

pub use bvformula::{Assignment, BoolExpr, Cmp, Formula, Term, Variable, Width};
pub use counter::{approx_mc, CoreOutcome, CoreTrace, CountError, CountEstimate, Params};
pub use hashfamily::{Cell, HashConfig, HashFunction};
pub use modmath::Prime;
pub use oracle::{BoundedOracle, BoundedResult, OracleError, Query};
