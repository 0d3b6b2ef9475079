//! Command-line tooling around `smtcount-core`: an external-solver backend,
//! the desk corpus, validation harness, and report formats.

pub mod backend;
pub mod corpus;
pub mod process;
pub mod report;
pub mod validate;
