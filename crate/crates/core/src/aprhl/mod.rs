//! Approximate probabilistic relational Hoare logic: assertions, side-condition
//! discharge, rules, proof scripts and the soundness fuzzer.

pub mod assertion;
pub mod check;
pub mod entail;
pub mod fuzz;
pub mod linarith;
pub mod params;
pub mod rules;
pub mod script;

pub use assertion::{parse_assertion, Assertion};
pub use entail::{Entailer, Method, Policy, Verdict};
