//! Exact arithmetic used throughout: rationals and exponential sums.

pub mod expnum;
pub mod rational;

pub use expnum::ExpNum;
pub use rational::{format_rational, parse_rational, Rational};
