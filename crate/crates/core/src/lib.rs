//! Exact genus-zero quantum cohomology toolkit.
//!
//! The crate computes Gromov–Witten invariants by axiom-driven reconstruction,
//! assembles big quantum products over truncated Novikov/bulk series rings,
//! and analyses the spectrum of quantum multiplication by the Euler field.
//! All arithmetic is exact over the rationals.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod frobenius;
pub mod gw;
pub mod identities;
pub mod linalg;
pub mod mirror;
pub mod poly;
pub mod qrr;
pub mod report;
pub mod series;
pub mod spectrum;
pub mod targets;

pub use error::{Error, Result};

use num_bigint::BigInt;

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}
