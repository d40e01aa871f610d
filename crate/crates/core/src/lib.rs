//! Grid-based Hahn series and exponential–logarithmic transseries over ℚ.
//!
//! Series are lazy: a value is a base monomial, finitely many infinitesimal
//! ratios and a memoized power series in those ratios. Anything that would
//! require an infinite scan (zero tests, leading terms of cancelling sums)
//! is budgeted and fails with [`Error::BudgetExhausted`] rather than guessing.
//!
//! Values use `Rc` internally and are not `Send`; one thread per session.

pub mod cli;
pub mod closure;
pub mod diffop;
mod error;
pub mod monomial;
mod ps;
pub mod series;
pub mod transseries;

pub use error::{Error, Result};
pub use num_rational::BigRational as Q;

#[cfg(test)]
pub(crate) fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

#[cfg(test)]
pub(crate) fn qr(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}
