//! Exact Gram-matrix machinery for the chain of cones between sums of
//! squares and nonnegative forms, with certificate-producing tests.

pub mod error;
pub mod forms;
pub mod gram;
pub mod membership;
pub mod monomials;
pub mod psdcore;
pub mod rational;

pub use error::{Error, Result};
pub use forms::Form;
pub use gram::SymMat;
pub use monomials::{MonomialOrder, MultiIndex, OrderedBasis};
pub use rational::Rational;
