//! Computational laboratory for prime-counting error terms over sparse
//! moduli: exact sieve counts, Dirichlet characters, dispersion sums, the
//! large sieve and truncated Perron checks, plus the exceptional-moduli
//! census that ties them together.

pub mod analytic;
pub mod apstats;
pub mod bilinear;
pub mod arith;
pub mod characters;
pub mod error;
pub mod exec;
pub mod lab;
pub mod prime;
pub mod quadrature;
pub mod verify;
pub mod sieveset;

pub use error::{Error, Result};
