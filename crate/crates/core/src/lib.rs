//! Leading-order asymptotics of degenerate fiber integrals `I(z) = ∫ g(z·f(x), x) dx`
//! and a brute-force oracle to check them.

pub mod brackets;
pub mod cli;
pub mod error;
pub mod expansion;
pub mod germ;
pub mod oracle;
pub mod poly;
pub mod quad;
pub mod sphere;

pub use error::{Error, Result};
