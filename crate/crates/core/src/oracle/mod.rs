//! Brute-force evaluation of `I(z)` and least-squares extraction of expansion coefficients.

mod fit;
mod integrate;

pub use fit::{fit_asymptotics, residual_slope, BasisTerm, FitResult};
pub use integrate::{
    integrate_box, integrate_fiber, integrate_fiber_grid, samples_csv, Domain, OracleConfig,
    OracleSample,
};
