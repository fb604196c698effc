//! Exponent schedules and leading-term predictions for `I(z)` as `z → ∞`.

mod predict;
mod radial;
mod regular;
mod schedule;

pub use predict::{predict_leading, GeometryConfig, Prediction, Provenance};
pub use radial::{radial_expansion, radial_integral, RadialAmplitude};
pub use regular::{regular_leading, RegularLeading, ShellConfig};
pub use schedule::{
    bernstein_value, extremum_schedule, fit_basis, pole_schedule, ExpansionTerm, Order, Rational,
};
