//! One-dimensional distributional machinery: Γ, brackets `⟨t_±^α, g⟩`,
//! normalized finite parts and Mellin transforms.

mod finite_part;
mod gamma;
mod mellin;
mod moment;
mod symbol;

pub use finite_part::{
    canonical_constant, finite_part_bracket, finite_part_bracket_with, AnalyticTest,
    CutoffPolynomial, FinitePartMethod, TestFunction,
};
pub use gamma::{beta, gamma};
pub use mellin::{mellin_oscillatory, mellin_transform, mellin_transform_with};
pub use moment::{
    abs_power_integral, power_moment, t_power_bracket, BracketResult, MomentConfig, Sign,
};
pub use symbol::{Decay, DecayViolation, Envelope, Profile, Symbol, SymbolTerm};
