//! The amplitude `g(t, x)`: a closed registry of profiles in `t` and envelopes in `x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};

/// Bound on `|h(t)|` for `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Decay {
    /// `h = 0` for `t > support`.
    Compact { support: f64 },
    /// `|h(t)| ≤ constant · e^{−rate·t}`.
    Exponential { rate: f64, constant: f64 },
    /// `|h(t)| ≤ constant · e^{−rate·t²}`.
    Gaussian { rate: f64, constant: f64 },
    /// `|h(t)| ≤ constant · t^{−beta}` for `t ≥ 1`.
    Power { beta: f64, constant: f64 },
}

impl Decay {
    /// Upper bound on `|h(t)|` at `t ≥ 1`.
    pub fn bound(&self, t: f64) -> f64 {
        match *self {
            Decay::Compact { support } => {
                if t > support {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Decay::Exponential { rate, constant } => constant * (-rate * t).exp(),
            Decay::Gaussian { rate, constant } => constant * (-rate * t * t).exp(),
            Decay::Power { beta, constant } => constant * t.powf(-beta),
        }
    }

    /// Power-law exponent implied by the bound (infinite for faster-than-power decay).
    pub fn beta(&self) -> f64 {
        match *self {
            Decay::Power { beta, .. } => beta,
            _ => f64::INFINITY,
        }
    }
}

/// A one-dimensional profile `φ(t)`, each bounded by 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `e^{−t}` for `t ≥ 0`, zero for `t < 0`.
    ExpDecay,
    /// `1/(1 + t²)`.
    Cauchy,
    /// `e^{−t²}`.
    Gaussian,
}

impl Profile {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Profile::ExpDecay => {
                if t >= 0.0 {
                    (-t).exp()
                } else {
                    0.0
                }
            }
            Profile::Cauchy => 1.0 / (1.0 + t * t),
            Profile::Gaussian => (-t * t).exp(),
        }
    }

    /// Decay of `t ↦ φ(±scale·t)` on `t ≥ 0`.
    pub fn decay(self, scale: f64, positive: bool) -> Decay {
        match self {
            Profile::ExpDecay if positive => Decay::Exponential {
                rate: scale,
                constant: 1.0,
            },
            Profile::ExpDecay => Decay::Compact { support: 0.0 },
            Profile::Cauchy => Decay::Power {
                beta: 2.0,
                constant: 1.0 / (scale * scale),
            },
            Profile::Gaussian => Decay::Gaussian {
                rate: scale * scale,
                constant: 1.0,
            },
        }
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Profile::ExpDecay)
    }

    /// `∫_ℝ φ(t) dt`.
    pub fn integral(self) -> f64 {
        match self {
            Profile::ExpDecay => 1.0,
            Profile::Cauchy => PI,
            Profile::Gaussian => PI.sqrt(),
        }
    }
}

/// A factor `ψ(x)` in the space variables, radial about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    #[default]
    None,
    /// `e^{−rate·|x|²}`.
    Gaussian { rate: f64 },
    /// Smooth cutoff: 1 on `|x| ≤ plateau`, 0 on `|x| ≥ radius`.
    Bump { plateau: f64, radius: f64 },
    /// `e^{−(|x|² − radius²)²}`.
    Shell { radius: f64 },
}

fn smooth_step(s: f64) -> f64 {
    // 1 at s ≤ 0, 0 at s ≥ 1, C^∞ in between.
    let h = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        h(1.0 - s) / (h(1.0 - s) + h(s))
    }
}

impl Envelope {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            Envelope::None => 1.0,
            Envelope::Gaussian { rate } => (-rate * r2).exp(),
            Envelope::Bump { plateau, radius } => {
                smooth_step((r2.sqrt() - plateau) / (radius - plateau))
            }
            Envelope::Shell { radius } => {
                let d = r2 - radius * radius;
                (-d * d).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Envelope::None => true,
            Envelope::Gaussian { rate } => rate > 0.0 && rate.is_finite(),
            Envelope::Bump { plateau, radius } => {
                plateau >= 0.0 && radius > plateau && radius.is_finite()
            }
            Envelope::Shell { radius } => radius >= 0.0 && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(
                "brackets",
                "symbol",
                format!("invalid envelope parameters {self:?}"),
            ))
        }
    }

    /// Bound on `∫_{|x| > radius} ψ(x) dx` over ℝⁿ.
    pub fn tail_mass(&self, n: usize, radius: f64) -> f64 {
        let area = 2.0 * PI.powf(n as f64 / 2.0) / super::gamma(n as f64 / 2.0).expect("positive");
        let radial = |w: &dyn Fn(f64) -> f64, scale: f64| {
            // ∫_R^∞ r^{n−1} w(r) dr, integrated over [R, R + 40·scale].
            let hi = radius + 40.0 * scale;
            let pts: Vec<f64> = (0..=40)
                .map(|i| radius + (hi - radius) * i as f64 / 40.0)
                .collect();
            quad::adaptive(
                |r| r.powi(n as i32 - 1) * w(r),
                &pts,
                QuadOptions::with_rel(1e-8),
            )
            .value
        };
        match *self {
            Envelope::None => f64::INFINITY,
            Envelope::Gaussian { rate } => {
                area * radial(&|r: f64| (-rate * r * r).exp(), 1.0 / rate.sqrt())
            }
            Envelope::Bump { radius: rb, .. } => {
                if radius >= rb {
                    0.0
                } else {
                    area * rb.powi(n as i32) / n as f64
                }
            }
            Envelope::Shell { radius: rs } => {
                let r0 = radius.max(rs);
                area * radial(
                    &|r: f64| {
                        let d = r * r - rs * rs;
                        (-d * d).exp()
                    },
                    1.0 / (1.0 + r0),
                )
            }
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

/// `coeff · φ(t_scale · t) · ψ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub coeff: f64,
    pub profile: Profile,
    #[serde(default = "default_scale")]
    pub t_scale: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

/// Amplitude `g(t, x) = Σ coeff · φ(t_scale·t) · ψ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SymbolTerm>", into = "Vec<SymbolTerm>")]
pub struct Symbol {
    terms: Vec<SymbolTerm>,
}

impl TryFrom<Vec<SymbolTerm>> for Symbol {
    type Error = Error;
    fn try_from(terms: Vec<SymbolTerm>) -> Result<Self> {
        Symbol::new(terms)
    }
}

impl From<Symbol> for Vec<SymbolTerm> {
    fn from(s: Symbol) -> Self {
        s.terms
    }
}

/// A reported breach of the declared decay envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayViolation {
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

impl Symbol {
    pub fn new(terms: Vec<SymbolTerm>) -> Result<Self> {
        for t in &terms {
            if !t.coeff.is_finite() {
                return Err(Error::input("brackets", "symbol", "non-finite coefficient"));
            }
            if !(t.t_scale > 0.0 && t.t_scale.is_finite()) {
                return Err(Error::input(
                    "brackets",
                    "symbol",
                    "t_scale must be positive",
                ));
            }
            t.envelope.validate()?;
        }
        Ok(Symbol { terms })
    }

    pub fn single(profile: Profile, envelope: Envelope) -> Self {
        Symbol {
            terms: vec![SymbolTerm {
                coeff: 1.0,
                profile,
                t_scale: 1.0,
                envelope,
            }],
        }
    }

    pub fn zero() -> Self {
        Symbol { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    /// `g₁ + λ·g₂`.
    pub fn plus(&self, lambda: f64, other: &Symbol) -> Symbol {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| SymbolTerm {
            coeff: lambda * t.coeff,
            ..*t
        }));
        Symbol { terms }
    }

    /// `g(c·t, x)`.
    pub fn rescaled(&self, c: f64) -> Symbol {
        Symbol {
            terms: self
                .terms
                .iter()
                .map(|t| SymbolTerm {
                    t_scale: c * t.t_scale,
                    ..*t
                })
                .collect(),
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|s| s.coeff * s.profile.eval(s.t_scale * t) * s.envelope.eval(x))
            .sum()
    }

    /// The one-dimensional slice `t ↦ g(t, x)`.
    pub fn at<'a>(&'a self, x: &[f64]) -> impl Fn(f64) -> f64 + 'a {
        let weights: Vec<f64> = self
            .terms
            .iter()
            .map(|s| s.coeff * s.envelope.eval(x))
            .collect();
        move |t| {
            self.terms
                .iter()
                .zip(&weights)
                .map(|(s, w)| {
                    if *w == 0.0 {
                        0.0
                    } else {
                        w * s.profile.eval(s.t_scale * t)
                    }
                })
                .sum()
        }
    }

    /// `∫_ℝ g(t, x) dt`.
    pub fn t_integral(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|s| s.coeff * s.envelope.eval(x) * s.profile.integral() / s.t_scale)
            .sum()
    }

    pub fn is_smooth(&self) -> bool {
        self.terms.iter().all(|t| t.profile.is_smooth())
    }

    /// Declared decay of `t ↦ g(±t, x)` for `t ≥ 0`, combining all terms into the weakest family.
    pub fn t_decay(&self, x: &[f64], positive: bool) -> Decay {
        let parts: Vec<(f64, Decay)> = self
            .terms
            .iter()
            .map(|s| {
                (
                    (s.coeff * s.envelope.eval(x)).abs(),
                    s.profile.decay(s.t_scale, positive),
                )
            })
            .filter(|(w, d)| *w > 0.0 && !matches!(d, Decay::Compact { .. }))
            .collect();
        let min_of = |pick: &dyn Fn(&Decay) -> Option<f64>| {
            parts
                .iter()
                .filter_map(|(_, d)| pick(d))
                .fold(f64::INFINITY, f64::min)
        };
        let beta = min_of(&|d| {
            if let Decay::Power { beta, .. } = d {
                Some(*beta)
            } else {
                None
            }
        });
        let exp_rate = min_of(&|d| {
            if let Decay::Exponential { rate, .. } = d {
                Some(*rate)
            } else {
                None
            }
        });
        let gauss_rate = min_of(&|d| {
            if let Decay::Gaussian { rate, .. } = d {
                Some(*rate)
            } else {
                None
            }
        });
        if parts.is_empty() {
            return Decay::Compact { support: 0.0 };
        }
        if beta.is_finite() {
            // sup_{t ≥ 1} t^β e^{−r t} and sup_{t ≥ 1} t^β e^{−g t²}.
            let exp_sup = |r: f64| {
                if beta / r >= 1.0 {
                    (beta / (r * std::f64::consts::E)).powf(beta)
                } else {
                    (-r).exp()
                }
            };
            let gauss_sup = |g: f64| {
                if beta / (2.0 * g) >= 1.0 {
                    (beta / (2.0 * g * std::f64::consts::E)).powf(beta / 2.0)
                } else {
                    (-g).exp()
                }
            };
            let constant = parts
                .iter()
                .map(|(w, d)| match *d {
                    Decay::Power { beta: b, constant } => {
                        w * constant * if b >= beta { 1.0 } else { f64::INFINITY }
                    }
                    Decay::Exponential { rate, constant } => w * constant * exp_sup(rate),
                    Decay::Gaussian { rate, constant } => w * constant * gauss_sup(rate),
                    Decay::Compact { .. } => 0.0,
                })
                .sum();
            Decay::Power { beta, constant }
        } else if exp_rate.is_finite() {
            let constant = parts
                .iter()
                .map(|(w, d)| match *d {
                    Decay::Exponential { constant, .. } => w * constant,
                    // e^{−g t²} ≤ e^{r²/(4g)} e^{−r t}
                    Decay::Gaussian { rate, constant } => {
                        w * constant * (exp_rate * exp_rate / (4.0 * rate)).exp()
                    }
                    _ => 0.0,
                })
                .sum();
            Decay::Exponential {
                rate: exp_rate,
                constant,
            }
        } else {
            let constant = parts
                .iter()
                .map(|(w, d)| {
                    if let Decay::Gaussian { constant, .. } = d {
                        w * constant
                    } else {
                        0.0
                    }
                })
                .sum();
            Decay::Gaussian {
                rate: gauss_rate,
                constant,
            }
        }
    }

    /// Spot-check `|g(t, x)| ≤ C(1+t)^{−β}` on a log grid in `t ∈ [1, 10⁶]`, both signs.
    pub fn decay_violations(&self, x: &[f64]) -> Vec<DecayViolation> {
        let g = self.at(x);
        let mut out = Vec::new();
        for positive in [true, false] {
            let d = self.t_decay(x, positive);
            for i in 0..=60 {
                let t = 10f64.powf(i as f64 / 10.0);
                let v = g(if positive { t } else { -t }).abs();
                let b = d.bound(t) * (1.0 + 1e-12) + 1e-300;
                if v > b {
                    out.push(DecayViolation {
                        t: if positive { t } else { -t },
                        value: v,
                        bound: b,
                    });
                }
            }
        }
        out
    }

    /// Bound on `∫_{|x|>radius} sup_t |g(t, x)| dx`.
    pub fn x_tail_bound(&self, n: usize, radius: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.coeff.abs() * s.envelope.tail_mass(n, radius))
            .sum()
    }
}
