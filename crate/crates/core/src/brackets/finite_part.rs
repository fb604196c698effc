//! Hadamard finite-part brackets `FP∫₀^∞ w^{−n/k} φ(±w) dw`, carrying the `1/k` normalization.

use serde::{Deserialize, Serialize};

use super::moment::{power_moment, BracketResult, MomentConfig, Sign};
use super::symbol::Decay;
use crate::error::{Error, Result};
use crate::quad;

/// A test function with access to its derivatives.
pub trait TestFunction: Sync {
    fn eval(&self, w: f64) -> f64;
    /// `φ^{(m)}(w)`, if available.
    fn derivative(&self, m: usize, w: f64) -> Option<f64>;
    /// `φ^{(m)}(0)`; the Taylor path needs nothing else near the origin.
    fn derivative_at_zero(&self, m: usize) -> f64 {
        self.derivative(m, 0.0).unwrap_or(f64::NAN)
    }
    /// Decay of `w ↦ φ(±w)` on `w ≥ 0`.
    fn decay(&self, sign: Sign) -> Decay;
}

/// `φ(s·w)` for `s = ±1`.
struct Oriented<'a, T: TestFunction + ?Sized> {
    inner: &'a T,
    sign: Sign,
}

impl<T: TestFunction + ?Sized> Oriented<'_, T> {
    fn s(&self) -> f64 {
        self.sign.factor()
    }
    fn eval(&self, w: f64) -> f64 {
        self.inner.eval(self.s() * w)
    }
    fn derivative(&self, m: usize, w: f64) -> Option<f64> {
        Some(self.s().powi(m as i32) * self.inner.derivative(m, self.s() * w)?)
    }
    fn derivative_at_zero(&self, m: usize) -> f64 {
        self.s().powi(m as i32) * self.inner.derivative_at_zero(m)
    }
}

/// A test function given by a closure `(m, w) ↦ φ^{(m)}(w)`.
pub struct AnalyticTest<F: Fn(usize, f64) -> f64 + Sync> {
    pub f: F,
    pub decay_plus: Decay,
    pub decay_minus: Decay,
}

impl<F: Fn(usize, f64) -> f64 + Sync> TestFunction for AnalyticTest<F> {
    fn eval(&self, w: f64) -> f64 {
        (self.f)(0, w)
    }
    fn derivative(&self, m: usize, w: f64) -> Option<f64> {
        Some((self.f)(m, w))
    }
    fn decay(&self, sign: Sign) -> Decay {
        if sign.is_plus() {
            self.decay_plus
        } else {
            self.decay_minus
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ c_i w^i` differentiated `m` times.
fn poly_derivative(coeffs: &[f64], m: usize, w: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(m)
        .rev()
        .fold(0.0, |acc, (i, c)| {
            let falling: f64 = ((i - m + 1)..=i).map(|j| j as f64).product();
            acc * w + c * falling
        })
}

/// `P(w) · χ(|w|)` where `χ = 1` on `[0, plateau]`, `0` beyond `end`, and
/// `C^smoothness` across the transition.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffPolynomial {
    pub coefficients: Vec<f64>,
    pub plateau: f64,
    pub end: f64,
    pub smoothness: usize,
    step: Vec<f64>,
}

impl CutoffPolynomial {
    pub fn new(coefficients: Vec<f64>, plateau: f64, end: f64, smoothness: usize) -> Result<Self> {
        if !(plateau >= 0.0 && end > plateau && end.is_finite()) {
            return Err(Error::input(
                "brackets",
                "finite_part_bracket",
                "cutoff needs 0 ≤ plateau < end",
            ));
        }
        // S(s) = s^{m+1} Σ_j C(m+j, j) C(2m+1, m−j) (−s)^j rises from 0 to 1 with m matching derivatives.
        let m = smoothness;
        let mut step = vec![0.0; 2 * m + 2];
        for j in 0..=m {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            step[m + 1 + j] = sign * binomial(m + j, j) * binomial(2 * m + 1, m - j);
        }
        Ok(CutoffPolynomial {
            coefficients,
            plateau,
            end,
            smoothness,
            step,
        })
    }

    /// `d^j/dr^j χ(r)` for `r ≥ 0`.
    fn cutoff_derivative(&self, j: usize, r: f64) -> f64 {
        if r >= self.end {
            return 0.0;
        }
        if r <= self.plateau {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let width = self.end - self.plateau;
        let s = (r - self.plateau) / width;
        let d = poly_derivative(&self.step, j, s) / width.powi(j as i32);
        if j == 0 {
            1.0 - d
        } else {
            -d
        }
    }
}

impl TestFunction for CutoffPolynomial {
    fn eval(&self, w: f64) -> f64 {
        let c = self.cutoff_derivative(0, w.abs());
        if c == 0.0 {
            0.0
        } else {
            c * poly_derivative(&self.coefficients, 0, w)
        }
    }

    fn derivative(&self, m: usize, w: f64) -> Option<f64> {
        let s: f64 = if w < 0.0 { -1.0 } else { 1.0 };
        let r = w.abs();
        if r >= self.end {
            return Some(0.0);
        }
        Some(
            (0..=m)
                .map(|j| {
                    let cj = s.powi(j as i32) * self.cutoff_derivative(j, r);
                    if cj == 0.0 {
                        0.0
                    } else {
                        binomial(m, j) * cj * poly_derivative(&self.coefficients, m - j, w)
                    }
                })
                .sum(),
        )
    }

    fn decay(&self, _sign: Sign) -> Decay {
        Decay::Compact { support: self.end }
    }
}

/// How the finite part is evaluated; `order` is the normalized derivative order `N > ⌊n/k⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "kebab-case")]
pub enum FinitePartMethod {
    /// Taylor subtraction of `φ` through degree `N − 1` on `[0, 1]`.
    Taylor { order: usize },
    /// `C_{n,k}^{(N)} ∫₀^∞ w^{N−n/k} φ^{(N)}(w) dw`.
    Derivative { order: usize },
}

/// `(1/k) ∏_{j=1}^{N} (−1)/(j − n/k)`.
pub fn canonical_constant(n: usize, k: usize, order: usize) -> f64 {
    let a = n as f64 / k as f64;
    (1..=order).fold(1.0 / k as f64, |acc, j| acc * (-1.0 / (j as f64 - a)))
}

fn check_case(n: usize, k: usize) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::input(
            "brackets",
            "finite_part_bracket",
            "n and k must be positive",
        ));
    }
    if n.is_multiple_of(k) {
        return Err(Error::refused(
            "brackets",
            "finite_part_bracket",
            format!(
                "n/k = {} is an integer; the logarithmic case applies",
                n / k
            ),
        ));
    }
    Ok(())
}

/// Normalized finite part `(1/k) FP∫₀^∞ w^{−n/k} φ(±w) dw`, Taylor path at the minimal order.
pub fn finite_part_bracket<T: TestFunction + ?Sized>(
    phi: &T,
    n: usize,
    k: usize,
    sign: Sign,
) -> Result<BracketResult> {
    finite_part_bracket_with(
        phi,
        n,
        k,
        sign,
        FinitePartMethod::Taylor { order: n / k + 1 },
    )
}

pub fn finite_part_bracket_with<T: TestFunction + ?Sized>(
    phi: &T,
    n: usize,
    k: usize,
    sign: Sign,
    method: FinitePartMethod,
) -> Result<BracketResult> {
    check_case(n, k)?;
    let alpha = n as f64 / k as f64;
    let floor = n / k;
    let cfg = MomentConfig::default();
    let psi = Oriented { inner: phi, sign };
    let decay = phi.decay(sign);
    match method {
        FinitePartMethod::Taylor { order } => {
            if order <= floor {
                return Err(Error::input(
                    "brackets",
                    "finite_part_bracket",
                    format!("order {order} must exceed ⌊n/k⌋ = {floor}"),
                ));
            }
            let m_max = order - 1;
            let taylor: Vec<f64> = (0..=m_max)
                .map(|m| psi.derivative_at_zero(m) / (1..=m).map(|j| j as f64).product::<f64>())
                .collect();
            if taylor.iter().any(|c| !c.is_finite()) {
                return Err(Error::input(
                    "brackets",
                    "finite_part_bracket",
                    "derivatives at 0 are not finite",
                ));
            }
            let head = quad::adaptive(
                |w| {
                    let p = taylor.iter().rev().fold(0.0, |acc, c| acc * w + c);
                    w.powf(-alpha) * (psi.eval(w) - p)
                },
                &[0.0, 0.125, 0.5, 1.0],
                cfg.quad,
            );
            let boundary: f64 = taylor
                .iter()
                .enumerate()
                .map(|(m, c)| c / (m as f64 + 1.0 - alpha))
                .sum();
            // ∫₁^∞ w^{−α} φ(w) dw with w = 1 + s.
            let shifted = match decay {
                Decay::Compact { support } => Decay::Compact {
                    support: support - 1.0,
                },
                Decay::Power { beta, constant } => Decay::Power {
                    beta: beta + alpha,
                    constant,
                },
                d => d,
            };
            let tail = power_moment(
                |s| (1.0 + s).powf(-alpha) * psi.eval(1.0 + s),
                shifted,
                0.0,
                &cfg,
            )?;
            let total = BracketResult {
                value: head.value + boundary,
                error: head.error,
                truncation: None,
            }
            .plus(tail);
            Ok(total.scaled(1.0 / k as f64))
        }
        FinitePartMethod::Derivative { order } => {
            if order <= floor {
                return Err(Error::input(
                    "brackets",
                    "finite_part_bracket",
                    format!("order {order} must exceed ⌊n/k⌋ = {floor}"),
                ));
            }
            if psi.derivative(order, 0.5).is_none() {
                return Err(Error::input(
                    "brackets",
                    "finite_part_bracket",
                    "test function lacks derivative access",
                ));
            }
            let d = match decay {
                Decay::Power { beta, constant } => Decay::Power {
                    beta: beta + order as f64,
                    constant,
                },
                d => d,
            };
            let r = power_moment(
                |w| psi.derivative(order, w).unwrap_or(0.0),
                d,
                order as f64 - alpha,
                &cfg,
            )?;
            // The 1/k is already inside the canonical constant.
            Ok(r.scaled(canonical_constant(n, k, order)))
        }
    }
}
