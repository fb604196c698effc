//! Weighted half-line integrals `∫₀^∞ t^α h(t) dt` and the brackets `⟨t_±^α, g⟩`.

use serde::{Deserialize, Serialize};

use super::symbol::{Decay, Symbol};
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};

/// A bracket value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketResult {
    pub value: f64,
    /// Quadrature estimate plus tail bound.
    pub error: f64,
    /// Where the half-line was cut; `None` when the whole line was mapped to a finite interval.
    pub truncation: Option<f64>,
}

impl BracketResult {
    pub const ZERO: BracketResult = BracketResult {
        value: 0.0,
        error: 0.0,
        truncation: None,
    };

    pub fn scaled(self, c: f64) -> Self {
        BracketResult {
            value: c * self.value,
            error: c.abs() * self.error,
            ..self
        }
    }

    pub fn plus(self, other: BracketResult) -> Self {
        let truncation = match (self.truncation, other.truncation) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        BracketResult {
            value: self.value + other.value,
            error: self.error + other.error,
            truncation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConfig {
    pub quad: QuadOptions,
    /// Extra uniform breakpoints on the truncated tail (for oscillatory integrands).
    pub spacing: Option<f64>,
    /// Target size of the discarded tail.
    pub tail_tol: f64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig {
            quad: QuadOptions {
                abs_tol: 1e-15,
                rel_tol: 1e-12,
                max_panels: 4000,
            },
            spacing: None,
            tail_tol: 1e-17,
        }
    }
}

/// Cut point `T ≥ lo` with `∫_T^∞ t^α |h| ≤ tol` under the decay bound, and that bound.
fn truncation_point(decay: Decay, alpha: f64, lo: f64, tol: f64) -> (f64, f64) {
    let tail = |t: f64| match decay {
        // ∫_T^∞ t^α C e^{−rt} ≤ C T^α e^{−rT} / (r − α/T) for r T > α.
        Decay::Exponential { rate, constant } => {
            let denom = rate - alpha.max(0.0) / t;
            if denom <= 0.0 {
                f64::INFINITY
            } else {
                constant * t.powf(alpha) * (-rate * t).exp() / denom
            }
        }
        Decay::Gaussian { rate, constant } => {
            let denom = 2.0 * rate * t - alpha.max(0.0) / t;
            if denom <= 0.0 {
                f64::INFINITY
            } else {
                constant * t.powf(alpha) * (-rate * t * t).exp() / denom
            }
        }
        _ => 0.0,
    };
    let mut t = lo.max(1.0);
    while tail(t) > tol && t < 1e12 {
        t *= 1.25;
    }
    // Walk back down to a tighter cut.
    let mut hi = t;
    let mut lo_t = (t / 1.25).max(lo);
    for _ in 0..40 {
        let mid = 0.5 * (lo_t + hi);
        if tail(mid) > tol {
            lo_t = mid;
        } else {
            hi = mid;
        }
    }
    (hi, tail(hi))
}

fn breakpoints(lo: f64, hi: f64, spacing: Option<f64>) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut t = lo;
    while t * 2.0 < hi {
        t *= 2.0;
        pts.push(t);
    }
    if let Some(dx) = spacing {
        let m = ((hi - lo) / dx).ceil() as usize;
        pts.extend((1..m).map(|i| lo + i as f64 * dx));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
    }
    pts.push(hi);
    pts
}

/// `∫₀^∞ t^α h(t) dt` for a real `h` obeying `decay`.
pub fn power_moment<H: Fn(f64) -> f64>(
    h: H,
    decay: Decay,
    alpha: f64,
    cfg: &MomentConfig,
) -> Result<BracketResult> {
    if alpha <= -1.0 {
        return Err(Error::divergence(
            "brackets",
            "t_power_bracket",
            format!("t^{alpha} is not integrable at 0"),
        ));
    }
    if let Decay::Power { beta, .. } = decay {
        if beta <= alpha + 1.0 {
            return Err(Error::divergence(
                "brackets",
                "t_power_bracket",
                format!("decay t^-{beta} is too slow for weight t^{alpha}"),
            ));
        }
    }
    let head_end = match decay {
        Decay::Compact { support } if support <= 0.0 => return Ok(BracketResult::ZERO),
        Decay::Compact { support } => support.min(1.0),
        _ => 1.0,
    };
    // Head: t = u^{1/(1+α)} flattens the endpoint weight.
    let head = if alpha < 0.0 {
        let p = 1.0 / (1.0 + alpha);
        let u_end = head_end.powf(1.0 + alpha);
        let r = quad::adaptive(|u| h(u.powf(p)), &[0.0, u_end], cfg.quad);
        (r.value * p, r.error * p)
    } else {
        let r = quad::adaptive(|t| t.powf(alpha) * h(t), &[0.0, head_end], cfg.quad);
        (r.value, r.error)
    };
    let (tail, tail_err, truncation) = match decay {
        Decay::Compact { support } => {
            if support <= 1.0 {
                (0.0, 0.0, Some(support))
            } else {
                let r = quad::adaptive(
                    |t| t.powf(alpha) * h(t),
                    &breakpoints(1.0, support, cfg.spacing),
                    cfg.quad,
                );
                (r.value, r.error, Some(support))
            }
        }
        Decay::Power { beta, .. } => {
            // t = v^{−γ}, γ = 1/(β−α−1): the integrand becomes γ·t^β h(t), bounded on (0, 1].
            let gamma = 1.0 / (beta - alpha - 1.0);
            let r = quad::adaptive(
                |v| {
                    if v <= 0.0 {
                        return 0.0;
                    }
                    let t = v.powf(-gamma);
                    if t > 1e100 {
                        return 0.0;
                    }
                    gamma * t.powf(beta) * h(t)
                },
                &[0.0, 1e-8, 1e-4, 1e-2, 0.1, 1.0],
                cfg.quad,
            );
            (r.value, r.error, None)
        }
        Decay::Exponential { .. } | Decay::Gaussian { .. } => {
            let (t_cut, bound) = truncation_point(decay, alpha, 1.0, cfg.tail_tol);
            let cfg_quad = QuadOptions {
                max_panels: cfg
                    .quad
                    .max_panels
                    .max(4 * ((t_cut / cfg.spacing.unwrap_or(t_cut)) as usize + 10)),
                ..cfg.quad
            };
            let r = quad::adaptive(
                |t| t.powf(alpha) * h(t),
                &breakpoints(1.0, t_cut, cfg.spacing),
                cfg_quad,
            );
            (r.value, r.error + bound, Some(t_cut))
        }
    };
    Ok(BracketResult {
        value: head.0 + tail,
        error: head.1 + tail_err,
        truncation,
    })
}

/// Which half-line a bracket integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn is_plus(self) -> bool {
        self == Sign::Plus
    }
    pub fn factor(self) -> f64 {
        if self.is_plus() {
            1.0
        } else {
            -1.0
        }
    }
}

/// `⟨t_±^α, g(t, x0)⟩ = ∫₀^∞ t^α g(±t, x0) dt`, term by term over the symbol.
pub fn t_power_bracket(
    symbol: &Symbol,
    x0: &[f64],
    alpha: f64,
    sign: Sign,
) -> Result<BracketResult> {
    let cfg = MomentConfig::default();
    if alpha <= -1.0 {
        return Err(Error::divergence(
            "brackets",
            "t_power_bracket",
            format!("α = {alpha} ≤ −1"),
        ));
    }
    let s = sign.factor();
    let mut acc = BracketResult::ZERO;
    for term in symbol.terms() {
        let w = term.coeff * term.envelope.eval(x0);
        if w == 0.0 {
            continue;
        }
        let decay = term.profile.decay(term.t_scale, sign.is_plus());
        let r = power_moment(
            |t| term.profile.eval(term.t_scale * s * t),
            decay,
            alpha,
            &cfg,
        )?;
        acc = acc.plus(r.scaled(w));
    }
    Ok(acc)
}

/// `∫_ℝ |t|^α g(t, x0) dt`.
pub fn abs_power_integral(symbol: &Symbol, x0: &[f64], alpha: f64) -> Result<BracketResult> {
    Ok(
        t_power_bracket(symbol, x0, alpha, Sign::Plus)?.plus(t_power_bracket(
            symbol,
            x0,
            alpha,
            Sign::Minus,
        )?),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::gamma;
    use crate::brackets::symbol::{Envelope, Profile};
    use std::f64::consts::PI;

    #[test]
    fn gamma_integrals() {
        let s = Symbol::single(Profile::ExpDecay, Envelope::None);
        for (n, p) in [(2.0, 2.0), (2.0, 4.0), (3.0, 2.0), (3.0, 4.0)] {
            let a = (n - p) / p;
            let r = t_power_bracket(&s, &[0.0, 0.0], a, Sign::Plus).unwrap();
            let want = gamma(n / p).unwrap();
            assert!(
                (r.value - want).abs() < 1e-11 * want,
                "{n} {p}: {} vs {want}",
                r.value
            );
            assert!(r.error >= 0.0 && r.truncation.is_some());
        }
        let r = t_power_bracket(&s, &[0.0, 0.0], 0.0, Sign::Minus).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn cauchy_brackets() {
        let s = Symbol::single(Profile::Cauchy, Envelope::None);
        let r = t_power_bracket(&s, &[0.0], -0.5, Sign::Plus).unwrap();
        assert!((r.value - PI / 2f64.sqrt()).abs() < 1e-10, "{}", r.value);
        assert_eq!(r.truncation, None);
        let r = t_power_bracket(&s, &[0.0], 0.0, Sign::Minus).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-10);
        assert!(matches!(
            t_power_bracket(&s, &[0.0], 1.0, Sign::Plus),
            Err(Error::Divergence { .. })
        ));
        assert!(matches!(
            t_power_bracket(&s, &[0.0], -1.0, Sign::Plus),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn envelope_weights_bracket() {
        let s = Symbol::single(Profile::Cauchy, Envelope::Gaussian { rate: 1.0 });
        let r = abs_power_integral(&s, &[0.0, 0.0], 0.0).unwrap();
        assert!((r.value - PI).abs() < 1e-10);
        let off = abs_power_integral(&s, &[1.0, 0.0], 0.0).unwrap();
        assert!((off.value - PI / std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn scaling_law() {
        let s = Symbol::single(Profile::Gaussian, Envelope::None);
        let base = t_power_bracket(&s, &[0.0], 0.3, Sign::Plus).unwrap().value;
        let c = 3.7;
        let scaled = t_power_bracket(&s.rescaled(c), &[0.0], 0.3, Sign::Plus)
            .unwrap()
            .value;
        assert!((scaled - c.powf(-1.3) * base).abs() < 1e-10 * base);
    }

    #[test]
    fn compact_support_moment() {
        let r = power_moment(
            |t| if t <= 2.0 { 1.0 } else { 0.0 },
            Decay::Compact { support: 2.0 },
            0.5,
            &MomentConfig::default(),
        )
        .unwrap();
        assert!((r.value - 2.0 / 3.0 * 2f64.powf(1.5)).abs() < 1e-10);
    }
}
