//! Numerical Mellin transforms `M[h](ξ) = ∫₀^∞ h(t) t^{ξ−1} dt`.

use num_complex::Complex64;

use super::moment::{power_moment, MomentConfig};
use super::symbol::Decay;
use crate::error::{Error, Result};
use crate::quad;

/// `M[h](ξ)` for complex `h`; `strip = (a, b)` is the open convergence strip in `Re ξ`.
pub fn mellin_transform<H: Fn(f64) -> Complex64>(
    h: H,
    xi: Complex64,
    decay: Decay,
    strip: (f64, f64),
) -> Result<Complex64> {
    mellin_transform_with(h, xi, decay, strip, &MomentConfig::default())
}

pub fn mellin_transform_with<H: Fn(f64) -> Complex64>(
    h: H,
    xi: Complex64,
    decay: Decay,
    strip: (f64, f64),
    cfg: &MomentConfig,
) -> Result<Complex64> {
    if !(xi.re > strip.0 && xi.re < strip.1) {
        return Err(Error::divergence(
            "brackets",
            "mellin_transform",
            format!(
                "Re ξ = {} lies outside the strip ({}, {})",
                xi.re, strip.0, strip.1
            ),
        ));
    }
    // t^{ξ−1} = t^{Re ξ − 1} e^{i Im ξ ln t}
    let phase = |t: f64| {
        if t > 0.0 {
            Complex64::from_polar(1.0, xi.im * t.ln())
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let alpha = xi.re - 1.0;
    let re = power_moment(|t| (h(t) * phase(t)).re, decay, alpha, cfg)?;
    let im = power_moment(|t| (h(t) * phase(t)).im, decay, alpha, cfg)?;
    Ok(Complex64::new(re.value, im.value))
}

/// `M[e^{±it}](ξ)` for `0 < Re ξ < 1` by damping `e^{±it − ηt}` and extrapolating `η → 0`.
pub fn mellin_oscillatory(xi: Complex64, plus: bool, etas: &[f64]) -> Result<Complex64> {
    if etas.len() < 2 || etas.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::input(
            "brackets",
            "mellin_transform",
            "need at least two positive damping rates",
        ));
    }
    let s = if plus { 1.0 } else { -1.0 };
    let values: Vec<Complex64> = etas
        .iter()
        .map(|&eta| {
            let cfg = MomentConfig {
                spacing: Some(4.0 * std::f64::consts::PI),
                quad: quad::QuadOptions {
                    abs_tol: 1e-13,
                    rel_tol: 1e-11,
                    max_panels: 20_000,
                },
                tail_tol: 1e-13,
            };
            mellin_transform_with(
                |t| Complex64::from_polar((-eta * t).exp(), s * t),
                xi,
                Decay::Exponential {
                    rate: eta,
                    constant: 1.0,
                },
                (0.0, f64::INFINITY),
                &cfg,
            )
        })
        .collect::<Result<_>>()?;
    let limit = quad::extrapolate_to_zero(etas, &values);
    if !(limit.re.is_finite() && limit.im.is_finite()) {
        return Err(Error::numerical(
            "brackets",
            "mellin_transform",
            "extrapolation produced a non-finite value",
        ));
    }
    Ok(limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_at_half() {
        let m = mellin_transform(
            |t| Complex64::new((-t).exp(), 0.0),
            Complex64::new(0.5, 0.0),
            Decay::Exponential {
                rate: 1.0,
                constant: 1.0,
            },
            (0.0, f64::INFINITY),
        )
        .unwrap();
        assert!((m.re - PI.sqrt()).abs() < 1e-10 && m.im.abs() < 1e-15);
    }

    #[test]
    fn indicator_power() {
        let m = mellin_transform(
            |t| Complex64::new(if t <= 1.0 { 1.0 } else { 0.0 }, 0.0),
            Complex64::new(2.0, 0.0),
            Decay::Compact { support: 1.0 },
            (0.0, f64::INFINITY),
        )
        .unwrap();
        assert!((m.re - 0.5).abs() < 1e-13);
    }

    #[test]
    fn outside_strip() {
        let e = mellin_transform(
            |_| Complex64::new(1.0, 0.0),
            Complex64::new(-0.5, 0.0),
            Decay::Compact { support: 1.0 },
            (0.0, 1.0),
        );
        assert!(matches!(e, Err(Error::Divergence { .. })));
    }

    #[test]
    fn oscillatory_identity() {
        let xi = Complex64::new(0.5, 0.0);
        let m = mellin_oscillatory(xi, true, &[0.1, 0.01, 0.001]).unwrap();
        let want = Complex64::from_polar(PI.sqrt(), PI / 4.0);
        assert!((m - want).norm() < 1e-4, "{m} vs {want}");
    }
}
