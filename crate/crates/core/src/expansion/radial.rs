use crate::brackets::{power_moment, BracketResult, Decay, MomentConfig};
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};

/// A two-variable amplitude `a(τ, u)` with `∂_u^j a(τ, 0)` available.
pub struct RadialAmplitude<A, D>
where
    A: Fn(f64, f64) -> f64,
    D: Fn(usize, f64) -> f64,
{
    pub eval: A,
    /// `(j, τ) ↦ ∂_u^j a(τ, 0)`.
    pub u_derivative: D,
    /// Decay in `τ`, uniform in `u` on the region that matters.
    pub decay: Decay,
}

/// `d_j(a) = (1/k)(1/j!) ∫₀^∞ τ^{(j+1−k)/k} ∂_u^j a(τ, 0) dτ` for `j = 0..=jmax`.
pub fn radial_expansion<A, D>(
    a: &RadialAmplitude<A, D>,
    k: usize,
    jmax: usize,
) -> Result<Vec<BracketResult>>
where
    A: Fn(f64, f64) -> f64,
    D: Fn(usize, f64) -> f64,
{
    if k == 0 {
        return Err(Error::input(
            "expansion",
            "radial_expansion",
            "k must be positive",
        ));
    }
    let cfg = MomentConfig::default();
    (0..=jmax)
        .map(|j| {
            let alpha = (j as f64 + 1.0 - k as f64) / k as f64;
            let fact: f64 = (1..=j).map(|i| i as f64).product();
            let r = power_moment(|t| (a.u_derivative)(j, t), a.decay, alpha, &cfg)?;
            Ok(r.scaled(1.0 / (k as f64 * fact)))
        })
        .collect()
}

/// Direct `J(z) = ∫₀^∞ a(z u^k, u) du` by adaptive quadrature on the scale `z^{−1/k}`.
pub fn radial_integral<A, D>(a: &RadialAmplitude<A, D>, z: f64, k: usize) -> Result<f64>
where
    A: Fn(f64, f64) -> f64,
    D: Fn(usize, f64) -> f64,
{
    let tau_max = match a.decay {
        Decay::Compact { support } => support,
        Decay::Exponential { rate, .. } => 60.0 / rate,
        Decay::Gaussian { rate, .. } => (60.0 / rate).sqrt(),
        Decay::Power { .. } => {
            return Err(Error::input(
                "expansion",
                "radial_integral",
                "power-law τ decay needs a compact cut",
            ))
        }
    };
    let u_max = (tau_max / z).powf(1.0 / k as f64);
    let mut pts = vec![0.0];
    let mut u = u_max;
    while u > u_max * 1e-6 {
        pts.push(u);
        u *= 0.25;
    }
    pts.sort_by(f64::total_cmp);
    let r = quad::adaptive(
        |u| (a.eval)(z * u.powi(k as i32), u),
        &pts,
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-14,
            max_panels: 4000,
        },
    );
    Ok(r.value)
}
