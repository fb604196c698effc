use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::predict::{Prediction, Provenance};
use super::schedule::{ExpansionTerm, Order, Rational};
use crate::brackets::Symbol;
use crate::error::{Error, Result};
use crate::germ::{Case, Classification, FiberFunction};
use crate::oracle::{integrate_box, Domain, OracleConfig};
use crate::quad;

/// Thin-shell widths and the box that contains the shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    /// Decreasing shell half-widths `ε`.
    pub eps: Vec<f64>,
    pub domain: Domain,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Points projected onto the fiber to spot-check `|∇f|`.
    #[serde(default = "default_probes")]
    pub probes: usize,
}

fn default_probes() -> usize {
    256
}

impl ShellConfig {
    pub fn new(domain: Domain) -> Self {
        ShellConfig {
            eps: vec![0.2, 0.1, 0.05, 0.025],
            domain,
            oracle: OracleConfig {
                rel_tol: 1e-11,
                ..OracleConfig::default()
            },
            probes: default_probes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularLeading {
    /// `∫_𝔖 ∫ g(t, x) dt d_𝔖(x)`, the coefficient of `z^{−1}`.
    pub value: f64,
    pub error: f64,
    /// Shell averages `(1/2ε) ∫_{|f|<ε} G`, one per `ε`.
    pub shell_averages: Vec<f64>,
    /// Smallest `|∇f|` seen on the fiber spot-check.
    pub min_gradient: f64,
    pub warnings: Vec<String>,
}

/// Leray-measure integral of `∫g dt` over `{f = 0}` by Richardson extrapolation of thin-shell averages.
pub fn regular_leading(
    f: &dyn FiberFunction,
    symbol: &Symbol,
    shell: &ShellConfig,
) -> Result<RegularLeading> {
    let n = f.dim();
    if shell.domain.dim() != n {
        return Err(Error::input(
            "expansion",
            "regular_leading",
            format!("domain must have dimension {n}"),
        ));
    }
    if shell.eps.len() < 2
        || shell.eps.iter().any(|e| e.is_nan() || *e <= 0.0)
        || shell.eps.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::input(
            "expansion",
            "regular_leading",
            "eps must hold at least two positive, strictly decreasing widths",
        ));
    }
    let mut warnings = Vec::new();
    let min_gradient = spot_check(f, shell);
    if min_gradient < 1e-6 {
        warnings.push(format!(
            "|∇f| drops to {min_gradient:.2e} on the fiber; the fiber may not be regular"
        ));
    }

    let big_g = |x: &[f64]| symbol.t_integral(x);
    let mut averages = Vec::with_capacity(shell.eps.len());
    let mut quad_err: f64 = 0.0;
    for &eps in &shell.eps {
        let integrand = |x: &[f64]| if f.eval(x).abs() < eps { big_g(x) } else { 0.0 };
        let lo = |x: &[f64]| f.eval(x) + eps;
        let hi = |x: &[f64]| f.eval(x) - eps;
        let (v, e, _, converged) = integrate_box(
            &integrand,
            &[&lo, &hi],
            None,
            1.0 / eps,
            &shell.domain,
            &shell.oracle,
        );
        if !converged {
            warnings.push(format!(
                "shell quadrature at eps = {eps} hit the panel budget"
            ));
        }
        averages.push(v / (2.0 * eps));
        quad_err = quad_err.max(e / (2.0 * eps));
    }

    let sq: Vec<f64> = shell.eps.iter().map(|e| e * e).collect();
    let value = quad::extrapolate_to_zero(&sq, &averages);
    let m = sq.len();
    let previous = quad::extrapolate_to_zero(&sq[..m - 1], &averages[..m - 1]);
    let scale = averages.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let noise = 1e-9 * scale + 10.0 * quad_err;
    let diffs: Vec<f64> = averages.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    // Successive differences must shrink once above the quadrature noise.
    for w in diffs.windows(2) {
        if w[1] > noise && w[1] > 0.75 * w[0] {
            return Err(Error::numerical(
                "expansion",
                "regular_leading",
                format!(
                    "shell averages {averages:?} do not settle as eps shrinks (differences {diffs:?}); \
                     the fiber may be singular inside the domain or the widths too large"
                ),
            ));
        }
    }
    Ok(RegularLeading {
        value,
        error: (value - previous).abs() + quad_err,
        shell_averages: averages,
        min_gradient,
        warnings,
    })
}

impl RegularLeading {
    /// The expansion `Σ_j c_j z^{−j}` with `c_1` filled in.
    pub fn prediction(&self, count: usize) -> Prediction {
        let mut terms: Vec<ExpansionTerm> = (1..=count.max(1) as i64)
            .map(|j| ExpansionTerm::schedule_only(Rational::int(j), false))
            .collect();
        terms[0].coeff = Some(self.value);
        let mut provenance = vec![Provenance::new(
            "Leray integral of int g dt",
            self.value,
            self.error,
            format!(
                "thin-shell averages {:?} extrapolated in eps^2",
                self.shell_averages
            ),
        )];
        provenance.extend(
            self.warnings
                .iter()
                .map(|w| Provenance::new("warning", 0.0, 0.0, w.clone())),
        );
        Prediction {
            schema: 1,
            case: Case::RegularFiber,
            classification: Classification::regular(),
            terms,
            remainder: Order::new(Rational::int(2), 0),
            provenance,
        }
    }
}

/// Newton-project random box points onto `{f = 0}` and report the smallest gradient met there.
fn spot_check(f: &dyn FiberFunction, shell: &ShellConfig) -> f64 {
    let d = &shell.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(shell.oracle.seed);
    let mut min = f64::INFINITY;
    let mut x = vec![0.0; d.dim()];
    for _ in 0..shell.probes {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = d.lower[i] + (d.upper[i] - d.lower[i]) * rng.random::<f64>();
        }
        for _ in 0..40 {
            let v = f.eval(&x);
            let g = f.gradient(&x);
            let g2: f64 = g.iter().map(|c| c * c).sum();
            if g2 == 0.0 || v.abs() < 1e-13 {
                break;
            }
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= v * gi / g2;
            }
        }
        let inside = x
            .iter()
            .enumerate()
            .all(|(i, xi)| *xi >= d.lower[i] && *xi <= d.upper[i]);
        if inside && f.eval(&x).abs() < 1e-8 {
            let g2: f64 = f.gradient(&x).iter().map(|c| c * c).sum();
            min = min.min(g2.sqrt());
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::{Envelope, Profile};
    use crate::poly::Polynomial;
    use std::f64::consts::PI;

    fn circle(r: f64) -> Polynomial {
        Polynomial::new(
            2,
            vec![
                (1.0, vec![2, 0]).into(),
                (1.0, vec![0, 2]).into(),
                (-r * r, vec![0, 0]).into(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unit_circle_gaussian() {
        let g = Symbol::single(Profile::Gaussian, Envelope::None);
        let r = regular_leading(&circle(1.0), &g, &ShellConfig::new(Domain::cube(2, 2.0))).unwrap();
        assert!((r.value - PI.sqrt() * PI).abs() < 1e-6 * r.value, "{r:?}");
        assert!((r.min_gradient - 2.0).abs() < 1e-6);
    }

    #[test]
    fn radius_independent() {
        let g = Symbol::single(Profile::Gaussian, Envelope::None);
        for rad in [0.5, 1.7] {
            let r = regular_leading(
                &circle(rad),
                &g,
                &ShellConfig::new(Domain::cube(2, 2.0 * rad + 1.0)),
            )
            .unwrap();
            assert!(
                (r.value - PI.sqrt() * PI).abs() < 1e-6 * r.value,
                "R={rad}: {r:?}"
            );
        }
    }

    #[test]
    fn curved_envelope_extrapolates() {
        // G(x) = √π e^{−|x|²}: Leray integral over the unit circle is π^{3/2} e^{−1}.
        let g = Symbol::single(Profile::Gaussian, Envelope::Gaussian { rate: 1.0 });
        let r = regular_leading(&circle(1.0), &g, &ShellConfig::new(Domain::cube(2, 2.0))).unwrap();
        let exact = PI.powf(1.5) * (-1.0f64).exp();
        assert!(
            (r.value - exact).abs() < 1e-6 * exact,
            "{} vs {exact}",
            r.value
        );
        assert!(r.shell_averages.iter().all(|a| (a - exact).abs() > 1e-6));
    }

    #[test]
    fn zero_symbol() {
        let r = regular_leading(
            &circle(1.0),
            &Symbol::zero(),
            &ShellConfig::new(Domain::cube(2, 2.0)),
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejects_bad_widths() {
        let mut cfg = ShellConfig::new(Domain::cube(2, 2.0));
        cfg.eps = vec![0.1, 0.2];
        assert!(regular_leading(&circle(1.0), &Symbol::zero(), &cfg).is_err());
    }
}
