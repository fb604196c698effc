use serde::{Deserialize, Serialize};

use super::schedule::{extremum_schedule, pole_schedule, ExpansionTerm, Order, Rational};
use crate::brackets::{
    abs_power_integral, finite_part_bracket_with, t_power_bracket, BracketResult, CutoffPolynomial,
    FinitePartMethod, Sign, Symbol, TestFunction,
};
use crate::error::{Error, Result};
use crate::germ::{Case, Classification, Germ};
use crate::sphere::{
    self, build_rule, coarea_density, coarea_derivative_at_zero, critical_value_gap,
    exact_density_fit, inverse_power_integral, CoareaConfig, RefineConfig, Region, RuleKind,
    SphereRule,
};

/// Sphere-side numerical settings for [`predict_leading`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    /// Rule order; 0 picks a default per dimension.
    pub rule_order: usize,
    /// Monte Carlo sample size for n ≥ 4.
    pub monte_carlo: usize,
    pub seed: u64,
    pub coarea: CoareaConfig,
    /// Polynomial degree of the exact `LVol` fit (n ≤ 3).
    pub fit_degree: usize,
    /// Half-width of the `LVol` fit window; 0 picks half the critical-value gap.
    pub window: f64,
    /// Normalized derivative order of the finite part; 0 picks `⌊n/k⌋ + 1`.
    pub finite_part_order: usize,
    /// Evaluate the finite part through `C_{n,k}` and `φ^{(N)}` instead of Taylor subtraction.
    pub derivative_path: bool,
    /// Number of schedule entries reported.
    pub schedule_count: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            rule_order: 0,
            monte_carlo: 200_000,
            seed: 0,
            coarea: CoareaConfig::default(),
            fit_degree: 16,
            window: 0.0,
            finite_part_order: 0,
            derivative_path: false,
            schedule_count: 4,
        }
    }
}

/// One ingredient of a predicted coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub quantity: String,
    pub value: f64,
    pub error: f64,
    pub source: String,
}

impl Provenance {
    pub fn new(
        quantity: impl Into<String>,
        value: f64,
        error: f64,
        source: impl Into<String>,
    ) -> Self {
        Provenance {
            quantity: quantity.into(),
            value,
            error,
            source: source.into(),
        }
    }
    fn bracket(quantity: impl Into<String>, b: BracketResult, source: impl Into<String>) -> Self {
        Provenance::new(quantity, b.value, b.error, source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub schema: u32,
    pub case: Case,
    pub classification: Classification,
    pub terms: Vec<ExpansionTerm>,
    pub remainder: Order,
    pub provenance: Vec<Provenance>,
}

impl Prediction {
    /// The first term that carries a coefficient.
    pub fn leading(&self) -> Option<&ExpansionTerm> {
        self.terms.iter().find(|t| t.coeff.is_some())
    }

    pub fn leading_coefficient(&self) -> Option<f64> {
        self.leading().and_then(|t| t.coeff)
    }

    pub fn provenance_value(&self, quantity: &str) -> Option<f64> {
        self.provenance
            .iter()
            .find(|p| p.quantity == quantity)
            .map(|p| p.value)
    }
}

fn default_rule(n: usize, k: usize, cfg: &GeometryConfig) -> Result<SphereRule> {
    match n {
        2 => build_rule(
            2,
            if cfg.rule_order > 0 {
                cfg.rule_order
            } else {
                (64 * k).max(256)
            },
            RuleKind::UniformCircle,
        ),
        3 => build_rule(
            3,
            if cfg.rule_order > 0 {
                cfg.rule_order
            } else {
                48 * k
            },
            RuleKind::ProductGauss,
        ),
        _ => build_rule(
            n,
            cfg.monte_carlo.max(1),
            RuleKind::MonteCarlo { seed: cfg.seed },
        ),
    }
}

fn rule_label(rule: &SphereRule) -> String {
    format!("{:?} rule, order {}", rule.kind(), rule.order())
}

/// Leading term of `I(z)` for an extremum or principal-type germ.
pub fn predict_leading(
    germ: &Germ,
    symbol: &Symbol,
    classification: &Classification,
    geometry: &GeometryConfig,
) -> Result<Prediction> {
    let n = germ.dim();
    let k = germ.degree() as usize;
    let x0 = germ.x0();
    let count = geometry.schedule_count.max(1);
    let (n_i, k_i) = (n as i64, k as i64);
    let lead = Rational::new(n_i, k_i);
    let mut prov = Vec::new();
    let refine = RefineConfig::default();

    let (coefficient, terms, remainder) = match classification.case {
        Case::ExtremumMin | Case::ExtremumMax => {
            let sign = if classification.case == Case::ExtremumMin {
                Sign::Plus
            } else {
                Sign::Minus
            };
            let rule = default_rule(n, k, geometry)?;
            let b = t_power_bracket(symbol, x0, (n as f64 - k as f64) / k as f64, sign)?;
            let j = inverse_power_integral(germ, n as f64 / k as f64, Region::All, &rule, &refine)?;
            prov.push(Provenance::bracket(
                format!("<t_e^({}-{k})/{k}, g>", n),
                b,
                format!("t_power_bracket, sign {sign:?}"),
            ));
            prov.push(Provenance::new(
                "sphere |f_k|^(-n/k)",
                j,
                0.0,
                rule_label(&rule),
            ));
            let c = b.value * j / k as f64;
            (
                c,
                extremum_schedule(n, k, count),
                Order::new(Rational::new(n_i + 1, k_i), 0),
            )
        }
        Case::PrincipalType if k > n => {
            let rule = default_rule(n, k, geometry)?;
            let alpha = n as f64 / k as f64;
            let bp = t_power_bracket(symbol, x0, alpha - 1.0, Sign::Plus)?;
            let bm = t_power_bracket(symbol, x0, alpha - 1.0, Sign::Minus)?;
            let jp = inverse_power_integral(germ, alpha, Region::Positive, &rule, &refine)?;
            let jm = inverse_power_integral(germ, alpha, Region::Negative, &rule, &refine)?;
            prov.push(Provenance::bracket(
                "<t_+^(n/k-1), g>",
                bp,
                "t_power_bracket",
            ));
            prov.push(Provenance::bracket(
                "<t_-^(n/k-1), g>",
                bm,
                "t_power_bracket",
            ));
            prov.push(Provenance::new(
                "sphere {f_k>=0} |f_k|^(-n/k)",
                jp,
                0.0,
                rule_label(&rule),
            ));
            prov.push(Provenance::new(
                "sphere {f_k<=0} |f_k|^(-n/k)",
                jm,
                0.0,
                rule_label(&rule),
            ));
            let c = (bp.value * jp + bm.value * jm) / k as f64;
            let rem = Rational::new(n_i + 1, k_i);
            (
                c,
                pole_schedule(n, k, count),
                Order::new(rem, rem.is_integer() as u8),
            )
        }
        Case::PrincipalType if n.is_multiple_of(k) => {
            let p = n / k;
            let (l, source) = density_derivative(germ, classification, p - 1, geometry, &mut prov)?;
            let t = abs_power_integral(symbol, x0, (p - 1) as f64)?;
            prov.push(Provenance::new(
                format!("LVol^({})(0)", p - 1),
                l,
                0.0,
                source,
            ));
            prov.push(Provenance::bracket(
                format!("int |t|^{} g(t,x0) dt", p - 1),
                t,
                "t_power_bracket, both signs",
            ));
            let c = l * t.value / k as f64;
            (c, pole_schedule(n, k, count), Order::new(lead, 0))
        }
        Case::PrincipalType => {
            let c = finite_part_case(germ, symbol, geometry, &mut prov)?;
            let rem = Rational::new(n_i + 1, k_i);
            (
                c,
                pole_schedule(n, k, count),
                Order::new(rem, rem.is_integer() as u8),
            )
        }
        Case::RegularFiber => {
            return Err(Error::refused(
                "expansion",
                "predict_leading",
                "regular fiber: the leading term comes from regular_leading",
            ))
        }
        Case::Unsupported => {
            return Err(Error::refused(
                "expansion",
                "predict_leading",
                format!(
                    "germ classified Unsupported (min tangential gradient {:?})",
                    classification.diagnostics.min_tangential_gradient
                ),
            ))
        }
    };
    if !coefficient.is_finite() {
        return Err(Error::numerical(
            "expansion",
            "predict_leading",
            "leading coefficient is not finite",
        ));
    }
    let mut terms = terms;
    terms[0].coeff = Some(coefficient);
    Ok(Prediction {
        schema: 1,
        case: classification.case,
        classification: classification.clone(),
        terms,
        remainder,
        provenance: prov,
    })
}

/// `LVol^{(m)}(0)`: the exact zero sum in n = 2 for m = 0, exact level sets for n ≤ 3,
/// and the kernel estimate otherwise.
fn density_derivative(
    germ: &Germ,
    classification: &Classification,
    m: usize,
    cfg: &GeometryConfig,
    prov: &mut Vec<Provenance>,
) -> Result<(f64, String)> {
    let n = germ.dim();
    let k = germ.degree() as usize;
    if n == 2 && m == 0 {
        let zs: f64 = classification
            .diagnostics
            .zeros
            .iter()
            .map(|z| 1.0 / z.tangential_gradient_norm)
            .sum();
        return Ok((
            zs,
            format!(
                "exact zero sum over {} zeros",
                classification.diagnostics.zeros.len()
            ),
        ));
    }
    let rule = default_rule(n, k, cfg)?;
    if n <= 3 {
        let window = fit_window(germ, &rule, cfg);
        let d = exact_density_fit(germ, window, cfg.fit_degree.max(m + 2))?;
        return Ok((
            coarea_derivative_at_zero(&d, m)?,
            format!("exact level-set fit, window {window:.4}"),
        ));
    }
    let (grid, h) = sphere::default_grid(germ, &rule, &cfg.coarea);
    let d = coarea_density(germ, &grid, &rule, h, &cfg.coarea)?;
    for w in &d.warnings {
        prov.push(Provenance::new("coarea warning", f64::NAN, 0.0, w.clone()));
    }
    Ok((
        coarea_derivative_at_zero(&d, m)?,
        format!("kernel estimate, bandwidth {h:.4}, {}", rule_label(&rule)),
    ))
}

fn fit_window(germ: &Germ, rule: &SphereRule, cfg: &GeometryConfig) -> f64 {
    if cfg.window > 0.0 {
        cfg.window
    } else {
        let max = germ.fk().terms().iter().map(|t| t.coeff.abs()).sum::<f64>();
        (0.5 * critical_value_gap(germ, rule)).min(0.5 * max)
    }
}

/// Finite-part coefficient `Σ_± ⟨t_±^{n/k−1}, g⟩ · FP_±`, with `LVol` split by a
/// cutoff `χ`: the finite part of `χ·P` (P the local fit) plus the plain sphere sum
/// of `|f_k|^{−n/k}(1 − χ)`.
fn finite_part_case(
    germ: &Germ,
    symbol: &Symbol,
    cfg: &GeometryConfig,
    prov: &mut Vec<Provenance>,
) -> Result<f64> {
    let n = germ.dim();
    let k = germ.degree() as usize;
    let alpha = n as f64 / k as f64;
    let x0 = germ.x0();
    let order = if cfg.finite_part_order > 0 {
        cfg.finite_part_order
    } else {
        n / k + 1
    };
    let coarse = default_rule(n, k, cfg)?;
    let (poly, window, source) = if n <= 3 {
        let window = fit_window(germ, &coarse, cfg);
        let d = exact_density_fit(germ, window, cfg.fit_degree.max(order + 1))?;
        let fit = d.fit.clone().expect("exact fit present");
        (
            fit.coefficients,
            window,
            format!("exact level-set fit, degree {}", fit.degree),
        )
    } else {
        let (grid, h) = sphere::default_grid(germ, &coarse, &cfg.coarea);
        let d = coarea_density(germ, &grid, &coarse, h, &cfg.coarea)?;
        let fit = d.local_fit(cfg.coarea.fit_degree.max(order + 1))?;
        let window = fit.window.min(fit_window(germ, &coarse, cfg));
        (
            fit.coefficients,
            window,
            format!("kernel estimate, bandwidth {h:.4}"),
        )
    };
    let near = CutoffPolynomial::new(poly, 0.5 * window, window, 8)?;
    let chi = CutoffPolynomial::new(vec![1.0], 0.5 * window, window, 8)?;
    let far_rule = match n {
        2 => build_rule(2, 4096, RuleKind::UniformCircle)?,
        3 => build_rule(
            3,
            if cfg.rule_order > 0 {
                cfg.rule_order
            } else {
                400
            },
            RuleKind::ProductGauss,
        )?,
        _ => coarse.clone(),
    };
    let fk = germ.fk();
    let (mut far_p, mut far_m) = (0.0, 0.0);
    for (t, w) in far_rule.nodes().iter().zip(far_rule.weights()) {
        let v = fk.eval(t);
        let c = 1.0 - chi.eval(v);
        if c == 0.0 {
            continue;
        }
        let contrib = w * v.abs().powf(-alpha) * c;
        if v > 0.0 {
            far_p += contrib;
        } else {
            far_m += contrib;
        }
    }
    let (far_p, far_m) = (far_p / k as f64, far_m / k as f64);
    let method = if cfg.derivative_path {
        FinitePartMethod::Derivative { order }
    } else {
        FinitePartMethod::Taylor { order }
    };
    let cross = if cfg.derivative_path {
        FinitePartMethod::Taylor { order }
    } else {
        FinitePartMethod::Derivative {
            order: order.max(n),
        }
    };
    let near_p = finite_part_bracket_with(&near, n, k, Sign::Plus, method)?;
    let near_m = finite_part_bracket_with(&near, n, k, Sign::Minus, method)?;
    let check_p = finite_part_bracket_with(&near, n, k, Sign::Plus, cross)?;
    let check_m = finite_part_bracket_with(&near, n, k, Sign::Minus, cross)?;
    let bp = t_power_bracket(symbol, x0, alpha - 1.0, Sign::Plus)?;
    let bm = t_power_bracket(symbol, x0, alpha - 1.0, Sign::Minus)?;
    let fp_p = near_p.value + far_p;
    let fp_m = near_m.value + far_m;
    prov.push(Provenance::bracket(
        "<t_+^(n/k-1), g>",
        bp,
        "t_power_bracket",
    ));
    prov.push(Provenance::bracket(
        "<t_-^(n/k-1), g>",
        bm,
        "t_power_bracket",
    ));
    prov.push(Provenance::new(
        "FP_+",
        fp_p,
        near_p.error,
        format!("{method:?} near 0 + sphere sum, {source}, window {window:.4}"),
    ));
    prov.push(Provenance::new(
        "FP_-",
        fp_m,
        near_m.error,
        format!("{method:?} near 0 + sphere sum, {source}, window {window:.4}"),
    ));
    prov.push(Provenance::new(
        "FP_+ cross-check",
        check_p.value + far_p,
        check_p.error,
        format!("{cross:?}"),
    ));
    prov.push(Provenance::new(
        "FP_- cross-check",
        check_m.value + far_m,
        check_m.error,
        format!("{cross:?}"),
    ));
    prov.push(Provenance::new(
        "regular-part exponent",
        1.0,
        0.0,
        "z^-1 from the fiber away from the singular point dominates when n > k",
    ));
    Ok(bp.value * fp_p + bm.value * fp_m)
}
