use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::problem::{Fiber, ProblemSpec};
use crate::brackets::mellin_oscillatory;
use crate::error::{Error, Result};
use crate::expansion::{
    extremum_schedule, fit_basis, pole_schedule, predict_leading, regular_leading, ExpansionTerm,
    Order, Prediction, Rational, ShellConfig,
};
use crate::germ::{classify, Case, Classification, FiberFunction, Germ};
use crate::oracle::{
    fit_asymptotics, integrate_fiber_grid, residual_slope, BasisTerm, FitResult, OracleSample,
};
use crate::sphere::{self, build_rule, coarea_density, CoareaDensity, RuleKind};

pub fn classify_problem(spec: &ProblemSpec) -> Result<Classification> {
    Ok(match spec.fiber()? {
        Fiber::Singular(g) => classify(g, &spec.tolerances.classify),
        Fiber::Regular(_) => Classification::regular(),
    })
}

/// The first `count` expansion exponents for the problem's case.
pub fn schedule_problem(spec: &ProblemSpec, count: usize) -> Result<Vec<ExpansionTerm>> {
    let c = classify_problem(spec)?;
    let (n, k) = match &spec.germ {
        Some(g) => (g.dim(), g.degree() as usize),
        None => (spec.dim(), 1),
    };
    match c.case {
        Case::ExtremumMin | Case::ExtremumMax => Ok(extremum_schedule(n, k, count)),
        Case::PrincipalType => Ok(pole_schedule(n, k, count)),
        Case::RegularFiber => Ok((1..=count as i64)
            .map(|j| ExpansionTerm::schedule_only(Rational::int(j), false))
            .collect()),
        Case::Unsupported => Err(Error::refused(
            "cli",
            "schedule",
            format!(
                "germ is Unsupported (min tangential gradient {:?})",
                c.diagnostics.min_tangential_gradient
            ),
        )),
    }
}

/// CSV `num,den,logpower`.
pub fn schedule_csv(terms: &[ExpansionTerm]) -> String {
    let mut out = String::from("num,den,logpower\n");
    for t in terms {
        out.push_str(&format!("{},{},{}\n", t.num, t.den, t.logpower));
    }
    out
}

pub fn predict_problem(spec: &ProblemSpec) -> Result<Prediction> {
    let count = spec.geometry.schedule_count.max(1);
    match spec.fiber()? {
        Fiber::Singular(g) => {
            let c = classify(g, &spec.tolerances.classify);
            predict_leading(g, &spec.symbol, &c, &spec.geometry)
        }
        Fiber::Regular(p) => {
            Ok(regular_leading(&p, &spec.symbol, &shell_config(spec)?)?.prediction(count))
        }
    }
}

fn shell_config(spec: &ProblemSpec) -> Result<ShellConfig> {
    let mut shell = ShellConfig::new(spec.domain()?);
    shell.eps = spec.oracle.shell_eps.clone();
    shell.oracle.seed = spec.oracle.quad.seed;
    Ok(shell)
}

/// Kernel estimate of `LVol` on the default grid.
pub fn coarea_problem(spec: &ProblemSpec) -> Result<CoareaDensity> {
    let g: &Germ = spec
        .germ
        .as_ref()
        .ok_or_else(|| Error::input("cli", "coarea", "the co-area density needs a germ"))?;
    let geo = &spec.geometry;
    let order = |default: usize| {
        if geo.rule_order > 0 {
            geo.rule_order
        } else {
            default
        }
    };
    let rule = match g.dim() {
        2 => build_rule(2, order(20_000), RuleKind::UniformCircle)?,
        3 => build_rule(3, order(200), RuleKind::ProductGauss)?,
        n => build_rule(
            n,
            geo.monte_carlo.max(1),
            RuleKind::MonteCarlo { seed: geo.seed },
        )?,
    };
    let (grid, h) = sphere::default_grid(g, &rule, &geo.coarea);
    coarea_density(g, &grid, &rule, h, &geo.coarea)
}

/// Outcome of `validate`: prediction against the oracle fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub case: Case,
    /// The compared term `z^{−num/den} (log z)^{logpower}`.
    pub term: Order,
    pub predicted: f64,
    pub fitted: f64,
    pub stderr: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Log-log slope of `|I(z) − predicted term|`.
    pub remainder_slope: f64,
    pub claimed_remainder: Order,
    /// Oracle samples that hit the panel budget.
    pub flagged_samples: usize,
    pub fit: FitResult,
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub comparison: Comparison,
    pub prediction: Prediction,
    pub samples: Vec<OracleSample>,
}

/// Predict, sample `I(z)` on the z-grid, fit the schedule basis and compare the leading coefficient.
pub fn validate_problem(spec: &ProblemSpec) -> Result<Validation> {
    let prediction = predict_problem(spec)?;
    let lead = *prediction
        .leading()
        .ok_or_else(|| Error::numerical("cli", "validate", "prediction carries no coefficient"))?;
    let predicted = lead.coeff.expect("leading term has a coefficient");
    let domain = spec.domain()?;
    let zs = spec.oracle.z_grid()?;
    let (n, k) = match &spec.germ {
        Some(g) => (g.dim(), g.degree() as usize),
        None => (spec.dim(), 1),
    };
    let fiber = spec.fiber()?;
    let f: &dyn FiberFunction = match &fiber {
        Fiber::Singular(g) => *g,
        Fiber::Regular(p) => p,
    };
    let samples = integrate_fiber_grid(f, &spec.symbol, &zs, &domain, &spec.oracle.quad)?;
    let basis = fit_basis(prediction.case, n, k, 16);
    let nterms = if spec.oracle.nterms > 0 {
        spec.oracle.nterms
    } else {
        4
    }
    .min(basis.len());
    let fit = fit_asymptotics(&samples, &basis, nterms)?;
    let (fitted, stderr) = fit
        .coefficient_of(lead.num, lead.den, lead.logpower)
        .ok_or_else(|| {
            Error::numerical(
                "cli",
                "validate",
                format!(
                    "leading term {:?} is missing from the fit basis",
                    lead.order()
                ),
            )
        })?;
    let term = BasisTerm {
        num: lead.num,
        den: lead.den,
        logpower: lead.logpower,
    };
    let residuals: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.z, s.value - predicted * term.eval(s.z)))
        .collect();
    let relative_gap = (fitted - predicted).abs() / predicted.abs().max(f64::MIN_POSITIVE);
    let tolerance = spec.tolerances.relative_gap;
    let comparison = Comparison {
        schema: 1,
        name: spec.name.clone(),
        case: prediction.case,
        term: lead.order(),
        predicted,
        fitted,
        stderr,
        relative_gap,
        tolerance,
        pass: relative_gap < tolerance,
        remainder_slope: residual_slope(&residuals).unwrap_or(f64::NAN),
        claimed_remainder: prediction.remainder,
        flagged_samples: samples.iter().filter(|s| !s.converged).count(),
        fit,
    };
    Ok(Validation {
        comparison,
        prediction,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MellinCheck {
    pub schema: u32,
    pub xi: f64,
    pub etas: Vec<f64>,
    /// `[re, im]` of the damped, extrapolated `M[e^{it}](ξ)`.
    pub value: [f64; 2],
    /// `[re, im]` of `Γ(ξ) e^{iπξ/2}`.
    pub expected: [f64; 2],
    pub residual: f64,
    pub pass: bool,
}

/// `M[e^{it}](1/2)` against `√π e^{iπ/4}`.
pub fn mellin_check() -> Result<MellinCheck> {
    let xi = 0.5;
    let etas = vec![0.1, 0.01, 0.001];
    let v = mellin_oscillatory(Complex64::new(xi, 0.0), true, &etas)?;
    let e = Complex64::from_polar(std::f64::consts::PI.sqrt(), std::f64::consts::FRAC_PI_4);
    let residual = (v.re - e.re).abs().max((v.im - e.im).abs());
    Ok(MellinCheck {
        schema: 1,
        xi,
        etas,
        value: [v.re, v.im],
        expected: [e.re, e.im],
        residual,
        pass: residual < 1e-3,
    })
}
