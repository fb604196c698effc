//! Quadrature on the unit sphere, singular sphere integrals of `|f_k|^{-α}`,
//! and the co-area density `LVol` of `f_k` with its derivatives at `w = 0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::brackets::gamma;
use crate::error::{Error, Result};
use crate::germ::{classify, Case, ClassifyTolerances, Germ};
use crate::quad::{self, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RuleKind {
    UniformCircle,
    ProductGauss,
    MonteCarlo { seed: u64 },
}

/// Nodes and positive weights on 𝕊^{n−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    dim: usize,
    order: usize,
    kind: RuleKind,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    // Longitude count of a product rule; used by the singular n = 3 path.
    longitudes: usize,
}

/// Surface area of 𝕊^{n−1}.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0).expect("n/2 is positive")
}

/// Uniform random points on 𝕊^{n−1}. Point `i` is drawn from its own ChaCha
/// stream, so the output is independent of evaluation order.
pub fn random_unit_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            loop {
                let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break v.into_iter().map(|x| x / norm).collect();
                }
            }
        })
        .collect()
}

pub fn build_rule(n: usize, order: usize, kind: RuleKind) -> Result<SphereRule> {
    if n < 2 {
        return Err(Error::input(
            "sphere",
            "build_rule",
            "dimension must be at least 2",
        ));
    }
    if order < 1 {
        return Err(Error::input(
            "sphere",
            "build_rule",
            "order must be at least 1",
        ));
    }
    let (nodes, weights, longitudes) = match (kind, n) {
        (RuleKind::UniformCircle, 2) => {
            let nodes = (0..order)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / order as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect();
            (nodes, vec![2.0 * PI / order as f64; order], order)
        }
        (RuleKind::ProductGauss, 3) => {
            let (mu, wmu) = quad::gauss_legendre(order);
            let lon = 2 * order;
            let dphi = 2.0 * PI / lon as f64;
            let mut nodes = Vec::with_capacity(order * lon);
            let mut weights = Vec::with_capacity(order * lon);
            for (&c, &w) in mu.iter().zip(&wmu) {
                let s = (1.0 - c * c).sqrt();
                for j in 0..lon {
                    let phi = dphi * (j as f64 + 0.5);
                    nodes.push(vec![s * phi.cos(), s * phi.sin(), c]);
                    weights.push(w * dphi);
                }
            }
            (nodes, weights, lon)
        }
        (RuleKind::MonteCarlo { seed }, _) => {
            let nodes = random_unit_vectors(n, order, seed);
            (nodes, vec![sphere_area(n) / order as f64; order], 0)
        }
        _ => {
            return Err(Error::input(
                "sphere",
                "build_rule",
                format!("rule kind {kind:?} is not available in dimension {n}"),
            ))
        }
    };
    Ok(SphereRule {
        dim: n,
        order,
        kind,
        nodes,
        weights,
        longitudes,
    })
}

impl SphereRule {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn kind(&self) -> RuleKind {
        self.kind
    }
    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    /// CSV with columns `x1..xn,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",weight\n");
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            for v in x {
                out.push_str(&format!("{v:e},"));
            }
            out.push_str(&format!("{w:e}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Positive,
    Negative,
    All,
}

impl Region {
    fn admits(self, v: f64) -> bool {
        match self {
            Region::Positive => v >= 0.0,
            Region::Negative => v <= 0.0,
            Region::All => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub quad: QuadOptions,
    /// Samples per meridian used to bracket zeros (n = 3).
    pub meridian_samples: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            quad: QuadOptions {
                abs_tol: 1e-15,
                rel_tol: 1e-13,
                max_panels: 400,
            },
            meridian_samples: 0,
        }
    }
}

/// `∫_{region} |f_k(θ)|^{−α} dθ` over 𝕊^{n−1}.
pub fn inverse_power_integral(
    germ: &Germ,
    alpha: f64,
    region: Region,
    rule: &SphereRule,
    refine: &RefineConfig,
) -> Result<f64> {
    let n = germ.dim();
    if rule.dim != n {
        return Err(Error::input(
            "sphere",
            "inverse_power_integral",
            "rule dimension differs from germ",
        ));
    }
    let class = classify(germ, &ClassifyTolerances::default());
    let fk = germ.fk();
    match class.case {
        Case::ExtremumMin | Case::ExtremumMax => Ok(rule.integrate(|t| {
            let v = fk.eval(t);
            if region.admits(v) {
                v.abs().powf(-alpha)
            } else {
                0.0
            }
        })),
        Case::PrincipalType => {
            if alpha >= 1.0 {
                return Err(Error::divergence(
                    "sphere",
                    "inverse_power_integral",
                    format!("|f_k|^-{alpha} is not integrable across the zero set of f_k"),
                ));
            }
            match n {
                2 => Ok(circle_singular(
                    germ,
                    alpha,
                    region,
                    &class.diagnostics.zeros,
                    refine,
                )),
                3 => Ok(meridian_singular(germ, alpha, region, rule, refine)),
                _ if alpha < 0.5 => Ok(rule.integrate(|t| {
                    let v = fk.eval(t);
                    if region.admits(v) && v != 0.0 {
                        v.abs().powf(-alpha)
                    } else {
                        0.0
                    }
                })),
                _ => Err(Error::refused(
                    "sphere",
                    "inverse_power_integral",
                    "singular sphere integrals with α ≥ 1/2 need n ≤ 3",
                )),
            }
        }
        _ => Err(Error::refused(
            "sphere",
            "inverse_power_integral",
            format!("germ classified {:?}", class.case),
        )),
    }
}

/// Integral of `|h|^{−α}` on `[a, b]` where `h` may vanish (linearly) at either end.
fn singular_segment<H: Fn(f64) -> f64>(
    h: &H,
    a: f64,
    b: f64,
    zero_at_a: bool,
    zero_at_b: bool,
    alpha: f64,
    opts: QuadOptions,
) -> f64 {
    if alpha <= 0.0 || (!zero_at_a && !zero_at_b) {
        return quad::adaptive(|s| h(s).abs().powf(-alpha), &[a, b], opts).value;
    }
    let m = 0.5 * (a + b);
    let beta = 1.0 / (1.0 - alpha);
    // s = a + (m − a) v^β makes |h|^{-α} ds bounded for a linear zero at a.
    let left = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let s = a + (m - a) * v.powf(beta);
        let jac = (m - a) * beta * v.powf(beta - 1.0);
        h(s).abs().powf(-alpha) * jac
    };
    let right = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let s = b - (b - m) * v.powf(beta);
        let jac = (b - m) * beta * v.powf(beta - 1.0);
        h(s).abs().powf(-alpha) * jac
    };
    let lhs = if zero_at_a {
        quad::adaptive(left, &[0.0, 1.0], opts).value
    } else {
        quad::adaptive(|s| h(s).abs().powf(-alpha), &[a, m], opts).value
    };
    let rhs = if zero_at_b {
        quad::adaptive(right, &[0.0, 1.0], opts).value
    } else {
        quad::adaptive(|s| h(s).abs().powf(-alpha), &[m, b], opts).value
    };
    lhs + rhs
}

fn circle_singular(
    germ: &Germ,
    alpha: f64,
    region: Region,
    zeros: &[crate::germ::LocatedZero],
    refine: &RefineConfig,
) -> f64 {
    let fk = germ.fk();
    let h = |phi: f64| fk.eval(&[phi.cos(), phi.sin()]);
    let mut angles: Vec<f64> = zeros
        .iter()
        .map(|z| z.theta[1].atan2(z.theta[0]).rem_euclid(2.0 * PI))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    let m = angles.len();
    let mut total = 0.0;
    for i in 0..m {
        let a = angles[i];
        let b = if i + 1 < m {
            angles[i + 1]
        } else {
            angles[0] + 2.0 * PI
        };
        if !region.admits(h(0.5 * (a + b))) {
            continue;
        }
        total += singular_segment(&h, a, b, true, true, alpha, refine.quad);
    }
    total
}

fn meridian_singular(
    germ: &Germ,
    alpha: f64,
    region: Region,
    rule: &SphereRule,
    refine: &RefineConfig,
) -> f64 {
    let fk = germ.fk();
    let k = germ.degree() as usize;
    let lon = if rule.longitudes > 0 {
        rule.longitudes
    } else {
        64 * k
    };
    let samples = if refine.meridian_samples > 0 {
        refine.meridian_samples
    } else {
        32 * k + 1
    };
    let dphi = 2.0 * PI / lon as f64;
    let mut total = 0.0;
    for j in 0..lon {
        let phi = dphi * (j as f64 + 0.5);
        let (cp, sp) = (phi.cos(), phi.sin());
        // Polar angle ψ ∈ [0, π]; the sphere measure is sin ψ dψ dφ.
        let h = |psi: f64| fk.eval(&[psi.sin() * cp, psi.sin() * sp, psi.cos()]);
        let mut breaks = vec![(0.0, false)];
        let mut prev = (0.0, h(0.0));
        for i in 1..samples {
            let psi = PI * i as f64 / (samples - 1) as f64;
            let v = h(psi);
            if (v > 0.0) != (prev.1 > 0.0) && v != 0.0 && prev.1 != 0.0 {
                let z = quad::bisect(h, prev.0, psi, prev.1, 60);
                breaks.push((z, true));
            } else if v == 0.0 && i + 1 < samples {
                breaks.push((psi, true));
            }
            prev = (psi, v);
        }
        breaks.push((PI, false));
        for w in breaks.windows(2) {
            let ((a, za), (b, zb)) = (w[0], w[1]);
            if b <= a || !region.admits(h(0.5 * (a + b))) {
                continue;
            }
            // |h|^{-α} sin ψ = |h · sin^{-1/α} ψ|^{-α}; fold sin ψ into the integrand instead.
            let g = |psi: f64| h(psi);
            let seg = singular_segment_weighted(&g, a, b, za, zb, alpha, refine.quad);
            total += seg * dphi;
        }
    }
    total
}

/// As [`singular_segment`] with the extra weight `sin ψ`.
fn singular_segment_weighted<H: Fn(f64) -> f64>(
    h: &H,
    a: f64,
    b: f64,
    zero_at_a: bool,
    zero_at_b: bool,
    alpha: f64,
    opts: QuadOptions,
) -> f64 {
    let integrand = |s: f64| h(s).abs().powf(-alpha) * s.sin();
    if alpha <= 0.0 || (!zero_at_a && !zero_at_b) {
        return quad::adaptive(integrand, &[a, b], opts).value;
    }
    let m = 0.5 * (a + b);
    let beta = 1.0 / (1.0 - alpha);
    let mapped = |v: f64, from: f64, to: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let s = from + (to - from) * v.powf(beta);
        let jac = (to - from).abs() * beta * v.powf(beta - 1.0);
        integrand(s) * jac
    };
    let lhs = if zero_at_a {
        quad::adaptive(|v| mapped(v, a, m), &[0.0, 1.0], opts).value
    } else {
        quad::adaptive(integrand, &[a, m], opts).value
    };
    let rhs = if zero_at_b {
        quad::adaptive(|v| mapped(v, b, m), &[0.0, 1.0], opts).value
    } else {
        quad::adaptive(integrand, &[m, b], opts).value
    };
    lhs + rhs
}

/// Biweight kernel `(15/16)(1 − u²)²` on [−1, 1].
fn biweight(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - u * u;
        0.9375 * s * s
    }
}

/// Even moments ∫ u^m K(u) du of the biweight kernel, m = 0, 2, 4, 6, 8.
const BIWEIGHT_MOMENTS: [f64; 5] = [1.0, 1.0 / 7.0, 1.0 / 21.0, 5.0 / 231.0, 5.0 / 429.0];

/// Local polynomial model of `LVol` around `w = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeFit {
    /// Monomial coefficients `c_j` of `Σ c_j w^j` (after removing kernel bias).
    pub coefficients: Vec<f64>,
    pub window: f64,
    pub degree: usize,
    pub points: usize,
}

impl DerivativeFit {
    pub fn eval(&self, w: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * w + c)
    }

    /// m-th derivative at `w = 0`.
    pub fn derivative_at_zero(&self, m: usize) -> f64 {
        self.coefficients.get(m).map_or(0.0, |c| c * factorial(m))
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|j| j as f64).product()
}

/// Sampled pushforward density of the sphere measure under `f_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoareaDensity {
    pub w_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    /// Whether `values` are kernel-smoothed (the fit then removes the kernel bias).
    pub smoothed: bool,
    /// Fit window as a multiple of the bandwidth.
    pub window_multiple: f64,
    pub fit_degree: usize,
    pub fit: Option<DerivativeFit>,
    /// `Σ 1/|∇_θ f_k|` over the zeros on the circle (n = 2 only).
    pub exact_zero_sum: Option<f64>,
    /// `[min, max]` of `f_k` over the rule nodes.
    pub sample_range: (f64, f64),
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoareaConfig {
    /// Kernel bandwidth; 0 selects `(range of f_k)/50`.
    pub bandwidth: f64,
    pub window_multiple: f64,
    pub fit_degree: usize,
    /// Grid points per bandwidth when the grid is generated.
    pub points_per_bandwidth: usize,
}

impl Default for CoareaConfig {
    fn default() -> Self {
        CoareaConfig {
            bandwidth: 0.0,
            window_multiple: 6.0,
            fit_degree: 6,
            points_per_bandwidth: 20,
        }
    }
}

impl CoareaDensity {
    /// A density given directly by values on a grid (no kernel smoothing).
    pub fn from_values(
        w_grid: Vec<f64>,
        values: Vec<f64>,
        window: f64,
        degree: usize,
    ) -> Result<Self> {
        if w_grid.len() != values.len() {
            return Err(Error::input(
                "sphere",
                "coarea_density",
                "grid and values differ in length",
            ));
        }
        let mut d = CoareaDensity {
            w_grid,
            values,
            bandwidth: window,
            smoothed: false,
            window_multiple: 1.0,
            fit_degree: degree,
            fit: None,
            exact_zero_sum: None,
            sample_range: (f64::NAN, f64::NAN),
            warnings: Vec::new(),
        };
        d.fit = d.local_fit(degree).ok();
        Ok(d)
    }

    /// Linear interpolation on the grid, zero outside.
    pub fn value_at(&self, w: f64) -> f64 {
        let g = &self.w_grid;
        if g.is_empty() || w < g[0] || w > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|&x| x <= w).min(g.len() - 1).max(1);
        let (x0, x1) = (g[i - 1], g[i]);
        let t = if x1 > x0 { (w - x0) / (x1 - x0) } else { 0.0 };
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }

    /// Trapezoid mass `Σ LVol Δw` over the grid.
    pub fn mass(&self) -> f64 {
        self.w_grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Least-squares polynomial of the given degree on `|w| ≤ window`; when the
    /// values are kernel-smoothed the kernel convolution is inverted exactly on
    /// the polynomial.
    pub fn local_fit(&self, degree: usize) -> Result<DerivativeFit> {
        let window = self.window_multiple * self.bandwidth;
        let pts: Vec<(f64, f64)> = self
            .w_grid
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| w.abs() <= window)
            .map(|(w, v)| (*w, *v))
            .collect();
        if pts.len() < degree + 1 {
            return Err(Error::input(
                "sphere",
                "coarea_derivative_at_zero",
                format!(
                    "fit window holds {} grid points, need at least {}",
                    pts.len(),
                    degree + 1
                ),
            ));
        }
        // Fit in the scaled variable w / window for conditioning.
        let a = DMatrix::from_fn(pts.len(), degree + 1, |i, j| {
            (pts[i].0 / window).powi(j as i32)
        });
        let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
        let svd = a.svd(true, true);
        let scaled = svd
            .solve(&b, 1e-14)
            .map_err(|e| Error::numerical("sphere", "coarea_derivative_at_zero", e.to_string()))?;
        let mut coefficients: Vec<f64> = scaled
            .iter()
            .enumerate()
            .map(|(j, c)| c / window.powi(j as i32))
            .collect();
        if self.smoothed {
            coefficients = deconvolve_biweight(&coefficients, self.bandwidth);
        }
        Ok(DerivativeFit {
            coefficients,
            window,
            degree,
            points: pts.len(),
        })
    }
}

/// Solve `P * K_h = P̂` for a polynomial `P`, given the coefficients of `P̂`.
fn deconvolve_biweight(smoothed: &[f64], h: f64) -> Vec<f64> {
    let d = smoothed.len();
    let mut p = vec![0.0; d];
    for j in (0..d).rev() {
        // P̂_j = Σ_{m even} h^m μ_m / m! · (j+m)!/j! · P_{j+m}
        let mut acc = smoothed[j];
        for (mi, mu) in BIWEIGHT_MOMENTS.iter().enumerate().skip(1) {
            let m = 2 * mi;
            if j + m >= d {
                break;
            }
            let falling: f64 = ((j + 1)..=(j + m)).map(|x| x as f64).product();
            acc -= h.powi(m as i32) * mu / factorial(m) * falling * p[j + m];
        }
        p[j] = acc;
    }
    p
}

/// Kernel estimate of `LVol` on `w_grid` from the weighted sample `(f_k(θ_i), w_i)`.
pub fn coarea_density(
    germ: &Germ,
    w_grid: &[f64],
    rule: &SphereRule,
    bandwidth: f64,
    config: &CoareaConfig,
) -> Result<CoareaDensity> {
    if bandwidth <= 0.0 || !bandwidth.is_finite() {
        return Err(Error::input(
            "sphere",
            "coarea_density",
            "bandwidth must be positive",
        ));
    }
    if rule.dim != germ.dim() {
        return Err(Error::input(
            "sphere",
            "coarea_density",
            "rule dimension differs from germ",
        ));
    }
    if w_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(
            "sphere",
            "coarea_density",
            "w grid must be strictly increasing",
        ));
    }
    let class = classify(germ, &ClassifyTolerances::default());
    if !matches!(
        class.case,
        Case::ExtremumMin | Case::ExtremumMax | Case::PrincipalType
    ) {
        return Err(Error::refused(
            "sphere",
            "coarea_density",
            format!("germ classified {:?}", class.case),
        ));
    }
    let fk = germ.fk();
    let samples: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| (fk.eval(t), *w))
        .collect();
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    if let (Some(first), Some(last)) = (w_grid.first(), w_grid.last()) {
        if *first > lo - bandwidth || *last < hi + bandwidth {
            warnings.push(format!(
                "grid [{first}, {last}] does not cover the sample range [{lo}, {hi}] plus one bandwidth; \
                 mass outside the grid is dropped"
            ));
        }
    }
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = w_grid
        .iter()
        .map(|&w| {
            let start = sorted.partition_point(|s| s.0 < w - bandwidth);
            sorted[start..]
                .iter()
                .take_while(|s| s.0 <= w + bandwidth)
                .map(|(v, wt)| wt * biweight((v - w) / bandwidth) / bandwidth)
                .sum()
        })
        .collect();

    let exact_zero_sum = (germ.dim() == 2 && class.case == Case::PrincipalType).then(|| {
        class
            .diagnostics
            .zeros
            .iter()
            .map(|z| 1.0 / z.tangential_gradient_norm)
            .sum()
    });

    let mut density = CoareaDensity {
        w_grid: w_grid.to_vec(),
        values,
        bandwidth,
        smoothed: true,
        window_multiple: config.window_multiple,
        fit_degree: config.fit_degree,
        fit: None,
        exact_zero_sum,
        sample_range: (lo, hi),
        warnings,
    };
    if class.case == Case::PrincipalType {
        density.fit = Some(density.local_fit(config.fit_degree)?);
    }
    Ok(density)
}

/// Grid covering the range of `f_k` on the rule plus two bandwidths, and the bandwidth used.
pub fn default_grid(germ: &Germ, rule: &SphereRule, config: &CoareaConfig) -> (Vec<f64>, f64) {
    let fk = germ.fk();
    let vals: Vec<f64> = rule.nodes.iter().map(|t| fk.eval(t)).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h = if config.bandwidth > 0.0 {
        config.bandwidth
    } else {
        ((hi - lo) / 50.0).max(1e-3)
    };
    let step = h / config.points_per_bandwidth.max(2) as f64;
    // Grid symmetric about 0 with a node at 0.
    let left = ((lo - 2.0 * h).min(0.0) / step).floor() as i64;
    let right = ((hi + 2.0 * h).max(0.0) / step).ceil() as i64;
    ((left..=right).map(|i| i as f64 * step).collect(), h)
}

/// m-th derivative of `LVol` at `w = 0` from the local polynomial fit.
pub fn coarea_derivative_at_zero(density: &CoareaDensity, m: usize) -> Result<f64> {
    let degree = density.fit_degree.max(m + 2);
    let fit = match &density.fit {
        Some(f) if f.degree >= m + 2 => f.clone(),
        _ => density.local_fit(degree)?,
    };
    Ok(fit.derivative_at_zero(m))
}

/// CSV with columns `w,lvol`.
pub fn density_csv(d: &CoareaDensity) -> String {
    let mut out = String::from("w,lvol\n");
    for (w, v) in d.w_grid.iter().zip(&d.values) {
        out.push_str(&format!("{w:e},{v:e}\n"));
    }
    out
}

/// Exact `LVol(w)` from the level set `{f_k = w}` for n ∈ {2, 3}: the sum of
/// `1/|∂f_k|` over the level set, taken along meridians when n = 3.
pub fn level_set_density(germ: &Germ, w: f64) -> Result<f64> {
    let fk = germ.fk();
    let k = germ.degree() as usize;
    let roots = |h: &dyn Fn(f64) -> f64, lo: f64, hi: f64, m: usize| -> Vec<f64> {
        let mut out = Vec::new();
        let step = (hi - lo) / m as f64;
        let mut prev = (lo, h(lo) - w);
        for i in 1..=m {
            let x = lo + step * i as f64;
            let v = h(x) - w;
            if v == 0.0 {
                out.push(x);
            } else if prev.1 != 0.0 && (v > 0.0) != (prev.1 > 0.0) {
                out.push(quad::bisect(|t| h(t) - w, prev.0, x, prev.1, 80));
            }
            prev = (x, v);
        }
        out
    };
    match germ.dim() {
        2 => {
            let h = |phi: f64| fk.eval(&[phi.cos(), phi.sin()]);
            let dh = |phi: f64| {
                let g = fk.gradient(&[phi.cos(), phi.sin()]);
                -g[0] * phi.sin() + g[1] * phi.cos()
            };
            Ok(roots(&h, 0.0, 2.0 * PI, 256 * k)
                .iter()
                .map(|&r| 1.0 / dh(r).abs())
                .sum())
        }
        3 => {
            let nphi = 256 * k;
            let dphi = 2.0 * PI / nphi as f64;
            let mut total = 0.0;
            for j in 0..nphi {
                let phi = dphi * j as f64;
                let (cp, sp) = (phi.cos(), phi.sin());
                let h = |psi: f64| fk.eval(&[psi.sin() * cp, psi.sin() * sp, psi.cos()]);
                let dh = |psi: f64| {
                    let g = fk.gradient(&[psi.sin() * cp, psi.sin() * sp, psi.cos()]);
                    g[0] * psi.cos() * cp + g[1] * psi.cos() * sp - g[2] * psi.sin()
                };
                total += roots(&h, 0.0, PI, 128 * k)
                    .iter()
                    .map(|&r| r.sin() / dh(r).abs())
                    .sum::<f64>()
                    * dphi;
            }
            Ok(total)
        }
        n => Err(Error::refused(
            "sphere",
            "coarea_density",
            format!("exact level-set density needs n ≤ 3, got n = {n}"),
        )),
    }
}

/// Smallest `|f_k|` among near-critical points of `f_k` on the sphere sample; `LVol` is
/// smooth on `(−gap, gap)`.
pub fn critical_value_gap(germ: &Germ, rule: &SphereRule) -> f64 {
    let fk = germ.fk();
    let grads: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .map(|t| {
            let g = germ.tangential_gradient_unchecked(t);
            (fk.eval(t), g.iter().map(|v| v * v).sum::<f64>().sqrt())
        })
        .collect();
    let gmax = grads.iter().map(|g| g.1).fold(0.0, f64::max);
    let vmax = grads.iter().map(|g| g.0.abs()).fold(0.0, f64::max);
    grads
        .iter()
        .filter(|g| g.1 < 0.05 * gmax)
        .map(|g| g.0.abs())
        .fold(vmax, f64::min)
}

/// `LVol` sampled exactly at Chebyshev points of `[−window, window]` with a polynomial fit.
pub fn exact_density_fit(germ: &Germ, window: f64, degree: usize) -> Result<CoareaDensity> {
    if window.is_nan() || window <= 0.0 {
        return Err(Error::input(
            "sphere",
            "coarea_density",
            "window must be positive",
        ));
    }
    let m = 4 * (degree + 1);
    let mut grid: Vec<f64> = (0..m)
        .map(|i| -window * ((2 * i + 1) as f64 * PI / (2 * m) as f64).cos())
        .collect();
    grid.sort_by(f64::total_cmp);
    let values = grid
        .iter()
        .map(|&w| level_set_density(germ, w))
        .collect::<Result<Vec<_>>>()?;
    let mut d = CoareaDensity::from_values(grid, values, window, degree)?;
    d.fit = Some(d.local_fit(degree)?);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_normalisation() {
        let c = build_rule(2, 8, RuleKind::UniformCircle).unwrap();
        assert!((c.weights().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-14);
        let s = build_rule(3, 20, RuleKind::ProductGauss).unwrap();
        assert!((s.weights().iter().sum::<f64>() / (4.0 * PI) - 1.0).abs() < 1e-10);
        let z2 = s.integrate(|t| t[2] * t[2]);
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-10 * 4.0 * PI);
        for x in s.nodes() {
            assert!((x.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        }
        let mc = build_rule(4, 20_000, RuleKind::MonteCarlo { seed: 3 }).unwrap();
        assert!((mc.weights().iter().sum::<f64>() - 2.0 * PI * PI).abs() < 1e-9);
        assert!(build_rule(3, 8, RuleKind::UniformCircle).is_err());
        assert!(build_rule(4, 8, RuleKind::ProductGauss).is_err());
        assert!(build_rule(2, 0, RuleKind::UniformCircle).is_err());
    }

    #[test]
    fn monte_carlo_is_seed_reproducible() {
        let a = random_unit_vectors(5, 10, 42);
        let b = random_unit_vectors(5, 10, 42);
        assert_eq!(a, b);
        assert_ne!(a, random_unit_vectors(5, 10, 43));
    }

    #[test]
    fn area_formula() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn constant_integrand_on_circle() {
        let g = Germ::at_origin(2, 2, &[(1.0, &[2, 0]), (1.0, &[0, 2])]).unwrap();
        let rule = build_rule(2, 64, RuleKind::UniformCircle).unwrap();
        let v =
            inverse_power_integral(&g, 1.0, Region::All, &rule, &RefineConfig::default()).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-12);
        let neg =
            inverse_power_integral(&g, 1.0, Region::Negative, &rule, &RefineConfig::default())
                .unwrap();
        assert_eq!(neg, 0.0);
    }

    #[test]
    fn divergent_exponent_rejected() {
        let g = Germ::at_origin(2, 2, &[(1.0, &[2, 0]), (-1.0, &[0, 2])]).unwrap();
        let rule = build_rule(2, 64, RuleKind::UniformCircle).unwrap();
        let e = inverse_power_integral(&g, 1.0, Region::All, &rule, &RefineConfig::default())
            .unwrap_err();
        assert!(matches!(e, Error::Divergence { .. }));
        let d = Germ::at_origin(2, 4, &[(1.0, &[2, 2])]).unwrap();
        let e = inverse_power_integral(&d, 0.5, Region::All, &rule, &RefineConfig::default())
            .unwrap_err();
        assert!(matches!(e, Error::Refused { .. }));
    }

    #[test]
    fn deconvolution_inverts_smoothing() {
        // P(w) = 1 + w^2 + w^4, smoothed: P + h²μ2/2 P'' + h⁴μ4/24 P''''.
        let h: f64 = 0.3;
        let (m2, m4) = (1.0 / 7.0, 1.0 / 21.0);
        let c0 = 1.0 + h * h * m2 / 2.0 * 2.0 + h.powi(4) * m4 / 24.0 * 24.0;
        let c2 = 1.0 + h * h * m2 / 2.0 * 12.0;
        let smoothed = [c0, 0.0, c2, 0.0, 1.0];
        let p = deconvolve_biweight(&smoothed, h);
        for (a, b) in p.iter().zip([1.0, 0.0, 1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14, "{p:?}");
        }
    }

    #[test]
    fn synthetic_linear_density() {
        let grid: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.01).collect();
        let vals: Vec<f64> = grid.iter().map(|w| 2.0 + 3.0 * w).collect();
        let d = CoareaDensity::from_values(grid, vals, 0.5, 3).unwrap();
        assert!((coarea_derivative_at_zero(&d, 1).unwrap() - 3.0).abs() < 1e-12);
        assert!((coarea_derivative_at_zero(&d, 0).unwrap() - 2.0).abs() < 1e-12);
        let sparse =
            CoareaDensity::from_values(vec![-1.0, 0.0, 1.0], vec![1.0, 1.0, 1.0], 2.0, 4).unwrap();
        assert!(coarea_derivative_at_zero(&sparse, 2).is_err());
    }

    fn elliptic(n: usize, p: u32, a: &[f64]) -> Germ {
        let monos: Vec<(f64, Vec<u32>)> = (0..n)
            .map(|j| {
                let mut e = vec![0; n];
                e[j] = p;
                (a[j], e)
            })
            .collect();
        let refs: Vec<(f64, &[u32])> = monos.iter().map(|(c, e)| (*c, e.as_slice())).collect();
        Germ::at_origin(n, p, &refs).unwrap()
    }

    #[test]
    fn generalized_elliptic_integrals() {
        for (n, p, a, order, tol) in [
            (2, 2, vec![1.0, 1.0], 64, 1e-10),
            (2, 4, vec![1.0, 3.0], 256, 1e-8),
            (3, 2, vec![1.0, 2.0, 0.5], 40, 1e-8),
        ] {
            let kind = if n == 2 {
                RuleKind::UniformCircle
            } else {
                RuleKind::ProductGauss
            };
            let rule = build_rule(n, order, kind).unwrap();
            let g = elliptic(n, p, &a);
            let alpha = n as f64 / p as f64;
            let v = inverse_power_integral(&g, alpha, Region::All, &rule, &RefineConfig::default())
                .unwrap()
                / p as f64;
            let want = (2.0 * gamma(1.0 + 1.0 / p as f64).unwrap()).powi(n as i32)
                * a.iter().map(|x| x.powf(-1.0 / p as f64)).product::<f64>()
                / gamma(alpha).unwrap();
            assert!((v / want - 1.0).abs() < tol, "n {n} p {p}: {v} vs {want}");
        }
    }

    #[test]
    fn saddle_singular_integral() {
        let g = Germ::at_origin(2, 2, &[(1.0, &[2, 0]), (-1.0, &[0, 2])]).unwrap();
        let rule = build_rule(2, 64, RuleKind::UniformCircle).unwrap();
        let cfg = RefineConfig::default();
        let all = inverse_power_integral(&g, 0.5, Region::All, &rule, &cfg).unwrap();
        let want = 2.0 * crate::brackets::beta(0.25, 0.5).unwrap();
        assert!((all - want).abs() < 1e-9 * want, "{all} vs {want}");
        let plus = inverse_power_integral(&g, 0.5, Region::Positive, &rule, &cfg).unwrap();
        let minus = inverse_power_integral(&g, 0.5, Region::Negative, &rule, &cfg).unwrap();
        assert!((plus + minus - all).abs() < 1e-12 * all);
    }

    #[test]
    fn cone_singular_integral_3d() {
        // x² + y² − z²: ∫|f|^{-1/2} over 𝕊² = 2π ∫_{-1}^{1} |1 − 2μ²|^{-1/2} dμ.
        let g = Germ::at_origin(
            3,
            2,
            &[(1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (-1.0, &[0, 0, 2])],
        )
        .unwrap();
        let rule = build_rule(3, 24, RuleKind::ProductGauss).unwrap();
        let v =
            inverse_power_integral(&g, 0.5, Region::All, &rule, &RefineConfig::default()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = |mu: f64| (1.0 - 2.0 * mu * mu).abs().powf(-0.5);
        // μ = s ∓ v² resolves the square-root zero at μ = 1/√2; the factor 2 covers μ < 0.
        let left = quad::adaptive(
            |v: f64| 2.0 * v * h(s - v * v),
            &[0.0, s.sqrt()],
            QuadOptions::default(),
        )
        .value;
        let right = quad::adaptive(
            |v: f64| 2.0 * v * h(s + v * v),
            &[0.0, (1.0 - s).sqrt()],
            QuadOptions::default(),
        )
        .value;
        let want = 2.0 * PI * 2.0 * (left + right);
        assert!((v - want).abs() < 1e-7 * want, "{v} vs {want}");
    }

    #[test]
    fn saddle_density_at_zero() {
        let g = Germ::at_origin(2, 2, &[(1.0, &[2, 0]), (-1.0, &[0, 2])]).unwrap();
        let rule = build_rule(2, 20_000, RuleKind::UniformCircle).unwrap();
        let cfg = CoareaConfig::default();
        let (grid, h) = default_grid(&g, &rule, &cfg);
        let d = coarea_density(&g, &grid, &rule, h, &cfg).unwrap();
        assert!((d.exact_zero_sum.unwrap() - 2.0).abs() < 1e-9);
        let l0 = coarea_derivative_at_zero(&d, 0).unwrap();
        assert!((l0 - 2.0).abs() < 1e-3, "{l0}");
        assert!(coarea_derivative_at_zero(&d, 1).unwrap().abs() < 1e-3);
        assert!((d.mass() - 2.0 * PI).abs() < 1e-3);
        assert!(d.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn definite_density_vanishes_near_zero() {
        let g = Germ::at_origin(2, 2, &[(1.0, &[2, 0]), (1.0, &[0, 2])]).unwrap();
        let rule = build_rule(2, 512, RuleKind::UniformCircle).unwrap();
        let grid: Vec<f64> = (0..=300).map(|i| -0.5 + i as f64 * 0.01).collect();
        let d = coarea_density(&g, &grid, &rule, 0.05, &CoareaConfig::default()).unwrap();
        assert!(d
            .w_grid
            .iter()
            .zip(&d.values)
            .all(|(w, v)| *w > 0.9 || *v == 0.0));
        assert!((d.mass() - 2.0 * PI).abs() < 1e-2);
    }

    #[test]
    fn exact_cone_density() {
        // x² + y² − z² on 𝕊²: LVol(w) = π√2 (1 − w)^{−1/2}.
        let g = Germ::at_origin(
            3,
            2,
            &[(1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (-1.0, &[0, 0, 2])],
        )
        .unwrap();
        for w in [-0.4, 0.0, 0.3] {
            let l = level_set_density(&g, w).unwrap();
            let want = PI * 2f64.sqrt() / (1.0 - w).sqrt();
            assert!((l - want).abs() < 1e-9 * want, "w {w}: {l} vs {want}");
        }
        let rule = build_rule(3, 30, RuleKind::ProductGauss).unwrap();
        let gap = critical_value_gap(&g, &rule);
        assert!(gap > 0.8, "{gap}");
        let d = exact_density_fit(&g, 0.4, 14).unwrap();
        let want1 = PI * 2f64.sqrt() * 0.5;
        let d1 = coarea_derivative_at_zero(&d, 1).unwrap();
        assert!((d1 - want1).abs() < 1e-6, "{d1} vs {want1}");
    }

    #[test]
    fn exact_saddle_density() {
        let g = Germ::at_origin(2, 2, &[(1.0, &[2, 0]), (-1.0, &[0, 2])]).unwrap();
        for w in [0.0, 0.5, -0.7] {
            let l = level_set_density(&g, w).unwrap();
            let want = 2.0 / (1.0 - w * w).sqrt();
            assert!((l - want).abs() < 1e-10 * want);
        }
    }
}
