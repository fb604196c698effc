//! Singularity germs `f = f_k + r` at a critical point and their classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial};
use crate::quad;
use crate::sphere;

/// Built-in higher-order remainders `r(x)` with `r = O(|x|^{k+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Remainder {
    #[default]
    Zero,
    /// `coeff · Σ_j x_j^{k+1}`.
    PowerSum { coeff: f64 },
    /// `coeff · |x|^{k+2}`.
    RadialPower { coeff: f64 },
}

impl Remainder {
    fn eval(&self, k: u32, x: &[f64]) -> f64 {
        match *self {
            Remainder::Zero => 0.0,
            Remainder::PowerSum { coeff } => {
                coeff * x.iter().map(|v| v.powi(k as i32 + 1)).sum::<f64>()
            }
            Remainder::RadialPower { coeff } => {
                coeff
                    * x.iter()
                        .map(|v| v * v)
                        .sum::<f64>()
                        .sqrt()
                        .powi(k as i32 + 2)
            }
        }
    }

    fn gradient(&self, k: u32, x: &[f64]) -> Vec<f64> {
        match *self {
            Remainder::Zero => vec![0.0; x.len()],
            Remainder::PowerSum { coeff } => x
                .iter()
                .map(|v| coeff * (k + 1) as f64 * v.powi(k as i32))
                .collect(),
            Remainder::RadialPower { coeff } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter()
                    .map(|v| coeff * (k + 2) as f64 * r.powi(k as i32) * v)
                    .collect()
            }
        }
    }
}

/// A real-valued function on ℝⁿ whose zero set is the fiber.
pub trait FiberFunction: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// The isolated critical point on the fiber, if there is one.
    fn singular_point(&self) -> Option<&[f64]> {
        None
    }
}

impl FiberFunction for Polynomial {
    fn dim(&self) -> usize {
        Polynomial::dim(self)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        Polynomial::eval(self, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        Polynomial::gradient(self, x)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GermRepr {
    n: usize,
    k: u32,
    monomials: Vec<Monomial>,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    remainder: Remainder,
}

/// Singularity data: `f(x) = f_k(x − x0) + r(x − x0)` with `f_k` homogeneous of degree `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GermRepr", into = "GermRepr")]
pub struct Germ {
    k: u32,
    fk: Polynomial,
    remainder: Remainder,
    x0: Vec<f64>,
}

impl TryFrom<GermRepr> for Germ {
    type Error = Error;
    fn try_from(r: GermRepr) -> Result<Self> {
        let x0 = r.x0.unwrap_or_else(|| vec![0.0; r.n]);
        Germ::new(r.n, r.k, r.monomials, x0)?.with_remainder(r.remainder)
    }
}

impl From<Germ> for GermRepr {
    fn from(g: Germ) -> Self {
        GermRepr {
            n: g.dim(),
            k: g.k,
            monomials: g.fk.terms().to_vec(),
            x0: Some(g.x0),
            remainder: g.remainder,
        }
    }
}

impl Germ {
    pub fn new(n: usize, k: u32, monomials: Vec<Monomial>, x0: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(
                "germ",
                "new",
                format!("dimension n = {n} must be at least 2"),
            ));
        }
        if k < 2 {
            return Err(Error::input(
                "germ",
                "new",
                format!("degree k = {k} must be at least 2"),
            ));
        }
        if x0.len() != n {
            return Err(Error::input(
                "germ",
                "new",
                "base point has the wrong dimension",
            ));
        }
        let fk = Polynomial::new(n, monomials)?;
        if let Some(m) = fk.terms().iter().find(|m| m.degree() != k) {
            return Err(Error::input(
                "germ",
                "new",
                format!(
                    "monomial {:?} has degree {}, expected {k}",
                    m.exps,
                    m.degree()
                ),
            ));
        }
        if fk.is_zero() {
            return Err(Error::input("germ", "new", "f_k is identically zero"));
        }
        Ok(Germ {
            k,
            fk,
            remainder: Remainder::Zero,
            x0,
        })
    }

    /// Convenience constructor at the origin.
    pub fn at_origin(n: usize, k: u32, monomials: &[(f64, &[u32])]) -> Result<Self> {
        let terms = monomials
            .iter()
            .map(|(c, e)| Monomial {
                coeff: *c,
                exps: e.to_vec(),
            })
            .collect();
        Germ::new(n, k, terms, vec![0.0; n])
    }

    pub fn with_remainder(mut self, remainder: Remainder) -> Result<Self> {
        self.remainder = remainder;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.fk.dim()
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn fk(&self) -> &Polynomial {
        &self.fk
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn remainder(&self) -> Remainder {
        self.remainder
    }

    /// `f_k ∘ A` for a square matrix `A`, same base point and remainder.
    pub fn compose_linear(&self, a: &[Vec<f64>]) -> Germ {
        Germ {
            fk: self.fk.compose_linear(a),
            ..self.clone()
        }
    }

    /// `c · f_k`.
    pub fn scaled(&self, c: f64) -> Germ {
        Germ {
            fk: self.fk.scaled(c),
            ..self.clone()
        }
    }

    pub fn eval_fk(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::input(
                "germ",
                "eval_fk",
                format!("point has length {}, expected {}", x.len(), self.dim()),
            ));
        }
        Ok(self.fk.eval(x))
    }

    /// `P_θ ∇f_k(θ)`: the gradient with its radial component removed.
    pub fn tangential_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::input(
                "germ",
                "tangential_gradient",
                "dimension mismatch",
            ));
        }
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::input(
                "germ",
                "tangential_gradient",
                format!("θ must be a unit vector (norm {norm})"),
            ));
        }
        Ok(self.tangential_gradient_unchecked(theta))
    }

    pub(crate) fn tangential_gradient_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let g = self.fk.gradient(theta);
        let radial: f64 = g.iter().zip(theta).map(|(a, b)| a * b).sum();
        g.iter()
            .zip(theta)
            .map(|(gi, ti)| gi - radial * ti)
            .collect()
    }
}

impl FiberFunction for Germ {
    fn dim(&self) -> usize {
        Germ::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
        self.fk.eval(&y) + self.remainder.eval(self.k, &y)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
        let mut g = self.fk.gradient(&y);
        for (gi, ri) in g.iter_mut().zip(self.remainder.gradient(self.k, &y)) {
            *gi += ri;
        }
        g
    }

    fn singular_point(&self) -> Option<&[f64]> {
        Some(&self.x0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    ExtremumMin,
    ExtremumMax,
    PrincipalType,
    RegularFiber,
    Unsupported,
}

/// Classification tolerances. `eps_def` and `eps_grad` are relative to
/// `max |f_k|` over the sphere sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyTolerances {
    pub eps_def: f64,
    pub eps_grad: f64,
    /// Points per great circle (n = 2) or latitude count (n = 3); 0 picks a default.
    pub sample_order: usize,
    /// Seed for the random sphere sample used when n ≥ 4.
    pub seed: u64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            eps_def: 1e-8,
            eps_grad: 1e-6,
            sample_order: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedZero {
    pub theta: Vec<f64>,
    pub tangential_gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub sample_size: usize,
    pub min_abs_fk: f64,
    pub max_abs_fk: f64,
    pub min_tangential_gradient: Option<f64>,
    pub zeros: Vec<LocatedZero>,
    pub tolerances: ClassifyTolerances,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub case: Case,
    pub diagnostics: Diagnostics,
}

impl Classification {
    /// A regular fiber carries no germ diagnostics.
    pub fn regular() -> Self {
        Classification {
            case: Case::RegularFiber,
            diagnostics: Diagnostics {
                sample_size: 0,
                min_abs_fk: 0.0,
                max_abs_fk: 0.0,
                min_tangential_gradient: None,
                zeros: Vec::new(),
                tolerances: ClassifyTolerances::default(),
                note: Some("regular fiber declared by the problem".into()),
            },
        }
    }
}

/// Sphere sample with the edges along which sign changes are searched.
struct Sample {
    nodes: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
}

fn slerp_chord(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    let mut p: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (1.0 - s) * x + s * y)
        .collect();
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    p.iter_mut().for_each(|v| *v /= norm);
    p
}

fn classification_sample(n: usize, k: u32, tol: &ClassifyTolerances) -> Sample {
    let k = k as usize;
    match n {
        2 => {
            let m = tol.sample_order.max(16 * k).max(8 * k);
            let nodes: Vec<Vec<f64>> = (0..m)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect();
            let edges = (0..m).map(|i| (i, (i + 1) % m)).collect();
            Sample { nodes, edges }
        }
        3 => {
            let lat = if tol.sample_order == 0 {
                8 * k
            } else {
                tol.sample_order.max(4 * k)
            };
            let lon = 2 * lat;
            let (mu, _) = quad::gauss_legendre(lat);
            let mut nodes = Vec::with_capacity(lat * lon);
            for &c in &mu {
                let s = (1.0 - c * c).sqrt();
                for j in 0..lon {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / lon as f64;
                    nodes.push(vec![s * phi.cos(), s * phi.sin(), c]);
                }
            }
            let mut edges = Vec::new();
            for i in 0..lat {
                for j in 0..lon {
                    let here = i * lon + j;
                    edges.push((here, i * lon + (j + 1) % lon));
                    if i + 1 < lat {
                        edges.push((here, (i + 1) * lon + j));
                    }
                }
            }
            Sample { nodes, edges }
        }
        _ => {
            let count = if tol.sample_order == 0 {
                400 * n * k
            } else {
                tol.sample_order
            };
            let nodes = sphere::random_unit_vectors(n, count, tol.seed);
            Sample {
                nodes,
                edges: Vec::new(),
            }
        }
    }
}

/// Classify the critical point of `germ` into the supported regimes.
pub fn classify(germ: &Germ, tol: &ClassifyTolerances) -> Classification {
    let n = germ.dim();
    let k = germ.degree();
    let mut sample = classification_sample(n, k, tol);
    let values: Vec<f64> = sample.nodes.iter().map(|t| germ.fk.eval(t)).collect();
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_abs = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };

    let mut diagnostics = Diagnostics {
        sample_size: sample.nodes.len(),
        min_abs_fk: min_abs,
        max_abs_fk: max_abs,
        min_tangential_gradient: None,
        zeros: Vec::new(),
        tolerances: *tol,
        note: None,
    };

    let all_pos = values.iter().all(|&v| v > 0.0);
    let all_neg = values.iter().all(|&v| v < 0.0);
    if min_abs > tol.eps_def * scale && (all_pos || all_neg) {
        // Candidate definite form. A touching zero between samples would still
        // show up as a near-zero local minimum of |f_k|.
        let touching = touching_zeros(germ, &sample, &values, tol.eps_def * scale);
        if touching.is_empty() {
            if k % 2 == 1 {
                diagnostics.note =
                    Some("odd degree cannot be definite; the sphere sample is inadequate".into());
                return Classification {
                    case: Case::Unsupported,
                    diagnostics,
                };
            }
            let case = if all_pos {
                Case::ExtremumMin
            } else {
                Case::ExtremumMax
            };
            return Classification { case, diagnostics };
        }
        return finish_zero_set(germ, touching, scale, diagnostics);
    }

    if n >= 4 {
        sample.edges = opposite_sign_pairs(&sample.nodes, &values);
    }
    let mut zeros = Vec::new();
    for &(i, j) in &sample.edges {
        let (fa, fb) = (values[i], values[j]);
        let (a, b) = (&sample.nodes[i], &sample.nodes[j]);
        if fa == 0.0 {
            zeros.push(a.clone());
        } else if (fa > 0.0) != (fb > 0.0) && fb != 0.0 {
            let s = quad::bisect(|s| germ.fk.eval(&slerp_chord(a, b, s)), 0.0, 1.0, fa, 60);
            zeros.push(slerp_chord(a, b, s));
        }
    }
    zeros.extend(touching_zeros(germ, &sample, &values, tol.eps_def * scale));
    if zeros.is_empty() {
        diagnostics.note = Some("no zero located on the sphere sample".into());
        return Classification {
            case: Case::Unsupported,
            diagnostics,
        };
    }
    finish_zero_set(germ, zeros, scale, diagnostics)
}

fn finish_zero_set(
    germ: &Germ,
    zeros: Vec<Vec<f64>>,
    scale: f64,
    mut d: Diagnostics,
) -> Classification {
    let eps_grad = d.tolerances.eps_grad;
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for z in zeros {
        let dup = unique.iter().any(|u| {
            u.iter()
                .zip(&z)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                < 1e-12
        });
        if !dup {
            unique.push(z);
        }
    }
    d.zeros = unique
        .into_iter()
        .map(|theta| {
            let g = germ.tangential_gradient_unchecked(&theta);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            LocatedZero {
                theta,
                tangential_gradient_norm: norm,
            }
        })
        .collect();
    let min_grad = d
        .zeros
        .iter()
        .map(|z| z.tangential_gradient_norm)
        .fold(f64::INFINITY, f64::min);
    d.min_tangential_gradient = Some(min_grad);
    let case = if min_grad > eps_grad * scale {
        Case::PrincipalType
    } else {
        d.note =
            Some("tangential gradient vanishes on the zero set (not of principal type)".into());
        Case::Unsupported
    };
    Classification {
        case,
        diagnostics: d,
    }
}

/// Local minima of |f_k| along sample edges that refine to a zero.
fn touching_zeros(germ: &Germ, sample: &Sample, values: &[f64], eps: f64) -> Vec<Vec<f64>> {
    let n = sample.nodes.len();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &sample.edges {
        neighbours[i].push(j);
        neighbours[j].push(i);
    }
    let mut found = Vec::new();
    for i in 0..n {
        let vi = values[i].abs();
        if neighbours[i].is_empty() || neighbours[i].iter().any(|&j| values[j].abs() < vi) {
            continue;
        }
        // Refine along each incident edge pair through node i.
        let mut best: Option<(f64, Vec<f64>)> = None;
        for &j in &neighbours[i] {
            let (a, b) = (&sample.nodes[i], &sample.nodes[j]);
            let (s, v) =
                quad::golden_min(|s| germ.fk.eval(&slerp_chord(a, b, s)).abs(), -1.0, 1.0, 80);
            let p = slerp_chord(a, b, s);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, p));
            }
        }
        if let Some((v, p)) = best {
            if v <= eps {
                found.push(p);
            }
        }
    }
    found
}

/// For n ≥ 4: pair each negative node with the nearest positive node.
fn opposite_sign_pairs(nodes: &[Vec<f64>], values: &[f64]) -> Vec<(usize, usize)> {
    let pos: Vec<usize> = (0..nodes.len()).filter(|&i| values[i] > 0.0).collect();
    let neg: Vec<usize> = (0..nodes.len()).filter(|&i| values[i] < 0.0).collect();
    neg.iter()
        .filter_map(|&i| {
            pos.iter()
                .copied()
                .max_by(|&a, &b| {
                    let da: f64 = nodes[i].iter().zip(&nodes[a]).map(|(x, y)| x * y).sum();
                    let db: f64 = nodes[i].iter().zip(&nodes[b]).map(|(x, y)| x * y).sum();
                    da.total_cmp(&db)
                })
                .map(|j| (i, j))
        })
        .collect()
}
