//! Multivariate polynomials stored as monomial lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `coeff · x^exps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, Vec<u32>)", into = "(f64, Vec<u32>)")]
pub struct Monomial {
    pub coeff: f64,
    pub exps: Vec<u32>,
}

impl From<(f64, Vec<u32>)> for Monomial {
    fn from((coeff, exps): (f64, Vec<u32>)) -> Self {
        Monomial { coeff, exps }
    }
}

impl From<Monomial> for (f64, Vec<u32>) {
    fn from(m: Monomial) -> Self {
        (m.coeff, m.exps)
    }
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input(
                "germ",
                "polynomial",
                "dimension must be positive",
            ));
        }
        for m in &terms {
            if m.exps.len() != dim {
                return Err(Error::input(
                    "germ",
                    "polynomial",
                    format!(
                        "monomial exponent vector has length {}, expected {dim}",
                        m.exps.len()
                    ),
                ));
            }
            if !m.coeff.is_finite() {
                return Err(Error::input("germ", "polynomial", "non-finite coefficient"));
            }
        }
        Ok(Polynomial { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// Homogeneous degree if every monomial has the same total degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let d = self.terms.first()?.degree();
        self.terms.iter().all(|m| m.degree() == d).then_some(d)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|m| m.coeff == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                m.coeff
                    * m.exps
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| xi.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for m in &self.terms {
            for (i, gi) in g.iter_mut().enumerate() {
                let e = m.exps[i];
                if e == 0 {
                    continue;
                }
                let mut p = m.coeff * e as f64;
                for (j, (&ej, &xj)) in m.exps.iter().zip(x).enumerate() {
                    let pow = if j == i { ej - 1 } else { ej };
                    p *= xj.powi(pow as i32);
                }
                *gi += p;
            }
        }
        g
    }

    pub fn scaled(&self, c: f64) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: c * m.coeff,
                    exps: m.exps.clone(),
                })
                .collect(),
        }
    }

    /// The polynomial `x ↦ p(A x)` for a square matrix `A` given row-major.
    pub fn compose_linear(&self, a: &[Vec<f64>]) -> Polynomial {
        let n = self.dim;
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for m in &self.terms {
            let mut prod: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            prod.insert(vec![0; n], m.coeff);
            for (i, &e) in m.exps.iter().enumerate() {
                for _ in 0..e {
                    let mut next = BTreeMap::new();
                    for (exps, c) in &prod {
                        for (j, &aij) in a[i].iter().enumerate() {
                            if aij == 0.0 {
                                continue;
                            }
                            let mut ex = exps.clone();
                            ex[j] += 1;
                            *next.entry(ex).or_insert(0.0) += c * aij;
                        }
                    }
                    prod = next;
                }
            }
            for (exps, c) in prod {
                *acc.entry(exps).or_insert(0.0) += c;
            }
        }
        Polynomial {
            dim: n,
            terms: acc
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(exps, coeff)| Monomial { coeff, exps })
                .collect(),
        }
    }
}
