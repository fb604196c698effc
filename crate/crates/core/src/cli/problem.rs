use serde::{Deserialize, Serialize};

use crate::brackets::Symbol;
use crate::error::{Error, Result};
use crate::expansion::GeometryConfig;
use crate::germ::{ClassifyTolerances, Germ};
use crate::oracle::{Domain, OracleConfig};
use crate::poly::{Monomial, Polynomial};

/// A full polynomial `f` whose zero set is a regular fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFunction {
    pub n: usize,
    pub monomials: Vec<Monomial>,
}

impl LevelFunction {
    pub fn polynomial(&self) -> Result<Polynomial> {
        Polynomial::new(self.n, self.monomials.clone())
    }
}

/// z-grid, box and budget for the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSpec {
    /// Integration box; absent means the smallest origin-centred cube whose envelope tail is negligible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    pub z_min: f64,
    pub z_max: f64,
    pub z_points: usize,
    /// Fit basis size; 0 picks one from the case.
    pub nterms: usize,
    pub quad: OracleConfig,
    /// Shell half-widths for regular fibers.
    pub shell_eps: Vec<f64>,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            domain: None,
            z_min: 1e2,
            z_max: 1e7,
            z_points: 12,
            nterms: 0,
            quad: OracleConfig::default(),
            shell_eps: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

impl OracleSpec {
    /// Geometric grid from `z_min` to `z_max`.
    pub fn z_grid(&self) -> Result<Vec<f64>> {
        if !(self.z_min > 0.0 && self.z_max > self.z_min && self.z_max.is_finite())
            || self.z_points < 2
        {
            return Err(Error::input(
                "cli",
                "run",
                "need 0 < z_min < z_max and z_points ≥ 2",
            ));
        }
        let r = (self.z_max / self.z_min).powf(1.0 / (self.z_points - 1) as f64);
        Ok((0..self.z_points)
            .map(|i| self.z_min * r.powi(i as i32))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub classify: ClassifyTolerances,
    /// Largest `|predicted − fitted| / |predicted|` that passes validation.
    pub relative_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            classify: ClassifyTolerances::default(),
            relative_gap: 0.05,
        }
    }
}

/// One problem: either a singular `germ` or a regular `level` function, plus a registry symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub germ: Option<Germ>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<LevelFunction>,
    pub symbol: Symbol,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// The fiber of a validated problem.
pub enum Fiber<'a> {
    Singular(&'a Germ),
    Regular(Polynomial),
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProblemSpec = serde_json::from_str(text)
            .map_err(|e| Error::input("cli", "parse_spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem specs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != 1 {
            return Err(Error::input(
                "cli",
                "parse_spec",
                format!("unsupported schema {}", self.schema),
            ));
        }
        match (&self.germ, &self.level) {
            (Some(_), None) => {}
            (None, Some(l)) => {
                l.polynomial()?;
            }
            _ => {
                return Err(Error::input(
                    "cli",
                    "parse_spec",
                    "give exactly one of `germ` and `level`",
                ))
            }
        }
        if let Some(d) = &self.oracle.domain {
            if d.dim() != self.dim() {
                return Err(Error::input(
                    "cli",
                    "parse_spec",
                    format!("domain must have dimension {}", self.dim()),
                ));
            }
        }
        if self.tolerances.relative_gap.is_nan() || self.tolerances.relative_gap <= 0.0 {
            return Err(Error::input(
                "cli",
                "parse_spec",
                "relative_gap must be positive",
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match (&self.germ, &self.level) {
            (Some(g), _) => g.dim(),
            (_, Some(l)) => l.n,
            _ => 0,
        }
    }

    pub fn fiber(&self) -> Result<Fiber<'_>> {
        match (&self.germ, &self.level) {
            (Some(g), None) => Ok(Fiber::Singular(g)),
            (None, Some(l)) => Ok(Fiber::Regular(l.polynomial()?)),
            _ => Err(Error::input(
                "cli",
                "parse_spec",
                "give exactly one of `germ` and `level`",
            )),
        }
    }

    /// The declared box, or the smallest cube (half-width a multiple of 1/2, at most 16)
    /// outside which the envelope tail is below `1e-16`.
    pub fn domain(&self) -> Result<Domain> {
        if let Some(d) = &self.oracle.domain {
            return Ok(d.clone());
        }
        let n = self.dim();
        (1..=32)
            .map(|i| 0.5 * i as f64)
            .find(|&r| self.symbol.x_tail_bound(n, r) < 1e-16)
            .map(|r| Domain::cube(n, r))
            .ok_or_else(|| {
                Error::input(
                    "cli",
                    "run",
                    "no default box bounds the symbol's envelope tail; declare oracle.domain",
                )
            })
    }
}
