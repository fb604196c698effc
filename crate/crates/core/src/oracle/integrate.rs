use std::cell::Cell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brackets::Symbol;
use crate::error::{Error, Result};
use crate::germ::FiberFunction;
use crate::quad::{self, QuadOptions};

/// Axis-aligned integration box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn cube(n: usize, half: f64) -> Self {
        Domain {
            lower: vec![-half; n],
            upper: vec![half; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::input(
                "oracle",
                "integrate_fiber",
                format!("domain must have dimension {n}"),
            ));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(a, b)| a >= b || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::input(
                "oracle",
                "integrate_fiber",
                "domain bounds must be finite with lower < upper",
            ));
        }
        Ok(())
    }

    /// Radius of the largest origin-centred ball inside the box.
    pub fn inscribed_radius(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (-a).min(*b))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| b - a)
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Panel budget per one-dimensional integration.
    pub max_panels: usize,
    /// Samples per line when hunting for zeros of the fiber function.
    pub line_samples: usize,
    /// Sample count of the Monte Carlo path (n ≥ 4).
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-300,
            max_panels: 3000,
            line_samples: 64,
            mc_samples: 1 << 20,
            seed: 0,
        }
    }
}

/// One oracle evaluation of `I(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub z: f64,
    pub value: f64,
    /// Quadrature estimate plus truncation bound.
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Geometric ratio of the focus clusters on outer axes; adaptivity fills in the rest.
const OUTER_FOCUS_RATIO: f64 = 16.0;

type Field<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Iterated adaptive quadrature over a box with breakpoints placed at the
/// zeros (and near-zeros) of `levels` along every innermost line.
struct Nested<'a> {
    lower: &'a [f64],
    upper: &'a [f64],
    integrand: Field<'a>,
    levels: &'a [Field<'a>],
    focus: Option<&'a [f64]>,
    /// Inverse width of the layer around each zero: the band is `|z·L| ≲ 1`.
    z: f64,
    cfg: OracleConfig,
    evals: Cell<usize>,
    converged: Cell<bool>,
}

impl Nested<'_> {
    /// Geometric cluster around the focus on axis `d`, cut off at the line's distance
    /// from the focus in the coordinates already fixed.
    fn focus_points(&self, x: &[f64], d: usize, ratio: f64) -> Vec<f64> {
        let (a, b) = (self.lower[d], self.upper[d]);
        let mut pts = Vec::new();
        if let Some(focus) = self.focus {
            let c = focus[d];
            if c > a && c < b {
                pts.push(c);
                let offset = x[..d]
                    .iter()
                    .zip(focus)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt();
                let floor = (1e-4 * (b - a) / self.z.max(1.0).sqrt()).max(0.5 * offset);
                let mut h = (b - a) / ratio;
                while h > floor {
                    for p in [c - h, c + h] {
                        if p > a && p < b {
                            pts.push(p);
                        }
                    }
                    h /= ratio;
                }
            }
        }
        pts
    }

    fn line_points(&self, x: &mut [f64], d: usize) -> Vec<f64> {
        let (a, b) = (self.lower[d], self.upper[d]);
        let mut pts = vec![a, b];
        pts.extend(self.focus_points(x, d, 4.0));
        let m = self.cfg.line_samples.max(4);
        let mut grid: Vec<f64> = (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
        grid.extend(pts.iter().copied());
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        for level in self.levels {
            let mut at = |t: f64| {
                x[d] = t;
                level(x)
            };
            let vals: Vec<f64> = grid.iter().map(|&t| at(t)).collect();
            self.evals.set(self.evals.get() + vals.len());
            let mut zeros = Vec::new();
            for i in 1..grid.len() {
                let (v0, v1) = (vals[i - 1], vals[i]);
                if v0 == 0.0 {
                    zeros.push(grid[i - 1]);
                } else if (v0 > 0.0) != (v1 > 0.0) && v1 != 0.0 {
                    zeros.push(quad::bisect(&mut at, grid[i - 1], grid[i], v0, 60));
                }
                if i + 1 < grid.len() {
                    let v2 = vals[i + 1];
                    if v1.abs() < v0.abs()
                        && v1.abs() <= v2.abs()
                        && (v0 > 0.0) == (v1 > 0.0)
                        && (v1 > 0.0) == (v2 > 0.0)
                    {
                        let (t, _) =
                            quad::golden_min(|t| at(t).abs(), grid[i - 1], grid[i + 1], 60);
                        zeros.push(t);
                    }
                }
            }
            for r in zeros {
                pts.push(r);
                let h = 1e-7 * (b - a);
                let slope = ((at(r + h) - at(r - h)) / (2.0 * h)).abs();
                let band = if slope > 0.0 {
                    1.0 / (self.z * slope)
                } else {
                    1.0 / self.z.sqrt()
                };
                for mult in [1.0, 8.0, 64.0] {
                    for p in [r - mult * band, r + mult * band] {
                        if p > a && p < b {
                            pts.push(p);
                        }
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|p, q| (*p - *q).abs() <= 1e-15 * (b - a));
        pts
    }

    fn opts(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.cfg.abs_tol,
            rel_tol: self.cfg.rel_tol,
            max_panels: self.cfg.max_panels,
        }
    }

    fn integrate(&self, x: &mut [f64], d: usize) -> (f64, f64) {
        let n = self.lower.len();
        let r = if d + 1 == n {
            let pts = self.line_points(x, d);
            let mut y = x.to_vec();
            let r = quad::adaptive(
                |t| {
                    y[d] = t;
                    (self.integrand)(&y)
                },
                &pts,
                QuadOptions {
                    rel_tol: 0.1 * self.cfg.rel_tol,
                    ..self.opts()
                },
            );
            self.evals.set(self.evals.get() + r.evals);
            r
        } else {
            let mut pts = vec![self.lower[d], self.upper[d]];
            pts.extend(self.focus_points(x, d, OUTER_FOCUS_RATIO));
            pts.sort_by(f64::total_cmp);
            let mut y = x.to_vec();
            quad::adaptive_nested(
                |t| {
                    y[d] = t;
                    self.integrate(&mut y, d + 1)
                },
                &pts,
                self.opts(),
            )
        };
        if !r.converged {
            self.converged.set(false);
        }
        (r.value, r.error)
    }
}

/// `∫_box F(x) dx` by iterated adaptive quadrature, refining at the zeros of `levels`
/// (layer width `1/(z·|∇L|)`) and geometrically around `focus`.
pub fn integrate_box(
    integrand: Field<'_>,
    levels: &[Field<'_>],
    focus: Option<&[f64]>,
    z: f64,
    domain: &Domain,
    cfg: &OracleConfig,
) -> (f64, f64, usize, bool) {
    let nested = Nested {
        lower: &domain.lower,
        upper: &domain.upper,
        integrand,
        levels,
        focus,
        z,
        cfg: *cfg,
        evals: Cell::new(0),
        converged: Cell::new(true),
    };
    let mut x = domain.lower.clone();
    let (v, e) = nested.integrate(&mut x, 0);
    (v, e, nested.evals.get(), nested.converged.get())
}

fn monte_carlo(integrand: Field<'_>, domain: &Domain, cfg: &OracleConfig) -> (f64, f64, usize) {
    const CHUNK: usize = 4096;
    let n = domain.dim();
    let chunks = cfg.mc_samples.div_ceil(CHUNK).max(1);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            let mut x = vec![0.0; n];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..CHUNK {
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi =
                        domain.lower[i] + (domain.upper[i] - domain.lower[i]) * rng.random::<f64>();
                }
                let v = integrand(&x);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let total = (chunks * CHUNK) as f64;
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let mean = s / total;
    let var = (s2 / total - mean * mean).max(0.0);
    let vol = domain.volume();
    (vol * mean, vol * (var / total).sqrt(), chunks * CHUNK)
}

/// `I(z) = ∫ g(z·f(x), x) dx` over `domain`, with the envelope tail outside it as an error term.
pub fn integrate_fiber(
    f: &dyn FiberFunction,
    symbol: &Symbol,
    z: f64,
    domain: &Domain,
    cfg: &OracleConfig,
) -> Result<OracleSample> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::input(
            "oracle",
            "integrate_fiber",
            format!("z = {z} must be positive"),
        ));
    }
    let n = f.dim();
    domain.validate(n)?;
    let tail = symbol.x_tail_bound(n, domain.inscribed_radius());
    if !tail.is_finite() {
        return Err(Error::input(
            "oracle",
            "integrate_fiber",
            "symbol has no x-decay envelope, so the truncation outside the box cannot be bounded",
        ));
    }
    let integrand = |x: &[f64]| symbol.eval(z * f.eval(x), x);
    let level = |x: &[f64]| f.eval(x);
    let (value, error, evals, converged) = if n <= 3 {
        let levels: [Field<'_>; 1] = [&level];
        integrate_box(&integrand, &levels, f.singular_point(), z, domain, cfg)
    } else {
        let (v, e, c) = monte_carlo(&integrand, domain, cfg);
        (v, e, c, true)
    };
    let error = if converged {
        error + tail
    } else {
        10.0 * error + tail
    };
    Ok(OracleSample {
        z,
        value,
        error,
        evals,
        converged,
    })
}

/// [`integrate_fiber`] at every `z`, in parallel, in input order.
pub fn integrate_fiber_grid(
    f: &dyn FiberFunction,
    symbol: &Symbol,
    zs: &[f64],
    domain: &Domain,
    cfg: &OracleConfig,
) -> Result<Vec<OracleSample>> {
    if zs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(
            "oracle",
            "integrate_fiber",
            "z grid must be strictly increasing",
        ));
    }
    zs.par_iter()
        .map(|&z| integrate_fiber(f, symbol, z, domain, cfg))
        .collect()
}

/// CSV with columns `z,value,error,evals`.
pub fn samples_csv(samples: &[OracleSample]) -> String {
    let mut out = String::from("z,value,error,evals\n");
    for s in samples {
        out.push_str(&format!(
            "{:e},{:e},{:e},{}\n",
            s.z, s.value, s.error, s.evals
        ));
    }
    out
}
