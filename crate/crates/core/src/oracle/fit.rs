use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::OracleSample;
use crate::error::{Error, Result};
use crate::expansion::Rational;

/// Basis function `z^{−num/den} (log z)^{logpower}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisTerm {
    pub num: i64,
    pub den: i64,
    pub logpower: u8,
}

impl BasisTerm {
    pub fn eval(&self, z: f64) -> f64 {
        z.powf(-(self.num as f64) / self.den as f64) * z.ln().powi(self.logpower as i32)
    }

    pub fn label(&self) -> String {
        let e = Rational::new(self.num, self.den);
        match self.logpower {
            0 => format!("z^-{e}"),
            1 => format!("z^-{e} log z"),
            l => format!("z^-{e} (log z)^{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub schema: u32,
    pub basis: Vec<BasisTerm>,
    pub coefficients: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Weighted residual norm `‖(I − model)/error‖`.
    pub residual_norm: f64,
    /// Condition number of the column-equilibrated weighted design.
    pub condition: f64,
    pub samples: usize,
}

impl FitResult {
    pub fn coefficient_of(&self, num: i64, den: i64, logpower: u8) -> Option<(f64, f64)> {
        let e = Rational::new(num, den);
        self.basis
            .iter()
            .position(|b| Rational::new(b.num, b.den) == e && b.logpower == logpower)
            .map(|i| (self.coefficients[i], self.stderr[i]))
    }

    pub fn model(&self, z: f64) -> f64 {
        self.basis
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| c * b.eval(z))
            .sum()
    }
}

const MAX_CONDITION: f64 = 1e12;

/// Weighted least squares of `I(z)` on the first `nterms` basis functions, weights `1/error²`.
pub fn fit_asymptotics(
    samples: &[OracleSample],
    basis: &[(Rational, u8)],
    nterms: usize,
) -> Result<FitResult> {
    if nterms == 0 || nterms > basis.len() {
        return Err(Error::input(
            "oracle",
            "fit_asymptotics",
            format!("nterms = {nterms} must lie in 1..={}", basis.len()),
        ));
    }
    if samples.len() < nterms + 2 {
        return Err(Error::input(
            "oracle",
            "fit_asymptotics",
            format!(
                "{} samples cannot support {nterms} terms (need nterms + 2)",
                samples.len()
            ),
        ));
    }
    if samples
        .iter()
        .any(|s| s.z.is_nan() || s.z <= 0.0 || !s.value.is_finite())
    {
        return Err(Error::input(
            "oracle",
            "fit_asymptotics",
            "samples need z > 0 and finite values",
        ));
    }
    let terms: Vec<BasisTerm> = basis[..nterms]
        .iter()
        .map(|(e, l)| BasisTerm {
            num: e.num(),
            den: e.den(),
            logpower: *l,
        })
        .collect();
    let m = samples.len();
    let weight = |s: &OracleSample| 1.0 / s.error.max(1e-14 * s.value.abs()).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(m, nterms, |i, j| {
        weight(&samples[i]) * terms[j].eval(samples[i].z)
    });
    let b = DVector::from_iterator(m, samples.iter().map(|s| weight(s) * s.value));
    let scales: Vec<f64> = (0..nterms)
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    let mut eq = a.clone();
    for (j, s) in scales.iter().enumerate() {
        eq.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = eq.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let (imin, smin) = sv
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, s)| if s < acc.1 { (i, s) } else { acc },
        );
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let v_t = svd.v_t.as_ref().expect("V requested");
    if condition > MAX_CONDITION {
        let null = v_t.row(imin);
        let mut idx: Vec<usize> = (0..nterms).collect();
        idx.sort_by(|&p, &q| null[q].abs().total_cmp(&null[p].abs()));
        let names: Vec<String> = idx.iter().take(2).map(|&i| terms[i].label()).collect();
        return Err(Error::numerical(
            "oracle",
            "fit_asymptotics",
            format!(
                "design condition {condition:.3e} exceeds {MAX_CONDITION:e}; colliding terms: {}",
                names.join(" and ")
            ),
        ));
    }
    let u = svd.u.as_ref().expect("U requested");
    let utb = u.transpose() * &b;
    let mut coeffs = vec![0.0; nterms];
    let mut var = vec![0.0; nterms];
    for r in 0..sv.len() {
        let s = sv[r];
        for j in 0..nterms {
            coeffs[j] += v_t[(r, j)] * utb[r] / s;
            var[j] += (v_t[(r, j)] / s).powi(2);
        }
    }
    for j in 0..nterms {
        coeffs[j] /= scales[j];
        var[j] /= scales[j] * scales[j];
    }
    let x = DVector::from_column_slice(&coeffs);
    let resid = &b - &a * &x;
    let chi2 = resid.norm_squared();
    let dof = (m - nterms) as f64;
    let inflate = (chi2 / dof).max(1.0);
    Ok(FitResult {
        schema: 1,
        basis: terms,
        coefficients: coeffs,
        stderr: var.iter().map(|v| (v * inflate).sqrt()).collect(),
        residual_norm: chi2.sqrt(),
        condition,
        samples: m,
    })
}

/// Least-squares slope of `log |r|` against `log z`.
pub fn residual_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(z, r)| *z > 0.0 && *r != 0.0 && r.is_finite())
        .map(|(z, r)| (z.ln(), r.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::input(
            "oracle",
            "residual_slope",
            "need two nonzero residuals",
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(f: impl Fn(f64) -> f64, zs: &[f64]) -> Vec<OracleSample> {
        zs.iter()
            .map(|&z| OracleSample {
                z,
                value: f(z),
                error: 1e-16 * f(z).abs(),
                evals: 0,
                converged: true,
            })
            .collect()
    }

    fn geometric(lo: f64, hi: f64, m: usize) -> Vec<f64> {
        (0..m)
            .map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64))
            .collect()
    }

    #[test]
    fn exact_log_model() {
        let zs = geometric(1e2, 1e7, 12);
        let s = synth(|z| 3.0 * z.ln() / z + 5.0 / z, &zs);
        let basis = [(Rational::int(1), 1), (Rational::int(1), 0)];
        let r = fit_asymptotics(&s, &basis, 2).unwrap();
        assert!((r.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((r.coefficients[1] - 5.0).abs() < 1e-10);
        assert_eq!(r.coefficient_of(1, 1, 1).unwrap().0, r.coefficients[0]);
    }

    #[test]
    fn residual_monotone_in_basis() {
        let zs = geometric(1e2, 1e6, 10);
        let s = synth(
            |z| 1.0 / z.sqrt() + 0.3 * z.ln() / z + 2.0 / z + 0.7 * z.powf(-1.5),
            &zs,
        );
        let basis = [
            (Rational::new(1, 2), 0),
            (Rational::int(1), 1),
            (Rational::int(1), 0),
            (Rational::new(3, 2), 0),
        ];
        let mut prev = f64::INFINITY;
        for m in 1..=4 {
            let r = fit_asymptotics(&s, &basis, m).unwrap();
            assert!(r.residual_norm <= prev * (1.0 + 1e-12));
            prev = r.residual_norm;
        }
    }

    #[test]
    fn collinear_terms_named() {
        let zs = geometric(1e2, 1e3, 6);
        let s = synth(|z| 1.0 / z, &zs);
        let basis = [(Rational::int(1), 0), (Rational::int(1), 0)];
        let e = fit_asymptotics(&s, &basis, 2).unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("z^-1") && msg.contains("fit_asymptotics"),
            "{msg}"
        );
    }

    #[test]
    fn too_few_samples() {
        let s = synth(|z| 1.0 / z, &[1.0, 2.0, 3.0]);
        assert!(fit_asymptotics(&s, &[(Rational::int(1), 0), (Rational::int(2), 0)], 2).is_err());
    }

    #[test]
    fn slope() {
        let pts: Vec<(f64, f64)> = geometric(1e2, 1e6, 5)
            .into_iter()
            .map(|z| (z, 4.0 * z.powf(-1.5)))
            .collect();
        assert!((residual_slope(&pts).unwrap() + 1.5).abs() < 1e-12);
    }
}
