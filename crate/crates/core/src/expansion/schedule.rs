use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::germ::Case;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Reduced fraction `num/den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Rational {
    num: i64,
    den: i64,
}

impl TryFrom<(i64, i64)> for Rational {
    type Error = String;
    fn try_from((n, d): (i64, i64)) -> Result<Self, String> {
        if d == 0 {
            Err("zero denominator".into())
        } else {
            Ok(Rational::new(n, d))
        }
    }
}

impl From<Rational> for (i64, i64) {
    fn from(r: Rational) -> Self {
        (r.num, r.den)
    }
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Rational {
            num: s * num / g,
            den: s * den / g,
        }
    }
    pub fn int(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }
    pub fn num(self) -> i64 {
        self.num
    }
    pub fn den(self) -> i64 {
        self.den
    }
    pub fn is_integer(self) -> bool {
        self.den == 1
    }
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Size of a term `z^{−e} (log z)^ℓ`; larger means faster decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub num: i64,
    pub den: i64,
    pub logpower: u8,
}

impl Order {
    pub fn new(e: Rational, logpower: u8) -> Self {
        Order {
            num: e.num,
            den: e.den,
            logpower,
        }
    }
    pub fn exponent(&self) -> Rational {
        Rational::new(self.num, self.den)
    }
    /// True when `z^{−self}` decays strictly faster than `z^{−other}`.
    pub fn is_smaller_than(&self, other: &Order) -> bool {
        match self.exponent().cmp(&other.exponent()) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.logpower < other.logpower,
        }
    }
}

/// One entry `coeff · z^{−num/den} (log z)^{logpower}` of an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub num: i64,
    pub den: i64,
    pub logpower: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<f64>,
    pub pole_order: u8,
}

impl ExpansionTerm {
    pub fn schedule_only(e: Rational, log: bool) -> Self {
        ExpansionTerm {
            num: e.num,
            den: e.den,
            logpower: log as u8,
            coeff: None,
            pole_order: 1 + log as u8,
        }
    }
    pub fn exponent(&self) -> Rational {
        Rational::new(self.num, self.den)
    }
    pub fn order(&self) -> Order {
        Order::new(self.exponent(), self.logpower)
    }
}

/// `b_k(ξ) = (1−ξ)∏_{j=1}^k (j − kξ)`, or the weighted `(1−ξ)∏_{j=1}^k (j − kξ + n − 1)`.
pub fn bernstein_value(xi: f64, n: usize, k: usize, weighted: bool) -> f64 {
    let shift = if weighted { n as f64 - 1.0 } else { 0.0 };
    (1..=k).fold(1.0 - xi, |acc, j| acc * (j as f64 - k as f64 * xi + shift))
}

/// First `count` exponents of the lattice `p + (j+n−1)/k`, `j = 1..k`, `p ≥ 0`,
/// from `n/k` on, with integers carrying a logarithm.
pub fn pole_schedule(n: usize, k: usize, count: usize) -> Vec<ExpansionTerm> {
    let (n, k) = (n as i64, k as i64);
    let first = Rational::new(n, k);
    let mut out: Vec<Rational> = Vec::new();
    let mut p = 0;
    while out.len() < count {
        for j in 1..=k {
            let e = Rational::new(p * k + j + n - 1, k);
            if e >= first {
                out.push(e);
            }
        }
        out.sort();
        out.dedup();
        p += 1;
    }
    out.truncate(count);
    out.into_iter()
        .map(|e| ExpansionTerm::schedule_only(e, e.is_integer()))
        .collect()
}

/// Exponents `(n+j)/k`, `j ≥ 0`, of an extremum expansion; no logarithms.
pub fn extremum_schedule(n: usize, k: usize, count: usize) -> Vec<ExpansionTerm> {
    (0..count)
        .map(|j| ExpansionTerm::schedule_only(Rational::new((n + j) as i64, k as i64), false))
        .collect()
}

/// The oracle fit basis `(exponent, logpower)`: every logarithmic entry also
/// contributes its plain power, and for principal-type germs with `n > k` the
/// integer powers of the regular part of the fiber are added.
pub fn fit_basis(case: Case, n: usize, k: usize, count: usize) -> Vec<(Rational, u8)> {
    let sched = match case {
        Case::ExtremumMin | Case::ExtremumMax => extremum_schedule(n, k, count),
        Case::RegularFiber => (1..=count as i64)
            .map(|j| ExpansionTerm::schedule_only(Rational::int(j), false))
            .collect(),
        _ => pole_schedule(n, k, count),
    };
    let mut basis: Vec<(Rational, u8)> = Vec::new();
    for t in &sched {
        basis.push((t.exponent(), t.logpower));
        if t.logpower == 1 {
            basis.push((t.exponent(), 0));
        }
    }
    if case == Case::PrincipalType && n > k {
        let last = sched
            .last()
            .map(|t| t.exponent())
            .unwrap_or(Rational::int(1));
        let mut j = 1;
        while Rational::int(j) <= last {
            if !basis.contains(&(Rational::int(j), 0)) {
                basis.push((Rational::int(j), 0));
            }
            j += 1;
        }
    }
    basis.sort_by(|a, b| {
        if Order::new(a.0, a.1).is_smaller_than(&Order::new(b.0, b.1)) {
            Ordering::Greater
        } else if Order::new(b.0, b.1).is_smaller_than(&Order::new(a.0, a.1)) {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    });
    basis.truncate(count);
    basis
}
