use super::problem::{LevelFunction, OracleSpec, ProblemSpec, Tolerances};
use crate::brackets::{Envelope, Profile, Symbol};
use crate::expansion::GeometryConfig;
use crate::germ::Germ;
use crate::oracle::OracleConfig;

/// Names accepted by [`fixture`].
pub const FIXTURES: &[&str] = &[
    "gamma-p2",
    "gamma-p4",
    "conical",
    "quartic",
    "regular-circle",
    "cone3d",
];

fn germ(n: usize, k: u32, monomials: &[(f64, &[u32])]) -> Germ {
    Germ::at_origin(n, k, monomials).expect("fixture germs are valid")
}

fn singular(name: &str, g: Germ, symbol: Symbol, oracle: OracleSpec) -> ProblemSpec {
    ProblemSpec {
        schema: 1,
        name: Some(name.into()),
        germ: Some(g),
        level: None,
        symbol,
        oracle,
        geometry: GeometryConfig::default(),
        tolerances: Tolerances::default(),
    }
}

/// A built-in problem by name.
pub fn fixture(name: &str) -> Option<ProblemSpec> {
    let gauss = Envelope::Gaussian { rate: 1.0 };
    let spec = match name {
        // ∫ e^{−z f − |x|²} with f = x² + y²: exactly π/(z + 1).
        "gamma-p2" => singular(
            name,
            germ(2, 2, &[(1.0, &[2, 0]), (1.0, &[0, 2])]),
            Symbol::single(Profile::ExpDecay, gauss),
            OracleSpec {
                nterms: 4,
                ..OracleSpec::default()
            },
        ),
        // Leading term (2Γ(5/4))² z^{−1/2}.
        "gamma-p4" => singular(
            name,
            germ(2, 4, &[(1.0, &[4, 0]), (1.0, &[0, 4])]),
            Symbol::single(Profile::ExpDecay, gauss),
            OracleSpec {
                nterms: 5,
                ..OracleSpec::default()
            },
        ),
        // π log z / z.
        "conical" => singular(
            name,
            germ(2, 2, &[(1.0, &[2, 0]), (-1.0, &[0, 2])]),
            Symbol::single(Profile::Cauchy, gauss),
            OracleSpec {
                z_max: 1e6,
                nterms: 4,
                ..OracleSpec::default()
            },
        ),
        // √π Γ(1/4)² / 4 · z^{−1/2}.
        "quartic" => singular(
            name,
            germ(2, 4, &[(1.0, &[4, 0]), (-1.0, &[0, 4])]),
            Symbol::single(Profile::Cauchy, gauss),
            OracleSpec {
                nterms: 5,
                ..OracleSpec::default()
            },
        ),
        // Leray integral √π·π over the unit circle.
        "regular-circle" => ProblemSpec {
            schema: 1,
            name: Some(name.into()),
            germ: None,
            level: Some(LevelFunction {
                n: 2,
                monomials: vec![
                    (1.0, vec![2, 0]).into(),
                    (1.0, vec![0, 2]).into(),
                    (-1.0, vec![0, 0]).into(),
                ],
            }),
            symbol: Symbol::single(Profile::Gaussian, Envelope::Shell { radius: 1.0 }),
            oracle: OracleSpec {
                nterms: 3,
                ..OracleSpec::default()
            },
            geometry: GeometryConfig::default(),
            tolerances: Tolerances::default(),
        },
        // n > k with n/k ∉ ℕ: the z^{−3/2} coefficient comes from finite parts.
        "cone3d" => singular(
            name,
            germ(
                3,
                2,
                &[(1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (-1.0, &[0, 0, 2])],
            ),
            Symbol::single(Profile::Gaussian, gauss),
            OracleSpec {
                z_min: 1e1,
                z_max: 1e4,
                z_points: 8,
                nterms: 4,
                quad: OracleConfig {
                    rel_tol: 1e-8,
                    line_samples: 16,
                    ..OracleConfig::default()
                },
                ..OracleSpec::default()
            },
        ),
        _ => return None,
    };
    Some(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_validates() {
        for name in FIXTURES {
            let f = fixture(name).unwrap();
            f.validate().unwrap();
            let back = ProblemSpec::from_json(&f.to_json()).unwrap();
            assert_eq!(back, f, "{name}");
        }
        assert!(fixture("nope").is_none());
    }
}
