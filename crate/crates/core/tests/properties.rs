use std::f64::consts::PI;

use fiber_asymptotics::brackets::{Decay, Envelope, Profile, Symbol};
use fiber_asymptotics::cli::{fixture, predict_problem, ProblemSpec, FIXTURES};
use fiber_asymptotics::expansion::{radial_expansion, RadialAmplitude};
use fiber_asymptotics::germ::{classify, Case, ClassifyTolerances, Germ};
use fiber_asymptotics::oracle::{
    fit_asymptotics, integrate_fiber, Domain, OracleConfig, OracleSample,
};
use fiber_asymptotics::sphere::{
    build_rule, coarea_density, default_grid, inverse_power_integral, CoareaConfig, RefineConfig,
    Region, RuleKind,
};
use proptest::prelude::*;

fn binary_form(k: u32, coeffs: &[f64]) -> Germ {
    let exps: Vec<Vec<u32>> = (0..=k).map(|i| vec![k - i, i]).collect();
    let monos: Vec<(f64, &[u32])> = coeffs
        .iter()
        .zip(&exps)
        .map(|(c, e)| (*c, e.as_slice()))
        .collect();
    Germ::at_origin(2, k, &monos).unwrap()
}

fn rotation(t: f64) -> Vec<Vec<f64>> {
    vec![vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]
}

/// Ellipse-like quartic with a mixed term, always an extremum.
fn definite_quartic() -> impl Strategy<Value = Germ> {
    (0.5f64..3.0, 0.5f64..3.0, -0.4f64..0.4)
        .prop_map(|(a, b, c)| binary_form(4, &[a, 0.0, c, 0.0, b]))
}

/// Indefinite quadratic with two transverse null lines.
fn indefinite_quadratic() -> impl Strategy<Value = Germ> {
    (0.5f64..3.0, 0.5f64..3.0, -0.5f64..0.5).prop_map(|(a, b, c)| binary_form(2, &[a, c, -b]))
}

fn rule() -> fiber_asymptotics::sphere::SphereRule {
    build_rule(2, 512, RuleKind::UniformCircle).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn germ_is_homogeneous(g in definite_quartic(), x in -2.0f64..2.0, y in -2.0f64..2.0, l in 0.01f64..10.0) {
        let fx = g.eval_fk(&[x, y]).unwrap();
        let fl = g.eval_fk(&[l * x, l * y]).unwrap();
        prop_assert!((fl - l.powi(4) * fx).abs() <= 1e-10 * (1.0 + l.powi(4) * fx.abs()));
    }

    #[test]
    fn classification_ignores_positive_scaling(g in indefinite_quadratic(), c in 0.1f64..10.0) {
        let tol = ClassifyTolerances::default();
        prop_assert_eq!(classify(&g, &tol).case, Case::PrincipalType);
        prop_assert_eq!(classify(&g.scaled(c), &tol).case, Case::PrincipalType);
        prop_assert_eq!(classify(&g.scaled(-c), &tol).case, Case::PrincipalType);
    }

    #[test]
    fn extremum_coefficient_scales(g in definite_quartic(), c in 0.1f64..10.0) {
        let mut spec = fixture("gamma-p4").unwrap();
        spec.germ = Some(g.clone());
        let base = predict_problem(&spec).unwrap().leading_coefficient().unwrap();
        spec.germ = Some(g.scaled(c));
        let scaled = predict_problem(&spec).unwrap().leading_coefficient().unwrap();
        prop_assert!(rel(scaled, base * c.powf(-0.5)) < 1e-8);
    }

    #[test]
    fn inverse_power_integral_is_rotation_invariant(g in definite_quartic(), t in 0.0f64..PI) {
        let rf = RefineConfig::default();
        let a = inverse_power_integral(&g, 0.5, Region::All, &rule(), &rf).unwrap();
        let b = inverse_power_integral(&g.compose_linear(&rotation(t)), 0.5, Region::All, &rule(), &rf).unwrap();
        prop_assert!(rel(a, b) < 1e-8);
    }

    #[test]
    fn regions_add_up(g in definite_quartic(), s in prop::bool::ANY) {
        let g = if s { g.scaled(-1.0) } else { g };
        let rf = RefineConfig::default();
        let parts: Vec<f64> = [Region::Positive, Region::Negative, Region::All]
            .iter()
            .map(|r| inverse_power_integral(&g, 0.5, *r, &rule(), &rf).unwrap())
            .collect();
        prop_assert!(rel(parts[0] + parts[1], parts[2]) < 1e-12);
        prop_assert!(parts[0] == 0.0 || parts[1] == 0.0);
    }

    #[test]
    fn coarea_mass_is_sphere_area(g in indefinite_quadratic()) {
        let r = build_rule(2, 4000, RuleKind::UniformCircle).unwrap();
        let cfg = CoareaConfig::default();
        let (grid, h) = default_grid(&g, &r, &cfg);
        let d = coarea_density(&g, &grid, &r, h, &cfg).unwrap();
        prop_assert!(rel(d.mass(), 2.0 * PI) < 0.01);
    }

    #[test]
    fn radial_coefficients_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let amp = move |s: f64, t: f64| RadialAmplitude {
            eval: move |tt: f64, u: f64| s * (-tt).exp() * (1.0 + t * u),
            u_derivative: move |j: usize, tt: f64| s * (-tt).exp() * [1.0, t][j.min(1)] * if j <= 1 { 1.0 } else { 0.0 },
            decay: Decay::Exponential { rate: 1.0, constant: 2.0 },
        };
        let one = radial_expansion(&amp(1.0, 1.0), 2, 1).unwrap();
        let mixed = radial_expansion(&amp(a, b), 2, 1).unwrap();
        prop_assert!((mixed[0].value - a * one[0].value).abs() < 1e-10 * (1.0 + a.abs()));
        prop_assert!((mixed[1].value - a * b * one[1].value).abs() < 1e-10 * (1.0 + (a * b).abs()));
    }

    #[test]
    fn fit_residual_does_not_grow(c0 in 0.5f64..3.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<OracleSample> = (0..10)
            .map(|i| {
                let z = 1e2 * 3f64.powi(i);
                let v = (c0 * z.powf(-0.5) + c1 / z + c2 * z.powf(-1.5)) * (1.0 + 1e-8 * rng.random_range(-1.0..1.0));
                OracleSample { z, value: v, error: 1e-8 * v.abs(), evals: 0, converged: true }
            })
            .collect();
        let basis = fiber_asymptotics::expansion::fit_basis(Case::ExtremumMin, 2, 4, 5);
        let mut prev = f64::INFINITY;
        for m in 1..=5 {
            let r = fit_asymptotics(&samples, &basis, m).unwrap().residual_norm;
            prop_assert!(r <= prev * (1.0 + 1e-9) + 1e-6);
            prev = r;
        }
    }

    #[test]
    fn oracle_is_linear_in_the_symbol(a in 0.2f64..3.0, b in 0.2f64..3.0, z in 1.0f64..1e3) {
        let g = binary_form(2, &[1.0, 0.0, 1.0]);
        let env = Envelope::Gaussian { rate: 1.0 };
        let dom = Domain::cube(2, 7.0);
        let cfg = OracleConfig { rel_tol: 1e-10, ..OracleConfig::default() };
        let i1 = integrate_fiber(&g, &Symbol::single(Profile::ExpDecay, env), z, &dom, &cfg).unwrap().value;
        let i2 = integrate_fiber(&g, &Symbol::single(Profile::Gaussian, env), z, &dom, &cfg).unwrap().value;
        let both = Symbol::zero()
            .plus(a, &Symbol::single(Profile::ExpDecay, env))
            .plus(b, &Symbol::single(Profile::Gaussian, env));
        let i = integrate_fiber(&g, &both, z, &dom, &cfg).unwrap().value;
        prop_assert!(rel(i, a * i1 + b * i2) < 1e-8);
    }

    #[test]
    fn edited_specs_round_trip(idx in 0usize..6, seed in 0u64..u64::MAX, tol in 1e-6f64..0.5, pts in 3usize..40) {
        let mut spec = fixture(FIXTURES[idx]).unwrap();
        spec.oracle.quad.seed = seed;
        spec.tolerances.relative_gap = tol;
        spec.oracle.z_points = pts;
        let back = ProblemSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back, spec);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let spec = fixture("conical").unwrap();
    let a = serde_json::to_string(&predict_problem(&spec).unwrap()).unwrap();
    let b = serde_json::to_string(&predict_problem(&spec).unwrap()).unwrap();
    assert_eq!(a, b);
    let g = spec.germ.unwrap();
    let dom = Domain::cube(2, 7.0);
    let x = integrate_fiber(&g, &spec.symbol, 1e3, &dom, &spec.oracle.quad).unwrap();
    let y = integrate_fiber(&g, &spec.symbol, 1e3, &dom, &spec.oracle.quad).unwrap();
    assert_eq!(x.value.to_bits(), y.value.to_bits());
}
