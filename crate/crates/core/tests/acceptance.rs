//! One line per acceptance criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use fiber_asymptotics::brackets::{
    finite_part_bracket, finite_part_bracket_with, gamma, AnalyticTest, Decay, Envelope,
    FinitePartMethod, Profile, Sign, Symbol,
};
use fiber_asymptotics::cli::{
    fixture, mellin_check, predict_problem, validate_problem, ProblemSpec,
};
use fiber_asymptotics::expansion::{
    pole_schedule, predict_leading, radial_expansion, radial_integral, regular_leading,
    GeometryConfig, RadialAmplitude, ShellConfig,
};
use fiber_asymptotics::germ::{classify, ClassifyTolerances, Germ};
use fiber_asymptotics::oracle::{
    fit_asymptotics, integrate_fiber, residual_slope, Domain, OracleSample,
};
use fiber_asymptotics::poly::Polynomial;
use fiber_asymptotics::quad::{self, QuadOptions};
use fiber_asymptotics::sphere::{
    build_rule, coarea_density, default_grid, inverse_power_integral, CoareaConfig, RefineConfig,
    Region, RuleKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn diagonal_germ(n: usize, p: u32, a: &[f64]) -> Germ {
    let exps: Vec<Vec<u32>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { p } else { 0 }).collect())
        .collect();
    let monos: Vec<(f64, &[u32])> = a
        .iter()
        .zip(&exps)
        .map(|(c, e)| (*c, e.as_slice()))
        .collect();
    Germ::at_origin(n, p, &monos).unwrap()
}

fn gamma_product(n: usize, p: f64, a: &[f64]) -> f64 {
    (2.0 * gamma(1.0 + 1.0 / p).unwrap()).powi(n as i32)
        * a.iter().map(|x| x.powf(-1.0 / p)).product::<f64>()
        / gamma(n as f64 / p).unwrap()
}

fn c1_gamma_identity() -> Outcome {
    let mut worst2: f64 = 0.0;
    for p in [2u32, 4] {
        for a in [[1.0, 1.0], [1.0, 3.0]] {
            let g = diagonal_germ(2, p, &a);
            let rule = build_rule(2, 512, RuleKind::UniformCircle).unwrap();
            let j = inverse_power_integral(
                &g,
                2.0 / p as f64,
                Region::All,
                &rule,
                &RefineConfig::default(),
            )
            .unwrap();
            worst2 = worst2.max(rel(j / p as f64, gamma_product(2, p as f64, &a)));
        }
    }
    let mut worst3: f64 = 0.0;
    for a in [[1.0, 1.0, 1.0], [1.0, 2.0, 3.0]] {
        let g = diagonal_germ(3, 2, &a);
        let rule = build_rule(3, 48, RuleKind::ProductGauss).unwrap();
        let j =
            inverse_power_integral(&g, 1.5, Region::All, &rule, &RefineConfig::default()).unwrap();
        worst3 = worst3.max(rel(j / 2.0, gamma_product(3, 2.0, &a)));
    }
    check(
        worst2 < 1e-6 && worst3 < 1e-4,
        format!("n=2 worst rel {worst2:.2e} (<1e-6), n=3 worst rel {worst3:.2e} (<1e-4)"),
    )
}

fn validated(name: &str) -> Result<fiber_asymptotics::cli::Comparison, String> {
    let spec = fixture(name).ok_or(format!("fixture {name} missing"))?;
    validate_problem(&spec)
        .map(|v| v.comparison)
        .map_err(|e| e.to_string())
}

fn c2_extremum() -> Outcome {
    let c = validated("gamma-p2")?;
    let ok = rel(c.predicted, PI) < 0.02 && rel(c.fitted, PI) < 0.02 && c.relative_gap < 0.02;
    check(
        ok,
        format!(
            "predicted {:.8}, fitted {:.8} ± {:.1e}, gap {:.2e}",
            c.predicted, c.fitted, c.stderr, c.relative_gap
        ),
    )
}

fn c3_conical() -> Outcome {
    let spec = fixture("conical").unwrap();
    let p = predict_problem(&spec).map_err(|e| e.to_string())?;
    let d0 = p.leading_coefficient().unwrap();
    let l0 = p.provenance_value("LVol^(0)(0)").unwrap();
    let t = p.provenance_value("int |t|^0 g(t,x0) dt").unwrap();
    let c = validated("conical")?;
    let log_term = c.term.logpower == 1 && c.term.num == 1 && c.term.den == 1;
    let ok = rel(d0, PI) < 1e-6
        && (l0 - 2.0).abs() < 1e-6
        && rel(t, PI) < 1e-8
        && log_term
        && rel(c.fitted, PI) < 0.02;
    check(
        ok,
        format!(
            "D0 {d0:.10}, LVol(0) {l0:.10}, ∫g(t,0)dt {t:.12}, fitted z^-1 log z coeff {:.6} over z∈[{:.0e},{:.0e}]",
            c.fitted, spec.oracle.z_min, spec.oracle.z_max
        ),
    )
}

fn c4_quartic() -> Outcome {
    let want = PI.sqrt() * gamma(0.25).unwrap().powi(2) / 4.0;
    let c = validated("quartic")?;
    let ok = rel(c.predicted, want) < 1e-4 && rel(c.fitted, want) < 0.02;
    check(
        ok,
        format!(
            "C0 {:.10} vs {want:.10}, fitted {:.6} (gap {:.2e})",
            c.predicted, c.fitted, c.relative_gap
        ),
    )
}

fn c5_finite_part() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (amp, rate, shift) = (
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..3.0),
            rng.random_range(0.3..0.6),
        );
        let (n, k) = [(3usize, 2usize), (5, 2), (5, 3), (7, 4)][rng.random_range(0..4)];
        let bump = move |w: f64| {
            if w <= shift {
                0.0
            } else {
                amp * (-1.0 / (w - shift)).exp() * (-rate * w).exp()
            }
        };
        let phi = AnalyticTest {
            f: move |m: usize, w: f64| if m == 0 { bump(w.abs()) } else { 0.0 },
            decay_plus: Decay::Exponential {
                rate,
                constant: amp,
            },
            decay_minus: Decay::Exponential {
                rate,
                constant: amp,
            },
        };
        let alpha = n as f64 / k as f64;
        let mut pts = vec![shift];
        pts.extend((1..=8).map(|i| shift + 8.0 * i as f64 / rate));
        let direct = quad::adaptive(
            |w| w.powf(-alpha) * bump(w),
            &pts,
            QuadOptions::with_rel(1e-13),
        )
        .value
            / k as f64;
        for sign in [Sign::Plus, Sign::Minus] {
            let fp = finite_part_bracket(&phi, n, k, sign).map_err(|e| e.to_string())?;
            worst = worst.max((fp.value - direct).abs() / direct.abs().max(1e-300));
        }
    }
    let exp = AnalyticTest {
        f: |m: usize, w: f64| {
            if m.is_multiple_of(2) {
                (-w).exp()
            } else {
                -(-w).exp()
            }
        },
        decay_plus: Decay::Exponential {
            rate: 1.0,
            constant: 1.0,
        },
        decay_minus: Decay::Compact { support: 0.0 },
    };
    let taylor = finite_part_bracket_with(
        &exp,
        3,
        2,
        Sign::Plus,
        FinitePartMethod::Taylor { order: 2 },
    )
    .unwrap()
    .value;
    let deriv = finite_part_bracket_with(
        &exp,
        3,
        2,
        Sign::Plus,
        FinitePartMethod::Derivative { order: 3 },
    )
    .unwrap()
    .value;
    let spec = fixture("cone3d").unwrap();
    let g = spec.germ.clone().unwrap();
    let c = classify(&g, &ClassifyTolerances::default());
    let low = predict_leading(&g, &spec.symbol, &c, &GeometryConfig::default())
        .map_err(|e| e.to_string())?;
    let high_cfg = GeometryConfig {
        finite_part_order: 3,
        ..GeometryConfig::default()
    };
    let high = predict_leading(&g, &spec.symbol, &c, &high_cfg).map_err(|e| e.to_string())?;
    let (a, b) = (
        low.leading_coefficient().unwrap(),
        high.leading_coefficient().unwrap(),
    );
    let ok = worst < 1e-8 && (taylor - deriv).abs() < 1e-6 && (a - b).abs() < 1e-6 * a.abs();
    check(
        ok,
        format!(
            "vanishing φ worst rel {worst:.1e}; e^-w Taylor {taylor:.10} vs derivative {deriv:.10}; cone3d order 2 vs 3: {a:.10} / {b:.10}"
        ),
    )
}

fn c6_schedule() -> Outcome {
    let e = |n, k, c| {
        pole_schedule(n, k, c)
            .iter()
            .map(|t| (t.num, t.den, t.logpower, t.pole_order))
            .collect::<Vec<_>>()
    };
    let (a, b, c) = (e(2, 2, 1), e(2, 4, 1), e(3, 2, 2));
    let ok = a == [(1, 1, 1, 2)] && b == [(1, 2, 0, 1)] && c == [(3, 2, 0, 1), (2, 1, 1, 2)];
    check(
        ok,
        format!("(2,2) {a:?}; (2,4) {b:?}; (3,2) {c:?}  [(num, den, logpower, pole order)]"),
    )
}

fn c7_regular() -> Outcome {
    let circle = Polynomial::new(
        2,
        vec![
            (1.0, vec![2, 0]).into(),
            (1.0, vec![0, 2]).into(),
            (-1.0, vec![0, 0]).into(),
        ],
    )
    .unwrap();
    let bump = Symbol::single(
        Profile::Gaussian,
        Envelope::Bump {
            plateau: 1.5,
            radius: 2.5,
        },
    );
    let r = regular_leading(&circle, &bump, &ShellConfig::new(Domain::cube(2, 3.0)))
        .map_err(|e| e.to_string())?;
    let want = PI.sqrt() * PI;
    let spec = fixture("regular-circle").unwrap();
    let shell = regular_leading(
        &circle,
        &spec.symbol,
        &ShellConfig::new(spec.domain().unwrap()),
    )
    .map_err(|e| e.to_string())?;
    let zs: Vec<f64> = (0..7).map(|i| 10f64 * 10f64.powf(i as f64 / 3.0)).collect();
    let mut res = Vec::new();
    for &z in &zs {
        let s = integrate_fiber(
            &circle,
            &spec.symbol,
            z,
            &spec.domain().unwrap(),
            &spec.oracle.quad,
        )
        .map_err(|e| e.to_string())?;
        res.push((z, s.value * z - shell.value));
    }
    let slope = residual_slope(&res).unwrap();
    let ok = rel(r.value, want) < 0.01 && rel(shell.value, want) < 0.01 && slope <= -0.9;
    check(
        ok,
        format!("bump envelope {:.8}, shell envelope {:.8} vs √π·π {want:.8}; slope of I·z − L on z∈[10,1e3] {slope:.3}", r.value, shell.value),
    )
}

fn c8_radial() -> Outcome {
    let exact = RadialAmplitude {
        eval: |t: f64, u: f64| (-t).exp() * (1.0 + u),
        u_derivative: |j: usize, t: f64| if j <= 1 { (-t).exp() } else { 0.0 },
        decay: Decay::Exponential {
            rate: 1.0,
            constant: 2.0,
        },
    };
    let d = radial_expansion(&exact, 2, 1).unwrap();
    let zs: Vec<f64> = (0..9).map(|i| 1e2 * 10f64.powf(i as f64 / 2.0)).collect();
    let mut floor: f64 = 0.0;
    for &z in &zs {
        let j = radial_integral(&exact, z, 2).unwrap();
        floor = floor.max((j - d[0].value / z.sqrt() - d[1].value / z).abs() / j);
    }
    let curved = RadialAmplitude {
        eval: |t: f64, u: f64| (-t).exp() * (1.0 + u) * (-u * u).exp(),
        u_derivative: |j: usize, t: f64| (-t).exp() * [1.0, 1.0, -2.0, -6.0][j.min(3)],
        decay: Decay::Exponential {
            rate: 1.0,
            constant: 2.0,
        },
    };
    let c = radial_expansion(&curved, 2, 1).unwrap();
    let res: Vec<(f64, f64)> = zs
        .iter()
        .map(|&z| {
            (
                z,
                radial_integral(&curved, z, 2).unwrap() - c[0].value / z.sqrt() - c[1].value / z,
            )
        })
        .collect();
    let slope = residual_slope(&res).unwrap();
    let ok = (d[0].value - PI.sqrt() / 2.0).abs() < 1e-10
        && (d[1].value - 0.5).abs() < 1e-10
        && floor < 1e-12
        && slope <= -1.4;
    check(
        ok,
        format!(
            "d0 {:.12}, d1 {:.12}; e^-τ(1+u) remainder at noise floor (max rel {floor:.1e}); e^-τ(1+u)e^-u² slope {slope:.3}",
            d[0].value, d[1].value
        ),
    )
}

fn c9_mellin() -> Outcome {
    let m = mellin_check().map_err(|e| e.to_string())?;
    check(
        m.pass,
        format!(
            "M[e^it](1/2) = {:.6} + {:.6}i vs {:.6} + {:.6}i, residual {:.1e}",
            m.value[0], m.value[1], m.expected[0], m.expected[1], m.residual
        ),
    )
}

fn c10_properties() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let quartic = fixture("quartic").unwrap().germ.unwrap();
    let mut homog: f64 = 0.0;
    for _ in 0..100 {
        let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let l: f64 = rng.random_range(1e-3..10.0);
        let fx = quartic.eval_fk(&x).unwrap();
        let fl = quartic.eval_fk(&[l * x[0], l * x[1]]).unwrap();
        homog = homog.max((fl - l.powi(4) * fx).abs() / (1.0 + fx.abs() * l.powi(4)));
    }
    ok &= homog <= 1e-10;
    notes.push(format!("homogeneity {homog:.1e}"));

    let spec = fixture("quartic").unwrap();
    let base = predict_problem(&spec)
        .unwrap()
        .leading_coefficient()
        .unwrap();
    let th: f64 = 0.37;
    let rot = vec![vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]];
    let rotated = ProblemSpec {
        germ: Some(quartic.compose_linear(&rot)),
        ..spec.clone()
    };
    let rc = predict_problem(&rotated)
        .unwrap()
        .leading_coefficient()
        .unwrap();
    ok &= rel(rc, base) < 1e-6;
    notes.push(format!("rotation {:.1e}", rel(rc, base)));

    let gp4 = fixture("gamma-p4").unwrap();
    let scaled = ProblemSpec {
        germ: Some(gp4.germ.clone().unwrap().scaled(3.0)),
        ..gp4.clone()
    };
    let c1 = predict_problem(&gp4)
        .unwrap()
        .leading_coefficient()
        .unwrap();
    let c3 = predict_problem(&scaled)
        .unwrap()
        .leading_coefficient()
        .unwrap();
    let cov = rel(c3, c1 * 3f64.powf(-0.5));
    ok &= cov < 1e-8;
    notes.push(format!("scaling covariance {cov:.1e}"));

    let rule = build_rule(2, 512, RuleKind::UniformCircle).unwrap();
    let rf = RefineConfig::default();
    let parts: Vec<f64> = [Region::Positive, Region::Negative, Region::All]
        .iter()
        .map(|r| inverse_power_integral(&quartic, 0.5, *r, &rule, &rf).unwrap())
        .collect();
    let add = rel(parts[0] + parts[1], parts[2]);
    ok &= add < 1e-10;
    notes.push(format!("region additivity {add:.1e}"));

    let conical = fixture("conical").unwrap().germ.unwrap();
    let mc = build_rule(2, 20_000, RuleKind::UniformCircle).unwrap();
    let cfg = CoareaConfig::default();
    let (grid, h) = default_grid(&conical, &mc, &cfg);
    let d = coarea_density(&conical, &grid, &mc, h, &cfg).unwrap();
    let duality = rel(d.mass(), 2.0 * PI);
    ok &= duality < 0.01;
    notes.push(format!("co-area duality {duality:.1e}"));

    let spec = fixture("conical").unwrap();
    let coarse = validate_problem(&spec).unwrap().comparison;
    let dense = ProblemSpec {
        oracle: fiber_asymptotics::cli::OracleSpec {
            z_points: 23,
            ..spec.oracle.clone()
        },
        ..spec
    };
    let fine = validate_problem(&dense).unwrap().comparison;
    let shift = (fine.fitted - coarse.fitted).abs();
    ok &= shift < coarse.stderr;
    notes.push(format!(
        "fit stability |Δ| {shift:.1e} < stderr {:.1e}",
        coarse.stderr
    ));

    let samples: Vec<OracleSample> = (0..8)
        .map(|i| {
            let z = 1e2 * 4f64.powi(i);
            let v = (2.0 * z.ln() / z + 1.0 / z - 0.5 * z.powf(-1.5))
                * (1.0 + 1e-9 * rng.random_range(-1.0..1.0));
            OracleSample {
                z,
                value: v,
                error: 1e-9 * v,
                evals: 0,
                converged: true,
            }
        })
        .collect();
    let basis = fiber_asymptotics::expansion::fit_basis(
        fiber_asymptotics::germ::Case::PrincipalType,
        2,
        2,
        4,
    );
    let norms: Vec<f64> = (1..=4)
        .map(|m| fit_asymptotics(&samples, &basis, m).unwrap().residual_norm)
        .collect();
    let mono = norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-6);
    ok &= mono;
    notes.push(format!("residual monotone {mono}"));

    check(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gamma-product identity", c1_gamma_identity),
        ("extremum end-to-end", c2_extremum),
        ("conical fixture", c3_conical),
        ("quartic fixture", c4_quartic),
        ("finite-part consistency", c5_finite_part),
        ("pole schedule", c6_schedule),
        ("regular fiber", c7_regular),
        ("radial expansion", c8_radial),
        ("Mellin identity", c9_mellin),
        ("property suites", c10_properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
