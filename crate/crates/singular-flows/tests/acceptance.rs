//! Acceptance suite: one integration test per criterion, each printing a
//! pass/fail line. Tolerances are pinned in the asserts.

use num_complex::Complex64;
use singular_flows::fields::{
    euler_lagrange_lift, ExprScalarField, ExprVectorField, LagrangianLift, SingularField,
    VectorField,
};
use singular_flows::geometry::almost::{self, AlmostRiemannianModel};
use singular_flows::geometry::klein::{self, KleinModel};
use singular_flows::geometry::pseudo::PseudoRiemannianModel;
use singular_flows::geometry::{shoot_geodesics, GeodesicOptions};
use singular_flows::jets::{lie_derivative, Jet};
use singular_flows::normalform::{
    classify, flatten, rank_probe_phi, resonant_jet_coefficient, ClassificationKind,
    ClassifyProbes, NormalFormError,
};
use singular_flows::spectral::{check_resonance_relation, linearize_singular};
use singular_flows::util::Rng;

fn pass(number: u32, name: &str) {
    println!("acceptance {number:02} {name}: PASS");
}

fn example1(r: f64) -> SingularField {
    let v = ExprVectorField::parse(&["x", "y", "z"], &["x", "y", "z"]).unwrap();
    let f = ExprScalarField::parse("x + y + z", &["x", "y", "z"]).unwrap();
    SingularField::new(Box::new(v), Box::new(f), r).unwrap()
}

fn example2(f_src: &str, r: f64) -> SingularField {
    let v = ExprVectorField::parse(&["2*x", "y", "0"], &["x", "y", "z"]).unwrap();
    let f = ExprScalarField::parse(f_src, &["x", "y", "z"]).unwrap();
    SingularField::new(Box::new(v), Box::new(f), r).unwrap()
}

#[test]
fn acceptance_01_example_fixture_suite() {
    // Divergence values.
    let mut rng = Rng::new(1);
    for _ in 0..20 {
        let p = vec![
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        ];
        let d1 = example1(3.0).v().divergence_at(&p).unwrap();
        let d2 = example2("z", 2.0).v().divergence_at(&p).unwrap();
        assert!((d1 - 3.0).abs() <= 1e-8, "Example-1 divergence {d1}");
        assert!((d2 - 3.0).abs() <= 1e-8, "Example-2 divergence {d2}");
    }

    // Spectra (1,1,1) and (2,1,0).
    let r1 = singular_flows::spectral::linearize(example1(3.0).v(), &[0.0; 3], 1e-10).unwrap();
    for lam in r1.real_spectrum() {
        assert!((lam - 1.0).abs() <= 1e-8);
    }
    let r2 = singular_flows::spectral::linearize(example2("z", 2.0).v(), &[0.0, 0.0, 2.0], 1e-10)
        .unwrap();
    let spec = r2.real_spectrum();
    assert!((spec[0] - 2.0).abs() <= 1e-8 && (spec[1] - 1.0).abs() <= 1e-8 && spec[2] == 0.0);

    // Degeneracy-condition verdicts at the stated exponents.
    let origin = [0.0; 3];
    assert!(
        example1(3.0)
            .check_conditions_at_singular_point(&origin, 1e-8, 2)
            .unwrap()
            .passed
    );
    assert!(
        !example1(2.0)
            .check_conditions_at_singular_point(&origin, 1e-8, 2)
            .unwrap()
            .passed
    );
    // f = x − c·y² with c = 1 passes exactly at r = 3/2.
    assert!(
        example2("x - y^2", 1.5)
            .check_conditions_at_singular_point(&[0.0, 0.0, 5.0], 1e-8, 2)
            .unwrap()
            .passed
    );
    assert!(
        !example2("x - y^2", 1.0)
            .check_conditions_at_singular_point(&[0.0, 0.0, 5.0], 1e-8, 2)
            .unwrap()
            .passed
    );
    assert!(
        example2("y", 3.0)
            .check_conditions_at_singular_point(&[0.0, 0.0, -2.0], 1e-8, 2)
            .unwrap()
            .passed
    );
    assert!(
        !example2("z", 2.0)
            .check_conditions_at_singular_point(&origin, 1e-8, 2)
            .unwrap()
            .passed
    );

    pass(1, "Example-1/2 fixture suite");
}

#[test]
fn acceptance_02_divergence_identity() {
    // |f^{r+1}·D_W − (f·D_V − r·L_V f)| ≤ 1e-9·scale at 1000 random off-Γ
    // points across the fixture catalog.
    let mut rng = Rng::new(2);
    let mut checked = 0;

    let mut run = |sf: &SingularField, sampler: &mut dyn FnMut(&mut Rng) -> Vec<f64>| {
        let mut done = 0;
        let mut attempts = 0;
        while done < 167 && attempts < 20_000 {
            attempts += 1;
            let point = sampler(&mut rng);
            let w = match sf.eval_w(&point) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let r = sf.exponent();
            let lhs = w.f_value.powf(r + 1.0) * w.div_w_direct;
            let rhs = w.f_value * w.div_v - r * w.lie_v_f;
            let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
            assert!(
                (lhs - rhs).abs() <= 1e-9 * scale,
                "identity residual {:.3e} at {point:?}",
                (lhs - rhs).abs()
            );
            done += 1;
            checked += 1;
        }
        assert!(done >= 167, "sampler starving");
    };

    // Raw fixtures: keep f positive so fractional powers stay real.
    run(&example1(3.0), &mut |rng| {
        vec![
            rng.uniform(0.1, 1.0),
            rng.uniform(0.1, 1.0),
            rng.uniform(0.1, 1.0),
        ]
    });
    run(&example2("x - y^2", 1.5), &mut |rng| {
        vec![
            rng.uniform(1.0, 2.0),
            rng.uniform(-0.6, 0.6),
            rng.uniform(-1.0, 1.0),
        ]
    });
    run(&example2("y", 3.0), &mut |rng| {
        vec![
            rng.uniform(-1.0, 1.0),
            rng.uniform(0.1, 1.0),
            rng.uniform(-1.0, 1.0),
        ]
    });
    run(&example2("z", 2.0), &mut |rng| {
        vec![
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(0.1, 1.0),
        ]
    });

    // Geometric fixtures.
    let pseudo = PseudoRiemannianModel::parse("1", "0", "t").unwrap();
    let sf =
        SingularField::new(Box::new(pseudo.v_field()), Box::new(pseudo.f_scalar()), 1.5).unwrap();
    run(&sf, &mut |rng| {
        vec![
            rng.uniform(0.3, 1.2),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-0.8, 0.8),
        ]
    });

    let kmodel = KleinModel::parse("1", "1", 1).unwrap();
    let sf = SingularField::new(
        Box::new(kmodel.v_field()),
        Box::new(kmodel.f_scalar()),
        kmodel.exponent(),
    )
    .unwrap();
    run(&sf, &mut |rng| {
        vec![
            rng.uniform(0.25, 1.0),
            rng.uniform(-0.9, 0.9),
            rng.uniform(-0.8, 0.8),
        ]
    });

    assert!(checked >= 1000, "only {checked} identity samples");
    pass(2, "divergence identity at 1000 off-surface points");
}

#[test]
fn acceptance_03_divergence_free_lifts() {
    // |D_W| ≤ 1e-8·scale at 100 random smooth points per Euler–Lagrange lift.
    type Sampler = Box<dyn FnMut(&mut Rng) -> Vec<f64>>;
    let vars = ["t", "x", "p"];
    let mut suite: Vec<(&str, LagrangianLift, Sampler)> = vec![
        (
            "free particle",
            euler_lagrange_lift(Box::new(ExprScalarField::parse("p^2/2", &vars).unwrap())).unwrap(),
            Box::new(|rng: &mut Rng| {
                vec![
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                ]
            }),
        ),
        (
            "length of (p, 1)",
            euler_lagrange_lift(Box::new(
                ExprScalarField::parse("sqrt(p^2 + 1)", &vars).unwrap(),
            ))
            .unwrap(),
            Box::new(|rng: &mut Rng| {
                vec![
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                ]
            }),
        ),
        (
            "Klein n = 1",
            KleinModel::parse("1", "1", 1)
                .unwrap()
                .euler_lagrange()
                .unwrap(),
            Box::new(|rng: &mut Rng| {
                vec![
                    rng.uniform(0.25, 1.0),
                    rng.uniform(-0.9, 0.9),
                    rng.uniform(-0.8, 0.8),
                ]
            }),
        ),
        (
            "Grushin",
            AlmostRiemannianModel::parse("2")
                .unwrap()
                .euler_lagrange()
                .unwrap(),
            Box::new(|rng: &mut Rng| {
                vec![
                    rng.uniform(0.1, 0.9),
                    rng.uniform(-0.9, 0.9),
                    rng.uniform(-0.8, 0.8),
                ]
            }),
        ),
    ];
    let mut rng = Rng::new(3);
    for (name, lift, sampler) in suite.iter_mut() {
        for _ in 0..100 {
            let point = sampler(&mut rng);
            let w = lift.value_at(&point).unwrap();
            let div = lift.divergence_at(&point).unwrap();
            let scale = 1.0f64.max(singular_flows::linalg::norm(&w));
            assert!(
                div.abs() <= 1e-8 * scale,
                "{name}: D_W = {div:.3e} at {point:?}"
            );
        }
    }
    pass(3, "divergence-free Euler-Lagrange lifts");
}

#[test]
fn acceptance_04_resonance_relation() {
    // Wherever the degeneracy conditions pass, an index j with
    // |Σλ − r·λⱼ| ≤ 1e-7·scale and ‖A∇f − λⱼ∇f‖ ≤ 1e-7·scale exists.
    struct Fixture {
        name: &'static str,
        sf: SingularField,
        point: Vec<f64>,
    }
    let pseudo = PseudoRiemannianModel::parse("1", "0", "t").unwrap();
    let klein1 = KleinModel::parse("1", "1", 1).unwrap();
    let klein2 = KleinModel::parse("1", "1", 2).unwrap();
    let fixtures = vec![
        Fixture {
            name: "Example 1, r = 3",
            sf: example1(3.0),
            point: vec![0.0; 3],
        },
        Fixture {
            name: "Example 2, f = x - y², r = 3/2",
            sf: example2("x - y^2", 1.5),
            point: vec![0.0, 0.0, 3.0],
        },
        Fixture {
            name: "Example 2, f = y, r = 3",
            sf: example2("y", 3.0),
            point: vec![0.0, 0.0, -1.0],
        },
        Fixture {
            name: "pseudo-Riemannian isotropic point",
            sf: SingularField::new(Box::new(pseudo.v_field()), Box::new(pseudo.f_scalar()), 1.5)
                .unwrap(),
            point: vec![0.0, 0.7, 0.0],
        },
        Fixture {
            name: "Klein n = 1",
            sf: SingularField::new(
                Box::new(klein1.v_field()),
                Box::new(klein1.f_scalar()),
                klein1.exponent(),
            )
            .unwrap(),
            point: vec![0.0, 0.3, 0.0],
        },
        Fixture {
            name: "Klein n = 2",
            sf: SingularField::new(
                Box::new(klein2.v_field()),
                Box::new(klein2.f_scalar()),
                klein2.exponent(),
            )
            .unwrap(),
            point: vec![0.0, -0.4, 0.0],
        },
    ];
    for fixture in fixtures {
        let conditions = fixture
            .sf
            .check_conditions_at_singular_point(&fixture.point, 1e-8, 4)
            .unwrap();
        assert!(
            conditions.passed,
            "{}: degeneracy conditions must pass",
            fixture.name
        );
        let report =
            linearize_singular(fixture.sf.v(), fixture.sf.f(), &fixture.point, 1e-8).unwrap();
        let relation = check_resonance_relation(&report, fixture.sf.exponent(), 1e-7)
            .unwrap_or_else(|e| panic!("{}: {e}", fixture.name));
        let scale = report
            .eigenvalues
            .iter()
            .map(|z| z.norm())
            .sum::<f64>()
            .max(1.0);
        assert!(relation.residual <= 1e-7 * scale, "{}", fixture.name);
        assert!(
            relation.eigenvector_residual <= 1e-7 * scale.max(1.0),
            "{}",
            fixture.name
        );
    }
    pass(4, "resonance relation with transversal eigenvector");
}

#[test]
fn acceptance_05_flattening() {
    // (ξ, −3η, ξ) with seed u₀₀ = ζ, N = 3: every ξ,η-coefficient of L_V U
    // with total degree 1..=3 stays below 1e-9.
    let field = ExprVectorField::parse(&["xi", "-3*eta", "xi"], &["xi", "eta", "zeta"]).unwrap();
    let series = field.series_at(&[0.0; 3], 6).unwrap();
    let seed = Jet::variable(1, 3, 0, 0.0);
    let q = flatten(&series, 3, &seed).unwrap();
    let u = q.assemble(6).unwrap();
    let lie = lie_derivative(&u, &series).unwrap();
    for (idx, &coeff) in lie.indices().iter().zip(lie.coeffs()) {
        let degree = (idx[0] + idx[1]) as usize;
        if (1..=3).contains(&degree) {
            assert!(coeff.abs() < 1e-9, "coefficient {idx:?} = {coeff:.3e}");
        }
    }

    // The (1, −1) resonance obstructs degree 2.
    let resonant = ExprVectorField::parse(&["xi", "-eta", "xi"], &["xi", "eta", "zeta"]).unwrap();
    let series = resonant.series_at(&[0.0; 3], 6).unwrap();
    match flatten(&series, 3, &seed) {
        Err(NormalFormError::ResonanceObstruction { n }) => assert_eq!(n, 2),
        other => panic!("expected obstruction at n = 2, got {other:?}"),
    }
    pass(5, "quasi-integral flattening and resonance obstruction");
}

#[test]
fn acceptance_06_resonant_coefficient_discrimination() {
    let vars = ["xi", "eta", "zeta"];
    let linear = ExprVectorField::parse(&["xi", "-eta", "0"], &vars).unwrap();
    let psi = resonant_jet_coefficient(&linear, &[0.0; 3], 1, 1).unwrap();
    assert!(psi.psi.abs() <= 1e-9, "Ψ = {}", psi.psi);

    let cubic = ExprVectorField::parse(&["xi", "-eta*(1+xi*eta)", "xi*eta*zeta"], &vars).unwrap();
    let psi = resonant_jet_coefficient(&cubic, &[0.0; 3], 1, 1).unwrap();
    assert!(psi.psi.abs() <= 1e-9, "Ψ = {}", psi.psi);

    let normal_form = ExprVectorField::parse(&["xi", "-eta", "xi*eta"], &vars).unwrap();
    let psi = resonant_jet_coefficient(&normal_form, &[0.0; 3], 1, 1).unwrap();
    assert!((psi.psi - 1.0).abs() <= 1e-9, "Ψ = {}", psi.psi);
    pass(6, "resonant-coefficient discrimination");
}

#[test]
fn acceptance_07_pseudo_riemannian_structure() {
    let desk = PseudoRiemannianModel::parse("1", "0", "t").unwrap();
    let st = desk.singular_structure(&[0.0, 0.4]).unwrap();
    assert!(st.isotropic.ratio_two_one_zero, "spectrum not ∝ (2,1,0)");
    assert!(
        st.isotropic.sigma_in_spectrum,
        "Δ_t + p₀Δ_x missing from the spectrum"
    );

    let three = PseudoRiemannianModel::parse("1 + t", "0", "4*t").unwrap();
    let st = three.singular_structure(&[0.0, 0.0]).unwrap();
    assert_eq!(st.saddles.len(), 2, "expected two non-isotropic roots");
    for saddle in &st.saddles {
        let scale = saddle
            .spectrum
            .iter()
            .map(|z| z.norm())
            .fold(1.0f64, f64::max);
        assert!(
            saddle.lambda_sum.abs() <= 1e-8 * scale,
            "λ₁+λ₂ = {:.3e} at {:?}",
            saddle.lambda_sum,
            saddle.phase_point
        );
    }
    pass(7, "pseudo-Riemannian singular structure");
}

#[test]
fn acceptance_08_klein_oracle() {
    let model = KleinModel::parse("1", "1", 1).unwrap();
    let point = model.singular_point(0.0);
    let opts = GeodesicOptions {
        count: 5,
        ..GeodesicOptions::default()
    };
    let curves = shoot_geodesics(&model.v_field(), &point, &opts).unwrap();
    assert_eq!(curves.len(), 5);
    for curve in &curves {
        let pts: Vec<(f64, f64)> = curve
            .samples
            .iter()
            .map(|s| (s.base[0], s.base[1]))
            .collect();
        assert!(
            pts.iter().any(|(t, _)| t.abs() >= 0.5),
            "curve {:?} never reaches |t| = 0.5",
            curve.branch
        );
        let fit = klein::fit_half_plane_geodesic(0.0, &pts);
        let err = klein::half_plane_sup_error(&fit, 0.0, &pts, 0.5);
        assert!(
            err <= 1e-6,
            "{:?}: circle-family error {err:.3e}",
            curve.branch
        );
    }

    // Classification: node of order 1 with vanishing resonant coefficient...
    let probe = rank_probe_phi(&model.v_field(), &point, 1e-10).unwrap();
    assert!(probe.phi_zero);
    let report = singular_flows::spectral::linearize(&model.v_field(), &point, 1e-10).unwrap();
    let nz: Vec<Complex64> = report
        .eigenvalues
        .iter()
        .cloned()
        .filter(|z| z.norm() > 0.0)
        .collect();
    let classification = classify(
        nz[0],
        nz[1],
        model.exponent(),
        &ClassifyProbes {
            psi: None,
            psi_scale: None,
            phi_zero: Some(probe.phi_zero),
        },
    )
    .unwrap();
    assert!(
        matches!(
            classification.kind,
            ClassificationKind::NodeResonant {
                n: 1,
                phi_zero: Some(true)
            }
        ),
        "{:?}",
        classification.kind
    );

    // ... and the tilted metric flips the verdict.
    let tilted = KleinModel::parse("1", "1 + x", 1).unwrap();
    let probe = rank_probe_phi(&tilted.v_field(), &tilted.singular_point(0.0), 1e-10).unwrap();
    assert!(!probe.phi_zero, "γ_x ≠ 0 must force φ(0) ≠ 0");
    pass(8, "Klein circle oracle and node classification");
}

#[test]
fn acceptance_09_grushin_oracle() {
    let model = AlmostRiemannianModel::parse("2").unwrap();
    let point = model.singular_point(0.0);
    let opts = GeodesicOptions {
        count: 5,
        ..GeodesicOptions::default()
    };
    let curves = shoot_geodesics(&model.v_field(), &point, &opts).unwrap();
    assert_eq!(curves.len(), 5);
    for curve in &curves {
        let pts: Vec<(f64, f64, f64)> = curve
            .samples
            .iter()
            .map(|s| (s.phase[0], s.phase[1], s.phase[2]))
            .collect();
        let fit = almost::grushin_fit(&pts);
        if fit.c != 0.0 {
            let window = 0.9 / fit.c.abs();
            assert!(
                pts.iter().any(|(x, _, _)| x.abs() >= window),
                "curve {:?} never reaches |x| = 0.9/|c|",
                curve.branch
            );
        }
        let err = almost::grushin_sup_error(&pts, 0.0, fit.c, None);
        assert!(
            err <= 1e-6,
            "{:?}: closed-form error {err:.3e}",
            curve.branch
        );
    }

    let report = singular_flows::spectral::linearize(&model.v_field(), &point, 1e-10).unwrap();
    let spec = report.real_spectrum();
    assert!((spec[0] - 2.0).abs() <= 1e-10 && (spec[1] - 2.0).abs() <= 1e-10 && spec[2] == 0.0);
    let probe = rank_probe_phi(&model.v_field(), &point, 1e-10).unwrap();
    assert!(probe.phi_zero, "Grushin must be a bicritical node");
    pass(9, "Grushin closed-form oracle");
}

// ---------------------------------------------------------------------------
// Criterion 10: jet engine versus central finite differences
// ---------------------------------------------------------------------------

fn stencil(order: usize) -> Vec<(i32, f64)> {
    match order {
        0 => vec![(0, 1.0)],
        1 => vec![(-1, -0.5), (1, 0.5)],
        2 => vec![(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => vec![(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => unreachable!(),
    }
}

/// Central finite-difference estimate of a mixed partial, tensoring 1D
/// stencils per variable.
fn finite_difference(
    f: &dyn Fn(&[f64]) -> Option<f64>,
    point: &[f64],
    multi: &[usize],
    h: f64,
) -> Option<f64> {
    let mut terms: Vec<(Vec<f64>, f64)> = vec![(point.to_vec(), 1.0)];
    for (var, &order) in multi.iter().enumerate() {
        if order == 0 {
            continue;
        }
        let mut next = Vec::new();
        for (base, weight) in &terms {
            for (offset, st_weight) in stencil(order) {
                let mut shifted = base.clone();
                shifted[var] += offset as f64 * h;
                next.push((shifted, weight * st_weight / h.powi(order as i32)));
            }
        }
        terms = next;
    }
    let mut acc = 0.0;
    for (arg, weight) in terms {
        acc += weight * f(&arg)?;
    }
    Some(acc)
}

/// One Richardson step over the central stencils: kills the O(h²) truncation
/// term while staying a pure finite-difference oracle.
fn finite_difference_richardson(
    f: &dyn Fn(&[f64]) -> Option<f64>,
    point: &[f64],
    multi: &[usize],
    h: f64,
) -> Option<f64> {
    let coarse = finite_difference(f, point, multi, h)?;
    let fine = finite_difference(f, point, multi, h / 2.0)?;
    Some((4.0 * fine - coarse) / 3.0)
}

#[test]
fn acceptance_10_jet_engine_versus_finite_differences() {
    // 20 randomized composite expressions over the full function set; every
    // partial up to order 3 matches a central finite-difference estimate
    // within relative 1e-5.
    let templates = [
        "sin({a}*x*y) + cos(x - y/2)",
        "exp((x + {a}*y)/4)",
        "sqrt(1 + {a}*x^2 + y^2)",
        "ln(2 + x + {a}*y^2)",
        "1/(2 + sin({a}*x) + cos(y))",
        "pow(1 + x^2, {a})",
        "({a} + x*y)^3 / (2 + x^2)",
        "abs(2 + x)*sin({a}*y)",
        "sin(cos(x))*exp({a}*y/3)",
        "sqrt(2 + sin(x + {a}*y))",
    ];
    let mut rng = Rng::new(10);
    let mut exercised = 0;
    for round in 0..2 {
        for template in &templates {
            let a = rng.uniform(0.5, 1.5);
            let source = template.replace("{a}", &format!("{a:.6}"));
            let expr = singular_flows::expr::parse(&source, &["x", "y"]).unwrap();
            let point = vec![
                rng.uniform(-0.7, 0.7) + 0.05 * round as f64,
                rng.uniform(-0.7, 0.7),
            ];
            let jet = expr.eval_jet(&point, 3).unwrap();
            let eval = |arg: &[f64]| expr.eval(arg).ok();
            for m1 in 0..=3usize {
                for m2 in 0..=(3 - m1) {
                    if m1 + m2 == 0 {
                        continue;
                    }
                    let multi = [m1, m2];
                    let h = match m1 + m2 {
                        1 => 1e-4,
                        2 => 1e-3,
                        _ => 4e-3,
                    };
                    let fd = finite_difference_richardson(&eval, &point, &multi, h)
                        .expect("finite differences stay in the domain");
                    let exact = jet.deriv(&multi);
                    let scale = 1.0f64.max(fd.abs()).max(exact.abs());
                    assert!(
                        (exact - fd).abs() <= 1e-5 * scale,
                        "{source} at {point:?}: ∂^{multi:?} jet {exact:.8e} vs fd {fd:.8e}"
                    );
                }
            }
            exercised += 1;
        }
    }
    assert_eq!(exercised, 20);
    pass(10, "jet partials match central finite differences");
}

#[test]
fn acceptance_11_cli_determinism() {
    // Identical config and seed must produce byte-identical reports.
    let dir = std::env::temp_dir().join(format!("singular-flows-acc11-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "kind": "raw_field",
  "raw_field": {
    "variables": ["x", "y", "z"],
    "components": ["2*x", "y", "0"],
    "f": "x - y^2",
    "r": 1.5
  },
  "options": { "seeds": [[0.1, 0.1, 7.0]] }
}"#,
    )
    .unwrap();

    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_singular-flows"))
            .args([
                "analyze",
                "--config",
                config_path.to_str().unwrap(),
                "--seed",
                "17",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("binary runs");
        assert!(status.success(), "analyze exited with {status}");
        std::fs::read(out).unwrap()
    };
    let first = run(&dir.join("a.json"));
    let second = run(&dir.join("b.json"));
    assert_eq!(first, second, "reports differ between identical runs");
    assert!(!first.is_empty());
    std::fs::remove_dir_all(&dir).ok();
    pass(11, "CLI determinism");
}
