//! Flow-level properties of the geodesic machinery: seed-offset convergence,
//! conserved quantities along integrated curves, jet structure of the node
//! families, saddle separatrices, and direction-field invariance.

use singular_flows::fields::{ExprScalarField, ExprVectorField, ScaledVectorField, SingularField};
use singular_flows::geometry::klein::{
    fit_half_plane_geodesic, half_plane_sup_error, HalfPlaneGeodesic, KleinModel,
};
use singular_flows::geometry::pseudo::PseudoRiemannianModel;
use singular_flows::geometry::{shoot_geodesics, BranchKind, GeodesicOptions};

/// Sup distance of a shot Klein fan from the exact circle family through the
/// singular point, at a given seed offset.
fn klein_family_error(epsilon: f64) -> f64 {
    let model = KleinModel::parse("1", "1", 1).unwrap();
    let point = model.singular_point(0.0);
    let opts = GeodesicOptions {
        count: 4,
        epsilon,
        ..GeodesicOptions::default()
    };
    let curves = shoot_geodesics(&model.v_field(), &point, &opts).unwrap();
    let mut worst: f64 = 0.0;
    for curve in &curves {
        let pts: Vec<(f64, f64)> = curve
            .samples
            .iter()
            .map(|s| (s.base[0], s.base[1]))
            .collect();
        let fit = fit_half_plane_geodesic(0.0, &pts);
        worst = worst.max(half_plane_sup_error(&fit, 0.0, &pts, 0.5));
    }
    worst
}

#[test]
fn seed_offset_halving_contracts_the_family_error() {
    // The fitted-family error measures the distance from the ideal curves
    // through the singular point; it must shrink under ε → ε/2.
    let coarse = klein_family_error(1e-2);
    let medium = klein_family_error(5e-3);
    let fine = klein_family_error(2.5e-3);
    assert!(
        coarse > 1e-7,
        "coarse offset too accurate to measure ({coarse:.3e})"
    );
    assert!(
        medium <= 0.75 * coarse,
        "no contraction: {coarse:.3e} → {medium:.3e}"
    );
    assert!(
        fine <= 0.75 * medium,
        "no contraction: {medium:.3e} → {fine:.3e}"
    );
}

#[test]
fn pseudo_energy_invariant_bounded_drift_along_shot_geodesics() {
    // Δ²/F² is constant on orbits of the desingularized field; along the
    // integrated curves its drift stays at the integrator's level, well
    // below 1e-7, on the part of the curve away from Γ.
    let model = PseudoRiemannianModel::parse("1", "0", "t").unwrap();
    let point = [0.0, 0.3, 0.0];
    let opts = GeodesicOptions::default();
    let curves = shoot_geodesics(&model.v_field(), &point, &opts).unwrap();
    assert_eq!(curves.len(), opts.count);
    let mut monitored = 0;
    for curve in &curves {
        let mut reference: Option<f64> = None;
        for sample in &curve.samples {
            let f = model.f_jet(&sample.phase, 0).unwrap().value();
            if f.abs() < 1e-3 {
                continue;
            }
            let j = model.energy_invariant(&sample.phase).unwrap();
            match reference {
                None => reference = Some(j),
                Some(j0) => {
                    let drift = (j - j0).abs() / 1.0f64.max(j0.abs());
                    assert!(drift <= 1e-7, "drift {drift:.3e} on {:?}", curve.branch);
                    monitored += 1;
                }
            }
        }
    }
    assert!(monitored > 100, "too few monitored samples ({monitored})");
}

#[test]
fn klein_fan_has_common_low_jets_and_spread_curvatures() {
    // All curves through the singular point share x(0) = x* and x'(0) = 0;
    // their second derivatives sweep ±1/R across the fan.
    let model = KleinModel::parse("1", "1", 1).unwrap();
    let point = model.singular_point(0.0);
    let opts = GeodesicOptions {
        count: 5,
        ..GeodesicOptions::default()
    };
    let curves = shoot_geodesics(&model.v_field(), &point, &opts).unwrap();
    let mut curvatures = Vec::new();
    for curve in &curves {
        let pts: Vec<(f64, f64)> = curve
            .samples
            .iter()
            .map(|s| (s.base[0], s.base[1]))
            .collect();
        // Identical 1-jet: x stays near x* while t is small.
        for &(t, x) in pts.iter().filter(|(t, _)| t.abs() <= 1e-3) {
            assert!(x.abs() <= 2.0 * t.abs() + 1e-9, "1-jet violated at t = {t}");
        }
        let fit = fit_half_plane_geodesic(0.0, &pts);
        let curvature = match fit {
            HalfPlaneGeodesic::Line => 0.0,
            HalfPlaneGeodesic::Circle { center_x, radius } => center_x.signum() / radius,
        };
        // Cross-check the fitted curvature against the curve's own 2-jet.
        if let Some(&(t, x)) = pts.iter().find(|(t, _)| t.abs() > 0.02 && t.abs() < 0.1) {
            let second = 2.0 * x / (t * t);
            assert!(
                (second - curvature).abs() <= 0.05 * (1.0 + curvature.abs()),
                "2-jet {second:.4} vs curvature {curvature:.4}"
            );
        }
        curvatures.push(curvature);
    }
    curvatures.sort_by(f64::total_cmp);
    assert!(curvatures.first().unwrap() < &-0.5);
    assert!(curvatures.last().unwrap() > &0.5);
    assert!(
        curvatures.iter().any(|c| c.abs() < 1e-6),
        "the line branch is missing"
    );
}

#[test]
fn saddle_points_shoot_separatrix_branches() {
    // At a non-isotropic root of the three-root pseudo model the spectrum is
    // a balanced saddle: the shooter returns the four separatrix branches.
    let model = PseudoRiemannianModel::parse("1 + t", "0", "4*t").unwrap();
    let structure = model.singular_structure(&[0.0, 0.0]).unwrap();
    let saddle = &structure.saddles[0];
    let opts = GeodesicOptions::default();
    let curves = shoot_geodesics(&model.v_field(), &saddle.phase_point, &opts).unwrap();
    let branches: Vec<BranchKind> = curves.iter().map(|c| c.branch).collect();
    assert_eq!(
        branches,
        vec![
            BranchKind::UnstablePlus,
            BranchKind::UnstableMinus,
            BranchKind::StablePlus,
            BranchKind::StableMinus
        ]
    );
    for curve in &curves {
        assert!(curve.samples.len() > 10, "{:?} barely moved", curve.branch);
    }
}

#[test]
fn direction_field_scaling_preserves_check_outcomes() {
    // Multiplying V by the positive factor 1 + x² must not change the
    // pass/fail outcomes of the surface-invariance and limit checks on the
    // Example fixtures.
    let build = |scaled: bool, r: f64| -> SingularField {
        let vars = ["x", "y", "z"];
        let inner = ExprVectorField::parse(&["x", "y", "z"], &vars).unwrap();
        let f = ExprScalarField::parse("x + y + z", &vars).unwrap();
        if scaled {
            let phi = ExprScalarField::parse("1 + x^2", &vars).unwrap();
            SingularField::new(
                Box::new(ScaledVectorField { inner, factor: phi }),
                Box::new(f),
                r,
            )
            .unwrap()
        } else {
            SingularField::new(Box::new(inner), Box::new(f), r).unwrap()
        }
    };
    for r in [2.0, 3.0] {
        let plain = build(false, r)
            .check_conditions_at_singular_point(&[0.0; 3], 1e-8, 9)
            .unwrap()
            .passed;
        let scaled = build(true, r)
            .check_conditions_at_singular_point(&[0.0; 3], 1e-8, 9)
            .unwrap()
            .passed;
        assert_eq!(plain, scaled, "outcome changed under scaling at r = {r}");
        assert_eq!(plain, r == 3.0);
    }

    // Example-2 fixture with the paraboloid surface.
    let vars = ["x", "y", "z"];
    let inner = ExprVectorField::parse(&["2*x", "y", "0"], &vars).unwrap();
    let phi = ExprScalarField::parse("1 + x^2", &vars).unwrap();
    let f = ExprScalarField::parse("x - y^2", &vars).unwrap();
    let scaled = SingularField::new(
        Box::new(ScaledVectorField { inner, factor: phi }),
        Box::new(f),
        1.5,
    )
    .unwrap();
    let samples = vec![vec![0.25, 0.5, 1.0], vec![1.0, -1.0, 0.3]];
    assert!(scaled.check_gamma_invariant(&samples, 1e-8).unwrap().passed);
    assert!(
        scaled
            .check_conditions_at_singular_point(&[0.0, 0.0, 2.0], 1e-8, 9)
            .unwrap()
            .passed
    );
}

#[test]
fn limit_conditions_discriminate_the_exponent_on_metric_models() {
    // Only the structural exponent passes the singular-point limit checks:
    // r = n + 1 for the Klein family, r = 3/2 for the pseudo-Riemannian one.
    let klein = KleinModel::parse("1", "1", 1).unwrap();
    for (r, expected) in [(1.0, false), (2.0, true), (3.0, false)] {
        let sf =
            SingularField::new(Box::new(klein.v_field()), Box::new(klein.f_scalar()), r).unwrap();
        let verdict = sf
            .check_conditions_at_singular_point(&[0.0, 0.3, 0.0], 1e-8, 3)
            .unwrap();
        assert_eq!(verdict.passed, expected, "Klein with r = {r}");
    }
    let pseudo = PseudoRiemannianModel::parse("1", "0", "t").unwrap();
    for (r, expected) in [(1.0, false), (1.5, true), (2.5, false)] {
        let sf =
            SingularField::new(Box::new(pseudo.v_field()), Box::new(pseudo.f_scalar()), r).unwrap();
        let verdict = sf
            .check_conditions_at_singular_point(&[0.0, 0.3, 0.0], 1e-8, 3)
            .unwrap();
        assert_eq!(verdict.passed, expected, "pseudo with r = {r}");
    }
}

#[test]
fn metric_models_have_invariant_degeneracy_surfaces() {
    // For each model's pair (V, f), the Lie derivative of f vanishes on Γ.
    use singular_flows::geometry::almost::AlmostRiemannianModel;
    use singular_flows::util::Rng;

    let mut rng = Rng::new(21);
    let mut check = |sf: &SingularField, near: &[f64]| {
        let mut samples = Vec::new();
        for _ in 0..200 {
            if samples.len() >= 10 {
                break;
            }
            let dir = rng.unit_vector(3);
            let seed: Vec<f64> = near.iter().zip(&dir).map(|(c, d)| c + 0.4 * d).collect();
            if let Ok(point) = sf.project_to_gamma(&seed) {
                samples.push(point);
            }
        }
        assert!(samples.len() >= 10, "projection starving");
        let report = sf.check_gamma_invariant(&samples, 1e-8).unwrap();
        assert!(
            report.passed,
            "max relative residual {}",
            report.max_relative_residual
        );
    };

    let pseudo = PseudoRiemannianModel::parse("1", "0", "t").unwrap();
    let sf =
        SingularField::new(Box::new(pseudo.v_field()), Box::new(pseudo.f_scalar()), 1.5).unwrap();
    check(&sf, &[0.0, 0.3, 0.1]);

    let klein = KleinModel::parse("1", "1 + x^2/4", 1).unwrap();
    let sf = SingularField::new(
        Box::new(klein.v_field()),
        Box::new(klein.f_scalar()),
        klein.exponent(),
    )
    .unwrap();
    check(&sf, &[0.0, 0.2, 0.1]);

    // Almost-Riemannian analog on {x = 0} in the smooth chart.
    let almost = AlmostRiemannianModel::parse("2 + y^2/4").unwrap();
    let x_scalar = ExprScalarField::parse("x", &["x", "y", "p"]).unwrap();
    let sf = SingularField::new(Box::new(almost.v_field()), Box::new(x_scalar), 1.5).unwrap();
    check(&sf, &[0.0, 0.2, 0.1]);
}

#[test]
fn cubic_root_count_matches_discriminant_sign() {
    // The number of real roots of M(q*, ·) follows the sign of the cubic
    // discriminant across a family of models.
    for (a, c_coeff, expected_roots) in [
        ("1 + t", "4*t", 3usize),
        ("1 + t", "-4*t", 1),
        ("1", "t", 1),
    ] {
        let model = PseudoRiemannianModel::parse(a, "0", c_coeff).unwrap();
        let structure = model.singular_structure(&[0.0, 0.1]).unwrap();
        assert_eq!(
            structure.roots.len(),
            expected_roots,
            "model (a, c) = ({a}, {c_coeff})"
        );
        let mu = model.mu_values(&[0.0, 0.1]).unwrap();
        if mu[0].abs() > 1e-12 {
            let [m3, m2, m1, m0] = mu;
            let disc = 18.0 * m3 * m2 * m1 * m0 - 4.0 * m2.powi(3) * m0 + m2 * m2 * m1 * m1
                - 4.0 * m3 * m1.powi(3)
                - 27.0 * m3 * m3 * m0 * m0;
            if expected_roots == 3 {
                assert!(disc > 0.0);
            } else {
                assert!(disc < 0.0);
            }
        }
    }
}
