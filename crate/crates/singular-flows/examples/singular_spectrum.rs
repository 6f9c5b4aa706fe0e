//! Locate singular points, compute spectra, and test the resonance relation
//! Σλ = r·λⱼ together with pairwise eigenvalue resonances.
//!
//! ```bash
//! cargo run --example singular_spectrum
//! ```

use num_complex::Complex64;
use singular_flows::fields::{ExprScalarField, ExprVectorField};
use singular_flows::spectral::{
    check_resonance_relation, detect_resonances, find_singular_points, linearize_singular,
};

fn main() {
    // Newton from a seed converges onto the z-axis of singular points.
    let v = ExprVectorField::parse(&["2*x", "y", "0"], &["x", "y", "z"]).unwrap();
    let search = find_singular_points(&v, &[vec![0.1, 0.1, 7.0]], 1e-12);
    println!("singular point from (0.1, 0.1, 7): {:?}", search.points[0]);

    // Linearize with the gradient of f attached.
    let f = ExprScalarField::parse("x - y^2", &["x", "y", "z"]).unwrap();
    let report = linearize_singular(&v, &f, &search.points[0], 1e-8).unwrap();
    println!("spectrum: {:?}", report.real_spectrum());

    // With r = 3/2 the relation picks the eigenvalue 2 whose eigenvector is
    // transversal to Γ.
    let relation = check_resonance_relation(&report, 1.5, 1e-7).unwrap();
    println!(
        "resonance relation: λ_j = {} (index {}), residual {:.2e}, eigenvector residual {:.2e}",
        relation.lambda_j.re, relation.j_index, relation.residual, relation.eigenvector_residual
    );

    // Pairwise resonances between two eigenvalues, with the flatness bound
    // N(k) for finite smoothness classes.
    let cases = [
        (Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)),
        (Complex64::new(2.0, 0.0), Complex64::new(-3.0, 0.0)),
        (Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)),
    ];
    for (l1, l2) in cases {
        let report = detect_resonances(l1, l2, 10, 2, None);
        println!("λ = ({}, {}):", l1.re, l2.re);
        match &report.first_type {
            Some(first) => println!(
                "  first type  (p₁, p₂) = ({}, {}), order {}",
                first.p1, first.p2, first.order
            ),
            None => println!("  first type  none up to order 10"),
        }
        match &report.second_type {
            Some(second) => println!(
                "  second type (p₁, p₂) = ({}, {}) → λ_{}, order {}",
                second.p1,
                second.p2,
                second.j + 1,
                second.order
            ),
            None => println!("  second type none up to order 10"),
        }
        if let Some(nk) = report.nk {
            println!("  N({}) = {}", report.k, nk);
        }
    }
}
