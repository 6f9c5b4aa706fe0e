//! Divide-by-zero fields W = f^{-r}·V: the divergence identity and the
//! degeneracy conditions that single out admissible exponents.
//!
//! The radial field (x, y, z) with the invariant plane f = x + y + z only
//! satisfies the singular-point limit conditions for r = 3; the planar field
//! (2x, y, 0) with the invariant paraboloid f = x − y² needs r = 3/2.
//!
//! ```bash
//! cargo run --example divergence_identity
//! ```

use singular_flows::fields::{ExprScalarField, ExprVectorField, SingularField};

fn radial(r: f64) -> SingularField {
    let v = ExprVectorField::parse(&["x", "y", "z"], &["x", "y", "z"]).unwrap();
    let f = ExprScalarField::parse("x + y + z", &["x", "y", "z"]).unwrap();
    SingularField::new(Box::new(v), Box::new(f), r).unwrap()
}

fn planar(f_src: &str, r: f64) -> SingularField {
    let v = ExprVectorField::parse(&["2*x", "y", "0"], &["x", "y", "z"]).unwrap();
    let f = ExprScalarField::parse(f_src, &["x", "y", "z"]).unwrap();
    SingularField::new(Box::new(v), Box::new(f), r).unwrap()
}

fn main() {
    // D_W two ways: directly through jets of f^{-r}·V, and through
    // f^{r+1}·D_W = f·D_V − r·L_V f.
    let sf = radial(2.0);
    let w = sf.eval_w(&[1.0, 0.0, 0.0]).unwrap();
    println!("radial field, r = 2, at (1,0,0):");
    println!("  D_W direct    = {:.12}", w.div_w_direct);
    println!("  D_W identity  = {:.12}", w.div_w_identity);
    println!("  f^r·D_W       = {:.12}", w.fr_div_w);
    println!("  discrepancy   = {:.3e}", w.discrepancy);

    // Γ-invariance (the first degeneracy condition) on surface samples.
    let samples = vec![vec![1.0, -0.5, -0.5], vec![0.3, 0.2, -0.5]];
    let report = sf.check_gamma_invariant(&samples, 1e-8).unwrap();
    println!("  Γ invariant   = {}", report.passed);

    // The limit conditions at the singular point pick out the exponent.
    for r in [2.0, 3.0] {
        let verdict = radial(r)
            .check_conditions_at_singular_point(&[0.0; 3], 1e-8, 7)
            .unwrap();
        println!(
            "radial field, r = {r}: singular-point conditions pass = {}",
            verdict.passed
        );
    }
    // Singular points must lie on Γ: the z-axis meets {z = 0} only at the
    // origin.
    for (f_src, r, x_star) in [
        ("x - y^2", 1.5, [0.0, 0.0, 1.0]),
        ("y", 3.0, [0.0, 0.0, 1.0]),
        ("z", 2.0, [0.0, 0.0, 0.0]),
    ] {
        let sf = planar(f_src, r);
        let verdict = sf
            .check_conditions_at_singular_point(&x_star, 1e-8, 7)
            .unwrap();
        println!(
            "planar field, f = {f_src:8}, r = {r}: conditions pass = {}",
            verdict.passed
        );
    }

    // f = z is a first integral: f^r·D_W coincides with D_V.
    let sf = planar("z", 2.0);
    let fi = sf
        .check_first_integral(&[vec![0.5, 0.2, 1.0]], 1e-8)
        .unwrap();
    println!(
        "planar field, f = z: first integral = {} (f^r·D_W = {:.1}, D_V = {:.1})",
        fi.passed, fi.pairs[0].0, fi.pairs[0].1
    );
}
