//! Build a quasi-integral: a polynomial in (ξ, η) with ζ-series coefficients
//! whose Lie derivative along the field is flat through a requested degree.
//!
//! ```bash
//! cargo run --example flatten_quasi_integral
//! ```

use singular_flows::fields::{ExprVectorField, VectorField};
use singular_flows::jets::Jet;
use singular_flows::normalform::{flatten, NormalFormError};

fn main() {
    // V = (ξ, −3η, ξ) with seed u₀₀ = ζ: the degree-1 system gives
    // u₁₀ = −1, u₀₁ = 0, and U = ζ − ξ is an exact first integral.
    let field = ExprVectorField::parse(&["xi", "-3*eta", "xi"], &["xi", "eta", "zeta"]).unwrap();
    let series = field.series_at(&[0.0; 3], 6).unwrap();
    let seed = Jet::variable(1, 3, 0, 0.0);
    let q = flatten(&series, 3, &seed).unwrap();
    println!("coefficient table for V = (ξ, −3η, ξ), seed u₀₀ = ζ:");
    for (&(p1, p2), z) in &q.u {
        println!("  u[{p1}{p2}](ζ) coefficients = {:?}", z.coeffs());
    }
    println!(
        "flatness residual (recomputed with the jet engine): {:.3e}",
        q.verify(&series).unwrap()
    );

    // ζ-dependent coefficients force genuine series: u₁₀ = −1/(1+ζ).
    let field =
        ExprVectorField::parse(&["xi*(1+zeta)", "-3*eta", "xi"], &["xi", "eta", "zeta"]).unwrap();
    let series = field.series_at(&[0.0; 3], 7).unwrap();
    let q = flatten(&series, 2, &Jet::variable(1, 4, 0, 0.0)).unwrap();
    println!(
        "\nV = (ξ(1+ζ), −3η, ξ): u₁₀(ζ) = {:?}",
        q.u[&(1, 0)].coeffs()
    );

    // A first-type resonance obstructs the construction at its order.
    let field = ExprVectorField::parse(&["xi", "-eta", "xi"], &["xi", "eta", "zeta"]).unwrap();
    let series = field.series_at(&[0.0; 3], 6).unwrap();
    match flatten(&series, 3, &Jet::variable(1, 3, 0, 0.0)) {
        Err(NormalFormError::ResonanceObstruction { n }) => {
            println!("\nV = (ξ, −η, ξ): resonance obstruction at degree {n}");
        }
        other => println!("unexpected outcome: {other:?}"),
    }
}
