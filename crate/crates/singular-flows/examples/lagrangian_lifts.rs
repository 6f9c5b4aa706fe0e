//! Euler–Lagrange and implicit-equation lifts into (t, x, p)-space.
//!
//! The lift of any Lagrangian is divergence-free wherever the Lagrangian is
//! smooth, which is what forces the λ₁ + λ₂ = 0 resonance at its singular
//! points.
//!
//! ```bash
//! cargo run --example lagrangian_lifts
//! ```

use singular_flows::fields::{
    euler_lagrange_lift, implicit_ode_lift, ExprScalarField, VectorField,
};
use singular_flows::util::Rng;

fn main() {
    let vars = ["t", "x", "p"];

    // Free particle: W = (1, p, 0).
    let l = ExprScalarField::parse("p^2/2", &vars).unwrap();
    let lift = euler_lagrange_lift(Box::new(l)).unwrap();
    println!(
        "free particle at (0, 0, 0.9): W = {:?}",
        lift.value_at(&[0.0, 0.0, 0.9]).unwrap()
    );

    // Length functional √(p² + 1): divergence vanishes everywhere.
    let l = ExprScalarField::parse("sqrt(p^2 + 1)", &vars).unwrap();
    let lift = euler_lagrange_lift(Box::new(l)).unwrap();
    let mut rng = Rng::new(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let point = vec![
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        ];
        worst = worst.max(lift.divergence_at(&point).unwrap().abs());
    }
    println!("√(p²+1) lift: max |D_W| over 100 random points = {worst:.3e}");

    // Implicit equation F(t, x, p) = ε lifts to a field tangent to the
    // contact planes; F = p² − t gives (2p, 2p², 1).
    let f = ExprScalarField::parse("p^2 - t", &vars).unwrap();
    let lift = implicit_ode_lift(Box::new(f)).unwrap();
    println!(
        "implicit lift of p² − t at (0.5, 1, 0.7): {:?}",
        lift.value_at(&[0.5, 1.0, 0.7]).unwrap()
    );
}
