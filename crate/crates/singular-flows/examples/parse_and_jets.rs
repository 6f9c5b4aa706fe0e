//! Parse coefficient expressions and evaluate truncated Taylor expansions.
//!
//! ```bash
//! cargo run --example parse_and_jets
//! ```

use singular_flows::expr::parse;

fn main() {
    // The discriminant of a quadratic form, evaluated plainly.
    let disc = parse("b^2 - a*c", &["a", "b", "c"]).unwrap();
    println!("Δ(1, 0, 1)      = {}", disc.eval(&[1.0, 0.0, 1.0]).unwrap());

    // A jet carries every mixed partial up to the truncation order.
    let product = parse("t*x", &["t", "x"]).unwrap();
    let jet = product.eval_jet(&[1.0, 2.0], 2).unwrap();
    println!("t·x at (1,2)    = {}", jet.value());
    println!("  ∂t            = {}", jet.deriv(&[1, 0]));
    println!("  ∂x            = {}", jet.deriv(&[0, 1]));
    println!("  ∂t∂x          = {}", jet.deriv(&[1, 1]));

    // Derivatives of composites come from series composition, not symbols.
    let speed = parse("sqrt(p^2 + 1)", &["p"]).unwrap();
    let jet = speed.eval_jet(&[0.0], 4).unwrap();
    println!("√(p²+1) at 0    = {}", jet.value());
    println!("  ∂p            = {}", jet.deriv(&[1]));
    println!("  ∂pp           = {}", jet.deriv(&[2]));

    // Parse errors carry byte offsets; domain errors name the subexpression.
    let err = parse("sin(", &["t"]).unwrap_err();
    println!("parse \"sin(\"    → {err}");
    let log = parse("ln(t)", &["t"]).unwrap();
    let err = log.eval_jet(&[0.0], 1).unwrap_err();
    println!("ln(t) jet at 0  → {err}");

    // Pretty-printing round-trips: the rendered text reparses identically.
    let expr = parse("-x^2 + pow(y, 3)/(1 + z)", &["x", "y", "z"]).unwrap();
    println!("pretty          = {}", expr.pretty());
}
