//! The resonant-jet coefficient Ψ(0,0): the obstruction that decides whether
//! a resonant saddle carries the ζ̇ = ξη normal form.
//!
//! Two fields with the same resonant linear part can differ: only a nonzero
//! Ψ(0,0) certifies the resonant-saddle form. The classification decision
//! tree consumes this probe.
//!
//! ```bash
//! cargo run --example resonant_coefficient
//! ```

use num_complex::Complex64;
use singular_flows::fields::ExprVectorField;
use singular_flows::normalform::{classify, resonant_jet_coefficient, ClassifyProbes};

fn main() {
    let vars = ["xi", "eta", "zeta"];
    let fixtures: [(&str, [&str; 3]); 3] = [
        ("saddle with resonant center term", ["xi", "-eta", "xi*eta"]),
        ("linear saddle", ["xi", "-eta", "0"]),
        (
            "cubic-coupled saddle",
            ["xi", "-eta*(1+xi*eta)", "xi*eta*zeta"],
        ),
    ];
    for (name, components) in fixtures {
        let field = ExprVectorField::parse(&components, &vars).unwrap();
        let out = resonant_jet_coefficient(&field, &[0.0; 3], 1, 1).unwrap();
        println!(
            "{name}: Ψ(0,0) = {} (nonzero: {})",
            out.psi,
            out.is_nonzero(1e-9)
        );
    }

    // Feed the probe into the classification.
    let field = ExprVectorField::parse(&["xi", "-eta", "xi*eta"], &vars).unwrap();
    let probe = resonant_jet_coefficient(&field, &[0.0; 3], 1, 1).unwrap();
    let classification = classify(
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        1.0,
        &ClassifyProbes {
            psi: Some(probe.psi),
            psi_scale: Some(probe.scale),
            phi_zero: None,
        },
    )
    .unwrap();
    println!("classification: {:?}", classification.kind);
}
