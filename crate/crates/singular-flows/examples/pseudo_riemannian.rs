//! Pseudo-Riemannian metrics: the singular-point structure over a parabolic
//! point and the Lagrangian consistency of the desingularized flow.
//!
//! ```bash
//! cargo run --example pseudo_riemannian
//! ```

use singular_flows::geometry::pseudo::PseudoRiemannianModel;

fn main() {
    // The model dx² + t·dt² degenerates on {t = 0}; its cubic has the single
    // root p₀ = 0 and the spectrum at the isotropic point is ∝ (2, 1, 0).
    let model = PseudoRiemannianModel::parse("1", "0", "t").unwrap();
    let structure = model.singular_structure(&[0.0, 0.5]).unwrap();
    println!("model (a, b, c) = (1, 0, t) at q* = (0, 0.5):");
    println!("  roots of M(q*, ·)     = {:?}", structure.roots);
    println!("  root structure        = {:?}", structure.root_structure);
    println!(
        "  spectrum at (q*, p₀)  = {:?}",
        structure.isotropic.spectrum
    );
    println!(
        "  ratio (2,1,0)         = {}",
        structure.isotropic.ratio_two_one_zero
    );
    println!("  σ = Δ_t + p₀Δ_x       = {}", structure.isotropic.sigma);
    println!(
        "  σ in spectrum         = {}",
        structure.isotropic.sigma_in_spectrum
    );

    // A perturbed model with three real roots: the non-isotropic roots carry
    // balanced saddles (λ₁ + λ₂ = 0) with nonzero resonant coefficient.
    let model = PseudoRiemannianModel::parse("1 + t", "0", "4*t").unwrap();
    let structure = model.singular_structure(&[0.0, 0.2]).unwrap();
    println!("\nmodel (a, b, c) = (1+t, 0, 4t) at q* = (0, 0.2):");
    println!("  roots of M(q*, ·)     = {:?}", structure.roots);
    for saddle in &structure.saddles {
        println!(
            "  saddle at p = {:+.3}: λ₁+λ₂ = {:+.2e}, Ψ(0,0) = {:+.4} (nonzero {})",
            saddle.phase_point[2],
            saddle.lambda_sum,
            saddle.psi.as_ref().map_or(f64::NAN, |p| p.psi),
            saddle.psi.as_ref().is_some_and(|p| p.is_nonzero(1e-9)),
        );
    }

    // The explicit W matches the Euler–Lagrange lift of √F, the lift is
    // divergence-free, and W = −f^{-3/2}·V.
    let report = model.verify_consistency(42, 50).unwrap();
    println!("\nLagrangian consistency:");
    for check in &report.checks {
        println!(
            "  {:32} max residual {:.3e} (tol {:.0e}): {}",
            check.name,
            check.max_relative_residual,
            check.tol,
            if check.passed { "ok" } else { "FAIL" }
        );
    }
}
