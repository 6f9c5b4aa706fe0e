//! Singular-point location, linearization spectra, and resonance detection.

use crate::fields::{FieldError, ScalarField, VectorField};
use crate::linalg::{self, Matrix};
use crate::util::local_scale;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("|V(x*)| = {residual:.3e} exceeds the singular-point tolerance {tol:.3e}")]
    SingularPointTolExceeded { residual: f64, tol: f64 },
    #[error("no eigenvalue index satisfies the resonance relation (best residual {best:.3e})")]
    NoMatchingIndex { best: f64 },
    #[error("resonance relation requires the gradient of f at the singular point")]
    MissingGradient,
}

// ---------------------------------------------------------------------------
// Singular-point search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SeedFailure {
    pub seed: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SingularPointSearch {
    pub points: Vec<Vec<f64>>,
    pub failures: Vec<SeedFailure>,
}

/// Damped Gauss–Newton iteration on `V(x) = 0` from each seed. The normal
/// equations carry a small Levenberg damping term so center manifolds
/// (singular Jacobians) converge to the nearest point of the singular set.
/// Failures are reported per seed, not fatal.
pub fn find_singular_points(
    v: &dyn VectorField,
    seeds: &[Vec<f64>],
    tol: f64,
) -> SingularPointSearch {
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut failures = Vec::new();
    'seeds: for seed in seeds {
        let mut x = seed.clone();
        let mut converged = false;
        for _ in 0..120 {
            let value = match v.value_at(&x) {
                Ok(val) => val,
                Err(e) => {
                    failures.push(SeedFailure {
                        seed: seed.clone(),
                        reason: e.to_string(),
                    });
                    continue 'seeds;
                }
            };
            let residual = linalg::norm(&value);
            if residual <= tol {
                converged = true;
                break;
            }
            let jac = match v.jacobian_at(&x) {
                Ok(j) => j,
                Err(e) => {
                    failures.push(SeedFailure {
                        seed: seed.clone(),
                        reason: e.to_string(),
                    });
                    continue 'seeds;
                }
            };
            let mu = 1e-12 * (1.0 + linalg::frobenius(&jac).powi(2));
            let step = match linalg::damped_step(&jac, &value, mu) {
                Some(s) => s,
                None => {
                    failures.push(SeedFailure {
                        seed: seed.clone(),
                        reason: "normal equations degenerate".into(),
                    });
                    continue 'seeds;
                }
            };
            // Step halving on residual increase; cubic nonlinearities overshoot.
            let mut factor = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = x
                    .iter()
                    .zip(&step)
                    .map(|(xi, si)| xi + factor * si)
                    .collect();
                match v.value_at(&trial) {
                    Ok(tv) if linalg::norm(&tv) < residual => {
                        x = trial;
                        accepted = true;
                        break;
                    }
                    _ => factor *= 0.5,
                }
            }
            if !accepted {
                break;
            }
        }
        if !converged {
            failures.push(SeedFailure {
                seed: seed.clone(),
                reason: format!("no convergence, |V| = {:.3e}", {
                    v.value_at(&x).map(|v| linalg::norm(&v)).unwrap_or(f64::NAN)
                }),
            });
            continue;
        }
        let duplicate = points.iter().any(|p| {
            p.iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                <= 1e-8
        });
        if !duplicate {
            points.push(x);
        }
    }
    SingularPointSearch { points, failures }
}

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

/// Eigendata of the linearization at a singular point. Eigenvalues are sorted
/// by descending real part (ties by descending imaginary part) and snapped to
/// exact zero below `1e-9·‖A‖`.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub point: Vec<f64>,
    pub jacobian: Matrix,
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Vec<Option<Vec<Complex64>>>,
    pub grad_f: Option<Vec<f64>>,
    pub j_index: Option<usize>,
    pub resonance_residual: Option<f64>,
}

pub fn linearize(
    v: &dyn VectorField,
    x_star: &[f64],
    tol: f64,
) -> Result<SpectralReport, SpectralError> {
    let value = v.value_at(x_star)?;
    let residual = linalg::norm(&value);
    if residual > tol {
        return Err(SpectralError::SingularPointTolExceeded { residual, tol });
    }
    let jacobian = v.jacobian_at(x_star)?;
    let norm_a = linalg::frobenius(&jacobian);
    let mut eigenvalues = linalg::eigenvalues(&jacobian);
    for z in eigenvalues.iter_mut() {
        // The center directions of the fields studied here are structurally
        // exact zeros; snap what is numerically indistinguishable from zero.
        if z.norm() <= 1e-9 * norm_a.max(1e-300) {
            *z = Complex64::new(0.0, 0.0);
        } else if z.im.abs() <= 1e-9 * norm_a {
            z.im = 0.0;
        }
    }
    linalg::sort_spectrum(&mut eigenvalues);
    let eigenvectors = eigenvalues
        .iter()
        .map(|&l| linalg::eigenvector(&jacobian, l))
        .collect();
    Ok(SpectralReport {
        point: x_star.to_vec(),
        jacobian,
        eigenvalues,
        eigenvectors,
        grad_f: None,
        j_index: None,
        resonance_residual: None,
    })
}

impl SpectralReport {
    pub fn with_grad_f(mut self, grad: Vec<f64>) -> Self {
        self.grad_f = Some(grad);
        self
    }

    /// Record the outcome of the resonance-relation test on the report.
    pub fn set_resonance(&mut self, relation: &ResonanceRelation) {
        self.j_index = Some(relation.j_index);
        self.resonance_residual = Some(relation.residual);
    }

    /// Real parts of the spectrum (valid when the spectrum is real).
    pub fn real_spectrum(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.jacobian)
    }
}

/// Attach the gradient of `f` to a linearization report.
pub fn linearize_singular(
    v: &dyn VectorField,
    f: &dyn ScalarField,
    x_star: &[f64],
    tol: f64,
) -> Result<SpectralReport, SpectralError> {
    let grad = f.gradient_at(x_star)?;
    Ok(linearize(v, x_star, tol)?.with_grad_f(grad))
}

// ---------------------------------------------------------------------------
// The resonance relation λ₁ + … + λₙ = r·λⱼ
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ResonanceRelation {
    /// Index into the sorted spectrum (0-based).
    pub j_index: usize,
    pub lambda_j: Complex64,
    pub residual: f64,
    /// ‖Aᵀ·∇f − λⱼ·∇f‖: the gradient of f is a left eigenvector of the
    /// linearization, which dually guarantees a right eigenvector for λⱼ
    /// transversal to Γ.
    pub eigenvector_residual: f64,
    /// Whether the relation landed on the first-integral branch λⱼ = 0.
    pub lambda_j_is_zero: bool,
}

/// Find the index `j` minimizing `|Σλ − r·λⱼ|` and verify the eigenvector
/// statement. The system derived from the degeneracy conditions reads
/// `D_V·∂ᵢf = r·Σⱼ (∂Vⱼ/∂xᵢ)·∂ⱼf`, i.e. `∇f(x*)` is an eigenvector of the
/// transposed linearization. Candidates are tried in order of increasing
/// residual; both tests must pass.
pub fn check_resonance_relation(
    report: &SpectralReport,
    r: f64,
    tol: f64,
) -> Result<ResonanceRelation, SpectralError> {
    let grad = report
        .grad_f
        .as_ref()
        .ok_or(SpectralError::MissingGradient)?;
    let sum: Complex64 = report.eigenvalues.iter().sum();
    let scale = local_scale(
        &report
            .eigenvalues
            .iter()
            .map(|z| z.norm())
            .collect::<Vec<_>>(),
    );
    let mut order: Vec<usize> = (0..report.eigenvalues.len()).collect();
    let residual_of = |j: usize| (sum - r * report.eigenvalues[j]).norm();
    order.sort_by(|&a, &b| residual_of(a).total_cmp(&residual_of(b)));

    let a_norm = linalg::frobenius(&report.jacobian);
    let g_norm = linalg::norm(grad);
    let eigen_scale = local_scale(&[a_norm]) * local_scale(&[g_norm]);
    let transposed = linalg::transpose(&report.jacobian);
    let mut best = f64::INFINITY;
    for j in order {
        let residual = residual_of(j);
        best = best.min(residual);
        if residual > tol * scale {
            break;
        }
        let lambda = report.eigenvalues[j];
        if lambda.im != 0.0 {
            continue;
        }
        let av = linalg::mat_vec(&transposed, grad);
        let eigen_residual = av
            .iter()
            .zip(grad)
            .map(|(a, g)| (a - lambda.re * g) * (a - lambda.re * g))
            .sum::<f64>()
            .sqrt();
        if eigen_residual <= tol * eigen_scale {
            return Ok(ResonanceRelation {
                j_index: j,
                lambda_j: lambda,
                residual,
                eigenvector_residual: eigen_residual,
                lambda_j_is_zero: lambda.norm() == 0.0,
            });
        }
    }
    Err(SpectralError::NoMatchingIndex { best })
}

// ---------------------------------------------------------------------------
// Resonances between a pair of eigenvalues
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct FirstTypeResonance {
    pub p1: u32,
    pub p2: u32,
    pub order: u32,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondTypeResonance {
    pub p1: u32,
    pub p2: u32,
    /// Index of the matched eigenvalue (0 for λ₁, 1 for λ₂).
    pub j: usize,
    pub order: u32,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ResonanceReport {
    pub first_type: Option<FirstTypeResonance>,
    pub second_type: Option<SecondTypeResonance>,
    pub ratio: Option<Complex64>,
    /// Flatness order bound N(k) for the requested smoothness class.
    pub nk: Option<u64>,
    pub k: u32,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Continued-fraction rationalization of a positive real with bounded
/// denominator.
pub fn rationalize(x: f64, max_den: u32, rel_tol: f64) -> Option<(u32, u32)> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut frac = x - x.floor();
    for _ in 0..32 {
        if q1 > max_den as u64 {
            return None;
        }
        let approx = p1 as f64 / q1 as f64;
        if (approx - x).abs() <= rel_tol * (1.0 + x.abs()) {
            return Some((p1 as u32, q1 as u32));
        }
        if frac.abs() < 1e-15 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let p2 = a as u64 * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    None
}

/// Scan coprime pairs for first-type resonances `p₁λ₁ + p₂λ₂ = 0`, pairs for
/// second-type resonances `p₁λ₁ + p₂λ₂ = λⱼ`, and evaluate the bound
/// `N(k) = 2⌊(2k+1)·max|Re λ|/min|Re λ|⌋ + 2`.
///
/// Detection runs on floating-point data: the default tolerance is
/// `1e-7·(|λ₁|+|λ₂|)`, and a continued-fraction rationalization of `−λ₁/λ₂`
/// cross-checks the brute scan for real spectra.
pub fn detect_resonances(
    lambda1: Complex64,
    lambda2: Complex64,
    max_order: u32,
    k: u32,
    tol: Option<f64>,
) -> ResonanceReport {
    let tol = tol.unwrap_or(1e-7 * (lambda1.norm() + lambda2.norm()));

    let mut first_type = None;
    'outer: for order in 1..=max_order {
        for p1 in 0..=order {
            let p2 = order - p1;
            if gcd(p1, p2) != 1 {
                continue;
            }
            let residual = (lambda1 * p1 as f64 + lambda2 * p2 as f64).norm();
            if residual <= tol {
                first_type = Some(FirstTypeResonance {
                    p1,
                    p2,
                    order,
                    residual,
                });
                break 'outer;
            }
        }
    }

    // Cross-check against the continued-fraction proposal for real spectra.
    if lambda1.im == 0.0 && lambda2.im == 0.0 && lambda2.re != 0.0 {
        let ratio = -lambda1.re / lambda2.re;
        if let Some((num, den)) = rationalize(ratio, 12, 1e-7) {
            // ratio = p2/p1, so the proposal is (p1, p2) = (den, num).
            let residual = (lambda1 * den as f64 + lambda2 * num as f64).norm();
            if residual <= tol && den + num <= max_order && first_type.is_none() {
                first_type = Some(FirstTypeResonance {
                    p1: den,
                    p2: num,
                    order: den + num,
                    residual,
                });
            }
        }
    }

    let mut second_type = None;
    'outer2: for order in 2..=max_order {
        for p1 in 0..=order {
            let p2 = order - p1;
            let combo = lambda1 * p1 as f64 + lambda2 * p2 as f64;
            for (j, &lam) in [lambda1, lambda2].iter().enumerate() {
                if (combo - lam).norm() <= tol {
                    second_type = Some(SecondTypeResonance {
                        p1,
                        p2,
                        j,
                        order,
                        residual: (combo - lam).norm(),
                    });
                    break 'outer2;
                }
            }
        }
    }

    let ratio = if lambda2.norm() > 0.0 {
        Some(lambda1 / lambda2)
    } else {
        None
    };
    let nk = if lambda1.re != 0.0 && lambda2.re != 0.0 {
        let hi = lambda1.re.abs().max(lambda2.re.abs());
        let lo = lambda1.re.abs().min(lambda2.re.abs());
        Some(2 * ((2 * k + 1) as f64 * hi / lo).floor() as u64 + 2)
    } else {
        None
    };

    ResonanceReport {
        first_type,
        second_type,
        ratio,
        nk,
        k,
    }
}
