//! Pseudo-Riemannian metrics `a·dx² + 2b·dxdt + c·dt²` degenerating on the
//! discriminant curve `Δ = b² − ac = 0`.
//!
//! Geodesic 1-graphs are governed by the blown-up field `W` with common
//! factor `F^{-3/2}` (`F = a·p² + 2b·p + c`); multiplying by `−F^{3/2}`
//! desingularizes it to `V = (Δ, pΔ, M/2)` where `M` is a cubic in `p`. At a
//! parabolic point the admissible tangential directions are the real roots
//! of `M`, always including the isotropic direction `p₀ = −b/a`.

use num_complex::Complex64;

use super::{ConsistencyReport, GeometryError, ResidualTracker};
use crate::expr::Expression;
use crate::fields::{euler_lagrange_lift, FieldError, LagrangianLift, ScalarField, VectorField};
use crate::jets::{Jet, SeriesVectorField};
use crate::linalg;
use crate::normalform::{resonant_jet_coefficient, ResonantCoefficient};
use crate::spectral;
use crate::util::Rng;

/// Metric coefficients and every object derived from them.
#[derive(Debug, Clone)]
pub struct PseudoRiemannianModel {
    a: Expression,
    b: Expression,
    c: Expression,
}

/// Exponent of the desingularization: `W = −f^{-r}·V` with `f = F`.
pub const PSEUDO_EXPONENT: f64 = 1.5;
/// Orientation factor in `W = orientation · f^{-r} · V`.
pub const PSEUDO_ORIENTATION: f64 = -1.0;

struct CoeffJets {
    a: Jet,
    b: Jet,
    c: Jet,
    a_t: Jet,
    a_x: Jet,
    b_t: Jet,
    b_x: Jet,
    c_t: Jet,
    c_x: Jet,
    p: Jet,
}

impl PseudoRiemannianModel {
    pub fn new(a: Expression, b: Expression, c: Expression) -> Result<Self, GeometryError> {
        for expr in [&a, &b, &c] {
            if expr.free_vars().len() != 2 {
                return Err(GeometryError::Field(FieldError::DimensionMismatch {
                    expected: 2,
                    got: expr.free_vars().len(),
                }));
            }
        }
        Ok(PseudoRiemannianModel { a, b, c })
    }

    pub fn parse(a: &str, b: &str, c: &str) -> Result<Self, GeometryError> {
        Self::new(
            crate::expr::parse(a, &["t", "x"])?,
            crate::expr::parse(b, &["t", "x"])?,
            crate::expr::parse(c, &["t", "x"])?,
        )
    }

    fn coeff_jets(&self, point: &[f64], order: usize) -> Result<CoeffJets, FieldError> {
        let t = Jet::variable(3, order + 1, 0, point[0]);
        let x = Jet::variable(3, order + 1, 1, point[1]);
        let args = [t, x];
        let a = self.a.eval_with_jets(&args)?;
        let b = self.b.eval_with_jets(&args)?;
        let c = self.c.eval_with_jets(&args)?;
        Ok(CoeffJets {
            a_t: a.partial(0)?,
            a_x: a.partial(1)?,
            b_t: b.partial(0)?,
            b_x: b.partial(1)?,
            c_t: c.partial(0)?,
            c_x: c.partial(1)?,
            a: a.truncated(order),
            b: b.truncated(order),
            c: c.truncated(order),
            p: Jet::variable(3, order, 2, point[2]),
        })
    }

    /// Discriminant Δ = b² − ac as a jet in (t, x, p).
    pub fn delta_jet(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.coeff_jets(point, order)?;
        Ok(cj.b.mul(&cj.b)?.sub(&cj.a.mul(&cj.c)?)?)
    }

    pub fn delta_value(&self, q: &[f64; 2]) -> Result<f64, FieldError> {
        Ok(self.delta_jet(&[q[0], q[1], 0.0], 0)?.value())
    }

    /// Quadratic form F = a·p² + 2b·p + c as a jet.
    pub fn f_jet(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.coeff_jets(point, order)?;
        f_from(&cj)
    }

    /// Cubic M = Σ μᵢ(t,x)·pⁱ as a jet.
    pub fn m_jet(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.coeff_jets(point, order)?;
        m_from(&cj)
    }

    /// Coefficients (μ₃, μ₂, μ₁, μ₀) at a base point.
    pub fn mu_values(&self, q: &[f64; 2]) -> Result<[f64; 4], FieldError> {
        let cj = self.coeff_jets(&[q[0], q[1], 0.0], 1)?;
        let mu = mu_from(&cj)?;
        Ok([mu[0].value(), mu[1].value(), mu[2].value(), mu[3].value()])
    }

    /// The desingularized field V = (Δ, pΔ, M/2).
    pub fn v_field(&self) -> PseudoVField {
        PseudoVField {
            model: self.clone(),
        }
    }

    /// The blown-up Euler–Lagrange field W = (−ΔF^{-3/2}, −pΔF^{-3/2}, −MF^{-3/2}/2),
    /// defined where F > 0.
    pub fn w_field(&self) -> PseudoWField {
        PseudoWField {
            model: self.clone(),
        }
    }

    /// Length Lagrangian L = √F.
    pub fn lagrangian(&self) -> PseudoLagrangian {
        PseudoLagrangian {
            model: self.clone(),
        }
    }

    /// The scalar f = F of the desingularization.
    pub fn f_scalar(&self) -> PseudoFScalar {
        PseudoFScalar {
            model: self.clone(),
        }
    }

    pub fn euler_lagrange(&self) -> Result<LagrangianLift, FieldError> {
        euler_lagrange_lift(Box::new(self.lagrangian()))
    }

    /// Isotropic direction p₀ = −b/a at a parabolic point.
    pub fn isotropic_root(&self, q: &[f64; 2]) -> Result<f64, GeometryError> {
        let a = self.a.eval(&[q[0], q[1]]).map_err(FieldError::from)?;
        let b = self.b.eval(&[q[0], q[1]]).map_err(FieldError::from)?;
        if a.abs() <= 1e-10 * (1.0 + b.abs()) {
            return Err(GeometryError::DegenerateLeadingCoefficient(a));
        }
        Ok(-b / a)
    }

    /// Newton projection of a base seed onto the parabolic curve Δ = 0.
    pub fn find_parabolic_point(&self, seed: &[f64; 2]) -> Result<[f64; 2], GeometryError> {
        let mut q = *seed;
        for _ in 0..80 {
            let jet = self.delta_jet(&[q[0], q[1], 0.0], 1)?;
            let delta = jet.value();
            if delta.abs() <= 1e-12 * (1.0 + q[0].abs() + q[1].abs()) {
                return Ok(q);
            }
            let grad = [jet.coeff(&[1, 0, 0]), jet.coeff(&[0, 1, 0])];
            let g2 = grad[0] * grad[0] + grad[1] * grad[1];
            if g2 <= 1e-24 {
                return Err(GeometryError::NotDegenerate("Δ", delta));
            }
            q[0] -= delta * grad[0] / g2;
            q[1] -= delta * grad[1] / g2;
        }
        Err(GeometryError::NotDegenerate("Δ", self.delta_value(&q)?))
    }

    /// Conserved quantity of the geodesic flow away from Γ: the value of the
    /// quadratic form along the Euler–Lagrange parametrization, `Δ²/F²`.
    pub fn energy_invariant(&self, phase: &[f64]) -> Result<f64, FieldError> {
        let delta = self.delta_jet(phase, 0)?.value();
        let f = self.f_jet(phase, 0)?.value();
        Ok(delta * delta / (f * f))
    }

    /// Solve `M(q*, ·) = 0` at a parabolic point and report the singular-point
    /// structure of V over it: the isotropic point with its `(2,1,0)`-type
    /// spectrum, and saddle points at non-isotropic roots with `λ₁ + λ₂ ≈ 0`
    /// and the resonant coefficient verdict.
    pub fn singular_structure(
        &self,
        q: &[f64; 2],
    ) -> Result<PseudoSingularStructure, GeometryError> {
        let delta = self.delta_value(q)?;
        if delta.abs() > 1e-8 * (1.0 + q[0].abs() + q[1].abs()) {
            return Err(GeometryError::NotDegenerate("Δ", delta));
        }
        let p0 = self.isotropic_root(q)?;

        // Transversality of the isotropic direction to the parabolic curve.
        let dj = self.delta_jet(&[q[0], q[1], p0], 1)?;
        let (delta_t, delta_x) = (dj.coeff(&[1, 0, 0]), dj.coeff(&[0, 1, 0]));
        let a = self.a.eval(q.as_slice()).map_err(FieldError::from)?;
        let b = self.b.eval(q.as_slice()).map_err(FieldError::from)?;
        let transversal = a * delta_t - b * delta_x;
        if transversal.abs() <= 1e-10 * (1.0 + a.abs() + b.abs()) {
            return Err(GeometryError::TangentIsotropicDirection(transversal));
        }

        let mu = self.mu_values(q)?;
        let mut roots = linalg::real_roots_poly3(mu[0], mu[1], mu[2], mu[3]);
        roots.sort_by(f64::total_cmp);
        let root_scale = roots.iter().fold(1.0f64, |acc, r| acc.max(r.abs()));
        let mut distinct: Vec<f64> = Vec::new();
        let mut degenerate = false;
        for r in &roots {
            if distinct.iter().any(|d| (d - r).abs() <= 1e-7 * root_scale) {
                degenerate = true;
            } else {
                distinct.push(*r);
            }
        }
        let root_structure = if degenerate {
            CubicRootStructure::Degenerate
        } else {
            match distinct.len() {
                1 => CubicRootStructure::OneReal,
                3 => CubicRootStructure::ThreeReal,
                n => CubicRootStructure::Simple(n),
            }
        };

        let v = self.v_field();
        let scale = 1.0 + q[0].abs() + q[1].abs() + p0.abs();
        let isotropic_phase = vec![q[0], q[1], p0];
        let report = spectral::linearize(&v, &isotropic_phase, 1e-7 * scale)?;
        let spectrum = report.eigenvalues.clone();
        let sigma = delta_t + p0 * delta_x;
        let sigma_in_spectrum = spectrum
            .iter()
            .any(|z| (z - Complex64::new(sigma, 0.0)).norm() <= 1e-8 * (1.0 + sigma.abs()));
        let ratio_two_one_zero = has_ratio_two_one_zero(&spectrum);
        let isotropic = IsotropicReport {
            phase_point: isotropic_phase,
            spectrum,
            sigma,
            sigma_in_spectrum,
            ratio_two_one_zero,
        };

        let mut saddles = Vec::new();
        if !degenerate {
            for root in &distinct {
                if (root - p0).abs() <= 1e-7 * root_scale {
                    continue;
                }
                let phase = vec![q[0], q[1], *root];
                let report = spectral::linearize(&v, &phase, 1e-6 * (scale + root.abs()))?;
                let nonzero: Vec<Complex64> = report
                    .eigenvalues
                    .iter()
                    .cloned()
                    .filter(|z| z.norm() > 0.0)
                    .collect();
                let lambda_sum = nonzero.iter().map(|z| z.re).sum::<f64>();
                let psi = resonant_jet_coefficient(&v, &phase, 1, 1).ok();
                saddles.push(SaddleReport {
                    phase_point: phase,
                    spectrum: report.eigenvalues,
                    lambda_sum,
                    psi,
                });
            }
        }

        Ok(PseudoSingularStructure {
            isotropic,
            saddles,
            roots: distinct,
            root_structure,
        })
    }

    /// At random smooth points with F bounded away from zero: the explicit W
    /// equals the Euler–Lagrange lift of √F, the lift is divergence-free, and
    /// `f^{3/2}·W = −V`.
    pub fn verify_consistency(
        &self,
        seed: u64,
        samples: usize,
    ) -> Result<ConsistencyReport, GeometryError> {
        let mut rng = Rng::new(seed);
        let lift = self.euler_lagrange()?;
        let w = self.w_field();
        let v = self.v_field();
        let mut match_w = ResidualTracker::new("euler_lagrange_matches_w", 1e-8);
        let mut div_free = ResidualTracker::new("lift_divergence_free", 1e-8);
        let mut defw = ResidualTracker::new("w_equals_signed_f_pow_v", 1e-8);
        let mut used = 0;
        for _ in 0..samples * 20 {
            if used >= samples {
                break;
            }
            let point = vec![
                rng.uniform(0.2, 1.2),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-0.8, 0.8),
            ];
            let f = self.f_jet(&point, 0)?.value();
            if f < 0.2 {
                continue;
            }
            used += 1;
            let w_explicit = w.value_at(&point)?;
            let w_lift = lift.value_at(&point)?;
            let scale = linalg::norm(&w_explicit);
            let diff: f64 = w_explicit
                .iter()
                .zip(&w_lift)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            match_w.record(diff, scale);

            div_free.record(lift.divergence_at(&point)?.abs(), scale);

            let v_val = v.value_at(&point)?;
            let factor = PSEUDO_ORIENTATION * f.powf(PSEUDO_EXPONENT);
            let residual: f64 = w_explicit
                .iter()
                .zip(&v_val)
                .map(|(wi, vi)| (factor * wi - vi) * (factor * wi - vi))
                .sum::<f64>()
                .sqrt();
            defw.record(residual, linalg::norm(&v_val));
        }
        Ok(ConsistencyReport::from_checks(vec![
            match_w.finish(),
            div_free.finish(),
            defw.finish(),
        ]))
    }
}

fn f_from(cj: &CoeffJets) -> Result<Jet, FieldError> {
    let ap2 = cj.a.mul(&cj.p)?.mul(&cj.p)?;
    let bp = cj.b.mul(&cj.p)?.scale(2.0);
    Ok(ap2.add(&bp)?.add(&cj.c)?)
}

fn mu_from(cj: &CoeffJets) -> Result<[Jet; 4], FieldError> {
    let mu3 =
        cj.a.mul(&cj.a_t.sub(&cj.b_x.scale(2.0))?)?
            .add(&cj.b.mul(&cj.a_x)?)?;
    let mu2 =
        cj.b.mul(&cj.a_t.scale(3.0).sub(&cj.b_x.scale(2.0))?)?
            .add(&cj.c.mul(&cj.a_x)?)?
            .sub(&cj.a.mul(&cj.c_x)?.scale(2.0))?;
    let mu1 =
        cj.b.mul(&cj.b_t.scale(2.0).sub(&cj.c_x.scale(3.0))?)?
            .add(&cj.c.mul(&cj.a_t)?.scale(2.0))?
            .sub(&cj.a.mul(&cj.c_t)?)?;
    let mu0 =
        cj.c.mul(&cj.b_t.scale(2.0).sub(&cj.c_x)?)?
            .sub(&cj.b.mul(&cj.c_t)?)?;
    Ok([mu3, mu2, mu1, mu0])
}

fn m_from(cj: &CoeffJets) -> Result<Jet, FieldError> {
    let [mu3, mu2, mu1, mu0] = mu_from(cj)?;
    // Horner in the p-jet.
    let mut m = mu3;
    for mu in [mu2, mu1, mu0] {
        m = m.mul(&cj.p)?.add(&mu)?;
    }
    Ok(m)
}

/// Desingularized field V = (Δ, pΔ, M/2) on (t, x, p).
#[derive(Debug, Clone)]
pub struct PseudoVField {
    model: PseudoRiemannianModel,
}

impl VectorField for PseudoVField {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        let delta = cj.b.mul(&cj.b)?.sub(&cj.a.mul(&cj.c)?)?;
        let m = m_from(&cj)?;
        let comps = vec![delta.clone(), cj.p.mul(&delta)?, m.scale(0.5)];
        Ok(SeriesVectorField::new(point.to_vec(), comps)?.with_labels(&["t", "x", "p"]))
    }
}

/// Blown-up field W (defined where F > 0).
#[derive(Debug, Clone)]
pub struct PseudoWField {
    model: PseudoRiemannianModel,
}

impl VectorField for PseudoWField {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        let delta = cj.b.mul(&cj.b)?.sub(&cj.a.mul(&cj.c)?)?;
        let m = m_from(&cj)?;
        let f = f_from(&cj)?;
        let f_pow = f.powf(-1.5)?;
        let comps = vec![
            delta.mul(&f_pow)?.neg(),
            cj.p.mul(&delta)?.mul(&f_pow)?.neg(),
            m.mul(&f_pow)?.scale(-0.5),
        ];
        Ok(SeriesVectorField::new(point.to_vec(), comps)?.with_labels(&["t", "x", "p"]))
    }
}

/// Length Lagrangian √F on (t, x, p).
#[derive(Debug, Clone)]
pub struct PseudoLagrangian {
    model: PseudoRiemannianModel,
}

impl ScalarField for PseudoLagrangian {
    fn dim(&self) -> usize {
        3
    }

    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        Ok(f_from(&cj)?.sqrt()?)
    }
}

/// The degeneracy scalar f = F.
#[derive(Debug, Clone)]
pub struct PseudoFScalar {
    model: PseudoRiemannianModel,
}

impl ScalarField for PseudoFScalar {
    fn dim(&self) -> usize {
        3
    }

    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        f_from(&cj)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CubicRootStructure {
    OneReal,
    ThreeReal,
    /// Simple roots of a degree-degenerate M (leading coefficients vanish).
    Simple(usize),
    /// Double roots: the boundary case, reported but not classified.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct IsotropicReport {
    pub phase_point: Vec<f64>,
    pub spectrum: Vec<Complex64>,
    /// σ = Δ_t + p₀Δ_x, the eigenvalue scale of the (2,1,0)-spectrum.
    pub sigma: f64,
    pub sigma_in_spectrum: bool,
    pub ratio_two_one_zero: bool,
}

#[derive(Debug, Clone)]
pub struct SaddleReport {
    pub phase_point: Vec<f64>,
    pub spectrum: Vec<Complex64>,
    /// λ₁ + λ₂ over the nonzero pair; vanishes for Euler–Lagrange flows.
    pub lambda_sum: f64,
    pub psi: Option<ResonantCoefficient>,
}

#[derive(Debug, Clone)]
pub struct PseudoSingularStructure {
    pub isotropic: IsotropicReport,
    pub saddles: Vec<SaddleReport>,
    pub roots: Vec<f64>,
    pub root_structure: CubicRootStructure,
}

fn has_ratio_two_one_zero(spectrum: &[Complex64]) -> bool {
    let zeros = spectrum.iter().filter(|z| z.norm() == 0.0).count();
    let nonzero: Vec<f64> = spectrum
        .iter()
        .filter(|z| z.norm() > 0.0 && z.im == 0.0)
        .map(|z| z.re)
        .collect();
    if zeros != 1 || nonzero.len() != 2 {
        return false;
    }
    let (big, small) = if nonzero[0].abs() >= nonzero[1].abs() {
        (nonzero[0], nonzero[1])
    } else {
        (nonzero[1], nonzero[0])
    };
    (big / small - 2.0).abs() <= 1e-8 * (1.0 + (big / small).abs())
}
