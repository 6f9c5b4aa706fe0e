//! Klein-type metrics `(α·dx² + γ·dt²)/t^{2n}` on the half-plane, positive
//! definite away from the pole line `{t = 0}`.
//!
//! The geodesic field desingularizes to `V = (t, pt, −M/(2αγ))` with
//! `f = t·g^{1/(n+1)}`, `g = F^{3/2}/(αγ)`, and exponent `r = n + 1`. Every
//! point `(0, x*, 0)` is singular with spectrum `(n, 1, 0)`; for `n = 1` the
//! surviving node coefficient is governed by `γ_x(0, x*)`.

use super::{ConsistencyReport, GeometryError, ResidualTracker};
use crate::expr::Expression;
use crate::fields::{euler_lagrange_lift, FieldError, LagrangianLift, ScalarField, VectorField};
use crate::jets::{Jet, SeriesVectorField};
use crate::linalg;
use crate::util::Rng;

#[derive(Debug, Clone)]
pub struct KleinModel {
    alpha: Expression,
    gamma: Expression,
    n: u32,
}

struct CoeffJets {
    alpha: Jet,
    gamma: Jet,
    alpha_t: Jet,
    alpha_x: Jet,
    gamma_t: Jet,
    gamma_x: Jet,
    t: Jet,
    p: Jet,
}

impl KleinModel {
    /// Build the model, checking positivity of both coefficients on the
    /// working window `[−3/4, 3/4]²`.
    pub fn new(alpha: Expression, gamma: Expression, n: u32) -> Result<Self, GeometryError> {
        assert!(n >= 1, "pole exponent n must be at least 1");
        for expr in [&alpha, &gamma] {
            if expr.free_vars().len() != 2 {
                return Err(GeometryError::Field(FieldError::DimensionMismatch {
                    expected: 2,
                    got: expr.free_vars().len(),
                }));
            }
            for i in -6i32..=6 {
                for j in -6i32..=6 {
                    let (t, x) = (i as f64 / 8.0, j as f64 / 8.0);
                    let value = expr.eval(&[t, x]).map_err(FieldError::from)?;
                    if value <= 0.0 {
                        return Err(GeometryError::PositivityViolated { value, t, x });
                    }
                }
            }
        }
        Ok(KleinModel { alpha, gamma, n })
    }

    pub fn parse(alpha: &str, gamma: &str, n: u32) -> Result<Self, GeometryError> {
        let alpha = crate::expr::parse(alpha, &["t", "x"])?;
        let gamma = crate::expr::parse(gamma, &["t", "x"])?;
        Self::new(alpha, gamma, n)
    }

    pub fn exponent(&self) -> f64 {
        (self.n + 1) as f64
    }

    pub fn pole_order(&self) -> u32 {
        self.n
    }

    fn coeff_jets(&self, point: &[f64], order: usize) -> Result<CoeffJets, FieldError> {
        let t_hi = Jet::variable(3, order + 1, 0, point[0]);
        let x_hi = Jet::variable(3, order + 1, 1, point[1]);
        let args = [t_hi, x_hi];
        let alpha = self.alpha.eval_with_jets(&args)?;
        let gamma = self.gamma.eval_with_jets(&args)?;
        Ok(CoeffJets {
            alpha_t: alpha.partial(0)?,
            alpha_x: alpha.partial(1)?,
            gamma_t: gamma.partial(0)?,
            gamma_x: gamma.partial(1)?,
            alpha: alpha.truncated(order),
            gamma: gamma.truncated(order),
            t: Jet::variable(3, order, 0, point[0]),
            p: Jet::variable(3, order, 2, point[2]),
        })
    }

    /// F = α·p² + γ.
    pub fn f_form_jet(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.coeff_jets(point, order)?;
        f_from(&cj)
    }

    /// The cubic M with its pole-line coefficients.
    pub fn m_jet(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.coeff_jets(point, order)?;
        m_from(&cj, self.n)
    }

    pub fn v_field(&self) -> KleinVField {
        KleinVField {
            model: self.clone(),
        }
    }

    pub fn w_field(&self) -> KleinWField {
        KleinWField {
            model: self.clone(),
        }
    }

    /// L = √F / tⁿ, smooth away from the pole line.
    pub fn lagrangian(&self) -> KleinLagrangian {
        KleinLagrangian {
            model: self.clone(),
        }
    }

    /// f = t·g^{1/(n+1)} with g = F^{3/2}/(αγ); smooth everywhere, vanishing
    /// exactly on {t = 0}.
    pub fn f_scalar(&self) -> KleinFScalar {
        KleinFScalar {
            model: self.clone(),
        }
    }

    pub fn euler_lagrange(&self) -> Result<LagrangianLift, FieldError> {
        euler_lagrange_lift(Box::new(self.lagrangian()))
    }

    /// Phase singular point over the base point (0, x*).
    pub fn singular_point(&self, x_star: f64) -> [f64; 3] {
        [0.0, x_star, 0.0]
    }

    /// γ_x(0, x*), the explicit criterion for the n = 1 node coefficient.
    pub fn gamma_x_at(&self, x_star: f64) -> Result<f64, FieldError> {
        let jet = self.gamma.eval_jet(&[0.0, x_star], 1)?;
        Ok(jet.deriv(&[0, 1]))
    }

    /// At random points off the pole line: the explicit W equals the
    /// Euler–Lagrange lift of √F/tⁿ, the lift is divergence-free, and
    /// `f^{n+1}·W = V`.
    pub fn verify_consistency(
        &self,
        seed: u64,
        samples: usize,
    ) -> Result<ConsistencyReport, GeometryError> {
        let mut rng = Rng::new(seed);
        let lift = self.euler_lagrange()?;
        let w = self.w_field();
        let v = self.v_field();
        let f = self.f_scalar();
        let mut match_w = ResidualTracker::new("euler_lagrange_matches_w", 1e-8);
        let mut div_free = ResidualTracker::new("lift_divergence_free", 1e-8);
        let mut defw = ResidualTracker::new("w_equals_f_pow_v", 1e-8);
        for _ in 0..samples {
            let point = vec![
                rng.uniform(0.25, 1.0),
                rng.uniform(-0.9, 0.9),
                rng.uniform(-0.8, 0.8),
            ];
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
            let f_val = f.value_at(&point)?;
            let factor = f_val.powi((self.n + 1) as i32);
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
    Ok(cj.alpha.mul(&cj.p)?.mul(&cj.p)?.add(&cj.gamma)?)
}

fn m_from(cj: &CoeffJets, n: u32) -> Result<Jet, FieldError> {
    let two_n = 2.0 * n as f64;
    let mu3 = cj
        .alpha
        .mul(&cj.t.mul(&cj.alpha_t)?.sub(&cj.alpha.scale(two_n))?)?;
    let mu2 = cj.t.mul(
        &cj.alpha_x
            .mul(&cj.gamma)?
            .sub(&cj.alpha.mul(&cj.gamma_x)?.scale(2.0))?,
    )?;
    let mu1 =
        cj.t.mul(
            &cj.alpha_t
                .mul(&cj.gamma)?
                .scale(2.0)
                .sub(&cj.alpha.mul(&cj.gamma_t)?)?,
        )?
        .sub(&cj.alpha.mul(&cj.gamma)?.scale(two_n))?;
    let mu0 = cj.t.mul(&cj.gamma.mul(&cj.gamma_x)?)?.neg();
    let mut m = mu3;
    for mu in [mu2, mu1, mu0] {
        m = m.mul(&cj.p)?.add(&mu)?;
    }
    Ok(m)
}

/// Desingularized field V = (t, pt, −M/(2αγ)).
#[derive(Debug, Clone)]
pub struct KleinVField {
    model: KleinModel,
}

impl VectorField for KleinVField {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        let m = m_from(&cj, self.model.n)?;
        let denom = cj.alpha.mul(&cj.gamma)?.scale(2.0);
        let comps = vec![cj.t.clone(), cj.p.mul(&cj.t)?, m.div(&denom)?.neg()];
        Ok(SeriesVectorField::new(point.to_vec(), comps)?.with_labels(&["t", "x", "p"]))
    }
}

/// Blown-up field W (defined off the pole line).
#[derive(Debug, Clone)]
pub struct KleinWField {
    model: KleinModel,
}

impl VectorField for KleinWField {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        let n = self.model.n as i32;
        let m = m_from(&cj, self.model.n)?;
        let f = f_from(&cj)?;
        let f_pow = f.powf(-1.5)?;
        let t_pow = cj.t.powi(-n)?;
        let ag = cj.alpha.mul(&cj.gamma)?;
        let head = ag.mul(&t_pow)?.mul(&f_pow)?;
        let comps = vec![
            head.clone(),
            cj.p.mul(&head)?,
            cj.t.powi(-n - 1)?.mul(&m)?.mul(&f_pow)?.scale(-0.5),
        ];
        Ok(SeriesVectorField::new(point.to_vec(), comps)?.with_labels(&["t", "x", "p"]))
    }
}

#[derive(Debug, Clone)]
pub struct KleinLagrangian {
    model: KleinModel,
}

impl ScalarField for KleinLagrangian {
    fn dim(&self) -> usize {
        3
    }

    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        let sqrt_f = f_from(&cj)?.sqrt()?;
        Ok(sqrt_f.mul(&cj.t.powi(-(self.model.n as i32))?)?)
    }
}

#[derive(Debug, Clone)]
pub struct KleinFScalar {
    model: KleinModel,
}

impl ScalarField for KleinFScalar {
    fn dim(&self) -> usize {
        3
    }

    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let cj = self.model.coeff_jets(point, order)?;
        let f_form = f_from(&cj)?;
        let g = f_form.powf(1.5)?.div(&cj.alpha.mul(&cj.gamma)?)?;
        let root = g.powf(1.0 / (self.model.n as f64 + 1.0))?;
        Ok(cj.t.mul(&root)?)
    }
}

// ---------------------------------------------------------------------------
// Closed-form oracle for α ≡ γ ≡ 1, n = 1
// ---------------------------------------------------------------------------

/// Geodesics of `(dx² + dt²)/t²` through a point `(0, x*)` of the pole line:
/// the vertical line `x = x*` and circles centered on the line through the
/// point, `(x − c)² + t² = (c − x*)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfPlaneGeodesic {
    Line,
    Circle { center_x: f64, radius: f64 },
}

/// Fit the circle through `(0, x*)` from the best-conditioned sample of a
/// curve (largest |x − x*|). Returns the vertical line when the curve never
/// leaves `x = x*`.
pub fn fit_half_plane_geodesic(x_star: f64, samples: &[(f64, f64)]) -> HalfPlaneGeodesic {
    let best = samples
        .iter()
        .max_by(|a, b| (a.1 - x_star).abs().total_cmp(&(b.1 - x_star).abs()));
    match best {
        Some(&(t, x)) if (x - x_star).abs() > 1e-9 * (1.0 + t.abs()) => {
            let center_x = (x * x + t * t - x_star * x_star) / (2.0 * (x - x_star));
            HalfPlaneGeodesic::Circle {
                center_x,
                radius: (center_x - x_star).abs(),
            }
        }
        _ => HalfPlaneGeodesic::Line,
    }
}

/// Sup distance between curve samples (restricted to |t| ≤ window) and the
/// fitted closed-form geodesic.
pub fn half_plane_sup_error(
    fit: &HalfPlaneGeodesic,
    x_star: f64,
    samples: &[(f64, f64)],
    t_window: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for &(t, x) in samples {
        if t.abs() > t_window {
            continue;
        }
        let err = match fit {
            HalfPlaneGeodesic::Line => (x - x_star).abs(),
            HalfPlaneGeodesic::Circle { center_x, radius } => {
                (((x - center_x) * (x - center_x) + t * t).sqrt() - radius).abs()
            }
        };
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_plane_field() {
        // α = γ = 1, n = 1: M = −2p(p² + 1), V = (t, pt, p(p² + 1)).
        let model = KleinModel::parse("1", "1", 1).unwrap();
        let m = model.m_jet(&[0.5, 0.0, 0.7], 0).unwrap().value();
        let p = 0.7;
        assert!((m + 2.0 * p * (p * p + 1.0)).abs() < 1e-13);
        let v = model.v_field().value_at(&[0.5, 0.0, 0.7]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14);
        assert!((v[1] - 0.35).abs() < 1e-14);
        assert!((v[2] - p * (p * p + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn spectrum_at_the_pole_line() {
        for (n, expected) in [(1u32, vec![1.0, 1.0, 0.0]), (2, vec![2.0, 1.0, 0.0])] {
            let model = KleinModel::parse("1", "1", n).unwrap();
            let v = model.v_field();
            let report = crate::spectral::linearize(&v, &model.singular_point(0.3), 1e-10).unwrap();
            let spec = report.real_spectrum();
            for (got, want) in spec.iter().zip(&expected) {
                assert!((got - want).abs() < 1e-10, "n = {n}: {spec:?}");
            }
        }
    }

    #[test]
    fn rank_probe_matches_gamma_x_criterion() {
        // n = 1: φ(0) = 0 ⟺ γ_x(0, x*) = 0.
        let flat = KleinModel::parse("1", "1", 1).unwrap();
        let probe =
            crate::normalform::rank_probe_phi(&flat.v_field(), &flat.singular_point(0.0), 1e-10)
                .unwrap();
        assert!(probe.phi_zero);
        assert_eq!(flat.gamma_x_at(0.0).unwrap(), 0.0);

        let tilted = KleinModel::parse("1", "1 + x", 1).unwrap();
        let probe = crate::normalform::rank_probe_phi(
            &tilted.v_field(),
            &tilted.singular_point(0.0),
            1e-10,
        )
        .unwrap();
        assert!(!probe.phi_zero);
        assert!(tilted.gamma_x_at(0.0).unwrap() > 0.0);
    }

    #[test]
    fn pole_line_cubic_has_only_the_zero_root() {
        let model = KleinModel::parse("1 + t^2/4", "1 + x^2/4", 2).unwrap();
        for x_star in [-0.5, 0.0, 0.7] {
            assert!(model.m_jet(&[0.0, x_star, 0.0], 0).unwrap().value().abs() < 1e-13);
            for p in [-2.0, -0.3, 0.4, 1.5] {
                let m = model.m_jet(&[0.0, x_star, p], 0).unwrap().value();
                assert!(m.abs() > 1e-3, "unexpected root near p = {p}");
            }
        }
    }

    #[test]
    fn positivity_is_enforced() {
        assert!(matches!(
            KleinModel::parse("1", "x", 1),
            Err(GeometryError::PositivityViolated { .. })
        ));
    }

    #[test]
    fn lagrangian_consistency() {
        let model = KleinModel::parse("1", "1", 1).unwrap();
        let report = model.verify_consistency(5, 40).unwrap();
        assert!(report.passed, "{:?}", report.checks);
        let div = report
            .checks
            .iter()
            .find(|c| c.name == "lift_divergence_free")
            .unwrap();
        assert!(
            div.max_relative_residual <= 1e-9,
            "D_W = {:.3e}",
            div.max_relative_residual
        );

        let general = KleinModel::parse("1 + t^2/4", "1 + x^2/4", 2).unwrap();
        let report = general.verify_consistency(6, 30).unwrap();
        assert!(report.passed, "{:?}", report.checks);
    }

    #[test]
    fn circle_fit_recovers_center() {
        // Sample a circle through (0, 0) centered at (0, 2).
        let samples: Vec<(f64, f64)> = (1..40)
            .map(|k| {
                let phi = std::f64::consts::PI * k as f64 / 80.0;
                (2.0 * phi.sin(), 2.0 - 2.0 * phi.cos())
            })
            .collect();
        match fit_half_plane_geodesic(0.0, &samples) {
            HalfPlaneGeodesic::Circle { center_x, radius } => {
                assert!((center_x - 2.0).abs() < 1e-12);
                assert!((radius - 2.0).abs() < 1e-12);
            }
            HalfPlaneGeodesic::Line => panic!("expected a circle"),
        }
        let fit = fit_half_plane_geodesic(0.0, &samples);
        assert!(half_plane_sup_error(&fit, 0.0, &samples, 2.0) < 1e-12);
    }

    #[test]
    fn half_plane_oracle_satisfies_the_flow_equation() {
        // Independent check that circles through (0, x*) solve dp/dt =
        // p(1 + p²)/t for the α = γ = 1, n = 1 field, via finite differences
        // along the circle.
        let (x_star, c) = (0.0f64, 1.4f64);
        let radius = (c - x_star).abs();
        let x_of_t = |t: f64| c - (radius * radius - t * t).sqrt();
        let h = 1e-4;
        for t in [0.3, 0.6, 0.9] {
            let p = (x_of_t(t + h) - x_of_t(t - h)) / (2.0 * h);
            let dp = (x_of_t(t + h) - 2.0 * x_of_t(t) + x_of_t(t - h)) / (h * h);
            let rhs = p * (1.0 + p * p) / t;
            assert!((dp - rhs).abs() <= 1e-4 * (1.0 + rhs.abs()), "t = {t}");
        }
    }
}
