//! Almost-Riemannian metrics from an orthonormal frame
//! `(∂/∂x, 2x·v⁻¹(x,y)·∂/∂y)` that degenerates on the line `{x = 0}`.
//!
//! The desingularized geodesic field is built directly in `(x, y, p)`
//! coordinates, where it stays smooth for any nonvanishing frame factor
//! (the intermediate `t = x²` chart is smooth only for even `v`):
//! `V = (x·v, 2x²·v·p, M)` with
//! `μ₃ = v²(v − x·v_x)`, `μ₂ = −2x²·v_y`, `μ₁ = v − 2x·v_x`, `μ₀ = 0`.
//! Every point `(0, y₀, 0)` is singular with spectrum `(v, v, 0)`: a
//! bicritical node once the rank probe confirms the resonant coefficient
//! vanishes.

use super::{ConsistencyReport, GeometryError, ResidualTracker};
use crate::expr::Expression;
use crate::fields::{euler_lagrange_lift, FieldError, LagrangianLift, ScalarField, VectorField};
use crate::jets::{Jet, SeriesVectorField};
use crate::linalg;
use crate::util::Rng;

#[derive(Debug, Clone)]
pub struct AlmostRiemannianModel {
    v: Expression,
}

/// `W = f^{-r}·V` in the `(t, y, p)` chart with `r = 3/2`.
pub const ALMOST_EXPONENT: f64 = 1.5;

impl AlmostRiemannianModel {
    /// Build the model, checking the frame factor is nonvanishing on the
    /// working window `[−3/4, 3/4]²`.
    pub fn new(v: Expression) -> Result<Self, GeometryError> {
        if v.free_vars().len() != 2 {
            return Err(GeometryError::Field(FieldError::DimensionMismatch {
                expected: 2,
                got: v.free_vars().len(),
            }));
        }
        let mut sign = 0.0f64;
        for i in -6i32..=6 {
            for j in -6i32..=6 {
                let (x, y) = (i as f64 / 8.0, j as f64 / 8.0);
                let value = v.eval(&[x, y]).map_err(FieldError::from)?;
                if value == 0.0 || (sign != 0.0 && value.signum() != sign) {
                    return Err(GeometryError::VanishingFrameFactor { x, y });
                }
                sign = value.signum();
            }
        }
        Ok(AlmostRiemannianModel { v })
    }

    pub fn parse(v: &str) -> Result<Self, GeometryError> {
        Self::new(crate::expr::parse(v, &["x", "y"])?)
    }

    /// The smooth desingularized field in (x, y, p).
    pub fn v_field(&self) -> AlmostVField {
        AlmostVField {
            model: self.clone(),
        }
    }

    /// Phase singular point over the base point (0, y*).
    pub fn singular_point(&self, y_star: f64) -> [f64; 3] {
        [0.0, y_star, 0.0]
    }

    pub fn frame_value(&self, x: f64, y: f64) -> Result<f64, FieldError> {
        self.v.eval(&[x, y]).map_err(FieldError::from)
    }

    /// Even/odd parts of the frame factor: `v(x,y) = v₁(x², y) + x·v₂(x², y)`,
    /// evaluated at `t > 0` through the two square-root branches.
    pub fn even_odd_parts(&self, t: f64, y: f64) -> Result<(f64, f64), FieldError> {
        assert!(t > 0.0, "even/odd split needs t > 0");
        let s = t.sqrt();
        let plus = self.v.eval(&[s, y]).map_err(FieldError::from)?;
        let minus = self.v.eval(&[-s, y]).map_err(FieldError::from)?;
        Ok(((plus + minus) / 2.0, (plus - minus) / (2.0 * s)))
    }

    fn tilde_v_jet(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        // ṽ(t, y) = v₁ + √t·v₂ through jets of v at (±√t, y).
        let t_jet = Jet::variable(3, order, 0, point[0]);
        let y_jet = Jet::variable(3, order, 1, point[1]);
        let s = t_jet.sqrt()?;
        let plus = self.v.eval_with_jets(&[s.clone(), y_jet.clone()])?;
        let minus = self.v.eval_with_jets(&[s.neg(), y_jet])?;
        let v1 = plus.add(&minus)?.scale(0.5);
        let v2 = plus.sub(&minus)?.scale(0.5).div(&s)?;
        Ok(v1.add(&s.mul(&v2)?)?)
    }

    /// The `(t, y, p)`-chart field `(2ṽt, 2ṽtp, M̃)`, smooth for even frame
    /// factors and valid at `t > 0` in general.
    pub fn chart_field_value(&self, point: &[f64]) -> Result<Vec<f64>, FieldError> {
        let order = 1;
        let tv = self.tilde_v_jet(point, order + 1)?;
        let t_jet = Jet::variable(3, order + 1, 0, point[0]);
        let p_jet = Jet::variable(3, order + 1, 2, point[2]);
        let m = tilde_m(&tv, &t_jet, &p_jet)?;
        let head = tv.mul(&t_jet)?.scale(2.0);
        Ok(vec![head.value(), head.mul(&p_jet)?.value(), m.value()])
    }

    /// Lagrangian √(F/t) in the (t, y, p) chart, F = ṽ²p² + 1.
    pub fn lagrangian(&self) -> AlmostLagrangian {
        AlmostLagrangian {
            model: self.clone(),
        }
    }

    /// W in the (t, y, p) chart, defined at t > 0.
    pub fn w_field(&self) -> AlmostWField {
        AlmostWField {
            model: self.clone(),
        }
    }

    /// f = t·g with g = (2/ṽ)^{2/3}·F in the (t, y, p) chart.
    pub fn f_scalar(&self) -> AlmostFScalar {
        AlmostFScalar {
            model: self.clone(),
        }
    }

    pub fn euler_lagrange(&self) -> Result<LagrangianLift, FieldError> {
        euler_lagrange_lift(Box::new(self.lagrangian()))
    }

    /// At random points with t > 0: the explicit W equals the Euler–Lagrange
    /// lift of √(F/t), the lift is divergence-free, `f^{3/2}·W` equals the
    /// chart field, and the chart field at `t = x²` matches the smooth
    /// `(x, y, p)` field.
    pub fn verify_consistency(
        &self,
        seed: u64,
        samples: usize,
    ) -> Result<ConsistencyReport, GeometryError> {
        let mut rng = Rng::new(seed);
        let lift = self.euler_lagrange()?;
        let w = self.w_field();
        let f = self.f_scalar();
        let v58 = self.v_field();
        let mut match_w = ResidualTracker::new("euler_lagrange_matches_w", 1e-8);
        let mut div_free = ResidualTracker::new("lift_divergence_free", 1e-8);
        let mut defw = ResidualTracker::new("w_equals_f_pow_v", 1e-8);
        let mut chart = ResidualTracker::new("chart_change_consistent", 1e-9);
        for _ in 0..samples {
            let point = vec![
                rng.uniform(0.1, 0.9),
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

            let chart_v = self.chart_field_value(&point)?;
            let f_val = f.value_at(&point)?;
            let factor = f_val.powf(ALMOST_EXPONENT);
            let residual: f64 = w_explicit
                .iter()
                .zip(&chart_v)
                .map(|(wi, vi)| (factor * wi - vi) * (factor * wi - vi))
                .sum::<f64>()
                .sqrt();
            defw.record(residual, linalg::norm(&chart_v));

            // Chart change x² = t (positive branch): ṫ = 2x·ẋ, ẏ, ṗ agree.
            let x = point[0].sqrt();
            let phase_x = vec![x, point[1], point[2]];
            let v_smooth = v58.value_at(&phase_x)?;
            let transformed = vec![2.0 * x * v_smooth[0], v_smooth[1], v_smooth[2]];
            let residual: f64 = chart_v
                .iter()
                .zip(&transformed)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            chart.record(residual, linalg::norm(&chart_v));
        }
        Ok(ConsistencyReport::from_checks(vec![
            match_w.finish(),
            div_free.finish(),
            defw.finish(),
            chart.finish(),
        ]))
    }
}

fn tilde_m(tv: &Jet, t: &Jet, p: &Jet) -> Result<Jet, FieldError> {
    // M̃ with μ̃₃ = ṽ³ − 2tṽ²ṽ_t, μ̃₂ = −2tṽ_y, μ̃₁ = ṽ − 4tṽ_t, μ̃₀ = 0.
    let order = tv.order() - 1;
    let tvl = tv.truncated(order);
    let tl = t.truncated(order);
    let pl = p.truncated(order);
    let tv_t = tv.partial(0)?;
    let tv_y = tv.partial(1)?;
    let tv2 = tvl.mul(&tvl)?;
    let mu3 = tv2.mul(&tvl)?.sub(&tl.mul(&tv2)?.mul(&tv_t)?.scale(2.0))?;
    let mu2 = tl.mul(&tv_y)?.scale(-2.0);
    let mu1 = tvl.sub(&tl.mul(&tv_t)?.scale(4.0))?;
    let mut m = mu3;
    for mu in [mu2, mu1] {
        m = m.mul(&pl)?.add(&mu)?;
    }
    Ok(m.mul(&pl)?)
}

/// The smooth desingularized field `(x·v, 2x²·v·p, M)` on (x, y, p).
#[derive(Debug, Clone)]
pub struct AlmostVField {
    model: AlmostRiemannianModel,
}

impl VectorField for AlmostVField {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let x_hi = Jet::variable(3, order + 1, 0, point[0]);
        let y_hi = Jet::variable(3, order + 1, 1, point[1]);
        let v_hi = self.model.v.eval_with_jets(&[x_hi.clone(), y_hi])?;
        let v_x = v_hi.partial(0)?;
        let v_y = v_hi.partial(1)?;
        let v = v_hi.truncated(order);
        let x = Jet::variable(3, order, 0, point[0]);
        let p = Jet::variable(3, order, 2, point[2]);
        let x2 = x.mul(&x)?;

        let xvx = x.mul(&v_x)?;
        let mu3 = v.mul(&v)?.mul(&v.sub(&xvx)?)?;
        let mu2 = x2.mul(&v_y)?.scale(-2.0);
        let mu1 = v.sub(&xvx.scale(2.0))?;
        let mut m = mu3;
        for mu in [mu2, mu1] {
            m = m.mul(&p)?.add(&mu)?;
        }
        m = m.mul(&p)?;

        let comps = vec![x.mul(&v)?, x2.mul(&v)?.mul(&p)?.scale(2.0), m];
        Ok(SeriesVectorField::new(point.to_vec(), comps)?.with_labels(&["x", "y", "p"]))
    }
}

/// Lagrangian √(F/t) in the (t, y, p) chart.
#[derive(Debug, Clone)]
pub struct AlmostLagrangian {
    model: AlmostRiemannianModel,
}

impl ScalarField for AlmostLagrangian {
    fn dim(&self) -> usize {
        3
    }

    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let tv = self.model.tilde_v_jet(point, order + 1)?.truncated(order);
        let t = Jet::variable(3, order, 0, point[0]);
        let p = Jet::variable(3, order, 2, point[2]);
        let f = tv.mul(&tv)?.mul(&p)?.mul(&p)?.add_scalar(1.0);
        Ok(f.div(&t)?.sqrt()?)
    }
}

/// W in the (t, y, p) chart.
#[derive(Debug, Clone)]
pub struct AlmostWField {
    model: AlmostRiemannianModel,
}

impl VectorField for AlmostWField {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let tv = self.model.tilde_v_jet(point, order + 1)?;
        let t = Jet::variable(3, order + 1, 0, point[0]);
        let p = Jet::variable(3, order + 1, 2, point[2]);
        let m = tilde_m(&tv, &t, &p)?;
        let tvl = tv.truncated(order);
        let tl = t.truncated(order);
        let pl = p.truncated(order);
        let f = tvl.mul(&tvl)?.mul(&pl)?.mul(&pl)?.add_scalar(1.0);
        let f_pow = f.powf(-1.5)?;
        let tv2 = tvl.mul(&tvl)?;
        let head = tv2.mul(&tl.powf(-0.5)?)?.mul(&f_pow)?;
        let comps = vec![
            head.clone(),
            head.mul(&pl)?,
            tvl.scale(0.5).mul(&tl.powf(-1.5)?)?.mul(&f_pow)?.mul(&m)?,
        ];
        Ok(SeriesVectorField::new(point.to_vec(), comps)?.with_labels(&["t", "y", "p"]))
    }
}

/// f = t·g, g = (2/ṽ)^{2/3}·F in the (t, y, p) chart. The fractional power
/// is computed as the cube root of the square, keeping it real for negative
/// frame factors.
#[derive(Debug, Clone)]
pub struct AlmostFScalar {
    model: AlmostRiemannianModel,
}

impl ScalarField for AlmostFScalar {
    fn dim(&self) -> usize {
        3
    }

    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        let tv = self.model.tilde_v_jet(point, order)?;
        let t = Jet::variable(3, order, 0, point[0]);
        let p = Jet::variable(3, order, 2, point[2]);
        let f_form = tv.mul(&tv)?.mul(&p)?.mul(&p)?.add_scalar(1.0);
        let ratio = Jet::constant(3, order, 2.0).div(&tv)?;
        let g = ratio.mul(&ratio)?.powf(1.0 / 3.0)?.mul(&f_form)?;
        Ok(t.mul(&g)?)
    }
}

// ---------------------------------------------------------------------------
// Closed-form oracle for the frame (∂/∂x, x·∂/∂y)
// ---------------------------------------------------------------------------
//
// With v ≡ 2 the metric is dx² + dy²/x² and the geodesics through (0, y*)
// are, with one free parameter c (recovered exactly from any phase sample),
//   y(x) = y* + (arcsin(cx) − c·x·√(1 − c²x²)) / (2c²),
//   p(x) = (c/2)·x/√(1 − c²x²),
// plus the straight line y = y* for c = 0. Derived from the Hamiltonian
// flow of ½(p_x² + x²p_y²); the self-check test below verifies the family
// against the field equation itself.

pub fn grushin_reference_y(y_star: f64, c: f64, x: f64) -> f64 {
    if c == 0.0 {
        return y_star;
    }
    let u = c * x;
    y_star + (u.asin() - u * (1.0 - u * u).sqrt()) / (2.0 * c * c)
}

/// Recover the family parameter from a phase sample: c = 2p/(x·√(1 + 4p²)).
pub fn grushin_recover_c(x: f64, p: f64) -> Option<f64> {
    if x.abs() < 1e-12 {
        return None;
    }
    Some(2.0 * p / (x * (1.0 + 4.0 * p * p).sqrt()))
}

#[derive(Debug, Clone, Copy)]
pub struct GrushinFit {
    pub c: f64,
    /// Spread of the parameter recovered across samples; the family is exact,
    /// so this doubles as an oracle residual.
    pub c_spread: f64,
}

/// Fit the family parameter from every usable sample of a phase curve
/// `(x, y, p)` and report the spread.
pub fn grushin_fit(samples: &[(f64, f64, f64)]) -> GrushinFit {
    let mut values: Vec<f64> = samples
        .iter()
        .filter(|(x, _, p)| x.abs() > 1e-3 && p.abs() > 1e-12)
        .filter_map(|(x, _, p)| grushin_recover_c(*x, *p))
        .collect();
    if values.is_empty() {
        return GrushinFit {
            c: 0.0,
            c_spread: 0.0,
        };
    }
    values.sort_by(f64::total_cmp);
    let c = values[values.len() / 2];
    let spread = values.iter().fold(0.0f64, |acc, v| acc.max((v - c).abs()));
    GrushinFit {
        c,
        c_spread: spread,
    }
}

/// Sup error of the projected curve against the closed form on
/// `|x| ≤ window` (defaulting to 0.9/|c|).
pub fn grushin_sup_error(
    samples: &[(f64, f64, f64)],
    y_star: f64,
    c: f64,
    window: Option<f64>,
) -> f64 {
    let window = window.unwrap_or(if c == 0.0 {
        f64::INFINITY
    } else {
        0.9 / c.abs()
    });
    let mut worst: f64 = 0.0;
    for &(x, y, _) in samples {
        if x.abs() > window {
            continue;
        }
        worst = worst.max((y - grushin_reference_y(y_star, c, x)).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grushin_field_and_spectrum() {
        // v ≡ 2: M = 2p(4p² + 1), spectrum (2, 2, 0) at (0, y₀, 0).
        let model = AlmostRiemannianModel::parse("2").unwrap();
        let v = model.v_field();
        let value = v.value_at(&[0.3, 0.0, 0.5]).unwrap();
        assert!((value[0] - 0.6).abs() < 1e-14);
        assert!((value[1] - 2.0 * 0.09 * 2.0 * 0.5 / 2.0 * 2.0).abs() < 1e-12);
        let p = 0.5;
        assert!((value[2] - 2.0 * p * (4.0 * p * p + 1.0)).abs() < 1e-12);

        let report = crate::spectral::linearize(&v, &model.singular_point(0.7), 1e-10).unwrap();
        let spec = report.real_spectrum();
        assert!((spec[0] - 2.0).abs() < 1e-12);
        assert!((spec[1] - 2.0).abs() < 1e-12);
        assert_eq!(spec[2], 0.0);
    }

    #[test]
    fn variable_frame_spectrum_is_v_v_zero() {
        let model = AlmostRiemannianModel::parse("2 + y^2").unwrap();
        for y0 in [-0.5, 0.0, 1.1] {
            let v = model.v_field();
            let report = crate::spectral::linearize(&v, &model.singular_point(y0), 1e-10).unwrap();
            let spec = report.real_spectrum();
            let expected = 2.0 + y0 * y0;
            assert!((spec[0] - expected).abs() < 1e-10);
            assert!((spec[1] - expected).abs() < 1e-10);
            assert_eq!(spec[2], 0.0);
        }
    }

    #[test]
    fn grushin_rank_probe_is_bicritical() {
        let model = AlmostRiemannianModel::parse("2").unwrap();
        let probe =
            crate::normalform::rank_probe_phi(&model.v_field(), &model.singular_point(0.0), 1e-10)
                .unwrap();
        assert_eq!(probe.rank, 1);
        assert!(probe.phi_zero);
    }

    #[test]
    fn frame_factor_must_not_vanish() {
        assert!(matches!(
            AlmostRiemannianModel::parse("x"),
            Err(GeometryError::VanishingFrameFactor { .. })
        ));
    }

    #[test]
    fn even_odd_split_reconstructs_v() {
        let model = AlmostRiemannianModel::parse("2 + x/2 + x^2*y/4").unwrap();
        for (x, y) in [(0.5, 0.3), (0.9, -0.7)] {
            let (v1, v2) = model.even_odd_parts(x * x, y).unwrap();
            let direct = model.frame_value(x, y).unwrap();
            assert!((v1 + x * v2 - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn consistency_even_frame() {
        let model = AlmostRiemannianModel::parse("2 + x^2 + y^2/4").unwrap();
        let report = model.verify_consistency(9, 30).unwrap();
        assert!(report.passed, "{:?}", report.checks);
    }

    #[test]
    fn consistency_odd_frame_positive_branch() {
        // Odd-in-x factors keep the chart consistency on the x > 0 branch.
        let model = AlmostRiemannianModel::parse("2 + x/2").unwrap();
        let report = model.verify_consistency(13, 30).unwrap();
        assert!(report.passed, "{:?}", report.checks);
    }

    #[test]
    fn closed_form_satisfies_the_flow_equation() {
        // Independent check: along y(x), p(x) the field (2x, 4x²p, 2p(4p²+1))
        // forces dp/dx = p(4p² + 1)/x; verify by finite differences.
        let c = 0.8f64;
        let p_of_x = |x: f64| (c / 2.0) * x / (1.0 - c * c * x * x).sqrt();
        let h = 1e-6;
        for x in [0.2, 0.5, 0.9] {
            let p = p_of_x(x);
            let dp = (p_of_x(x + h) - p_of_x(x - h)) / (2.0 * h);
            let rhs = p * (4.0 * p * p + 1.0) / x;
            assert!((dp - rhs).abs() <= 1e-5 * (1.0 + rhs.abs()), "x = {x}");
        }
        // And dy/dx = 2xp.
        let y_of_x = |x: f64| grushin_reference_y(0.0, c, x);
        for x in [0.2, 0.5, 0.9] {
            let dy = (y_of_x(x + h) - y_of_x(x - h)) / (2.0 * h);
            assert!((dy - 2.0 * x * p_of_x(x)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn parameter_recovery_is_exact_on_the_family() {
        let c = -1.3f64;
        for x in [0.1, 0.3, 0.5] {
            let p = (c / 2.0) * x / (1.0 - c * c * x * x).sqrt();
            let rec = grushin_recover_c(x, p).unwrap();
            assert!((rec - c).abs() < 1e-12);
        }
    }
}
