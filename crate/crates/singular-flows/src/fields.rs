//! Singular fields `W = f^{-r}·V` and their structural checks.
//!
//! `V` stays smooth while `W` blows up on the degeneracy surface
//! `Γ = {f = 0}`. The checks here are the operational forms of the
//! divergence identity, the Γ-invariance criterion, the first-integral
//! criterion, and the limit conditions that must hold at singular points of
//! `V` on Γ. Limits are verified numerically from geometric point sequences,
//! never symbolically.

use crate::expr::{EvalError, Expression};
use crate::jets::{divergence, Jet, JetError, SeriesVectorField};
use crate::util::{local_scale, Rng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("exponent r = {0} rejected; positive r required (use with_signed_exponent for r < 0)")]
    InvalidExponent(f64),
    #[error("point lies on the singular surface (f = {0:.3e})")]
    OnSingularSurface(f64),
    #[error("sample expected on the singular surface but f = {0:.3e}")]
    NotOnSingularSurface(f64),
    #[error("gradient of f degenerates at {0:?}")]
    DegenerateGradient(Vec<f64>),
    #[error("limit samples do not stabilize along direction {direction:?}: {detail}")]
    InsufficientDecay { direction: Vec<f64>, detail: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not a singular point of V (|V| = {0:.3e})")]
    NotSingularPoint(f64),
    #[error("fractional power of a negative value f = {0:.3e}")]
    NegativeBase(f64),
    #[error("unsupported evaluation: {0}")]
    Unsupported(String),
}

// ---------------------------------------------------------------------------
// Field abstractions
// ---------------------------------------------------------------------------

/// Smooth vector field, evaluable as truncated series around any point.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError>;

    fn value_at(&self, point: &[f64]) -> Result<Vec<f64>, FieldError> {
        Ok(self.series_at(point, 0)?.values())
    }

    fn jacobian_at(&self, point: &[f64]) -> Result<Vec<Vec<f64>>, FieldError> {
        Ok(self.series_at(point, 1)?.jacobian())
    }

    fn divergence_at(&self, point: &[f64]) -> Result<f64, FieldError> {
        Ok(divergence(&self.series_at(point, 1)?)?.value())
    }
}

/// Smooth scalar field with the same evaluation contract.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError>;

    fn value_at(&self, point: &[f64]) -> Result<f64, FieldError> {
        Ok(self.jet_at(point, 0)?.value())
    }

    fn gradient_at(&self, point: &[f64]) -> Result<Vec<f64>, FieldError> {
        let jet = self.jet_at(point, 1)?;
        let dim = self.dim();
        Ok((0..dim)
            .map(|i| {
                let mut m = vec![0usize; dim];
                m[i] = 1;
                jet.coeff(&m)
            })
            .collect())
    }
}

/// Vector field given by one parsed expression per component.
pub struct ExprVectorField {
    components: Vec<Expression>,
}

impl ExprVectorField {
    pub fn new(components: Vec<Expression>) -> Result<Self, FieldError> {
        let dim = components.len();
        for c in &components {
            if c.free_vars().len() != dim {
                return Err(FieldError::DimensionMismatch {
                    expected: dim,
                    got: c.free_vars().len(),
                });
            }
        }
        Ok(ExprVectorField { components })
    }

    pub fn parse(sources: &[&str], variables: &[&str]) -> Result<Self, crate::expr::ParseError> {
        let components = sources
            .iter()
            .map(|s| crate::expr::parse(s, variables))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExprVectorField { components })
    }
}

impl VectorField for ExprVectorField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let jets = self
            .components
            .iter()
            .map(|c| c.eval_jet(point, order))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesVectorField::new(point.to_vec(), jets)?)
    }
}

/// Scalar field backed by a parsed expression.
pub struct ExprScalarField {
    expr: Expression,
}

impl ExprScalarField {
    pub fn new(expr: Expression) -> Self {
        ExprScalarField { expr }
    }

    pub fn parse(source: &str, variables: &[&str]) -> Result<Self, crate::expr::ParseError> {
        Ok(ExprScalarField {
            expr: crate::expr::parse(source, variables)?,
        })
    }
}

impl ScalarField for ExprScalarField {
    fn dim(&self) -> usize {
        self.expr.free_vars().len()
    }

    fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet, FieldError> {
        Ok(self.expr.eval_jet(point, order)?)
    }
}

/// `φ·V` for a nonvanishing scalar factor; used to exercise direction-field
/// invariance of the checks.
pub struct ScaledVectorField<V, S> {
    pub inner: V,
    pub factor: S,
}

impl<V: VectorField, S: ScalarField> VectorField for ScaledVectorField<V, S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let base = self.inner.series_at(point, order)?;
        let factor = self.factor.jet_at(point, order)?;
        let components = base
            .components()
            .iter()
            .map(|c| c.mul(&factor))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesVectorField::new(point.to_vec(), components)?)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// SingularField
// ---------------------------------------------------------------------------

/// The pair `(V, f)` with exponent `r`, representing `W = f^{-r}·V` with
/// degeneracy surface `Γ = {f = 0}`.
pub struct SingularField {
    v: Box<dyn VectorField>,
    f: Box<dyn ScalarField>,
    r: f64,
}

impl SingularField {
    pub fn new(
        v: Box<dyn VectorField>,
        f: Box<dyn ScalarField>,
        r: f64,
    ) -> Result<Self, FieldError> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(r > 0.0) {
            return Err(FieldError::InvalidExponent(r));
        }
        Self::build(v, f, r)
    }

    /// Opt-in constructor for negative exponents.
    pub fn with_signed_exponent(
        v: Box<dyn VectorField>,
        f: Box<dyn ScalarField>,
        r: f64,
    ) -> Result<Self, FieldError> {
        if r == 0.0 || !r.is_finite() {
            return Err(FieldError::InvalidExponent(r));
        }
        Self::build(v, f, r)
    }

    fn build(v: Box<dyn VectorField>, f: Box<dyn ScalarField>, r: f64) -> Result<Self, FieldError> {
        if v.dim() != f.dim() {
            return Err(FieldError::DimensionMismatch {
                expected: v.dim(),
                got: f.dim(),
            });
        }
        if !(2..=4).contains(&v.dim()) {
            return Err(FieldError::DimensionMismatch {
                expected: 3,
                got: v.dim(),
            });
        }
        Ok(SingularField { v, f, r })
    }

    pub fn v(&self) -> &dyn VectorField {
        self.v.as_ref()
    }

    pub fn f(&self) -> &dyn ScalarField {
        self.f.as_ref()
    }

    pub fn exponent(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// Scale-aware membership threshold for Γ.
    pub fn gamma_threshold(point: &[f64]) -> f64 {
        1e-10 * (1.0 + crate::linalg::norm(point))
    }

    pub fn on_gamma(&self, point: &[f64]) -> Result<bool, FieldError> {
        Ok(self.f.value_at(point)?.abs() <= Self::gamma_threshold(point))
    }

    /// Newton projection of a seed onto Γ along the gradient of f.
    pub fn project_to_gamma(&self, seed: &[f64]) -> Result<Vec<f64>, FieldError> {
        let mut x = seed.to_vec();
        for _ in 0..60 {
            let fj = self.f.jet_at(&x, 1)?;
            let f0 = fj.value();
            if f0.abs() <= Self::gamma_threshold(&x) {
                return Ok(x);
            }
            let grad = self.f.gradient_at(&x)?;
            let g2 = dot(&grad, &grad);
            if g2 <= 1e-24 {
                return Err(FieldError::DegenerateGradient(x));
            }
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= f0 * gi / g2;
            }
        }
        Err(FieldError::NotOnSingularSurface(self.f.value_at(&x)?))
    }

    fn power_value(&self, f0: f64, exponent: f64) -> Result<f64, FieldError> {
        if f0 > 0.0 {
            return Ok(f0.powf(exponent));
        }
        if exponent.fract() == 0.0 {
            return Ok(f0.powi(exponent as i32));
        }
        Err(FieldError::NegativeBase(f0))
    }

    fn power_jet(&self, f_jet: &Jet, exponent: f64) -> Result<Jet, FieldError> {
        if exponent.fract() == 0.0 {
            return Ok(f_jet.powi(exponent as i32)?);
        }
        if f_jet.value() > 0.0 {
            return Ok(f_jet.powf(exponent)?);
        }
        Err(FieldError::NegativeBase(f_jet.value()))
    }

    /// Evaluate `W(x)` and its divergence two ways: directly through jets of
    /// `f^{-r}·V`, and through the identity
    /// `f^{r+1}·D_W = f·D_V − r·L_V f`.
    pub fn eval_w(&self, point: &[f64]) -> Result<WEvaluation, FieldError> {
        let f_jet = self.f.jet_at(point, 2)?;
        let f0 = f_jet.value();
        if f0.abs() <= Self::gamma_threshold(point) {
            return Err(FieldError::OnSingularSurface(f0));
        }
        let v_series = self.v.series_at(point, 2)?;
        let v_values = v_series.values();
        let grad_f = self.f.gradient_at(point)?;
        let div_v = divergence(&v_series)?.value();
        let lie_v_f = dot(&v_values, &grad_f);

        // Identity route, valid for either sign of f.
        let fr_div_w = div_v - self.r * lie_v_f / f0;
        let div_w_identity = fr_div_w * self.power_value(f0, -self.r)?;

        // Direct route through jets of f^{-r}·V.
        let pow_jet = self.power_jet(&f_jet, -self.r)?;
        let w_jets: Vec<Jet> = v_series
            .components()
            .iter()
            .map(|c| c.mul(&pow_jet))
            .collect::<Result<Vec<_>, _>>()?;
        let w_series = SeriesVectorField::new(point.to_vec(), w_jets)?;
        let w = w_series.values();
        let div_w_direct = divergence(&w_series)?.value();

        Ok(WEvaluation {
            w,
            f_value: f0,
            div_v,
            lie_v_f,
            div_w_direct,
            div_w_identity,
            fr_div_w,
            discrepancy: (div_w_direct - div_w_identity).abs(),
        })
    }

    /// Γ-invariance check (the operational form of the first degeneracy
    /// condition): `L_V f` must vanish on Γ.
    pub fn check_gamma_invariant(
        &self,
        samples: &[Vec<f64>],
        tol: f64,
    ) -> Result<CheckReport, FieldError> {
        let mut report = CheckReport::new(tol);
        for point in samples {
            let f0 = self.f.value_at(point)?;
            if f0.abs() > 1e3 * Self::gamma_threshold(point) {
                return Err(FieldError::NotOnSingularSurface(f0));
            }
            let grad = self.f.gradient_at(point)?;
            let gnorm = crate::linalg::norm(&grad);
            if gnorm <= 1e-12 * (1.0 + crate::linalg::norm(point)) {
                return Err(FieldError::DegenerateGradient(point.clone()));
            }
            let v = self.v.value_at(point)?;
            let residual = dot(&v, &grad).abs();
            let scale = local_scale(&[crate::linalg::norm(&v)]) * local_scale(&[gnorm]);
            report.push(point.clone(), residual, scale);
        }
        Ok(report)
    }

    /// First-integral check: `L_V f ≡ 0` together with the identity
    /// `f^r·D_W = D_V` at off-Γ samples. The two residuals must agree.
    pub fn check_first_integral(
        &self,
        samples: &[Vec<f64>],
        tol: f64,
    ) -> Result<FirstIntegralReport, FieldError> {
        let mut lie_report = CheckReport::new(tol);
        let mut identity_report = CheckReport::new(tol);
        let mut pairs = Vec::new();
        for point in samples {
            let f0 = self.f.value_at(point)?;
            if f0.abs() <= Self::gamma_threshold(point) {
                return Err(FieldError::OnSingularSurface(f0));
            }
            let v = self.v.value_at(point)?;
            let grad = self.f.gradient_at(point)?;
            let lie = dot(&v, &grad);
            let div_v = self.v.divergence_at(point)?;
            let fr_div_w = div_v - self.r * lie / f0;

            let lie_scale = local_scale(&[crate::linalg::norm(&v) * crate::linalg::norm(&grad)]);
            lie_report.push(point.clone(), lie.abs(), lie_scale);
            let id_scale = local_scale(&[div_v]);
            identity_report.push(point.clone(), (fr_div_w - div_v).abs(), id_scale);
            pairs.push((fr_div_w, div_v));
        }
        let passed = lie_report.passed && identity_report.passed;
        Ok(FirstIntegralReport {
            lie_report,
            identity_report,
            pairs,
            passed,
        })
    }

    /// Verify the limit conditions at a singular point `x* ∈ Γ` with
    /// `V(x*) = 0`: both `f^r·D_W` and `f^{r+1}·∂D_W/∂xᵢ` must tend to zero.
    /// Limits are estimated along geometric sequences `x* + 2^{-k}·d` for
    /// several directions transversal to Γ, with Aitken extrapolation of the
    /// sampled values.
    pub fn check_conditions_at_singular_point(
        &self,
        x_star: &[f64],
        tol: f64,
        seed: u64,
    ) -> Result<ConditionsReport, FieldError> {
        let dim = self.dim();
        let v_star = self.v.value_at(x_star)?;
        let vnorm = crate::linalg::norm(&v_star);
        if vnorm > 1e-7 * local_scale(&[crate::linalg::norm(x_star)]) {
            return Err(FieldError::NotSingularPoint(vnorm));
        }
        let f_star = self.f.value_at(x_star)?;
        if f_star.abs() > 1e3 * Self::gamma_threshold(x_star) {
            return Err(FieldError::NotOnSingularSurface(f_star));
        }
        let grad_star = self.f.gradient_at(x_star)?;
        let gnorm = crate::linalg::norm(&grad_star);
        if gnorm <= 1e-12 {
            return Err(FieldError::DegenerateGradient(x_star.to_vec()));
        }
        let normal: Vec<f64> = grad_star.iter().map(|g| g / gnorm).collect();

        let mut directions = vec![normal.clone(), normal.iter().map(|x| -x).collect()];
        let mut rng = Rng::new(seed);
        while directions.len() < 7 {
            let d = rng.unit_vector(dim);
            if dot(&d, &normal).abs() >= 0.3 {
                directions.push(d);
            }
        }

        let mut per_direction = Vec::new();
        let mut passed = true;
        for direction in directions {
            let outcome = self.limit_along(x_star, &direction, tol)?;
            passed &= outcome.passed;
            per_direction.push(outcome);
        }
        Ok(ConditionsReport {
            passed,
            tol,
            directions: per_direction,
        })
    }

    fn limit_along(
        &self,
        x_star: &[f64],
        direction: &[f64],
        tol: f64,
    ) -> Result<DirectionLimit, FieldError> {
        let dim = self.dim();
        let mut q1_seq = Vec::new();
        let mut q2_seq: Vec<Vec<f64>> = vec![Vec::new(); dim];
        let mut scale: f64 = 1.0;
        for k in 4..=20 {
            let h = 2f64.powi(-k);
            let x: Vec<f64> = x_star
                .iter()
                .zip(direction)
                .map(|(a, d)| a + h * d)
                .collect();
            let f_jet = self.f.jet_at(&x, 2)?;
            let f0 = f_jet.value();
            if f0 == 0.0 {
                continue;
            }
            let v_series = self.v.series_at(&x, 2)?;
            let v = v_series.values();
            let jac = v_series.jacobian();
            let div_jet = divergence(&v_series)?;
            let div_v = div_jet.value();
            let grad_f: Vec<f64> = (0..dim)
                .map(|i| {
                    let mut m = vec![0usize; dim];
                    m[i] = 1;
                    f_jet.coeff(&m)
                })
                .collect();
            let lie = dot(&v, &grad_f);
            let q1 = div_v - self.r * lie / f0;
            q1_seq.push(q1);
            scale = scale.max(div_v.abs()).max((self.r * lie / f0).abs());

            for i in 0..dim {
                // ∂ᵢ of the divergence identity, all terms smooth:
                // f^{r+1}∂ᵢD_W = D_V ∂ᵢf + f ∂ᵢD_V − r⟨∂ᵢV, ∇f⟩ − r⟨V, ∇∂ᵢf⟩
                //                − (r+1)(f^r D_W) ∂ᵢf
                let di_div_v = {
                    let mut m = vec![0usize; dim];
                    m[i] = 1;
                    div_jet.deriv(&m)
                };
                let di_v_dot_grad: f64 = (0..dim).map(|j| jac[j][i] * grad_f[j]).sum();
                let v_dot_hess: f64 = (0..dim)
                    .map(|j| {
                        let mut m = vec![0usize; dim];
                        m[i] += 1;
                        m[j] += 1;
                        v[j] * f_jet.deriv(&m)
                    })
                    .sum();
                let rhs = div_v * grad_f[i] + f0 * di_div_v
                    - self.r * di_v_dot_grad
                    - self.r * v_dot_hess;
                let q2 = rhs - (self.r + 1.0) * q1 * grad_f[i];
                q2_seq[i].push(q2);
                scale = scale.max(rhs.abs() / 10.0);
            }
        }

        if q1_seq.len() < 5 {
            return Err(FieldError::InsufficientDecay {
                direction: direction.to_vec(),
                detail: "too few usable samples".into(),
            });
        }
        self.check_stable(&q1_seq, direction, scale)?;
        let q1_limit = aitken_limit(&q1_seq);
        let mut q2_limits = Vec::with_capacity(dim);
        for seq in &q2_seq {
            self.check_stable(seq, direction, scale)?;
            q2_limits.push(aitken_limit(seq));
        }
        let gate = tol * scale;
        let passed = q1_limit.abs() <= gate && q2_limits.iter().all(|q| q.abs() <= gate);
        Ok(DirectionLimit {
            direction: direction.to_vec(),
            fr_div_w_limit: q1_limit,
            derivative_limits: q2_limits,
            scale,
            passed,
        })
    }

    fn check_stable(&self, seq: &[f64], direction: &[f64], scale: f64) -> Result<(), FieldError> {
        let n = seq.len();
        let tail = &seq[n.saturating_sub(5)..];
        let growing = tail.windows(2).all(|w| w[1].abs() > w[0].abs() * 1.5);
        if growing && tail[tail.len() - 1].abs() > 1e3 * scale {
            return Err(FieldError::InsufficientDecay {
                direction: direction.to_vec(),
                detail: format!(
                    "samples blow up, tail magnitude {:.3e}",
                    tail[tail.len() - 1]
                ),
            });
        }
        Ok(())
    }
}

/// Aitken Δ² extrapolation of the tail of a sequence; falls back to the last
/// value for sequences that are already flat.
fn aitken_limit(seq: &[f64]) -> f64 {
    let n = seq.len();
    if n < 3 {
        return seq[n - 1];
    }
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let denom = c - 2.0 * b + a;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
    if denom.abs() <= 1e-9 * scale {
        return c;
    }
    let extrapolated = c - (c - b) * (c - b) / denom;
    // Guard against Aitken amplifying noise on a converged flat tail.
    if (extrapolated - c).abs() > (c - b).abs() * 10.0 {
        c
    } else {
        extrapolated
    }
}

#[derive(Debug, Clone)]
pub struct WEvaluation {
    pub w: Vec<f64>,
    pub f_value: f64,
    pub div_v: f64,
    pub lie_v_f: f64,
    pub div_w_direct: f64,
    pub div_w_identity: f64,
    /// `f^r·D_W`, computed through the identity (defined for either sign of f).
    pub fr_div_w: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone)]
pub struct SampleCheck {
    pub point: Vec<f64>,
    pub residual: f64,
    pub scale: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub tol: f64,
    pub samples: Vec<SampleCheck>,
    pub max_relative_residual: f64,
    pub passed: bool,
}

impl CheckReport {
    fn new(tol: f64) -> Self {
        CheckReport {
            tol,
            samples: Vec::new(),
            max_relative_residual: 0.0,
            passed: true,
        }
    }

    fn push(&mut self, point: Vec<f64>, residual: f64, scale: f64) {
        let ok = residual <= self.tol * scale;
        self.passed &= ok;
        self.max_relative_residual = self.max_relative_residual.max(residual / scale);
        self.samples.push(SampleCheck {
            point,
            residual,
            scale,
            ok,
        });
    }
}

#[derive(Debug, Clone)]
pub struct FirstIntegralReport {
    pub lie_report: CheckReport,
    pub identity_report: CheckReport,
    /// (f^r·D_W, D_V) value pairs per sample.
    pub pairs: Vec<(f64, f64)>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct DirectionLimit {
    pub direction: Vec<f64>,
    pub fr_div_w_limit: f64,
    pub derivative_limits: Vec<f64>,
    pub scale: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct ConditionsReport {
    pub passed: bool,
    pub tol: f64,
    pub directions: Vec<DirectionLimit>,
}

// ---------------------------------------------------------------------------
// Euler–Lagrange and implicit-equation lifts
// ---------------------------------------------------------------------------

/// The `(t,x,p)`-space field `(L_pp, p·L_pp, L_x − L_tp − p·L_xp)` generated
/// by a Lagrangian; divergence-free wherever the Lagrangian is smooth.
pub struct LagrangianLift {
    lagrangian: Box<dyn ScalarField>,
}

impl LagrangianLift {
    pub fn new(lagrangian: Box<dyn ScalarField>) -> Result<Self, FieldError> {
        if lagrangian.dim() != 3 {
            return Err(FieldError::DimensionMismatch {
                expected: 3,
                got: lagrangian.dim(),
            });
        }
        Ok(LagrangianLift { lagrangian })
    }

    pub fn lagrangian(&self) -> &dyn ScalarField {
        self.lagrangian.as_ref()
    }
}

/// Build the Euler–Lagrange lift of a Lagrangian on `(t, x, p)`.
pub fn euler_lagrange_lift(lagrangian: Box<dyn ScalarField>) -> Result<LagrangianLift, FieldError> {
    LagrangianLift::new(lagrangian)
}

impl VectorField for LagrangianLift {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let l = self.lagrangian.jet_at(point, order + 2)?;
        let l_p = l.partial(2)?;
        let l_pp = l_p.partial(2)?;
        let p_jet = Jet::variable(3, order, 2, point[2]);
        let w1 = l_pp.clone();
        let w2 = p_jet.mul(&l_pp)?;
        let l_x = l.partial(1)?.truncated(order);
        let l_tp = l_p.partial(0)?;
        let l_xp = l_p.partial(1)?;
        let w3 = l_x.sub(&l_tp)?.sub(&p_jet.mul(&l_xp)?)?;
        Ok(SeriesVectorField::new(point.to_vec(), vec![w1, w2, w3])?.with_labels(&["t", "x", "p"]))
    }
}

/// Lift of an implicit first-order equation `F(t, x, p) = ε` to the
/// single-valued field `(F_p, p·F_p, −(F_t + p·F_x))` on `(t, x, p)`-space.
pub struct ImplicitLift {
    surface: Box<dyn ScalarField>,
}

pub fn implicit_ode_lift(surface: Box<dyn ScalarField>) -> Result<ImplicitLift, FieldError> {
    if surface.dim() != 3 {
        return Err(FieldError::DimensionMismatch {
            expected: 3,
            got: surface.dim(),
        });
    }
    Ok(ImplicitLift { surface })
}

impl VectorField for ImplicitLift {
    fn dim(&self) -> usize {
        3
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let f = self.surface.jet_at(point, order + 1)?;
        let f_p = f.partial(2)?;
        let f_t = f.partial(0)?;
        let f_x = f.partial(1)?;
        let p_jet = Jet::variable(3, order, 2, point[2]);
        let w1 = f_p.clone();
        let w2 = p_jet.mul(&f_p)?;
        let w3 = f_t.add(&p_jet.mul(&f_x)?)?.neg();
        Ok(SeriesVectorField::new(point.to_vec(), vec![w1, w2, w3])?.with_labels(&["t", "x", "p"]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1(r: f64) -> SingularField {
        let v = ExprVectorField::parse(&["x", "y", "z"], &["x", "y", "z"]).unwrap();
        let f = ExprScalarField::parse("x + y + z", &["x", "y", "z"]).unwrap();
        SingularField::new(Box::new(v), Box::new(f), r).unwrap()
    }

    fn example2(f_src: &str, r: f64) -> SingularField {
        let v = ExprVectorField::parse(&["2*x", "y", "0"], &["x", "y", "z"]).unwrap();
        let f = ExprScalarField::parse(f_src, &["x", "y", "z"]).unwrap();
        SingularField::new(Box::new(v), Box::new(f), r).unwrap()
    }

    #[test]
    fn eval_w_example1() {
        // D_W = (3−r)·f^{−r}; at r=2, x=(1,0,0): f=1, D_W = 1.
        let sf = example1(2.0);
        let w = sf.eval_w(&[1.0, 0.0, 0.0]).unwrap();
        assert!((w.div_w_direct - 1.0).abs() < 1e-10);
        assert!((w.div_w_identity - 1.0).abs() < 1e-10);
        assert!(w.discrepancy < 1e-10);
        assert!((w.fr_div_w - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eval_w_example2_isotropic_surface() {
        // f = x − y², r = 3/2: f^r·D_W = 3 − 2r = 0.
        let sf = example2("x - y^2", 1.5);
        let w = sf.eval_w(&[1.0, 0.5, 0.3]).unwrap();
        assert!(w.fr_div_w.abs() < 1e-10);
        assert!(w.discrepancy < 1e-10);
    }

    #[test]
    fn eval_w_example2_plane() {
        // f = y, r = 3: f^r·D_W = 3 − r = 0.
        let sf = example2("y", 3.0);
        let w = sf.eval_w(&[0.4, 0.7, -2.0]).unwrap();
        assert!(w.fr_div_w.abs() < 1e-10);
    }

    #[test]
    fn negative_exponents_are_opt_in() {
        let build = |r: f64, signed: bool| {
            let v = ExprVectorField::parse(&["x", "y", "z"], &["x", "y", "z"]).unwrap();
            let f = ExprScalarField::parse("x + y + z", &["x", "y", "z"]).unwrap();
            if signed {
                SingularField::with_signed_exponent(Box::new(v), Box::new(f), r)
            } else {
                SingularField::new(Box::new(v), Box::new(f), r)
            }
        };
        assert!(matches!(
            build(-2.0, false),
            Err(FieldError::InvalidExponent(_))
        ));
        assert!(matches!(
            build(0.0, false),
            Err(FieldError::InvalidExponent(_))
        ));
        let sf = build(-2.0, true).unwrap();
        let w = sf.eval_w(&[1.0, 0.0, 0.0]).unwrap();
        // f^r·D_W = D_V − r·L_V f / f = 3 + 2 = 5 at r = −2.
        assert!((w.fr_div_w - 5.0).abs() < 1e-12);
    }

    #[test]
    fn eval_w_rejects_points_on_gamma() {
        let sf = example1(2.0);
        assert!(matches!(
            sf.eval_w(&[0.0, 0.0, 0.0]),
            Err(FieldError::OnSingularSurface(_))
        ));
    }

    #[test]
    fn gamma_invariant_examples() {
        let sf = example1(3.0);
        let samples = vec![
            vec![1.0, -0.5, -0.5],
            vec![0.3, 0.2, -0.5],
            vec![-1.0, 2.0, -1.0],
        ];
        assert!(sf.check_gamma_invariant(&samples, 1e-8).unwrap().passed);

        // L_V f = 2f vanishes on Γ = {x = y²}.
        let sf2 = example2("x - y^2", 1.5);
        let samples2 = vec![
            vec![0.25, 0.5, 1.0],
            vec![1.0, -1.0, 0.3],
            vec![0.0, 0.0, -2.0],
        ];
        assert!(sf2.check_gamma_invariant(&samples2, 1e-8).unwrap().passed);

        // Transversal flow fails.
        let v = ExprVectorField::parse(&["1", "0", "0"], &["x", "y", "z"]).unwrap();
        let f = ExprScalarField::parse("x", &["x", "y", "z"]).unwrap();
        let sf3 = SingularField::new(Box::new(v), Box::new(f), 1.0).unwrap();
        let report = sf3
            .check_gamma_invariant(&[vec![0.0, 1.0, 2.0]], 1e-8)
            .unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn first_integral_examples() {
        // f = z is a first integral of Example 2: f^r·D_W = 3 = D_V.
        let sf = example2("z", 2.0);
        let samples = vec![vec![0.5, 0.2, 1.0], vec![-0.3, 0.8, 2.0]];
        let report = sf.check_first_integral(&samples, 1e-8).unwrap();
        assert!(report.passed);
        for (fr, dv) in &report.pairs {
            assert!((fr - 3.0).abs() < 1e-10);
            assert!((dv - 3.0).abs() < 1e-10);
        }

        // f = x+y+z is not a first integral of Example 1.
        let sf1 = example1(3.0);
        assert!(
            !sf1.check_first_integral(&[vec![1.0, 0.0, 0.0]], 1e-8)
                .unwrap()
                .passed
        );

        // Resonance monomial ξη is conserved by the saddle, D_V = 0.
        let v = ExprVectorField::parse(&["x", "-y", "0"], &["x", "y", "z"]).unwrap();
        let f = ExprScalarField::parse("x*y", &["x", "y", "z"]).unwrap();
        let sf2 = SingularField::new(Box::new(v), Box::new(f), 1.0).unwrap();
        let report = sf2
            .check_first_integral(&[vec![0.7, 0.4, 0.1]], 1e-8)
            .unwrap();
        assert!(report.passed);
        assert!(report.pairs[0].1.abs() < 1e-12);
    }

    #[test]
    fn conditions_example1() {
        // Second condition holds only for r = 3.
        let pass = example1(3.0)
            .check_conditions_at_singular_point(&[0.0, 0.0, 0.0], 1e-8, 1)
            .unwrap();
        assert!(pass.passed);
        let fail = example1(2.0)
            .check_conditions_at_singular_point(&[0.0, 0.0, 0.0], 1e-8, 1)
            .unwrap();
        assert!(!fail.passed);
    }

    #[test]
    fn conditions_example2() {
        // f = x − y² passes exactly at r = 3/2, on the z-axis.
        let pass = example2("x - y^2", 1.5)
            .check_conditions_at_singular_point(&[0.0, 0.0, 7.0], 1e-8, 1)
            .unwrap();
        assert!(pass.passed);
        let fail = example2("x - y^2", 1.0)
            .check_conditions_at_singular_point(&[0.0, 0.0, 7.0], 1e-8, 1)
            .unwrap();
        assert!(!fail.passed);

        // f = y passes at r = 3.
        let pass_y = example2("y", 3.0)
            .check_conditions_at_singular_point(&[0.0, 0.0, -1.0], 1e-8, 1)
            .unwrap();
        assert!(pass_y.passed);

        // f = z is a first integral, so f^r·D_W = D_V = 3 ≠ 0 and the check fails.
        let fail_z = example2("z", 2.0)
            .check_conditions_at_singular_point(&[0.0, 0.0, 0.0], 1e-8, 1)
            .unwrap();
        assert!(!fail_z.passed);
    }

    #[test]
    fn free_particle_lift() {
        let l = ExprScalarField::parse("p^2/2", &["t", "x", "p"]).unwrap();
        let lift = euler_lagrange_lift(Box::new(l)).unwrap();
        let value = lift.value_at(&[0.3, -0.2, 0.9]).unwrap();
        assert!((value[0] - 1.0).abs() < 1e-12);
        assert!((value[1] - 0.9).abs() < 1e-12);
        assert!(value[2].abs() < 1e-12);
        assert!(lift.divergence_at(&[0.3, -0.2, 0.9]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn relativistic_lift_is_divergence_free() {
        let l = ExprScalarField::parse("sqrt(p^2 + 1)", &["t", "x", "p"]).unwrap();
        let lift = euler_lagrange_lift(Box::new(l)).unwrap();
        let mut rng = Rng::new(3);
        for _ in 0..25 {
            let point = vec![
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            ];
            let div = lift.divergence_at(&point).unwrap();
            assert!(div.abs() < 1e-8, "D_W = {div} at {point:?}");
        }
    }

    #[test]
    fn implicit_lift_parabola() {
        // F = p² − t lifts to (2p, 2p², 1); cross-checked by finite differences.
        let f = ExprScalarField::parse("p^2 - t", &["t", "x", "p"]).unwrap();
        let lift = implicit_ode_lift(Box::new(f)).unwrap();
        let point = [0.5, 1.0, 0.7];
        let value = lift.value_at(&point).unwrap();

        let f = |t: f64, _x: f64, p: f64| p * p - t;
        let h = 1e-6;
        let f_p =
            (f(point[0], point[1], point[2] + h) - f(point[0], point[1], point[2] - h)) / (2.0 * h);
        let f_t =
            (f(point[0] + h, point[1], point[2]) - f(point[0] - h, point[1], point[2])) / (2.0 * h);
        let f_x = 0.0;
        assert!((value[0] - f_p).abs() < 1e-8);
        assert!((value[1] - point[2] * f_p).abs() < 1e-8);
        assert!((value[2] + (f_t + point[2] * f_x)).abs() < 1e-8);
        assert!((value[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn implicit_lift_singular_point() {
        // Both F_p and F_t + p·F_x vanish at (0, x, 0) for F = p² + t·p:
        // a singular point of the lift, by definition.
        let f = ExprScalarField::parse("p^2 + t*p", &["t", "x", "p"]).unwrap();
        let lift = implicit_ode_lift(Box::new(f)).unwrap();
        let value = lift.value_at(&[0.0, 0.8, 0.0]).unwrap();
        assert!(crate::linalg::norm(&value) < 1e-14);
        let off = lift.value_at(&[0.0, 0.8, 0.3]).unwrap();
        assert!(crate::linalg::norm(&off) > 0.1);
    }

    #[test]
    fn implicit_lift_trivial() {
        let f = ExprScalarField::parse("p", &["t", "x", "p"]).unwrap();
        let lift = implicit_ode_lift(Box::new(f)).unwrap();
        let value = lift.value_at(&[0.1, 0.2, 0.5]).unwrap();
        assert_eq!(value, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn divergence_identity_random_points() {
        // |f^{r+1}·D_W − (f·D_V − r·L_V f)| small at random off-Γ points.
        let sf = example2("x - y^2", 1.5);
        let mut rng = Rng::new(11);
        for _ in 0..50 {
            let point = vec![
                rng.uniform(1.0, 2.0),
                rng.uniform(-0.5, 0.5),
                rng.uniform(-1.0, 1.0),
            ];
            let w = sf.eval_w(&point).unwrap();
            let lhs = w.f_value.powf(sf.exponent() + 1.0) * w.div_w_direct;
            let rhs = w.f_value * w.div_v - sf.exponent() * w.lie_v_f;
            let scale = local_scale(&[lhs, rhs]);
            assert!((lhs - rhs).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn scaled_field_preserves_check_outcomes() {
        // Multiplying V by the nonvanishing factor 1 + x² must not change
        // pass/fail outcomes.
        let v = ExprVectorField::parse(&["x", "y", "z"], &["x", "y", "z"]).unwrap();
        let phi = ExprScalarField::parse("1 + x^2", &["x", "y", "z"]).unwrap();
        let scaled = ScaledVectorField {
            inner: v,
            factor: phi,
        };
        let f = ExprScalarField::parse("x + y + z", &["x", "y", "z"]).unwrap();
        let sf = SingularField::new(Box::new(scaled), Box::new(f), 3.0).unwrap();
        let samples = vec![vec![1.0, -0.5, -0.5], vec![0.3, 0.2, -0.5]];
        assert!(sf.check_gamma_invariant(&samples, 1e-8).unwrap().passed);
        assert!(
            sf.check_conditions_at_singular_point(&[0.0, 0.0, 0.0], 1e-8, 5)
                .unwrap()
                .passed
        );
    }
}
