//! Truncated multivariate Taylor-series (jet) arithmetic in up to four
//! variables.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar quantity around a base
//! point, truncated at a fixed total degree. All derivatives in this crate
//! (divergences, Lie derivatives, linearizations, the series coefficients of
//! the flattening algorithm) are obtained through this module rather than by
//! symbolic differentiation or finite differences.

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

/// Largest number of variables a jet may carry.
pub const MAX_VARS: usize = 4;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 8;
/// Default truncation order used by evaluation entry points.
pub const DEFAULT_ORDER: usize = 4;

/// Multi-index with unused trailing variables fixed at zero.
pub type MultiIndex = [u8; MAX_VARS];

#[derive(Debug, Error, PartialEq)]
pub enum JetError {
    #[error("jet shape mismatch: ({0} vars, order {1}) vs ({2} vars, order {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("division by a series with zero constant term")]
    DivisionBySingularSeries,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("order {0} exceeds supported maximum {MAX_ORDER}")]
    OrderTooLarge(usize),
    #[error("{0} variables outside supported range 1..={MAX_VARS}")]
    UnsupportedVars(usize),
    #[error("cannot lower the order of an order-0 jet")]
    DerivativeUnderflow,
}

struct IndexTable {
    indices: Vec<MultiIndex>,
    rank: HashMap<MultiIndex, usize>,
}

fn enumerate(nvars: usize, order: usize) -> Vec<MultiIndex> {
    // Graded ordering: by total degree, lexicographic within a degree.
    let mut out = Vec::new();
    for degree in 0..=order {
        let mut idx = [0u8; MAX_VARS];
        fn rec(
            idx: &mut MultiIndex,
            var: usize,
            nvars: usize,
            left: u8,
            out: &mut Vec<MultiIndex>,
        ) {
            if var == nvars - 1 {
                idx[var] = left;
                out.push(*idx);
                idx[var] = 0;
                return;
            }
            for k in (0..=left).rev() {
                idx[var] = k;
                rec(idx, var + 1, nvars, left - k, out);
            }
            idx[var] = 0;
        }
        rec(&mut idx, 0, nvars, degree as u8, &mut out);
    }
    out
}

fn tables() -> &'static Vec<IndexTable> {
    static TABLES: OnceLock<Vec<IndexTable>> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut all = Vec::new();
        for nvars in 1..=MAX_VARS {
            for order in 0..=MAX_ORDER {
                let indices = enumerate(nvars, order);
                let rank = indices.iter().enumerate().map(|(i, m)| (*m, i)).collect();
                all.push(IndexTable { indices, rank });
            }
        }
        all
    })
}

fn table(nvars: usize, order: usize) -> &'static IndexTable {
    &tables()[(nvars - 1) * (MAX_ORDER + 1) + order]
}

fn total_degree(m: &MultiIndex) -> usize {
    m.iter().map(|&k| k as usize).sum()
}

fn factorial(m: &MultiIndex) -> f64 {
    m.iter()
        .map(|&k| (1..=k as u64).product::<u64>() as f64)
        .product()
}

/// Truncated Taylor expansion of a scalar quantity at a point.
///
/// Coefficients are stored densely, keyed by graded-lexicographic multi-index.
/// The coefficient of multi-index `m` is `∂^m f / m!`, so the zero index holds
/// the plain value.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    nvars: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    fn check_shape(nvars: usize, order: usize) -> Result<(), JetError> {
        if nvars == 0 || nvars > MAX_VARS {
            return Err(JetError::UnsupportedVars(nvars));
        }
        if order > MAX_ORDER {
            return Err(JetError::OrderTooLarge(order));
        }
        Ok(())
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::check_shape(nvars, order).expect("static jet shape");
        let len = table(nvars, order).indices.len();
        Jet {
            nvars,
            order,
            coeffs: vec![0.0; len],
        }
    }

    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        let mut jet = Self::zero(nvars, order);
        jet.coeffs[0] = value;
        jet
    }

    /// Coordinate jet `base + δᵢ` for variable `i`.
    pub fn variable(nvars: usize, order: usize, i: usize, base: f64) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut jet = Self::zero(nvars, order);
        jet.coeffs[0] = base;
        if order >= 1 {
            let mut m = [0u8; MAX_VARS];
            m[i] = 1;
            let r = table(nvars, order).rank[&m];
            jet.coeffs[r] = 1.0;
        }
        jet
    }

    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        Self::check_shape(nvars, order)?;
        let len = table(nvars, order).indices.len();
        if coeffs.len() != len {
            return Err(JetError::ShapeMismatch(nvars, order, nvars, coeffs.len()));
        }
        Ok(Jet {
            nvars,
            order,
            coeffs,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Plain value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of the multi-index (zero when out of range).
    pub fn coeff(&self, m: &[usize]) -> f64 {
        let mut idx = [0u8; MAX_VARS];
        for (k, &d) in m.iter().enumerate() {
            if d > 0 {
                if k >= self.nvars {
                    return 0.0;
                }
                idx[k] = d as u8;
            }
        }
        if total_degree(&idx) > self.order {
            return 0.0;
        }
        table(self.nvars, self.order)
            .rank
            .get(&idx)
            .map_or(0.0, |&r| self.coeffs[r])
    }

    /// Set the coefficient of a multi-index in range; panics when the index
    /// exceeds the truncation (a programming error, not a data condition).
    pub fn set_coeff(&mut self, m: &[usize], value: f64) {
        let mut idx = [0u8; MAX_VARS];
        for (k, &d) in m.iter().enumerate() {
            if d > 0 {
                assert!(k < self.nvars, "multi-index touches an absent variable");
                idx[k] = d as u8;
            }
        }
        assert!(
            total_degree(&idx) <= self.order,
            "multi-index exceeds the truncation order"
        );
        let r = table(self.nvars, self.order).rank[&idx];
        self.coeffs[r] = value;
    }

    /// Mixed partial derivative value `∂^m f` (coefficient times `m!`).
    pub fn deriv(&self, m: &[usize]) -> f64 {
        let mut idx = [0u8; MAX_VARS];
        for (k, &d) in m.iter().enumerate().take(MAX_VARS) {
            idx[k] = d as u8;
        }
        self.coeff(m) * factorial(&idx)
    }

    pub fn indices(&self) -> &'static [MultiIndex] {
        &table(self.nvars, self.order).indices
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn same_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.nvars != other.nvars || self.order != other.order {
            return Err(JetError::ShapeMismatch(
                self.nvars,
                self.order,
                other.nvars,
                other.order,
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs,
        })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs,
        })
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn scale(&self, factor: f64) -> Jet {
        let coeffs = self.coeffs.iter().map(|a| a * factor).collect();
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs,
        }
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Truncated Cauchy product; terms above the common order are discarded.
    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        let tab = table(self.nvars, self.order);
        let mut out = Jet::zero(self.nvars, self.order);
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let mi = tab.indices[i];
            let di = total_degree(&mi);
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let mj = tab.indices[j];
                if di + total_degree(&mj) > self.order {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                for k in 0..MAX_VARS {
                    sum[k] = mi[k] + mj[k];
                }
                out.coeffs[tab.rank[&sum]] += a * b;
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Jet, JetError> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return Err(JetError::DivisionBySingularSeries);
        }
        // 1/(c0(1+s)) = (1/c0) Σ (-s)^k, s nilpotent after truncation.
        let mut s = self.scale(1.0 / c0);
        s.coeffs[0] = 0.0;
        let neg_s = s.neg();
        let mut term = Jet::constant(self.nvars, self.order, 1.0);
        let mut acc = term.clone();
        for _ in 1..=self.order {
            term = term.mul(&neg_s)?;
            acc = acc.add(&term)?;
        }
        Ok(acc.scale(1.0 / c0))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_shape(other)?;
        self.mul(&other.recip()?)
    }

    /// Integer power by repeated multiplication (valid for any constant term).
    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut out = Jet::constant(self.nvars, self.order, 1.0);
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Composition with a scalar function given the derivative sequence
    /// `derivs[k] = f⁽ᵏ⁾(a₀)/k!` at the constant term.
    pub fn compose_series(&self, derivs: &[f64]) -> Result<Jet, JetError> {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Jet::constant(self.nvars, self.order, derivs[0]);
        let mut power = Jet::constant(self.nvars, self.order, 1.0);
        for k in 1..=self.order.min(derivs.len() - 1) {
            power = power.mul(&h)?;
            out = out.add(&power.scale(derivs[k]))?;
        }
        Ok(out)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        self.powf(0.5)
    }

    /// Real power with positive base (fractional exponents need `a₀ > 0`).
    pub fn powf(&self, exponent: f64) -> Result<Jet, JetError> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return Err(JetError::Domain(format!(
                "real power with non-positive base {a0}"
            )));
        }
        let mut derivs = vec![0.0; self.order + 1];
        let mut c = a0.powf(exponent);
        derivs[0] = c;
        for k in 1..=self.order {
            c *= (exponent - (k as f64 - 1.0)) / (k as f64) / a0;
            derivs[k] = c;
        }
        self.compose_series(&derivs)
    }

    pub fn exp(&self) -> Result<Jet, JetError> {
        let e = self.coeffs[0].exp();
        let mut derivs = vec![0.0; self.order + 1];
        let mut kfact = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            if k > 0 {
                kfact *= k as f64;
            }
            *d = e / kfact;
        }
        self.compose_series(&derivs)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return Err(JetError::Domain(format!(
                "logarithm of non-positive value {a0}"
            )));
        }
        let mut derivs = vec![0.0; self.order + 1];
        derivs[0] = a0.ln();
        let mut sign = 1.0;
        for (k, d) in derivs.iter_mut().enumerate().skip(1) {
            *d = sign / (k as f64 * a0.powi(k as i32));
            sign = -sign;
        }
        self.compose_series(&derivs)
    }

    pub fn sin(&self) -> Result<Jet, JetError> {
        self.trig(true)
    }

    pub fn cos(&self) -> Result<Jet, JetError> {
        self.trig(false)
    }

    fn trig(&self, sine: bool) -> Result<Jet, JetError> {
        let a0 = self.coeffs[0];
        let phase = if sine {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        };
        let mut derivs = vec![0.0; self.order + 1];
        let mut kfact = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            if k > 0 {
                kfact *= k as f64;
            }
            *d = (a0 + phase + k as f64 * std::f64::consts::FRAC_PI_2).sin() / kfact;
        }
        self.compose_series(&derivs)
    }

    /// Absolute value away from zero; not differentiable at a vanishing
    /// constant term.
    pub fn abs(&self) -> Result<Jet, JetError> {
        let a0 = self.coeffs[0];
        if a0 > 0.0 {
            Ok(self.clone())
        } else if a0 < 0.0 {
            Ok(self.neg())
        } else {
            Err(JetError::Domain("abs at zero is not differentiable".into()))
        }
    }

    /// Partial derivative with respect to variable `i`. Lowers the order by
    /// one; high-order coefficients beyond the truncation are unknown and are
    /// not fabricated.
    pub fn partial(&self, i: usize) -> Result<Jet, JetError> {
        assert!(i < self.nvars, "variable index out of range");
        if self.order == 0 {
            return Err(JetError::DerivativeUnderflow);
        }
        let src = table(self.nvars, self.order);
        let mut out = Jet::zero(self.nvars, self.order - 1);
        let dst = table(self.nvars, self.order - 1);
        for (r, m) in dst.indices.iter().enumerate() {
            let mut up = *m;
            up[i] += 1;
            out.coeffs[r] = (up[i] as f64) * self.coeffs[src.rank[&up]];
        }
        Ok(out)
    }

    /// Drop coefficients above `new_order`.
    pub fn truncated(&self, new_order: usize) -> Jet {
        let new_order = new_order.min(self.order);
        let src = table(self.nvars, self.order);
        let mut out = Jet::zero(self.nvars, new_order);
        let dst = table(self.nvars, new_order);
        for (r, m) in dst.indices.iter().enumerate() {
            out.coeffs[r] = self.coeffs[src.rank[m]];
        }
        out
    }

    /// Re-embed into a higher order, filling unknown coefficients with zero.
    /// Callers are responsible for tracking which coefficients are meaningful.
    pub fn padded(&self, new_order: usize) -> Result<Jet, JetError> {
        Self::check_shape(self.nvars, new_order)?;
        if new_order <= self.order {
            return Ok(self.truncated(new_order));
        }
        let src = table(self.nvars, self.order);
        let mut out = Jet::zero(self.nvars, new_order);
        let dst = table(self.nvars, new_order);
        for (r, m) in src.indices.iter().enumerate() {
            out.coeffs[dst.rank[m]] = self.coeffs[r];
        }
        Ok(out)
    }

    /// Evaluate a polynomial substitution: the jet's truncated polynomial with
    /// its displacement variables replaced by the given jets (which must share
    /// a common shape and carry zero constant terms for exact semantics).
    pub fn substitute(&self, args: &[Jet]) -> Result<Jet, JetError> {
        assert_eq!(args.len(), self.nvars, "substitution arity mismatch");
        let shape = &args[0];
        let mut out = Jet::constant(shape.nvars, shape.order, 0.0);
        for (r, m) in self.indices().iter().enumerate() {
            let c = self.coeffs[r];
            if c == 0.0 {
                continue;
            }
            let mut term = Jet::constant(shape.nvars, shape.order, c);
            for (v, arg) in args.iter().enumerate() {
                for _ in 0..m[v] {
                    term = term.mul(arg)?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }
}

/// Supported elementary compositions for [`compose_elementary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    /// Real power with a fixed exponent.
    PowR(f64),
}

/// Taylor composition `f ∘ a` truncated at the jet's order.
pub fn compose_elementary(f: Elementary, a: &Jet) -> Result<Jet, JetError> {
    match f {
        Elementary::Sqrt => a.sqrt(),
        Elementary::Exp => a.exp(),
        Elementary::Ln => a.ln(),
        Elementary::Sin => a.sin(),
        Elementary::Cos => a.cos(),
        Elementary::PowR(r) => a.powf(r),
    }
}

/// Binary jet arithmetic entry point mirroring the operation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn jet_arith(a: &Jet, b: &Jet, op: JetOp) -> Result<Jet, JetError> {
    match op {
        JetOp::Add => a.add(b),
        JetOp::Sub => a.sub(b),
        JetOp::Mul => a.mul(b),
        JetOp::Div => a.div(b),
    }
}

/// Vector field expanded as jets around a common base point.
#[derive(Debug, Clone)]
pub struct SeriesVectorField {
    base: Vec<f64>,
    components: Vec<Jet>,
    labels: Vec<String>,
}

impl SeriesVectorField {
    pub fn new(base: Vec<f64>, components: Vec<Jet>) -> Result<Self, JetError> {
        let dim = base.len();
        if components.len() != dim {
            return Err(JetError::ShapeMismatch(dim, 0, components.len(), 0));
        }
        let order = components[0].order();
        for c in &components {
            if c.nvars() != dim || c.order() != order {
                return Err(JetError::ShapeMismatch(dim, order, c.nvars(), c.order()));
            }
        }
        let labels = (0..dim).map(|i| format!("x{}", i + 1)).collect();
        Ok(SeriesVectorField {
            base,
            components,
            labels,
        })
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        assert_eq!(labels.len(), self.dim());
        self.labels = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn component(&self, i: usize) -> &Jet {
        &self.components[i]
    }

    pub fn components(&self) -> &[Jet] {
        &self.components
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> Vec<f64> {
        self.components.iter().map(Jet::value).collect()
    }

    /// Jacobian of the field at the base point.
    pub fn jacobian(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut jac = vec![vec![0.0; dim]; dim];
        for (i, comp) in self.components.iter().enumerate() {
            for j in 0..dim {
                let mut m = [0usize; MAX_VARS];
                m[j] = 1;
                jac[i][j] = comp.coeff(&m[..dim]);
            }
        }
        jac
    }
}

/// Divergence Σᵢ ∂Vᵢ/∂xᵢ as a jet of order one less than the input.
pub fn divergence(v: &SeriesVectorField) -> Result<Jet, JetError> {
    let mut acc = v.components[0].partial(0)?;
    for i in 1..v.dim() {
        acc = acc.add(&v.components[i].partial(i)?)?;
    }
    Ok(acc)
}

/// Lie derivative Σᵢ Vᵢ · ∂U/∂xᵢ, truncated at `order − 1`.
pub fn lie_derivative(u: &Jet, v: &SeriesVectorField) -> Result<Jet, JetError> {
    if u.nvars() != v.dim() || u.order() != v.order() {
        return Err(JetError::ShapeMismatch(
            u.nvars(),
            u.order(),
            v.dim(),
            v.order(),
        ));
    }
    let lowered = u.order() - 1;
    let mut acc = Jet::zero(u.nvars(), lowered);
    for i in 0..v.dim() {
        let du = u.partial(i)?;
        let vi = v.components[i].truncated(lowered);
        acc = acc.add(&du.mul(&vi)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xi(order: usize) -> Jet {
        Jet::variable(1, order, 0, 0.0)
    }

    #[test]
    fn difference_of_squares() {
        let one = Jet::constant(1, 2, 1.0);
        let a = one.add(&xi(2)).unwrap();
        let b = one.sub(&xi(2)).unwrap();
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.coeff(&[0]), 1.0);
        assert_eq!(prod.coeff(&[1]), 0.0);
        assert_eq!(prod.coeff(&[2]), -1.0);
    }

    #[test]
    fn geometric_series() {
        let one = Jet::constant(1, 3, 1.0);
        let denom = one.sub(&xi(3)).unwrap();
        let inv = one.div(&denom).unwrap();
        for k in 0..=3 {
            assert!((inv.coeff(&[k]) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn division_by_singular_series() {
        let a = Jet::constant(1, 2, 1.0);
        assert_eq!(a.div(&xi(2)), Err(JetError::DivisionBySingularSeries));
    }

    #[test]
    fn sqrt_binomial_series() {
        let arg = Jet::constant(1, 2, 1.0).add(&xi(2)).unwrap();
        let s = arg.sqrt().unwrap();
        assert!((s.coeff(&[0]) - 1.0).abs() < 1e-14);
        assert!((s.coeff(&[1]) - 0.5).abs() < 1e-14);
        assert!((s.coeff(&[2]) + 0.125).abs() < 1e-14);
    }

    #[test]
    fn exp_series() {
        let e = xi(3).exp().unwrap();
        assert!((e.coeff(&[0]) - 1.0).abs() < 1e-14);
        assert!((e.coeff(&[1]) - 1.0).abs() < 1e-14);
        assert!((e.coeff(&[2]) - 0.5).abs() < 1e-14);
        assert!((e.coeff(&[3]) - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn ln_of_singular_constant_term() {
        assert!(matches!(xi(2).ln(), Err(JetError::Domain(_))));
    }

    fn saddle(order: usize) -> SeriesVectorField {
        let xi = Jet::variable(3, order, 0, 0.0);
        let eta = Jet::variable(3, order, 1, 0.0);
        SeriesVectorField::new(vec![0.0; 3], vec![xi, eta.neg(), Jet::zero(3, order)]).unwrap()
    }

    #[test]
    fn lie_derivative_first_integrals() {
        let v = saddle(3);
        let zeta = Jet::variable(3, 3, 2, 0.0);
        assert_eq!(lie_derivative(&zeta, &v).unwrap().max_abs(), 0.0);
        let xi = Jet::variable(3, 3, 0, 0.0);
        let eta = Jet::variable(3, 3, 1, 0.0);
        let rho = xi.mul(&eta).unwrap();
        assert_eq!(lie_derivative(&rho, &v).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lie_derivative_flattened_seed() {
        // V = (ξ, −3η, ξ) conserves U = ζ − ξ exactly.
        let xi = Jet::variable(3, 3, 0, 0.0);
        let eta = Jet::variable(3, 3, 1, 0.0);
        let zeta = Jet::variable(3, 3, 2, 0.0);
        let v = SeriesVectorField::new(vec![0.0; 3], vec![xi.clone(), eta.scale(-3.0), xi.clone()])
            .unwrap();
        let u = zeta.sub(&xi).unwrap();
        assert_eq!(lie_derivative(&u, &v).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn divergence_examples() {
        let order = 2;
        let x = Jet::variable(3, order, 0, 0.5);
        let y = Jet::variable(3, order, 1, -0.3);
        let z = Jet::variable(3, order, 2, 1.0);
        let radial =
            SeriesVectorField::new(vec![0.5, -0.3, 1.0], vec![x.clone(), y.clone(), z]).unwrap();
        assert!((divergence(&radial).unwrap().value() - 3.0).abs() < 1e-14);

        let planar = SeriesVectorField::new(
            vec![0.5, -0.3, 1.0],
            vec![x.scale(2.0), y, Jet::zero(3, order)],
        )
        .unwrap();
        assert!((divergence(&planar).unwrap().value() - 3.0).abs() < 1e-14);

        assert_eq!(divergence(&saddle(2)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn partial_lowers_order_and_tracks_coefficients() {
        // f = t·x at (1,2): ∂t = x, ∂x = t, ∂t∂x = 1.
        let t = Jet::variable(2, 2, 0, 1.0);
        let x = Jet::variable(2, 2, 1, 2.0);
        let f = t.mul(&x).unwrap();
        assert_eq!(f.value(), 2.0);
        assert_eq!(f.deriv(&[1, 0]), 2.0);
        assert_eq!(f.deriv(&[0, 1]), 1.0);
        assert_eq!(f.deriv(&[1, 1]), 1.0);
        let ft = f.partial(0).unwrap();
        assert_eq!(ft.order(), 1);
        assert_eq!(ft.value(), 2.0);
        assert_eq!(ft.deriv(&[0, 1]), 1.0);
    }

    fn random_jet(seed: &[f64], nvars: usize, order: usize) -> Jet {
        let len = table(nvars, order).indices.len();
        let coeffs = (0..len)
            .map(|i| seed[i % seed.len()] * ((i % 7) as f64 - 3.0) / 3.0)
            .collect();
        Jet::from_coeffs(nvars, order, coeffs).unwrap()
    }

    proptest! {
        #[test]
        fn ring_axioms(a in proptest::collection::vec(-2.0f64..2.0, 6),
                       b in proptest::collection::vec(-2.0f64..2.0, 6),
                       c in proptest::collection::vec(-2.0f64..2.0, 6)) {
            let (x, y, z) = (random_jet(&a, 3, 4), random_jet(&b, 3, 4), random_jet(&c, 3, 4));
            let assoc_l = x.mul(&y).unwrap().mul(&z).unwrap();
            let assoc_r = x.mul(&y.mul(&z).unwrap()).unwrap();
            let dist_l = x.mul(&y.add(&z).unwrap()).unwrap();
            let dist_r = x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap();
            let scale = assoc_l.max_abs().max(assoc_r.max_abs()).max(1.0);
            prop_assert!(assoc_l.sub(&assoc_r).unwrap().max_abs() <= 1e-12 * scale);
            let dscale = dist_l.max_abs().max(dist_r.max_abs()).max(1.0);
            prop_assert!(dist_l.sub(&dist_r).unwrap().max_abs() <= 1e-12 * dscale);
        }

        #[test]
        fn leibniz_rule(a in proptest::collection::vec(-2.0f64..2.0, 6),
                        b in proptest::collection::vec(-2.0f64..2.0, 6),
                        var in 0usize..3) {
            let (f, g) = (random_jet(&a, 3, 4), random_jet(&b, 3, 4));
            let lhs = f.mul(&g).unwrap().partial(var).unwrap();
            let rhs = f.truncated(3).mul(&g.partial(var).unwrap()).unwrap()
                .add(&g.truncated(3).mul(&f.partial(var).unwrap()).unwrap()).unwrap();
            let scale = lhs.max_abs().max(rhs.max_abs()).max(1.0);
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * scale);
        }

        #[test]
        fn lie_derivative_is_a_derivation(a in proptest::collection::vec(-2.0f64..2.0, 6),
                                          b in proptest::collection::vec(-2.0f64..2.0, 6),
                                          c in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let u = random_jet(&a, 3, 4);
            let w = random_jet(&b, 3, 4);
            let comps = vec![random_jet(&c[0..3], 3, 4), random_jet(&c[3..6], 3, 4), random_jet(&c[6..9], 3, 4)];
            let v = SeriesVectorField::new(vec![0.0; 3], comps).unwrap();
            let lhs = lie_derivative(&u.mul(&w).unwrap(), &v).unwrap();
            let rhs = u.truncated(3).mul(&lie_derivative(&w, &v).unwrap()).unwrap()
                .add(&w.truncated(3).mul(&lie_derivative(&u, &v).unwrap()).unwrap()).unwrap();
            let scale = lhs.max_abs().max(rhs.max_abs()).max(1.0);
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-11 * scale);
        }
    }
}
