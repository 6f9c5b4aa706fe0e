//! Constructive normal-form machinery at non-isolated singular points of
//! fields `(v, w, α·v + β·w)` on `(ξ, η, ζ)`-space.
//!
//! Three capabilities live here:
//!
//! - [`flatten`]: build a quasi-integral `U = Σ u_{p₁p₂}(ζ)·ξ^{p₁}η^{p₂}`
//!   whose Lie derivative is flat in `(ξ, η)` through a requested degree, by
//!   solving the degree-graded linear systems over truncated ζ-series;
//! - [`resonant_jet_coefficient`]: the coefficient `Ψ(0,0)` of the resonance
//!   monomial `ρ = ξη` in the center component, the obstruction that decides
//!   the resonant-saddle normal form;
//! - [`classify`] and [`rank_probe_phi`]: the smooth-classification decision
//!   tree over the eigenvalue ratio, with the rank test for the node form's
//!   `φ(0)` coefficient.
//!
//! Only the three-dimensional case (one center direction) is implemented; all
//! of the geometric applications in this crate have exactly one.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::fields::{FieldError, VectorField};
use crate::jets::{Jet, JetError, SeriesVectorField};
use crate::linalg;
use crate::spectral::{self, rationalize};

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("resonance obstruction: the degree-{n} coefficient system degenerates")]
    ResonanceObstruction { n: usize },
    #[error("linear part is not diagonal in the given coordinates: {0}")]
    NonDiagonalizableLinearPart(String),
    #[error("field is not in prepared form (must vanish on {{ξ=η=0}}): {0}")]
    NotPreparedForm(String),
    #[error("input series order {got} too low; need at least {required}")]
    InputOrderTooLow { required: usize, got: usize },
    #[error("resonant coefficient implemented only for (n, m) = (1, 1), got ({n}, {m})")]
    UnsupportedResonance { n: u32, m: u32 },
    #[error("spectrum is not (λ, −λ, 0) within tolerance: {0}")]
    NotResonant(String),
    #[error("spectrum mismatch: {0}")]
    SpectrumMismatch(String),
    #[error("classification needs nonzero real parts, got λ₁ = {lambda1}, λ₂ = {lambda2}")]
    HyperbolicityViolated {
        lambda1: Complex64,
        lambda2: Complex64,
    },
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
}

// ---------------------------------------------------------------------------
// ζ-series polynomials in (ξ, η)
// ---------------------------------------------------------------------------

fn ztrunc(a: &Jet, order: usize) -> Jet {
    a.truncated(order.min(a.order()))
}

fn zmul(a: &Jet, b: &Jet) -> Result<Jet, JetError> {
    let order = a.order().min(b.order());
    ztrunc(a, order).mul(&ztrunc(b, order))
}

fn zadd(a: &Jet, b: &Jet) -> Result<Jet, JetError> {
    let order = a.order().min(b.order());
    ztrunc(a, order).add(&ztrunc(b, order))
}

/// Polynomial in (ξ, η) whose coefficients are truncated ζ-series, the
/// working representation of the flattening solver. Coefficient jets may
/// carry different ζ-orders; operations truncate to the shortest operand.
#[derive(Debug, Clone, Default)]
struct XiEtaSeries {
    terms: BTreeMap<(u32, u32), Jet>,
}

impl XiEtaSeries {
    fn insert(&mut self, key: (u32, u32), jet: Jet) {
        if jet.max_abs() != 0.0 || key == (0, 0) {
            self.terms.insert(key, jet);
        }
    }

    fn get(&self, key: (u32, u32)) -> Option<&Jet> {
        self.terms.get(&key)
    }

    /// Extract blocks `(p₁, p₂) ↦ u(ζ)` from a 3-variable jet. The block of
    /// degree d inherits ζ-order `M − d` from the total-degree truncation.
    fn from_jet3(jet: &Jet, max_degree: usize) -> Self {
        let m = jet.order();
        let mut series = XiEtaSeries::default();
        for p1 in 0..=max_degree {
            for p2 in 0..=max_degree.saturating_sub(p1) {
                let zorder = m.saturating_sub(p1 + p2);
                let mut z = Jet::zero(1, zorder);
                for q in 0..=zorder {
                    z.set_coeff(&[q], jet.coeff(&[p1, p2, q]));
                }
                series.insert((p1 as u32, p2 as u32), z);
            }
        }
        series
    }

    fn add_term(&mut self, key: (u32, u32), jet: &Jet) -> Result<(), JetError> {
        match self.terms.get(&key) {
            Some(existing) => {
                let sum = zadd(existing, jet)?;
                self.terms.insert(key, sum);
            }
            None => {
                self.terms.insert(key, jet.clone());
            }
        }
        Ok(())
    }

    fn mul(&self, other: &XiEtaSeries, max_degree: usize) -> Result<XiEtaSeries, JetError> {
        let mut out = XiEtaSeries::default();
        for (&(a1, a2), za) in &self.terms {
            for (&(b1, b2), zb) in &other.terms {
                let key = (a1 + b1, a2 + b2);
                if (key.0 + key.1) as usize > max_degree {
                    continue;
                }
                out.add_term(key, &zmul(za, zb)?)?;
            }
        }
        Ok(out)
    }

    fn partial_xi(&self) -> XiEtaSeries {
        let mut out = XiEtaSeries::default();
        for (&(p1, p2), z) in &self.terms {
            if p1 > 0 {
                out.insert((p1 - 1, p2), z.scale(p1 as f64));
            }
        }
        out
    }

    fn partial_eta(&self) -> XiEtaSeries {
        let mut out = XiEtaSeries::default();
        for (&(p1, p2), z) in &self.terms {
            if p2 > 0 {
                out.insert((p1, p2 - 1), z.scale(p2 as f64));
            }
        }
        out
    }

    fn partial_zeta(&self) -> Result<XiEtaSeries, JetError> {
        let mut out = XiEtaSeries::default();
        for (&key, z) in &self.terms {
            if z.order() == 0 {
                // Order-0 data carries no usable derivative.
                out.insert(key, Jet::zero(1, 0));
                continue;
            }
            out.insert(key, z.partial(0)?);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Flattening
// ---------------------------------------------------------------------------

/// Quasi-integral produced by [`flatten`]: coefficient table of
/// `U(ξ, η, ζ) = Σ_{p₁+p₂ ≤ N} u_{p₁p₂}(ζ)·ξ^{p₁}η^{p₂}`.
#[derive(Debug, Clone)]
pub struct QuasiIntegral {
    /// Flattening order: the Lie derivative has no ξ,η-terms of total degree
    /// 1..=N within the verified ζ-range.
    pub n_flat: usize,
    /// Coefficient series, keyed by (p₁, p₂). The stored ζ-order of each
    /// entry is its trusted order; deeper levels lose one ζ-order per degree
    /// whenever the center component couples through ∂u/∂ζ.
    pub u: BTreeMap<(u32, u32), Jet>,
    /// The chosen seed u₀₀(ζ).
    pub seed: Jet,
}

impl QuasiIntegral {
    /// Assemble the quasi-integral as a 3-variable jet of the given order.
    pub fn assemble(&self, order: usize) -> Result<Jet, JetError> {
        let mut out = Jet::zero(3, order);
        for (&(p1, p2), z) in &self.u {
            let degree = (p1 + p2) as usize;
            if degree > order {
                continue;
            }
            for q in 0..=z.order().min(order - degree) {
                out.set_coeff(&[p1 as usize, p2 as usize, q], z.coeff(&[q]));
            }
        }
        Ok(out)
    }

    /// ζ-order through which the degree-`level` coefficients are trusted.
    pub fn verified_zeta_order(&self, level: usize) -> usize {
        self.u
            .iter()
            .filter(|(&(p1, p2), _)| (p1 + p2) as usize == level)
            .map(|(_, z)| z.order())
            .min()
            .unwrap_or(0)
    }

    /// Independently re-verify the flatness postcondition: assemble U,
    /// compute the Lie derivative with the jet engine, and return the largest
    /// in-range ξ,η-coefficient of degree 1..=N.
    pub fn verify(&self, v: &SeriesVectorField) -> Result<f64, JetError> {
        let u = self.assemble(v.order())?;
        let lie = crate::jets::lie_derivative(&u, v)?;
        let mut worst: f64 = 0.0;
        for (idx, &c) in lie.indices().iter().zip(lie.coeffs()) {
            let (p1, p2, q) = (idx[0] as usize, idx[1] as usize, idx[2] as usize);
            let degree = p1 + p2;
            if degree == 0 || degree > self.n_flat {
                continue;
            }
            let trusted = self.verified_zeta_order(degree).saturating_sub(1);
            if q <= trusted {
                worst = worst.max(c.abs());
            }
        }
        Ok(worst)
    }
}

/// Solve the degree-graded systems that make `L_V U` flat by (ξ, η) through
/// degree `n_target`, starting from the seed `u₀₀(ζ)`.
///
/// The field must be given in prepared coordinates: it vanishes on
/// `{ξ = η = 0}`, and its linear part is diagonal with `λ₁·λ₂ ≠ 0`. At each
/// degree `n` the coefficient system is solved over truncated ζ-series by
/// Gaussian elimination; series division is valid because the system's
/// determinant has nonzero constant term exactly when no first-type
/// resonance of order `n` occurs.
pub fn flatten(
    v: &SeriesVectorField,
    n_target: usize,
    seed: &Jet,
) -> Result<QuasiIntegral, NormalFormError> {
    if v.dim() != 3 {
        return Err(NormalFormError::NotPreparedForm(format!(
            "phase dimension must be 3, got {}",
            v.dim()
        )));
    }
    if seed.nvars() != 1 {
        return Err(NormalFormError::NotPreparedForm(
            "seed u₀₀ must be a 1-variable ζ-series".into(),
        ));
    }
    let z0 = seed.order();
    if v.order() < n_target + z0 {
        return Err(NormalFormError::InputOrderTooLow {
            required: n_target + z0,
            got: v.order(),
        });
    }

    let comp_v = XiEtaSeries::from_jet3(v.component(0), n_target);
    let comp_w = XiEtaSeries::from_jet3(v.component(1), n_target);
    let comp_h = XiEtaSeries::from_jet3(v.component(2), n_target);

    let field_scale = (0..3)
        .map(|i| v.component(i).max_abs())
        .fold(1.0f64, f64::max);
    for (name, comp) in [("v", &comp_v), ("w", &comp_w), ("h", &comp_h)] {
        if let Some(z) = comp.get((0, 0)) {
            if z.max_abs() > 1e-9 * field_scale {
                return Err(NormalFormError::NotPreparedForm(format!(
                    "component {name} does not vanish on the center manifold"
                )));
            }
        }
    }

    let zero_z = Jet::zero(1, z0);
    let a11 = comp_v
        .get((1, 0))
        .cloned()
        .unwrap_or_else(|| zero_z.clone());
    let a12 = comp_v
        .get((0, 1))
        .cloned()
        .unwrap_or_else(|| zero_z.clone());
    let a21 = comp_w
        .get((1, 0))
        .cloned()
        .unwrap_or_else(|| zero_z.clone());
    let a22 = comp_w
        .get((0, 1))
        .cloned()
        .unwrap_or_else(|| zero_z.clone());
    let lambda1 = a11.value();
    let lambda2 = a22.value();
    let lscale = lambda1.abs() + lambda2.abs();
    if lambda1.abs() <= 1e-12 * field_scale || lambda2.abs() <= 1e-12 * field_scale {
        return Err(NormalFormError::NotPreparedForm(format!(
            "λ₁·λ₂ must be nonzero, got ({lambda1}, {lambda2})"
        )));
    }
    if a12.value().abs() > 1e-9 * lscale || a21.value().abs() > 1e-9 * lscale {
        return Err(NormalFormError::NonDiagonalizableLinearPart(format!(
            "off-diagonal entries ({:.3e}, {:.3e}) at ζ = 0",
            a12.value(),
            a21.value()
        )));
    }

    let h_active = comp_h
        .terms
        .values()
        .any(|z| z.max_abs() > 1e-9 * field_scale);

    let mut u: BTreeMap<(u32, u32), Jet> = BTreeMap::new();
    u.insert((0, 0), seed.clone());

    for n in 1..=n_target {
        // d_n(0) = Π_{p₁+p₂=n} (p₁λ₁ + p₂λ₂): any vanishing factor is a
        // first-type resonance obstructing this degree.
        for p1 in 0..=n {
            let p2 = n - p1;
            if (p1 as f64 * lambda1 + p2 as f64 * lambda2).abs() <= 1e-9 * n as f64 * lscale {
                return Err(NormalFormError::ResonanceObstruction { n });
            }
        }

        let level_order = if h_active { z0.saturating_sub(n) } else { z0 };

        // Known part: L_V U with the current table and degree-n terms absent.
        let mut partial = XiEtaSeries::default();
        for (&key, z) in &u {
            partial.insert(key, z.clone());
        }
        let mut lie = partial.partial_xi().mul(&comp_v, n)?;
        let term_eta = partial.partial_eta().mul(&comp_w, n)?;
        let term_zeta = partial.partial_zeta()?.mul(&comp_h, n)?;
        for (&key, z) in term_eta.terms.iter().chain(term_zeta.terms.iter()) {
            lie.add_term(key, z)?;
        }

        // Assemble and solve the (n+1)×(n+1) system over ζ-series.
        let unknowns: Vec<(u32, u32)> = (0..=n).map(|p1| (p1 as u32, (n - p1) as u32)).collect();
        let dim = unknowns.len();
        let zero_level = Jet::zero(1, level_order);
        let mut matrix: Vec<Vec<Jet>> = vec![vec![zero_level.clone(); dim]; dim];
        let mut rhs: Vec<Jet> = Vec::with_capacity(dim);
        for (row, &(p1, p2)) in unknowns.iter().enumerate() {
            let diag = zadd(
                &ztrunc(&a11, level_order).scale(p1 as f64),
                &ztrunc(&a22, level_order).scale(p2 as f64),
            )?;
            matrix[row][row] = ztrunc(&diag, level_order);
            if p2 >= 1 {
                let col = unknowns
                    .iter()
                    .position(|&k| k == (p1 + 1, p2 - 1))
                    .unwrap();
                matrix[row][col] = ztrunc(&a12, level_order).scale((p1 + 1) as f64);
            }
            if p1 >= 1 {
                let col = unknowns
                    .iter()
                    .position(|&k| k == (p1 - 1, p2 + 1))
                    .unwrap();
                matrix[row][col] = ztrunc(&a21, level_order).scale((p2 + 1) as f64);
            }
            let known = lie
                .get((p1, p2))
                .map(|z| ztrunc(z, level_order))
                .unwrap_or_else(|| zero_level.clone());
            rhs.push(known.neg());
        }

        let solution = solve_series_system(matrix, rhs, n)?;
        for (key, z) in unknowns.into_iter().zip(solution) {
            u.insert(key, z);
        }
    }

    Ok(QuasiIntegral {
        n_flat: n_target,
        u,
        seed: seed.clone(),
    })
}

/// Gaussian elimination over truncated ζ-series with pivoting on the
/// constant term. A degenerate pivot means the degree-n determinant vanishes
/// at ζ = 0, i.e. a resonance.
fn solve_series_system(
    mut m: Vec<Vec<Jet>>,
    mut rhs: Vec<Jet>,
    n: usize,
) -> Result<Vec<Jet>, NormalFormError> {
    let dim = rhs.len();
    let scale = m
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.value().abs())
        .fold(1e-300f64, f64::max);
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&i, &j| m[i][col].value().abs().total_cmp(&m[j][col].value().abs()))
            .unwrap();
        if m[pivot][col].value().abs() <= 1e-12 * scale {
            return Err(NormalFormError::ResonanceObstruction { n });
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let lead = m[col][col].clone();
        for k in 0..dim {
            m[col][k] = m[col][k].div(&ztrunc(&lead, m[col][k].order()))?;
        }
        rhs[col] = rhs[col].div(&ztrunc(&lead, rhs[col].order()))?;
        for row in 0..dim {
            if row == col {
                continue;
            }
            let factor = m[row][col].clone();
            if factor.max_abs() == 0.0 {
                continue;
            }
            for k in 0..dim {
                let sub = zmul(&factor, &m[col][k])?;
                m[row][k] = m[row][k].sub(&ztrunc(&sub, m[row][k].order()))?;
            }
            let sub = zmul(&factor, &rhs[col])?;
            rhs[row] = rhs[row].sub(&ztrunc(&sub, rhs[row].order()))?;
        }
    }
    Ok(rhs)
}

// ---------------------------------------------------------------------------
// Resonant-jet coefficient Ψ(0,0)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ResonantCoefficient {
    /// Coefficient of ρ = ξη in the center component after the linear
    /// normalization; the zero/nonzero verdict is invariant.
    pub psi: f64,
    /// The positive eigenvalue of the saddle pair.
    pub lambda: f64,
    /// Magnitude scale of the quadratic jet, for the zero test.
    pub scale: f64,
}

impl ResonantCoefficient {
    pub fn is_nonzero(&self, tol: f64) -> bool {
        self.psi.abs() > tol * self.scale.max(1.0)
    }
}

/// Compute `Ψ(0,0)` for a singular point with spectrum `(λ, −λ, 0)`.
///
/// The order-2 jet is transported through the linear change that
/// diagonalizes the hyperbolic block and aligns the kernel with ζ. The
/// coefficient of `ξη` in the ζ-component is then read off directly: `ξη` is
/// a resonant monomial, so the formal removal of the non-resonant quadratic
/// terms cannot alter it.
pub fn resonant_jet_coefficient(
    v: &dyn VectorField,
    x_star: &[f64],
    n: u32,
    m: u32,
) -> Result<ResonantCoefficient, NormalFormError> {
    if (n, m) != (1, 1) {
        return Err(NormalFormError::UnsupportedResonance { n, m });
    }
    let series = v.series_at(x_star, 2)?;
    if series.dim() != 3 {
        return Err(NormalFormError::SpectrumMismatch(format!(
            "phase dimension must be 3, got {}",
            series.dim()
        )));
    }
    let jac = series.jacobian();
    let norm_a = linalg::frobenius(&jac);
    let mut eig = linalg::eigenvalues(&jac);
    for z in eig.iter_mut() {
        if z.norm() <= 1e-9 * norm_a.max(1e-300) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    linalg::sort_spectrum(&mut eig);
    let zeros = eig.iter().filter(|z| z.norm() == 0.0).count();
    if zeros != 1 {
        return Err(NormalFormError::SpectrumMismatch(format!(
            "expected exactly one zero eigenvalue, spectrum {eig:?}"
        )));
    }
    let nonzero: Vec<Complex64> = eig.iter().cloned().filter(|z| z.norm() > 0.0).collect();
    if nonzero.iter().any(|z| z.im != 0.0) {
        return Err(NormalFormError::NotResonant(format!(
            "complex pair {nonzero:?}"
        )));
    }
    let (l1, l2) = (nonzero[0].re, nonzero[1].re);
    if (l1 + l2).abs() > 1e-7 * (l1.abs() + l2.abs()) {
        return Err(NormalFormError::NotResonant(format!(
            "λ₁ + λ₂ = {:.3e} does not vanish",
            l1 + l2
        )));
    }
    let lambda = l1.max(l2);

    // Change-of-basis columns: eigenvectors of +λ, −λ, and the kernel.
    let mut t_columns = Vec::with_capacity(3);
    for target in [lambda, -lambda, 0.0] {
        let vec = linalg::eigenvector(&jac, Complex64::new(target, 0.0)).ok_or_else(|| {
            NormalFormError::SpectrumMismatch(format!("no eigenvector for λ = {target}"))
        })?;
        if vec.iter().any(|z| z.im.abs() > 1e-9) {
            return Err(NormalFormError::SpectrumMismatch(format!(
                "complex eigenvector for real λ = {target}"
            )));
        }
        t_columns.push(vec.into_iter().map(|z| z.re).collect::<Vec<f64>>());
    }
    let t_mat: linalg::Matrix = (0..3)
        .map(|i| (0..3).map(|j| t_columns[j][i]).collect())
        .collect();

    let mut t_inv = vec![vec![0.0; 3]; 3];
    for k in 0..3 {
        let mut e = vec![0.0; 3];
        e[k] = 1.0;
        let col = linalg::solve(&t_mat, &e).ok_or_else(|| {
            NormalFormError::SpectrumMismatch("eigenbasis is numerically degenerate".into())
        })?;
        for i in 0..3 {
            t_inv[i][k] = col[i];
        }
    }

    // Transform the order-2 jet: Ṽ_k(y) = Σᵢ T⁻¹[k][i] · Vᵢ(x* + T·y).
    let x_args: Vec<Jet> = (0..3)
        .map(|i| {
            let mut arg = Jet::zero(3, 2);
            for j in 0..3 {
                arg = arg
                    .add(&Jet::variable(3, 2, j, 0.0).scale(t_mat[i][j]))
                    .unwrap();
            }
            arg
        })
        .collect();

    let mut psi = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..3 {
        let transported = series.component(i).substitute(&x_args)?;
        scale = scale.max(transported.max_abs());
        psi += t_inv[2][i] * transported.coeff(&[1, 1, 0]);
    }
    Ok(ResonantCoefficient { psi, lambda, scale })
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum ClassificationKind {
    /// Smoothly linearizable family (no obstruction from the ratio).
    Linearizable,
    /// Node with an integer ratio `n`; the resonant term survives iff
    /// `φ(0) ≠ 0`.
    NodeResonant { n: u32, phi_zero: Option<bool> },
    /// Resonant saddle candidate with ratio `−n/m`; confirmed by `Ψ(0,0) ≠ 0`.
    SaddleResonant {
        n: u32,
        m: u32,
        psi: Option<f64>,
        confirmed: Option<bool>,
    },
    /// The decision tree could not certify a form.
    Unclassified { reason: String },
}

impl ClassificationKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ClassificationKind::Linearizable => "linearizable",
            ClassificationKind::NodeResonant { .. } => "node_resonant",
            ClassificationKind::SaddleResonant { .. } => "saddle_resonant",
            ClassificationKind::Unclassified { .. } => "unclassified",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub kind: ClassificationKind,
    /// λ₁/λ₂ ordered so |λ₁| ≥ |λ₂|.
    pub lambda_ratio: Complex64,
    /// Flatness bounds N(k) for k = 1..=3, where defined.
    pub nk_note: Vec<(u32, u64)>,
    /// Whether the ratio matches r − 1 (or its inverse) within tolerance.
    pub matches_exponent: Option<bool>,
}

/// Optional numerical probes feeding the classification.
#[derive(Debug, Clone, Default)]
pub struct ClassifyProbes {
    pub psi: Option<f64>,
    pub psi_scale: Option<f64>,
    pub phi_zero: Option<bool>,
}

/// Decision tree over the hyperbolic eigenvalue pair `(λ₁, λ₂)` of a
/// spectrum `(λ₁, λ₂, 0)`: positive non-integer ratio → linearizable;
/// integer ratio n → node with resonant term `η^n` (φ(0) decides whether it
/// survives); negative rational `−n/m` → resonant saddle confirmed by
/// `Ψ(0,0) ≠ 0`; negative irrational (within tolerance, denominators ≤ 12) →
/// linearizable.
pub fn classify(
    lambda1: Complex64,
    lambda2: Complex64,
    r: f64,
    probes: &ClassifyProbes,
) -> Result<Classification, NormalFormError> {
    let scale = lambda1.norm() + lambda2.norm();
    if lambda1.re.abs() <= 1e-12 * scale || lambda2.re.abs() <= 1e-12 * scale {
        return Err(NormalFormError::HyperbolicityViolated { lambda1, lambda2 });
    }
    let (big, small) = if lambda1.norm() >= lambda2.norm() {
        (lambda1, lambda2)
    } else {
        (lambda2, lambda1)
    };
    let ratio = big / small;

    let nk_note: Vec<(u32, u64)> = (1..=3)
        .map(|k| {
            let hi = lambda1.re.abs().max(lambda2.re.abs());
            let lo = lambda1.re.abs().min(lambda2.re.abs());
            (k, 2 * ((2 * k + 1) as f64 * hi / lo).floor() as u64 + 2)
        })
        .collect();

    let matches_exponent = if ratio.im == 0.0 {
        let target = r - 1.0;
        let lam = ratio.re;
        let tol = 1e-6 * (1.0 + lam.abs() + target.abs());
        Some((lam - target).abs() <= tol || (1.0 / lam - target).abs() <= tol)
    } else {
        None
    };

    let kind = if ratio.im.abs() > 1e-9 * ratio.norm() {
        ClassificationKind::Linearizable
    } else {
        let lam = ratio.re;
        if lam > 0.0 {
            let n = lam.round();
            if n >= 1.0 && (lam - n).abs() <= 1e-7 * (1.0 + lam.abs()) {
                ClassificationKind::NodeResonant {
                    n: n as u32,
                    phi_zero: probes.phi_zero,
                }
            } else {
                ClassificationKind::Linearizable
            }
        } else {
            match rationalize(-lam, 12, 1e-7) {
                Some((n, m)) => {
                    let confirmed = probes
                        .psi
                        .map(|p| p.abs() > 1e-9 * probes.psi_scale.unwrap_or(1.0).max(1.0));
                    match confirmed {
                        Some(false) => ClassificationKind::Unclassified {
                            reason: format!("resonant saddle candidate (−{n}/{m}) with Ψ(0,0) = 0"),
                        },
                        _ => ClassificationKind::SaddleResonant {
                            n,
                            m,
                            psi: probes.psi,
                            confirmed,
                        },
                    }
                }
                // Irrational within tolerance: no finite-order obstruction.
                None => ClassificationKind::Linearizable,
            }
        }
    };

    Ok(Classification {
        kind,
        lambda_ratio: ratio,
        nk_note,
        matches_exponent,
    })
}

// ---------------------------------------------------------------------------
// Rank probe for φ(0)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PhiProbe {
    pub lambda: f64,
    pub rank: usize,
    /// `φ(0) = 0` iff `rank(Λ − λI) = 1`.
    pub phi_zero: bool,
}

/// Rank test at a singular point whose linearization has a double nonzero
/// eigenvalue λ and a single zero: `rank(Λ − λI)` is 1 exactly when the
/// resonant node coefficient vanishes at the point.
pub fn rank_probe_phi(
    v: &dyn VectorField,
    x_star: &[f64],
    tol: f64,
) -> Result<PhiProbe, NormalFormError> {
    let report = spectral::linearize(v, x_star, tol)?;
    let eig = &report.eigenvalues;
    if eig.len() != 3 {
        return Err(NormalFormError::SpectrumMismatch(format!(
            "expected a 3-dimensional spectrum, got {}",
            eig.len()
        )));
    }
    let zeros = eig.iter().filter(|z| z.norm() == 0.0).count();
    if zeros != 1 {
        return Err(NormalFormError::SpectrumMismatch(format!(
            "expected exactly one zero eigenvalue, spectrum {eig:?}"
        )));
    }
    let pair: Vec<Complex64> = eig.iter().cloned().filter(|z| z.norm() > 0.0).collect();
    let spread = (pair[0] - pair[1]).norm();
    let pair_scale = pair[0].norm() + pair[1].norm();
    if pair[0].im != 0.0 || pair[1].im != 0.0 || spread > 1e-6 * pair_scale {
        return Err(NormalFormError::SpectrumMismatch(format!(
            "expected a double real eigenvalue, got {pair:?}"
        )));
    }
    let lambda = (pair[0].re + pair[1].re) / 2.0;
    let mut shifted = report.jacobian.clone();
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let threshold = 1e-8 * linalg::frobenius(&report.jacobian).max(1e-300);
    let rank = linalg::numerical_rank(&shifted, threshold);
    if rank == 0 || rank == 3 {
        return Err(NormalFormError::SpectrumMismatch(format!(
            "rank(Λ − λI) = {rank} is incompatible with a double eigenvalue"
        )));
    }
    Ok(PhiProbe {
        lambda,
        rank,
        phi_zero: rank == 1,
    })
}
