//! Singular 2D metrics and their desingularized geodesic flows.
//!
//! Three metric families are modeled, each built from user-supplied
//! coefficient expressions: [`pseudo::PseudoRiemannianModel`] (signature
//! change on a curve), [`klein::KleinModel`] (positive definite with a
//! divide-by-zero pole), and [`almost::AlmostRiemannianModel`] (orthonormal
//! frame collinear on a curve). Each exposes the desingularized field `V`,
//! the blown-up field `W`, the Lagrangian of the underlying variational
//! problem, and the scalar `f` with exponent `r` linking them.
//!
//! Geodesics through a degenerate point exist only along tangential
//! directions annihilating the induced cubic; [`shoot_geodesics`] seeds
//! trajectories in the hyperbolic eigenplane of such a singular point and
//! integrates the desingularized flow through it.

pub mod almost;
pub mod klein;
pub mod pseudo;

use thiserror::Error;

use crate::fields::{FieldError, VectorField};
use crate::linalg;
use crate::ode::{self, IntegratorOptions, StopReason};
use crate::spectral::{self, SpectralError};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Expr(#[from] crate::expr::ParseError),
    #[error("point is not a singular point of the desingularized field (|V| = {0:.3e})")]
    NotASingularPoint(f64),
    #[error("hyperbolic eigenplane undefined: {0}")]
    EigenplaneUndefined(String),
    #[error("isotropic direction is tangent to the degeneracy curve (a·Δ_t − b·Δ_x = {0:.3e})")]
    TangentIsotropicDirection(f64),
    #[error("leading metric coefficient vanishes at the parabolic point (a = {0:.3e})")]
    DegenerateLeadingCoefficient(f64),
    #[error(
        "coefficient must be positive on the working window; found {value:.3e} at ({t:.3}, {x:.3})"
    )]
    PositivityViolated { value: f64, t: f64, x: f64 },
    #[error("frame factor vanishes on the working window at ({x:.3}, {y:.3})")]
    VanishingFrameFactor { x: f64, y: f64 },
    #[error("point is not on the degeneracy curve ({0} = {1:.3e})")]
    NotDegenerate(&'static str, f64),
    #[error("geodesic count must be at least 1")]
    EmptyFan,
}

// ---------------------------------------------------------------------------
// Geodesic shooting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GeodesicOptions {
    pub count: usize,
    /// Seed offset along the eigenplane directions.
    pub epsilon: f64,
    /// Integration horizon in the field parameter.
    pub horizon: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Abort threshold for the affine p-chart.
    pub p_cap: f64,
    /// Abort radius around the singular point.
    pub radius_cap: f64,
    /// Half-opening of the seed fan, degrees, measured in the eigenplane.
    pub fan_half_angle_deg: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            count: 5,
            epsilon: 1e-6,
            horizon: 15.0,
            rtol: 1e-10,
            atol: 1e-12,
            p_cap: 1e6,
            radius_cap: 50.0,
            fan_half_angle_deg: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    /// Node fan direction (index within the fan).
    Fan(usize),
    /// Separatrix branches of a saddle.
    UnstablePlus,
    UnstableMinus,
    StablePlus,
    StableMinus,
}

#[derive(Debug, Clone)]
pub struct GeodesicSample {
    pub s: f64,
    pub phase: Vec<f64>,
    /// Projection to the base coordinates (first two phase coordinates).
    pub base: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct GeodesicCurve {
    pub branch: BranchKind,
    pub seed_direction: Vec<f64>,
    pub seed_point: Vec<f64>,
    pub samples: Vec<GeodesicSample>,
    pub status: StopReason,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl GeodesicCurve {
    /// Largest |first coordinate| reached (the t- or x-window of the curve).
    pub fn coord0_span(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0f64, |acc, s| acc.max(s.base[0].abs()))
    }
}

fn orthonormalize(basis: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in basis.iter() {
        let mut w = v.clone();
        for u in &out {
            let proj: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= proj * ui;
            }
        }
        let n = linalg::norm(&w);
        if n > 1e-10 {
            out.push(w.iter().map(|x| x / n).collect());
        }
    }
    *basis = out;
}

/// Shoot a family of geodesic phase curves out of a singular point.
///
/// For a node (nonzero eigenvalues of one sign) the seeds fan across the
/// hyperbolic eigenplane and time runs in the unstable direction of the
/// node; for a saddle the four separatrix branches are returned (the fan
/// count does not apply). Runs abort with a diagnostic when the affine
/// p-chart overflows or the trajectory leaves the working radius.
pub fn shoot_geodesics(
    field: &dyn VectorField,
    singular_point: &[f64],
    opts: &GeodesicOptions,
) -> Result<Vec<GeodesicCurve>, GeometryError> {
    if opts.count == 0 {
        return Err(GeometryError::EmptyFan);
    }
    let value = field.value_at(singular_point)?;
    let vnorm = linalg::norm(&value);
    let scale = 1.0 + linalg::norm(singular_point);
    if vnorm > 1e-8 * scale {
        return Err(GeometryError::NotASingularPoint(vnorm));
    }
    let report = spectral::linearize(field, singular_point, 1e-7 * scale)?;
    let nonzero: Vec<_> = report
        .eigenvalues
        .iter()
        .cloned()
        .filter(|z| z.norm() > 0.0)
        .collect();
    if nonzero.len() != 2 {
        return Err(GeometryError::EigenplaneUndefined(format!(
            "expected two nonzero eigenvalues, spectrum {:?}",
            report.eigenvalues
        )));
    }
    if nonzero.iter().any(|z| z.im != 0.0) {
        return Err(GeometryError::EigenplaneUndefined(format!(
            "complex pair {nonzero:?} (focus case unsupported)"
        )));
    }
    let (l1, l2) = (nonzero[0].re, nonzero[1].re);

    let eigvec_real = |lam: f64| -> Result<Vec<f64>, GeometryError> {
        let v = linalg::eigenvector(&report.jacobian, num_complex::Complex64::new(lam, 0.0))
            .ok_or_else(|| {
                GeometryError::EigenplaneUndefined(format!("no eigenvector for λ = {lam}"))
            })?;
        Ok(v.into_iter().map(|z| z.re).collect())
    };

    let mut curves = Vec::new();
    if l1 * l2 > 0.0 {
        // Node: span the eigenplane.
        let mut basis = if (l1 - l2).abs() <= 1e-9 * (l1.abs() + l2.abs()) {
            let tol = 1e-8 * linalg::frobenius(&report.jacobian).max(1.0);
            linalg::null_space(&report.jacobian, num_complex::Complex64::new(l1, 0.0), tol)
                .into_iter()
                .map(|v| v.into_iter().map(|z| z.re).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        } else {
            vec![eigvec_real(l1)?, eigvec_real(l2)?]
        };
        orthonormalize(&mut basis);
        if basis.len() != 2 {
            return Err(GeometryError::EigenplaneUndefined(format!(
                "eigenplane basis degenerate ({} independent directions)",
                basis.len()
            )));
        }
        let forward = l1 > 0.0;
        let half = opts.fan_half_angle_deg.to_radians();
        for i in 0..opts.count {
            let theta = if opts.count == 1 {
                0.0
            } else {
                -half + 2.0 * half * i as f64 / (opts.count - 1) as f64
            };
            let direction: Vec<f64> = basis[0]
                .iter()
                .zip(&basis[1])
                .map(|(u, v)| theta.cos() * u + theta.sin() * v)
                .collect();
            curves.push(run_one(
                field,
                singular_point,
                direction,
                BranchKind::Fan(i),
                forward,
                opts,
            ));
        }
    } else {
        // Saddle: the two separatrix branches on each side.
        let (unstable, stable) = if l1 > 0.0 { (l1, l2) } else { (l2, l1) };
        let eu = eigvec_real(unstable)?;
        let es = eigvec_real(stable)?;
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
        for (direction, branch, forward) in [
            (eu.clone(), BranchKind::UnstablePlus, true),
            (neg(&eu), BranchKind::UnstableMinus, true),
            (es.clone(), BranchKind::StablePlus, false),
            (neg(&es), BranchKind::StableMinus, false),
        ] {
            curves.push(run_one(
                field,
                singular_point,
                direction,
                branch,
                forward,
                opts,
            ));
        }
    }
    Ok(curves)
}

fn run_one(
    field: &dyn VectorField,
    singular_point: &[f64],
    direction: Vec<f64>,
    branch: BranchKind,
    forward: bool,
    opts: &GeodesicOptions,
) -> GeodesicCurve {
    let seed: Vec<f64> = singular_point
        .iter()
        .zip(&direction)
        .map(|(x, d)| x + opts.epsilon * d)
        .collect();
    let integrator = IntegratorOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        initial_step: None,
        max_steps: 200_000,
    };
    let s_end = if forward { opts.horizon } else { -opts.horizon };
    let center = singular_point.to_vec();
    let p_cap = opts.p_cap;
    let radius_cap = opts.radius_cap;
    let trajectory = ode::integrate(
        |y| field.value_at(y).map_err(|e| e.to_string()),
        &seed,
        0.0,
        s_end,
        &integrator,
        move |y| {
            if y.last().is_some_and(|p| p.abs() > p_cap) {
                return Some(format!("p-chart overflow (|p| > {p_cap:.1e})"));
            }
            let r: f64 = y
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (r > radius_cap).then(|| format!("left the working radius {radius_cap}"))
        },
    );
    let samples = trajectory
        .samples
        .iter()
        .map(|(s, y)| GeodesicSample {
            s: *s,
            phase: y.clone(),
            base: [y[0], y[1]],
        })
        .collect();
    GeodesicCurve {
        branch,
        seed_direction: direction,
        seed_point: seed,
        samples,
        status: trajectory.status,
        accepted: trajectory.accepted,
        rejected: trajectory.rejected,
        rhs_evals: trajectory.rhs_evals,
    }
}

// ---------------------------------------------------------------------------
// Consistency reporting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NamedCheck {
    pub name: &'static str,
    pub max_relative_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Outcome of the per-model Lagrangian consistency verification.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub checks: Vec<NamedCheck>,
    pub passed: bool,
}

impl ConsistencyReport {
    pub(crate) fn from_checks(checks: Vec<NamedCheck>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        ConsistencyReport { checks, passed }
    }
}

pub(crate) struct ResidualTracker {
    name: &'static str,
    tol: f64,
    worst: f64,
}

impl ResidualTracker {
    pub(crate) fn new(name: &'static str, tol: f64) -> Self {
        ResidualTracker {
            name,
            tol,
            worst: 0.0,
        }
    }

    pub(crate) fn record(&mut self, residual: f64, scale: f64) {
        self.worst = self.worst.max(residual / scale.max(1.0));
    }

    pub(crate) fn finish(self) -> NamedCheck {
        NamedCheck {
            name: self.name,
            max_relative_residual: self.worst,
            tol: self.tol,
            passed: self.worst <= self.tol,
        }
    }
}
