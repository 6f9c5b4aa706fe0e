//! Implementations of the analyze / verify / geodesics / normal-form
//! subcommands. Each returns a JSON report plus a pass verdict; callers map
//! these onto exit codes (0 pass, 1 check failure, 2 config or usage error).

use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::config::{RunConfig, SeriesFieldConfig};
use super::report::{complex_json, curves_csv, matrix_json, vec_json, write_atomic};
use crate::fields::{ExprScalarField, ExprVectorField, FieldError, SingularField, VectorField};
use crate::geometry::{
    almost::{self, AlmostRiemannianModel},
    klein::{self, KleinModel},
    pseudo::PseudoRiemannianModel,
    shoot_geodesics, BranchKind, GeodesicCurve, GeodesicOptions,
};
use crate::jets::{Jet, SeriesVectorField};
use crate::normalform::{
    classify, flatten, rank_probe_phi, resonant_jet_coefficient, Classification,
    ClassificationKind, ClassifyProbes,
};
use crate::spectral::{
    check_resonance_relation, find_singular_points, linearize_singular, SpectralReport,
};
use crate::util::Rng;

#[derive(Debug)]
pub enum CliError {
    /// Configuration or build problem: exit code 2.
    Config(String),
}

impl CliError {
    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) => m,
        }
    }
}

pub struct CommandOutcome {
    pub report: Value,
    pub passed: bool,
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

fn build_raw(config: &RunConfig) -> Result<SingularField, CliError> {
    let raw = config.raw_field.as_ref().expect("validated");
    let variables: Vec<&str> = raw.variables.iter().map(String::as_str).collect();
    let components: Vec<&str> = raw.components.iter().map(String::as_str).collect();
    let v = ExprVectorField::parse(&components, &variables).map_err(config_err)?;
    let f = ExprScalarField::parse(&raw.f, &variables).map_err(config_err)?;
    if raw.allow_negative_r {
        SingularField::with_signed_exponent(Box::new(v), Box::new(f), raw.r).map_err(config_err)
    } else {
        SingularField::new(Box::new(v), Box::new(f), raw.r).map_err(config_err)
    }
}

fn build_pseudo(config: &RunConfig) -> Result<PseudoRiemannianModel, CliError> {
    let cfg = config.pseudo.as_ref().expect("validated");
    PseudoRiemannianModel::parse(&cfg.a, &cfg.b, &cfg.c).map_err(config_err)
}

fn build_klein(config: &RunConfig) -> Result<KleinModel, CliError> {
    let cfg = config.klein.as_ref().expect("validated");
    KleinModel::parse(&cfg.alpha, &cfg.gamma, cfg.n).map_err(config_err)
}

fn build_almost(config: &RunConfig) -> Result<AlmostRiemannianModel, CliError> {
    let cfg = config.almost.as_ref().expect("validated");
    AlmostRiemannianModel::parse(&cfg.v).map_err(config_err)
}

fn build_series(cfg: &SeriesFieldConfig) -> Result<SeriesVectorField, CliError> {
    if cfg.components.len() != 3 {
        return Err(CliError::Config(format!(
            "series_field needs 3 components, got {}",
            cfg.components.len()
        )));
    }
    let mut jets = Vec::with_capacity(3);
    for table in &cfg.components {
        let mut jet = Jet::zero(3, cfg.order);
        for (idx, value) in table {
            if idx.len() != 3 || idx.iter().sum::<usize>() > cfg.order {
                return Err(CliError::Config(format!(
                    "series_field index {idx:?} invalid for order {}",
                    cfg.order
                )));
            }
            jet.set_coeff(idx, *value);
        }
        jets.push(jet);
    }
    SeriesVectorField::new(vec![0.0; 3], jets).map_err(config_err)
}

/// Series data frozen at its base point, usable by point-local analyses.
struct FrozenSeriesField {
    series: SeriesVectorField,
}

impl VectorField for FrozenSeriesField {
    fn dim(&self) -> usize {
        self.series.dim()
    }

    fn series_at(&self, point: &[f64], order: usize) -> Result<SeriesVectorField, FieldError> {
        let off: f64 = point
            .iter()
            .zip(self.series.base())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if off > 1e-12 {
            return Err(FieldError::Unsupported(
                "series fields evaluate only at their base point".into(),
            ));
        }
        let comps: Vec<Jet> = self
            .series
            .components()
            .iter()
            .map(|c| c.truncated(order))
            .collect();
        SeriesVectorField::new(point.to_vec(), comps).map_err(FieldError::from)
    }
}

// ---------------------------------------------------------------------------
// JSON fragments
// ---------------------------------------------------------------------------

fn spectral_json(report: &SpectralReport) -> Value {
    json!({
        "point": vec_json(&report.point),
        "jacobian": matrix_json(&report.jacobian),
        "eigenvalues": report.eigenvalues.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        "grad_f": report.grad_f.as_ref().map(|g| vec_json(g)).unwrap_or(Value::Null),
        "j_index": report.j_index,
        "resonance_residual": report.resonance_residual,
    })
}

fn classification_json(c: &Classification) -> Value {
    let mut obj = json!({
        "kind": c.kind.tag(),
        "lambda_ratio": complex_json(c.lambda_ratio),
        "nk": c.nk_note.iter().map(|(k, n)| json!([k, n])).collect::<Vec<_>>(),
        "matches_exponent": c.matches_exponent,
    });
    let extra = match &c.kind {
        ClassificationKind::NodeResonant { n, phi_zero } => {
            json!({"n": n, "phi_zero": phi_zero})
        }
        ClassificationKind::SaddleResonant {
            n,
            m,
            psi,
            confirmed,
        } => {
            json!({"n": n, "m": m, "psi": psi, "confirmed": confirmed})
        }
        ClassificationKind::Unclassified { reason } => json!({"reason": reason}),
        ClassificationKind::Linearizable => json!({}),
    };
    if let (Value::Object(base), Value::Object(more)) = (&mut obj, extra) {
        base.extend(more);
    }
    obj
}

/// Classify from a spectral report, firing the Ψ and rank probes when the
/// spectrum calls for them.
fn classify_at(
    v: &dyn VectorField,
    report: &SpectralReport,
    r: f64,
) -> Option<(Classification, Value)> {
    let zeros = report
        .eigenvalues
        .iter()
        .filter(|z| z.norm() == 0.0)
        .count();
    let nonzero: Vec<Complex64> = report
        .eigenvalues
        .iter()
        .cloned()
        .filter(|z| z.norm() > 0.0)
        .collect();
    if zeros == 0 || nonzero.len() != 2 {
        return None;
    }
    let mut probes = ClassifyProbes::default();
    let mut probe_notes = json!({});
    if report.point.len() == 3 {
        let sum = nonzero[0] + nonzero[1];
        let scale = nonzero[0].norm() + nonzero[1].norm();
        if sum.norm() <= 1e-7 * scale {
            if let Ok(psi) = resonant_jet_coefficient(v, &report.point, 1, 1) {
                probes.psi = Some(psi.psi);
                probes.psi_scale = Some(psi.scale);
                probe_notes["psi"] = json!(psi.psi);
            }
        }
        if (nonzero[0] - nonzero[1]).norm() <= 1e-6 * scale {
            let tol = 1e-6 * (1.0 + crate::linalg::norm(&report.point));
            if let Ok(probe) = rank_probe_phi(v, &report.point, tol) {
                probes.phi_zero = Some(probe.phi_zero);
                probe_notes["rank"] = json!(probe.rank);
            }
        }
    }
    match classify(nonzero[0], nonzero[1], r, &probes) {
        Ok(c) => Some((c, probe_notes)),
        Err(_) => None,
    }
}

fn gamma_samples(sf: &SingularField, center: &[f64], rng: &mut Rng, count: usize) -> Vec<Vec<f64>> {
    let mut samples = Vec::new();
    for _ in 0..count * 20 {
        if samples.len() >= count {
            break;
        }
        let dir = rng.unit_vector(sf.dim());
        let seed: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + 0.4 * d).collect();
        if let Ok(point) = sf.project_to_gamma(&seed) {
            samples.push(point);
        }
    }
    samples
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

pub fn cmd_analyze(config: &RunConfig, seed: u64) -> Result<CommandOutcome, CliError> {
    let tol_check = config.options.tol_check();
    let tol_res = config.options.tol_resonance();
    let mut entries = Vec::new();
    let mut errors: Vec<Value> = Vec::new();
    let mut passed = true;

    match config.kind.as_str() {
        "raw_field" => {
            let sf = build_raw(config)?;
            let r = sf.exponent();
            let dim = sf.dim();
            let mut rng = Rng::new(seed);
            let seeds: Vec<Vec<f64>> = config.options.seeds.clone().unwrap_or_else(|| {
                (0..6)
                    .map(|_| rng.unit_vector(dim).iter().map(|x| 0.3 * x).collect())
                    .collect()
            });
            let search = find_singular_points(sf.v(), &seeds, 1e-10);
            for failure in &search.failures {
                errors.push(json!({
                    "stage": "singular_point_search",
                    "seed": vec_json(&failure.seed),
                    "message": failure.reason,
                }));
            }
            if search.points.is_empty() {
                passed = false;
                errors.push(json!({
                    "stage": "singular_point_search",
                    "message": "no singular point converged from the given seeds",
                }));
            }
            for point in &search.points {
                let mut report =
                    linearize_singular(sf.v(), sf.f(), point, 1e-8).map_err(config_err)?;
                let on_gamma = sf.on_gamma(point).map_err(config_err)?;
                let relation = check_resonance_relation(&report, r, tol_res);
                if let Ok(rel) = &relation {
                    report.set_resonance(rel);
                }
                let mut entry = spectral_json(&report);
                entry["on_singular_surface"] = json!(on_gamma);
                if on_gamma {
                    match relation {
                        Ok(rel) => {
                            entry["resonance_relation"] = json!({
                                "j_index": rel.j_index,
                                "lambda_j": complex_json(rel.lambda_j),
                                "residual": rel.residual,
                                "eigenvector_residual": rel.eigenvector_residual,
                                "lambda_j_is_zero": rel.lambda_j_is_zero,
                                "ok": true,
                            });
                        }
                        Err(e) => {
                            passed = false;
                            entry["resonance_relation"] =
                                json!({"ok": false, "message": e.to_string()});
                        }
                    }
                    let samples = gamma_samples(&sf, point, &mut rng, 8);
                    match sf.check_gamma_invariant(&samples, tol_check) {
                        Ok(rep) => {
                            passed &= rep.passed;
                            entry["condition_invariant_surface"] = json!({
                                "ok": rep.passed,
                                "max_relative_residual": rep.max_relative_residual,
                                "samples": rep.samples.len(),
                            });
                        }
                        Err(e) => {
                            passed = false;
                            entry["condition_invariant_surface"] =
                                json!({"ok": false, "message": e.to_string()});
                        }
                    }
                    match sf.check_conditions_at_singular_point(point, tol_check, seed) {
                        Ok(rep) => {
                            passed &= rep.passed;
                            entry["condition_singular_limits"] = json!({
                                "ok": rep.passed,
                                "directions": rep.directions.iter().map(|d| json!({
                                    "fr_div_w_limit": d.fr_div_w_limit,
                                    "derivative_limits": vec_json(&d.derivative_limits),
                                    "ok": d.passed,
                                })).collect::<Vec<_>>(),
                            });
                        }
                        Err(e) => {
                            passed = false;
                            entry["condition_singular_limits"] =
                                json!({"ok": false, "message": e.to_string()});
                        }
                    }
                } else {
                    entry["note"] =
                        json!("singular point lies off Γ; surface conditions not applicable");
                }
                if let Some((c, probes)) = classify_at(sf.v(), &report, r) {
                    entry["classification"] = classification_json(&c);
                    entry["classification_probes"] = probes;
                }
                entries.push(entry);
            }
        }
        "pseudo" => {
            let model = build_pseudo(config)?;
            let base = config
                .options
                .base_point
                .clone()
                .unwrap_or_else(|| vec![0.0, 0.0]);
            if base.len() != 2 {
                return Err(CliError::Config("pseudo base_point must be [t, x]".into()));
            }
            let q = model
                .find_parabolic_point(&[base[0], base[1]])
                .map_err(config_err)?;
            let structure = model.singular_structure(&q).map_err(config_err)?;
            let v = model.v_field();
            let sf = SingularField::new(
                Box::new(model.v_field()),
                Box::new(model.f_scalar()),
                crate::geometry::pseudo::PSEUDO_EXPONENT,
            )
            .map_err(config_err)?;
            let mut report = linearize_singular(&v, sf.f(), &structure.isotropic.phase_point, 1e-8)
                .map_err(config_err)?;
            let relation = check_resonance_relation(&report, sf.exponent(), tol_res);
            if let Ok(rel) = &relation {
                report.set_resonance(rel);
            }
            let mut entry = spectral_json(&report);
            entry["role"] = json!("isotropic");
            entry["sigma"] = json!(structure.isotropic.sigma);
            entry["sigma_in_spectrum"] = json!(structure.isotropic.sigma_in_spectrum);
            entry["ratio_two_one_zero"] = json!(structure.isotropic.ratio_two_one_zero);
            passed &=
                structure.isotropic.sigma_in_spectrum && structure.isotropic.ratio_two_one_zero;
            match relation {
                Ok(rel) => {
                    entry["resonance_relation"] = json!({
                        "j_index": rel.j_index,
                        "lambda_j": complex_json(rel.lambda_j),
                        "residual": rel.residual,
                        "eigenvector_residual": rel.eigenvector_residual,
                        "ok": true,
                    });
                }
                Err(e) => {
                    passed = false;
                    entry["resonance_relation"] = json!({"ok": false, "message": e.to_string()});
                }
            }
            if let Some((c, probes)) = classify_at(&v, &report, sf.exponent()) {
                entry["classification"] = classification_json(&c);
                entry["classification_probes"] = probes;
            }
            entries.push(entry);
            for saddle in &structure.saddles {
                let mut entry = json!({
                    "role": "saddle",
                    "point": vec_json(&saddle.phase_point),
                    "eigenvalues": saddle.spectrum.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
                    "lambda_sum": saddle.lambda_sum,
                });
                if let Some(psi) = &saddle.psi {
                    entry["psi"] = json!(psi.psi);
                    entry["psi_nonzero"] = json!(psi.is_nonzero(1e-9));
                }
                let sreport = linearize_singular(&v, sf.f(), &saddle.phase_point, 1e-6)
                    .map_err(config_err)?;
                if let Some((c, probes)) = classify_at(&v, &sreport, sf.exponent()) {
                    entry["classification"] = classification_json(&c);
                    entry["classification_probes"] = probes;
                }
                entries.push(entry);
            }
        }
        "klein" => {
            let model = build_klein(config)?;
            let x_star = config.options.base_point.as_ref().map_or(0.0, |b| b[0]);
            let phase = model.singular_point(x_star);
            let v = model.v_field();
            let f = model.f_scalar();
            let r = model.exponent();
            let mut report = linearize_singular(&v, &f, &phase, 1e-8).map_err(config_err)?;
            let relation = check_resonance_relation(&report, r, tol_res);
            if let Ok(rel) = &relation {
                report.set_resonance(rel);
            }
            let mut entry = spectral_json(&report);
            match relation {
                Ok(rel) => {
                    entry["resonance_relation"] = json!({
                        "j_index": rel.j_index,
                        "lambda_j": complex_json(rel.lambda_j),
                        "residual": rel.residual,
                        "eigenvector_residual": rel.eigenvector_residual,
                        "ok": true,
                    });
                }
                Err(e) => {
                    passed = false;
                    entry["resonance_relation"] = json!({"ok": false, "message": e.to_string()});
                }
            }
            if let Some((c, probes)) = classify_at(&v, &report, r) {
                passed &= !matches!(c.kind, ClassificationKind::Unclassified { .. });
                entry["classification"] = classification_json(&c);
                entry["classification_probes"] = probes;
            }
            if model.pole_order() == 1 {
                entry["gamma_x_criterion"] = json!(model.gamma_x_at(x_star).map_err(config_err)?);
            }
            entries.push(entry);
        }
        "almost" => {
            let model = build_almost(config)?;
            let y_star = config.options.base_point.as_ref().map_or(0.0, |b| b[0]);
            let phase = model.singular_point(y_star);
            let v = model.v_field();
            let report = crate::spectral::linearize(&v, &phase, 1e-8).map_err(config_err)?;
            let mut entry = spectral_json(&report);
            entry["note"] = json!(
                "resonance relation applies in the (t, y, p) chart, singular at its boundary; \
                 classification uses the smooth (x, y, p) field"
            );
            if let Some((c, probes)) = classify_at(&v, &report, almost::ALMOST_EXPONENT) {
                passed &= !matches!(c.kind, ClassificationKind::Unclassified { .. });
                entry["classification"] = classification_json(&c);
                entry["classification_probes"] = probes;
            }
            entries.push(entry);
        }
        other => {
            return Err(CliError::Config(format!(
                "analyze does not support kind \"{other}\""
            )));
        }
    }

    let report = json!({
        "command": "analyze",
        "kind": config.kind,
        "seed": seed,
        "singular_points": entries,
        "errors": errors,
        "passed": passed,
    });
    Ok(CommandOutcome { report, passed })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn named_checks_json(report: &crate::geometry::ConsistencyReport) -> Vec<Value> {
    report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "max_relative_residual": c.max_relative_residual,
                "tol": c.tol,
                "ok": c.passed,
            })
        })
        .collect()
}

pub fn cmd_verify(config: &RunConfig, seed: u64) -> Result<CommandOutcome, CliError> {
    let tol_check = config.options.tol_check();
    let mut rng = Rng::new(seed);
    let mut checks: Vec<Value> = Vec::new();
    let mut gate = |name: &str, ok: bool, detail: Value, gating: bool, passed: &mut bool| {
        if gating {
            *passed &= ok;
        }
        checks.push(json!({"name": name, "ok": ok, "gating": gating, "detail": detail}));
    };
    let mut passed = true;

    let default_checks: Vec<&str> = match config.kind.as_str() {
        "raw_field" => vec!["gamma_invariant", "singular_conditions"],
        _ => vec![
            "gamma_invariant",
            "singular_conditions",
            "lagrangian_consistency",
        ],
    };
    let requested: Vec<String> = config
        .options
        .checks
        .clone()
        .unwrap_or_else(|| default_checks.iter().map(|s| s.to_string()).collect());
    let is_gating = |name: &str| requested.iter().any(|c| c == name);

    match config.kind.as_str() {
        "raw_field" => {
            let sf = build_raw(config)?;
            let dim = sf.dim();
            let center = config
                .options
                .base_point
                .clone()
                .unwrap_or_else(|| vec![0.0; dim]);
            let samples = gamma_samples(&sf, &center, &mut rng, config.options.samples().min(40));
            match sf.check_gamma_invariant(&samples, tol_check) {
                Ok(rep) => gate(
                    "gamma_invariant",
                    rep.passed,
                    json!({"max_relative_residual": rep.max_relative_residual, "samples": rep.samples.len()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
                Err(e) => gate(
                    "gamma_invariant",
                    false,
                    json!({"message": e.to_string()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
            }

            // First-integral test is informational unless requested: f need
            // not be a first integral for the theory to apply.
            let mut off_gamma = Vec::new();
            for _ in 0..200 {
                if off_gamma.len() >= 20 {
                    break;
                }
                let p: Vec<f64> = (0..dim)
                    .map(|i| center[i] + rng.uniform(-1.0, 1.0))
                    .collect();
                if let Ok(false) = sf.on_gamma(&p) {
                    if sf.f().value_at(&p).map(|f| f.abs() > 1e-3).unwrap_or(false) {
                        off_gamma.push(p);
                    }
                }
            }
            match sf.check_first_integral(&off_gamma, tol_check) {
                Ok(rep) => gate(
                    "first_integral",
                    rep.passed,
                    json!({
                        "lie_max_relative_residual": rep.lie_report.max_relative_residual,
                        "identity_max_relative_residual": rep.identity_report.max_relative_residual,
                    }),
                    is_gating("first_integral"),
                    &mut passed,
                ),
                Err(e) => gate(
                    "first_integral",
                    false,
                    json!({"message": e.to_string()}),
                    is_gating("first_integral"),
                    &mut passed,
                ),
            }

            let seeds: Vec<Vec<f64>> = config.options.seeds.clone().unwrap_or_else(|| {
                (0..6)
                    .map(|_| rng.unit_vector(dim).iter().map(|x| 0.3 * x).collect())
                    .collect()
            });
            let search = find_singular_points(sf.v(), &seeds, 1e-10);
            let mut any_condition = false;
            let mut all_conditions = true;
            let mut detail = Vec::new();
            for point in &search.points {
                if !sf.on_gamma(point).map_err(config_err)? {
                    continue;
                }
                any_condition = true;
                match sf.check_conditions_at_singular_point(point, tol_check, seed) {
                    Ok(rep) => {
                        all_conditions &= rep.passed;
                        detail.push(json!({"point": vec_json(point), "ok": rep.passed}));
                    }
                    Err(e) => {
                        all_conditions = false;
                        detail.push(json!({"point": vec_json(point), "message": e.to_string()}));
                    }
                }
            }
            gate(
                "singular_conditions",
                any_condition && all_conditions,
                json!(detail),
                is_gating("singular_conditions"),
                &mut passed,
            );
        }
        "pseudo" => {
            let model = build_pseudo(config)?;
            let consistency = model
                .verify_consistency(seed, config.options.samples().min(60))
                .map_err(config_err)?;
            gate(
                "lagrangian_consistency",
                consistency.passed,
                json!(named_checks_json(&consistency)),
                is_gating("lagrangian_consistency"),
                &mut passed,
            );
            let sf = SingularField::new(
                Box::new(model.v_field()),
                Box::new(model.f_scalar()),
                crate::geometry::pseudo::PSEUDO_EXPONENT,
            )
            .map_err(config_err)?;
            let base = config
                .options
                .base_point
                .clone()
                .unwrap_or_else(|| vec![0.0, 0.0]);
            let q = model
                .find_parabolic_point(&[base[0], base[1]])
                .map_err(config_err)?;
            let p0 = model.isotropic_root(&q).map_err(config_err)?;
            let phase = vec![q[0], q[1], p0];
            let samples = gamma_samples(&sf, &phase, &mut rng, 12);
            match sf.check_gamma_invariant(&samples, tol_check) {
                Ok(rep) => gate(
                    "gamma_invariant",
                    rep.passed,
                    json!({"max_relative_residual": rep.max_relative_residual, "samples": rep.samples.len()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
                Err(e) => gate(
                    "gamma_invariant",
                    false,
                    json!({"message": e.to_string()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
            }
            match sf.check_conditions_at_singular_point(&phase, tol_check, seed) {
                Ok(rep) => gate(
                    "singular_conditions",
                    rep.passed,
                    json!({"point": vec_json(&phase)}),
                    is_gating("singular_conditions"),
                    &mut passed,
                ),
                Err(e) => gate(
                    "singular_conditions",
                    false,
                    json!({"message": e.to_string()}),
                    is_gating("singular_conditions"),
                    &mut passed,
                ),
            }
        }
        "klein" => {
            let model = build_klein(config)?;
            let consistency = model
                .verify_consistency(seed, config.options.samples().min(60))
                .map_err(config_err)?;
            gate(
                "lagrangian_consistency",
                consistency.passed,
                json!(named_checks_json(&consistency)),
                is_gating("lagrangian_consistency"),
                &mut passed,
            );
            let sf = SingularField::new(
                Box::new(model.v_field()),
                Box::new(model.f_scalar()),
                model.exponent(),
            )
            .map_err(config_err)?;
            let x_star = config.options.base_point.as_ref().map_or(0.0, |b| b[0]);
            let phase = model.singular_point(x_star);
            let samples = gamma_samples(&sf, &phase, &mut rng, 12);
            match sf.check_gamma_invariant(&samples, tol_check) {
                Ok(rep) => gate(
                    "gamma_invariant",
                    rep.passed,
                    json!({"max_relative_residual": rep.max_relative_residual, "samples": rep.samples.len()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
                Err(e) => gate(
                    "gamma_invariant",
                    false,
                    json!({"message": e.to_string()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
            }
            match sf.check_conditions_at_singular_point(&phase, tol_check, seed) {
                Ok(rep) => gate(
                    "singular_conditions",
                    rep.passed,
                    json!({"point": vec_json(&phase)}),
                    is_gating("singular_conditions"),
                    &mut passed,
                ),
                Err(e) => gate(
                    "singular_conditions",
                    false,
                    json!({"message": e.to_string()}),
                    is_gating("singular_conditions"),
                    &mut passed,
                ),
            }
        }
        "almost" => {
            let model = build_almost(config)?;
            let consistency = model
                .verify_consistency(seed, config.options.samples().min(60))
                .map_err(config_err)?;
            gate(
                "lagrangian_consistency",
                consistency.passed,
                json!(named_checks_json(&consistency)),
                is_gating("lagrangian_consistency"),
                &mut passed,
            );
            // Γ-invariance analog in the smooth chart: {x = 0} is invariant
            // for the (x, y, p) field.
            let x_expr = crate::expr::parse("x", &["x", "y", "p"]).map_err(config_err)?;
            let sf = SingularField::new(
                Box::new(model.v_field()),
                Box::new(ExprScalarField::new(x_expr)),
                almost::ALMOST_EXPONENT,
            )
            .map_err(config_err)?;
            let y_star = config.options.base_point.as_ref().map_or(0.0, |b| b[0]);
            let phase = model.singular_point(y_star);
            let samples = gamma_samples(&sf, &phase, &mut rng, 12);
            match sf.check_gamma_invariant(&samples, tol_check) {
                Ok(rep) => gate(
                    "gamma_invariant",
                    rep.passed,
                    json!({"max_relative_residual": rep.max_relative_residual, "samples": rep.samples.len()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
                Err(e) => gate(
                    "gamma_invariant",
                    false,
                    json!({"message": e.to_string()}),
                    is_gating("gamma_invariant"),
                    &mut passed,
                ),
            }
            gate(
                "singular_conditions",
                true,
                json!({"note": "chart boundary: limit conditions hold through the Lagrangian chart"}),
                false,
                &mut passed,
            );
        }
        other => {
            return Err(CliError::Config(format!(
                "verify does not support kind \"{other}\""
            )));
        }
    }

    let report = json!({
        "command": "verify",
        "kind": config.kind,
        "seed": seed,
        "checks": checks,
        "errors": [],
        "passed": passed,
    });
    Ok(CommandOutcome { report, passed })
}

// ---------------------------------------------------------------------------
// geodesics
// ---------------------------------------------------------------------------

fn is_constant(expr_src: &str, vars: &[&str], value: f64) -> bool {
    let Ok(expr) = crate::expr::parse(expr_src, vars) else {
        return false;
    };
    let probes = [[0.1, -0.4], [0.0, 0.0], [-0.7, 0.3], [0.5, 0.9]];
    probes.iter().all(|p| {
        expr.eval(&p[..])
            .map(|v| (v - value).abs() < 1e-14)
            .unwrap_or(false)
    })
}

fn branch_name(branch: &BranchKind) -> String {
    match branch {
        BranchKind::Fan(i) => format!("fan_{i:02}"),
        BranchKind::UnstablePlus => "unstable_plus".into(),
        BranchKind::UnstableMinus => "unstable_minus".into(),
        BranchKind::StablePlus => "stable_plus".into(),
        BranchKind::StableMinus => "stable_minus".into(),
    }
}

fn curve_rows(curve: &GeodesicCurve) -> Vec<Vec<f64>> {
    curve
        .samples
        .iter()
        .map(|s| vec![s.s, s.base[0], s.base[1], s.phase[2]])
        .collect()
}

pub fn cmd_geodesics(
    config: &RunConfig,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<CommandOutcome, CliError> {
    let geo_opts: GeodesicOptions = config
        .options
        .geodesics
        .as_ref()
        .map(|g| g.to_options())
        .unwrap_or_default();
    let single_file = config
        .options
        .geodesics
        .as_ref()
        .map(|g| g.single_file)
        .unwrap_or(false);

    #[allow(clippy::type_complexity)]
    let (curves, singular_point, oracle_kind): (Vec<GeodesicCurve>, Vec<f64>, &str) =
        match config.kind.as_str() {
            "pseudo" => {
                let model = build_pseudo(config)?;
                let base = config
                    .options
                    .base_point
                    .clone()
                    .unwrap_or_else(|| vec![0.0, 0.0]);
                let q = model
                    .find_parabolic_point(&[base[0], base[1]])
                    .map_err(config_err)?;
                let p0 = model.isotropic_root(&q).map_err(config_err)?;
                let point = vec![q[0], q[1], p0];
                let v = model.v_field();
                (
                    shoot_geodesics(&v, &point, &geo_opts).map_err(config_err)?,
                    point,
                    "none",
                )
            }
            "klein" => {
                let model = build_klein(config)?;
                let x_star = config.options.base_point.as_ref().map_or(0.0, |b| b[0]);
                let point = model.singular_point(x_star).to_vec();
                let v = model.v_field();
                let cfg = config.klein.as_ref().expect("validated");
                let oracle = if cfg.n == 1
                    && is_constant(&cfg.alpha, &["t", "x"], 1.0)
                    && is_constant(&cfg.gamma, &["t", "x"], 1.0)
                {
                    "half_plane_circles"
                } else {
                    "none"
                };
                (
                    shoot_geodesics(&v, &point, &geo_opts).map_err(config_err)?,
                    point,
                    oracle,
                )
            }
            "almost" => {
                let model = build_almost(config)?;
                let y_star = config.options.base_point.as_ref().map_or(0.0, |b| b[0]);
                let point = model.singular_point(y_star).to_vec();
                let v = model.v_field();
                let cfg = config.almost.as_ref().expect("validated");
                let oracle = if is_constant(&cfg.v, &["x", "y"], 2.0) {
                    "grushin_closed_form"
                } else {
                    "none"
                };
                (
                    shoot_geodesics(&v, &point, &geo_opts).map_err(config_err)?,
                    point,
                    oracle,
                )
            }
            other => {
                return Err(CliError::Config(format!(
                    "geodesics does not support kind \"{other}\""
                )));
            }
        };

    let mut curve_entries = Vec::new();
    let mut max_oracle_error: Option<f64> = None;
    let mut files = Vec::new();
    let mut combined_rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, curve) in curves.iter().enumerate() {
        let rows = curve_rows(curve);
        if let Some(dir) = out_dir {
            if single_file {
                for row in &rows {
                    combined_rows.push((i, row.clone()));
                }
            } else {
                let path = dir.join(format!("curve_{i:02}.csv"));
                write_atomic(&path, &curves_csv("s,coord1,coord2,p", &rows))
                    .map_err(CliError::Config)?;
                files.push(path.display().to_string());
            }
        }
        let mut entry = json!({
            "id": i,
            "branch": branch_name(&curve.branch),
            "seed_direction": vec_json(&curve.seed_direction),
            "samples": curve.samples.len(),
            "status": format!("{:?}", curve.status),
            "accepted_steps": curve.accepted,
            "rejected_steps": curve.rejected,
        });
        match oracle_kind {
            "half_plane_circles" => {
                let pts: Vec<(f64, f64)> = curve
                    .samples
                    .iter()
                    .map(|s| (s.base[0], s.base[1]))
                    .collect();
                let fit = klein::fit_half_plane_geodesic(singular_point[1], &pts);
                let err = klein::half_plane_sup_error(&fit, singular_point[1], &pts, 0.5);
                entry["oracle"] = json!({
                    "kind": "half_plane_circles",
                    "fit": match fit {
                        klein::HalfPlaneGeodesic::Line => json!({"line": true}),
                        klein::HalfPlaneGeodesic::Circle { center_x, radius } =>
                            json!({"center_x": center_x, "radius": radius}),
                    },
                    "sup_error": err,
                    "window": 0.5,
                });
                max_oracle_error = Some(max_oracle_error.unwrap_or(0.0).max(err));
            }
            "grushin_closed_form" => {
                let pts: Vec<(f64, f64, f64)> = curve
                    .samples
                    .iter()
                    .map(|s| (s.phase[0], s.phase[1], s.phase[2]))
                    .collect();
                let fit = almost::grushin_fit(&pts);
                let err = almost::grushin_sup_error(&pts, singular_point[1], fit.c, None);
                entry["oracle"] = json!({
                    "kind": "grushin_closed_form",
                    "c": fit.c,
                    "c_spread": fit.c_spread,
                    "sup_error": err,
                });
                max_oracle_error = Some(max_oracle_error.unwrap_or(0.0).max(err));
            }
            _ => {}
        }
        curve_entries.push(entry);
    }
    if let (Some(dir), true) = (out_dir, single_file) {
        let mut text = String::from("curve_id,s,coord1,coord2,p\n");
        for (id, row) in &combined_rows {
            let cells: Vec<String> = row
                .iter()
                .map(|x| super::report::format_float(*x))
                .collect();
            text.push_str(&format!("{id},{}\n", cells.join(",")));
        }
        let path = dir.join("curves.csv");
        write_atomic(&path, &text).map_err(CliError::Config)?;
        files.push(path.display().to_string());
    }

    let passed = true;
    let report = json!({
        "command": "geodesics",
        "kind": config.kind,
        "seed": seed,
        "singular_point": vec_json(&singular_point),
        "oracle_kind": oracle_kind,
        "curves": curve_entries,
        "max_oracle_error": max_oracle_error,
        "files": files,
        "errors": [],
        "passed": passed,
    });
    Ok(CommandOutcome { report, passed })
}

// ---------------------------------------------------------------------------
// normal-form
// ---------------------------------------------------------------------------

pub fn cmd_normal_form(config: &RunConfig, seed: u64) -> Result<CommandOutcome, CliError> {
    if config.kind != "series_field" {
        return Err(CliError::Config(format!(
            "normal-form requires kind \"series_field\", got \"{}\"",
            config.kind
        )));
    }
    let cfg = config.series_field.as_ref().expect("validated");
    let series = build_series(cfg)?;
    let mut passed = true;

    let body = match cfg.mode.as_str() {
        "flatten" => {
            let seed_coeffs = cfg.seed_u00.as_ref().expect("validated");
            if seed_coeffs.is_empty() || seed_coeffs.len() > crate::jets::MAX_ORDER + 1 {
                return Err(CliError::Config(
                    "seed_u00 must have 1..=9 coefficients".into(),
                ));
            }
            let mut seed_jet = Jet::zero(1, seed_coeffs.len() - 1);
            for (q, v) in seed_coeffs.iter().enumerate() {
                seed_jet.set_coeff(&[q], *v);
            }
            let n_flat = cfg.n_flat.expect("validated");
            match flatten(&series, n_flat, &seed_jet) {
                Ok(q) => {
                    let residual = q.verify(&series).map_err(config_err)?;
                    passed &= residual <= 1e-9;
                    let table: Vec<Value> =
                        q.u.iter()
                            .map(|(&(p1, p2), z)| {
                                json!({
                                    "p1": p1,
                                    "p2": p2,
                                    "zeta_coefficients": vec_json(z.coeffs()),
                                })
                            })
                            .collect();
                    json!({
                        "mode": "flatten",
                        "n_flat": n_flat,
                        "coefficients": table,
                        "verification_residual": residual,
                        "ok": residual <= 1e-9,
                    })
                }
                Err(e) => {
                    passed = false;
                    json!({"mode": "flatten", "ok": false, "message": e.to_string()})
                }
            }
        }
        "resonant_coefficient" => {
            let (n, m) = cfg.resonance.unwrap_or((1, 1));
            let frozen = FrozenSeriesField { series };
            match resonant_jet_coefficient(&frozen, &[0.0; 3], n, m) {
                Ok(out) => json!({
                    "mode": "resonant_coefficient",
                    "psi": out.psi,
                    "lambda": out.lambda,
                    "scale": out.scale,
                    "nonzero": out.is_nonzero(1e-9),
                    "ok": true,
                }),
                Err(e) => {
                    passed = false;
                    json!({"mode": "resonant_coefficient", "ok": false, "message": e.to_string()})
                }
            }
        }
        _ => unreachable!("validated"),
    };

    let report = json!({
        "command": "normal-form",
        "kind": config.kind,
        "seed": seed,
        "result": body,
        "errors": [],
        "passed": passed,
    });
    Ok(CommandOutcome { report, passed })
}
