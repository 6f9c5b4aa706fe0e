//! JSON run configuration. Unknown keys are rejected everywhere; the `kind`
//! tag selects which model block must be present.

use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: String,
    #[serde(default)]
    pub raw_field: Option<RawFieldConfig>,
    #[serde(default)]
    pub pseudo: Option<PseudoConfig>,
    #[serde(default)]
    pub klein: Option<KleinConfig>,
    #[serde(default)]
    pub almost: Option<AlmostConfig>,
    #[serde(default)]
    pub series_field: Option<SeriesFieldConfig>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFieldConfig {
    pub variables: Vec<String>,
    pub components: Vec<String>,
    pub f: String,
    pub r: f64,
    #[serde(default)]
    pub allow_negative_r: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoConfig {
    pub a: String,
    pub b: String,
    pub c: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KleinConfig {
    pub alpha: String,
    pub gamma: String,
    pub n: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlmostConfig {
    pub v: String,
}

/// Truncated series field given as coefficient tables: each component lists
/// `[[p1, p2, q], value]` entries.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesFieldConfig {
    pub order: usize,
    pub components: Vec<Vec<(Vec<usize>, f64)>>,
    #[serde(default)]
    pub seed_u00: Option<Vec<f64>>,
    #[serde(default)]
    pub n_flat: Option<usize>,
    /// "flatten" or "resonant_coefficient".
    pub mode: String,
    #[serde(default)]
    pub resonance: Option<(u32, u32)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub seeds: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub base_point: Option<Vec<f64>>,
    #[serde(default)]
    pub tol_check: Option<f64>,
    #[serde(default)]
    pub tol_surface: Option<f64>,
    #[serde(default)]
    pub tol_resonance: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Which named checks gate the exit code of `verify`.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub geodesics: Option<GeodesicConfig>,
}

impl Options {
    pub fn tol_check(&self) -> f64 {
        self.tol_check.unwrap_or(1e-8)
    }

    pub fn tol_surface(&self) -> f64 {
        self.tol_surface.unwrap_or(1e-10)
    }

    pub fn tol_resonance(&self) -> f64 {
        self.tol_resonance.unwrap_or(1e-7)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(100)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicConfig {
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub fan_half_angle_deg: Option<f64>,
    #[serde(default)]
    pub p_cap: Option<f64>,
    #[serde(default)]
    pub radius_cap: Option<f64>,
    #[serde(default)]
    pub rtol: Option<f64>,
    #[serde(default)]
    pub atol: Option<f64>,
    /// Write all curves into one CSV with a `curve_id` column instead of one
    /// file per curve.
    #[serde(default)]
    pub single_file: bool,
}

impl GeodesicConfig {
    pub fn to_options(&self) -> crate::geometry::GeodesicOptions {
        let mut opts = crate::geometry::GeodesicOptions::default();
        if let Some(v) = self.count {
            opts.count = v;
        }
        if let Some(v) = self.epsilon {
            opts.epsilon = v;
        }
        if let Some(v) = self.horizon {
            opts.horizon = v;
        }
        if let Some(v) = self.fan_half_angle_deg {
            opts.fan_half_angle_deg = v;
        }
        if let Some(v) = self.p_cap {
            opts.p_cap = v;
        }
        if let Some(v) = self.radius_cap {
            opts.radius_cap = v;
        }
        if let Some(v) = self.rtol {
            opts.rtol = v;
        }
        if let Some(v) = self.atol {
            opts.atol = v;
        }
        opts
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        let want = |present: bool, block: &str| {
            if present {
                Ok(())
            } else {
                Err(format!(
                    "kind \"{}\" requires the \"{block}\" block",
                    self.kind
                ))
            }
        };
        match self.kind.as_str() {
            "raw_field" => want(self.raw_field.is_some(), "raw_field")?,
            "pseudo" => want(self.pseudo.is_some(), "pseudo")?,
            "klein" => want(self.klein.is_some(), "klein")?,
            "almost" => want(self.almost.is_some(), "almost")?,
            "series_field" => want(self.series_field.is_some(), "series_field")?,
            other => return Err(format!("unknown kind \"{other}\"")),
        }
        if let Some(geo) = &self.options.geodesics {
            if geo.count == Some(0) {
                return Err("geodesics.count must be at least 1".into());
            }
        }
        if let Some(base) = &self.options.base_point {
            if base.is_empty() || base.len() > 4 {
                return Err(format!(
                    "base_point must have 1..=4 coordinates, got {}",
                    base.len()
                ));
            }
        }
        if let Some(raw) = &self.raw_field {
            if raw.components.len() != raw.variables.len() {
                return Err(format!(
                    "raw_field has {} components over {} variables",
                    raw.components.len(),
                    raw.variables.len()
                ));
            }
        }
        if let Some(series) = &self.series_field {
            match series.mode.as_str() {
                "flatten" => {
                    if series.seed_u00.is_none() || series.n_flat.is_none() {
                        return Err(
                            "series_field mode \"flatten\" needs seed_u00 and n_flat".into()
                        );
                    }
                }
                "resonant_coefficient" => {}
                other => return Err(format!("unknown series_field mode \"{other}\"")),
            }
        }
        Ok(())
    }
}
