//! Run configuration: a single versioned JSON document.

use std::path::PathBuf;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use spectral_bounds::quadrature::QuadSettings;
use spectral_bounds::symmetry::GroupSpec;
use spectral_bounds::twocenter::NuclearGeometry;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub nuclei: Option<Vec<Nucleus>>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_windows")]
    pub windows: Vec<u32>,
    #[serde(default)]
    pub group: GroupChoice,
    #[serde(default)]
    pub temple: bool,
    /// Upper-bound method name, `"auto"`, or `"none"`.
    #[serde(default = "default_upper")]
    pub upper_bound: String,
    /// Number of lowest bounds reported per row.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub quadrature: QuadSettings,
    #[serde(default)]
    pub output: Output,
}

fn default_windows() -> Vec<u32> {
    vec![1, 2, 3]
}

fn default_upper() -> String {
    "none".into()
}

fn default_levels() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nucleus {
    pub position: [f64; 3],
    pub charge: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Template {
    #[serde(rename = "h2+")]
    H2Plus,
    #[serde(rename = "h3++")]
    H3Plus2,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub template: Template,
    pub r_values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GroupChoice {
    Named(String),
    Explicit(ExplicitGroupConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitGroupConfig {
    #[serde(default = "default_group_name")]
    pub name: String,
    /// Row-major 3x3 matrices.
    pub elements: Vec<[[f64; 3]; 3]>,
    /// Fixed point of the group; the nuclear centroid when omitted.
    #[serde(default)]
    pub origin: Option<[f64; 3]>,
}

impl Default for GroupChoice {
    fn default() -> Self {
        GroupChoice::Named("none".into())
    }
}

fn default_group_name() -> String {
    "explicit".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// One geometry of the run and its sweep parameter, if any.
#[derive(Debug, Clone)]
pub struct Case {
    pub r: Option<f64>,
    pub geometry: NuclearGeometry,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        if self.schema != SCHEMA_VERSION {
            return Err(format!("unsupported schema {}; expected {SCHEMA_VERSION}", self.schema));
        }
        match (&self.nuclei, &self.sweep) {
            (Some(_), Some(_)) => return Err("give either `nuclei` or `sweep`, not both".into()),
            (None, None) => return Err("one of `nuclei` or `sweep` is required".into()),
            (Some(n), None) if n.is_empty() => return Err("`nuclei` needs at least one nucleus".into()),
            (None, Some(s)) => {
                if let Some(r) = s.r_values.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                    return Err(format!("R values must be positive, got {r}"));
                }
            }
            _ => {}
        }
        if self.windows.is_empty() || self.windows.contains(&0) {
            return Err("`windows` must list positive j_cut values".into());
        }
        if self.levels == 0 {
            return Err("`levels` must be at least 1".into());
        }
        let q = &self.quadrature;
        if !(2..=1024).contains(&q.eta_order) || !(2..=1024).contains(&q.xi_order) {
            return Err("quadrature orders must lie in 2..=1024".into());
        }
        if !(q.tol > 0.0 && q.tol < 1.0) {
            return Err("quadrature tol must lie in (0, 1)".into());
        }
        if let GroupChoice::Explicit(g) = &self.group {
            if g.elements.is_empty() {
                return Err("explicit group needs at least one element".into());
            }
        }
        Ok(())
    }

    pub fn cases(&self) -> Result<Vec<Case>, String> {
        let err = |e: spectral_bounds::Error| e.to_string();
        if let Some(nuclei) = &self.nuclei {
            let positions = nuclei.iter().map(|n| Vector3::from(n.position)).collect();
            let charges = nuclei.iter().map(|n| n.charge).collect();
            return Ok(vec![Case { r: None, geometry: NuclearGeometry::new(positions, charges).map_err(err)? }]);
        }
        let sweep = self.sweep.as_ref().expect("validated");
        sweep
            .r_values
            .iter()
            .map(|&r| {
                let geometry = match sweep.template {
                    Template::H2Plus => NuclearGeometry::h2_plus(r),
                    Template::H3Plus2 => NuclearGeometry::h3_equilateral(r),
                }
                .map_err(err)?;
                Ok(Case { r: Some(r), geometry })
            })
            .collect()
    }
}

impl ExplicitGroupConfig {
    pub fn build(&self, geometry: &NuclearGeometry) -> Result<GroupSpec, String> {
        let elements = self.elements.iter().map(|m| Matrix3::from_fn(|i, j| m[i][j])).collect();
        let origin = self.origin.map(Vector3::from).unwrap_or_else(|| geometry.centroid());
        GroupSpec::new(self.name.clone(), elements, origin).map_err(|e| e.to_string())
    }
}
