//! The structured run configuration (TOML). Unknown keys are rejected
//! everywhere; `--print-defaults` emits a complete default file.

use eikonal::characteristics::TerminationBudget;
use eikonal::classify::StratumLabel;
use eikonal::field::catalog::Params;
use eikonal::field::{FieldRef, SampledField, Smoothness};
use eikonal::optim::SearchBudget;
use eikonal::sigmap::Adjacency;
use eikonal::tol::Tolerances;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Sampling seed; the command line `--seed` overrides it.
    pub seed: u64,
    pub field: FieldConfig,
    pub tolerances: Tolerances,
    /// Ball-search effort for point queries.
    pub budget: SearchBudget,
    /// Touching-time search effort.
    pub termination_budget: TerminationBudget,
    pub eval: Option<EvalConfig>,
    pub terminate: Option<TerminateConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub classify: Option<ClassifyConfig>,
    pub map: Option<MapConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            field: FieldConfig::default(),
            tolerances: Tolerances::default(),
            budget: SearchBudget::standard(),
            termination_budget: TerminationBudget::standard(),
            eval: Some(EvalConfig::default()),
            terminate: Some(TerminateConfig::default()),
            spectrum: Some(SpectrumConfig::default()),
            classify: Some(ClassifyConfig::default()),
            map: Some(MapConfig::default()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    /// Catalog name (`quadratic_bowl`, `concave_bowl`, `cubic`, `quartic`,
    /// `saddle`, `oblique_saddle`, `double_well`, `tilted_double_well`,
    /// `linear`) or `sampled` with a `csv` path.
    pub name: String,
    pub dim: usize,
    pub params: Params,
    /// CSV grid file for `name = "sampled"`.
    pub csv: Option<PathBuf>,
    /// Smoothness tag of a sampled field: `c1` (default) or `c2`.
    pub smoothness: Option<String>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            name: "saddle".into(),
            dim: 2,
            params: Params::new(),
            csv: None,
            smoothness: None,
        }
    }
}

impl FieldConfig {
    pub fn build(&self) -> Result<FieldRef, String> {
        if self.name == "sampled" {
            let path = self
                .csv
                .as_ref()
                .ok_or("field.name = \"sampled\" requires field.csv")?;
            let smoothness = match self.smoothness.as_deref() {
                None | Some("c1") => Smoothness::C1,
                Some("c2") => Smoothness::C2Plus,
                Some(other) => return Err(format!("unknown smoothness `{other}`")),
            };
            let f = SampledField::from_csv_path(path, smoothness).map_err(|e| e.to_string())?;
            Ok(std::sync::Arc::new(f))
        } else {
            if self.smoothness.is_some() || self.csv.is_some() {
                return Err("csv/smoothness only apply to sampled fields".into());
            }
            eikonal::field::catalog::lookup(&self.name, self.dim, &self.params)
                .map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub x: Vec<f64>,
    pub t: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            x: vec![2.0, 0.0],
            t: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminateConfig {
    /// Single initial point; ignored when a sweep is configured.
    pub y0: Option<Vec<f64>>,
    pub t_max: f64,
    /// Cross-check the touching-time result against bisection.
    pub bisect_check: bool,
    pub sweep_lo: Option<Vec<f64>>,
    pub sweep_hi: Option<Vec<f64>>,
    pub sweep_res: Option<Vec<usize>>,
}

impl Default for TerminateConfig {
    fn default() -> Self {
        Self {
            y0: Some(vec![1.0, 0.0]),
            t_max: 10.0,
            bisect_check: true,
            sweep_lo: None,
            sweep_hi: None,
            sweep_res: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub y0: Vec<f64>,
    /// Times at which det X_y is sampled.
    pub det_times: Vec<f64>,
    pub blowup: bool,
    pub t_max: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            y0: vec![1.0, 0.0],
            det_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            blowup: true,
            t_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub points: Vec<QueryPoint>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            points: vec![
                QueryPoint {
                    x: vec![2.0, 0.0],
                    t: 1.0,
                },
                QueryPoint {
                    x: vec![0.0, 0.0],
                    t: 1.5,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub space_res: Vec<usize>,
    pub t_res: usize,
    pub strata: Vec<StratumLabel>,
    pub adjacency: Adjacency,
    pub out_dir: PathBuf,
    pub prefix: String,
    /// Smoothness-probe orders to evaluate (defect CSVs are written per
    /// order).
    pub probe_orders: Vec<usize>,
    pub probe_threshold_fraction: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
            t_min: 0.05,
            t_max: 2.0,
            space_res: vec![64, 64],
            t_res: 32,
            strata: vec![StratumLabel::Sigma, StratumLabel::T1],
            adjacency: Adjacency::FacesAndDiagonals,
            out_dir: PathBuf::from("out"),
            prefix: "map".into(),
            probe_orders: vec![2],
            probe_threshold_fraction: 0.25,
        }
    }
}

pub fn parse(text: &str) -> Result<RunConfig, String> {
    let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), String> {
    let t = &config.tolerances;
    for (name, v) in [
        ("grad_zero_base", t.grad_zero_base),
        ("level_value_base", t.level_value_base),
        ("half_space_dot_base", t.half_space_dot_base),
        ("member_value_base", t.member_value_base),
        ("merge_radius_base", t.merge_radius_base),
        ("ball_slack_base", t.ball_slack_base),
        ("boundary_contact_base", t.boundary_contact_base),
        ("time_base", t.time_base),
        ("det_base", t.det_base),
        ("grad_merge_base", t.grad_merge_base),
        ("eig_real_base", t.eig_real_base),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("tolerances.{name} must be positive, got {v}"));
        }
    }
    Ok(())
}

pub fn print_defaults() -> String {
    toml::to_string_pretty(&RunConfig::default()).expect("defaults must serialize")
}
