use std::fs;
use std::path::{Path, PathBuf};

use efimov_fano::fanofit::{FitModel, WindowMode};
use efimov_fano::grid::{build_grid, MomentumGrid};
use efimov_fano::model::{SystemConfig, SystemSpec};
use efimov_fano::pipeline::{linear_mesh, CARBON20_GRID};
use efimov_fano::spectrum::calibrate_beta_nc;
use efimov_fano::{Error, Result};
use serde::Deserialize;

/// Everything a run reads from `--config`. Every block is optional; a
/// subcommand complains only about the blocks it needs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    /// Fix β_nc so the first excited trimer meets threshold at this ε₂.
    pub calibrate: Option<CalibrateSpec>,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    pub scan: Option<MeshSpec>,
    pub scatter: Option<MeshSpec>,
    #[serde(default)]
    pub fit: FitSpec,
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub count: usize,
    pub map_scale_inv_fm: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { count: CARBON20_GRID.0, map_scale_inv_fm: CARBON20_GRID.1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSpec {
    #[serde(rename = "epsilon2_star_keV")]
    pub epsilon2_star_kev: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    #[serde(rename = "min_binding_keV")]
    pub min_binding_kev: Option<f64>,
    #[serde(rename = "max_binding_keV")]
    pub max_binding_kev: Option<f64>,
    pub max_states: Option<usize>,
}

/// Either an explicit list or `start..=stop` in steps.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(rename = "values_keV")]
    pub values_kev: Option<Vec<f64>>,
    #[serde(rename = "start_keV")]
    pub start_kev: Option<f64>,
    #[serde(rename = "stop_keV")]
    pub stop_kev: Option<f64>,
    #[serde(rename = "step_keV")]
    pub step_kev: Option<f64>,
}

impl MeshSpec {
    pub fn values(&self, block: &str) -> Result<Vec<f64>> {
        match (&self.values_kev, self.start_kev, self.stop_kev, self.step_kev) {
            (Some(v), None, None, None) => Ok(v.clone()),
            (None, Some(a), Some(b), Some(s)) => {
                if b < a {
                    return Err(Error::Config(format!("{block}: descending range {a} -> {b} keV")));
                }
                linear_mesh(a, b, s).map_err(|e| Error::Config(format!("{block}: {e}")))
            }
            _ => Err(Error::Config(format!(
                "{block}: give either values_keV or all of start_keV, stop_keV, step_keV"
            ))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub input: Option<PathBuf>,
    pub model: Option<FitModel>,
    pub window: Option<WindowMode>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that does not need computation.
    fn validate(&self) -> Result<()> {
        self.grid()?;
        if let Some(s) = &self.system {
            s.build()?;
        }
        if let Some(c) = &self.calibrate {
            if !(c.epsilon2_star_kev > 0.0 && c.epsilon2_star_kev.is_finite()) {
                return Err(Error::Config("calibrate.epsilon2_star_keV must be positive".into()));
            }
            if self.system.is_none() {
                return Err(Error::Config("calibrate needs a system block".into()));
            }
        }
        if let Some(m) = &self.scan {
            m.values("scan")?;
        }
        if let Some(m) = &self.scatter {
            m.values("scatter")?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<MomentumGrid> {
        build_grid(self.grid.count, self.grid.map_scale_inv_fm)
    }

    /// The system, calibrated when a `calibrate` block is present.
    pub fn system(&self, grid: &MomentumGrid) -> Result<SystemConfig> {
        let spec = self
            .system
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a system block in --config".into()))?;
        let config = spec.build()?;
        match &self.calibrate {
            Some(c) => Ok(calibrate_beta_nc(&config, grid, c.epsilon2_star_kev)?.config),
            None => Ok(config),
        }
    }

    pub fn fit_input(&self) -> Option<PathBuf> {
        self.fit.input.as_ref().map(|p| if p.is_absolute() { p.clone() } else { self.base_dir.join(p) })
    }
}
