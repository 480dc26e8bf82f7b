//! JSON run and study configuration.
//!
//! ```json
//! {
//!   "mesh": { "Lx": 1.0, "Ly": 1.0, "nx": 32, "ny": 32 },
//!   "material": { "type": "isotropic", "E": 70e9, "nu": 0.3, "rho": 1500, "h": 0.001 },
//!   "case": { "id": 1, "b0": 1e6, "window": [0.0, 1e-5] },
//!   "border": "free",
//!   "T": 1e-4,
//!   "output": { "every_n_steps": 10, "directory": "out" }
//! }
//! ```
//!
//! A study file has the same `mesh` (structured only), `material`, `case`,
//! `border` and `T` keys plus `k_max`. Anisotropic moduli are given in GPa as
//! `[i, j, value]` triples with 1-based Voigt indices; everything else is SI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convergence::StudySpec;
use crate::integrator::{IntegratorError, NewmarkParams};
use crate::material::{ElasticMatrix, MaterialError, MaterialParams};
use crate::mesh::{Mesh, MeshError, StructuredSpec};
use crate::scenarios::{
    build_case, CaseParams, Border, Excitation, LoadKind, LoadSpec, LoadTarget, Scenario, ScenarioError, StrikeSpec,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
}

fn missing(key: &str) -> ConfigError {
    ConfigError::Missing(key.to_string())
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn require<T: Copy>(value: Option<T>, key: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| missing(key))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(rename = "Lx", skip_serializing_if = "Option::is_none")]
    pub lx: Option<f64>,
    #[serde(rename = "Ly", skip_serializing_if = "Option::is_none")]
    pub ly: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub msh_path: Option<PathBuf>,
}

impl MeshConfig {
    pub fn structured(&self) -> Result<StructuredSpec<f64>, ConfigError> {
        let spec = StructuredSpec {
            lx: require(self.lx, "mesh.Lx")?,
            ly: require(self.ly, "mesh.Ly")?,
            nx: require(self.nx, "mesh.nx")?,
            ny: require(self.ny, "mesh.ny")?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the mesh; `msh_path` is resolved against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Mesh<f64>, ConfigError> {
        match &self.msh_path {
            Some(p) => {
                if self.lx.is_some() || self.ly.is_some() || self.nx.is_some() || self.ny.is_some() {
                    return Err(invalid("mesh", "give either msh_path or Lx/Ly/nx/ny, not both"));
                }
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path, source })?;
                Ok(Mesh::read_msh(&text)?)
            }
            None => Ok(Mesh::structured(self.structured()?)?),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaterialConfig {
    Isotropic {
        #[serde(rename = "E")]
        young: f64,
        nu: f64,
        rho: f64,
        h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strain_threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stress_threshold: Option<f64>,
    },
    Anisotropic {
        /// `[i, j, value_GPa]` with 1-based indices.
        entries: Vec<(usize, usize, f64)>,
        rho: f64,
        h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strain_threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stress_threshold: Option<f64>,
    },
}

impl MaterialConfig {
    pub fn build(&self) -> Result<MaterialParams<f64>, ConfigError> {
        let (d, rho, h, strain, stress) = match self {
            MaterialConfig::Isotropic {
                young,
                nu,
                rho,
                h,
                strain_threshold,
                stress_threshold,
            } => (ElasticMatrix::isotropic(*young, *nu)?, rho, h, strain_threshold, stress_threshold),
            MaterialConfig::Anisotropic {
                entries,
                rho,
                h,
                strain_threshold,
                stress_threshold,
            } => {
                let pa: Vec<(usize, usize, f64)> = entries.iter().map(|&(i, j, v)| (i, j, v * 1e9)).collect();
                (ElasticMatrix::from_entries(&pa)?, rho, h, strain_threshold, stress_threshold)
            }
        };
        Ok(MaterialParams::new(*rho, *h, d)?.with_thresholds(*strain, *stress))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    CentralPair,
    Box([f64; 4]),
    Elements(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadConfig {
    ElementUniform {
        target: TargetConfig,
        direction: [f64; 3],
        b0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
    },
    DistributedCos2 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<f64>,
        #[serde(default = "normal", skip_serializing_if = "is_normal")]
        direction: [f64; 3],
        b0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
    },
}

fn normal() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn is_normal(d: &[f64; 3]) -> bool {
    *d == normal()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrikeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 2]>,
    pub speed: f64,
    #[serde(default)]
    pub angle_to_normal: f64,
}

/// Either a reference case `id` with its free parameters, or explicit
/// `load` / `strike` excitations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<LoadConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<StrikeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_velocity: Option<[f64; 3]>,
}

impl CaseConfig {
    /// Load windows default to `[0, T/10]`.
    pub fn build(&self, border: Border, t_end: f64) -> Result<Scenario<f64>, ConfigError> {
        let default_window = [0.0, t_end / 10.0];
        let mut scenario = match self.id {
            Some(id) => {
                if self.load.is_some() || self.strike.is_some() {
                    return Err(invalid("case", "give either id or explicit load/strike, not both"));
                }
                let needs_load = matches!(id, 1 | 2 | 5);
                let [start, end] = self.window.unwrap_or(default_window);
                let params = CaseParams {
                    b0: if needs_load { require(self.b0, "case.b0")? } else { 0.0 },
                    speed: if matches!(id, 3 | 4) { require(self.speed, "case.speed")? } else { 0.0 },
                    load_start: start,
                    load_end: end,
                    support: self.support,
                    border,
                };
                build_case(id, &params)?
            }
            None => {
                let mut excitations = Vec::new();
                if let Some(load) = &self.load {
                    excitations.push(Excitation::Load(load.build(default_window)));
                }
                if let Some(s) = &self.strike {
                    excitations.push(Excitation::Strike(StrikeSpec {
                        point: s.point,
                        speed: s.speed,
                        angle_to_normal: s.angle_to_normal,
                    }));
                }
                if excitations.is_empty() && self.initial_velocity.is_none() {
                    return Err(missing("case.id"));
                }
                Scenario::new(excitations, border)
            }
        };
        if let Some(v) = self.initial_velocity {
            scenario.initial_velocity = v;
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

impl LoadConfig {
    fn build(&self, default_window: [f64; 2]) -> LoadSpec<f64> {
        let (kind, direction, b0, window) = match self {
            LoadConfig::ElementUniform {
                target,
                direction,
                b0,
                window,
            } => {
                let target = match target {
                    TargetConfig::CentralPair => LoadTarget::CentralPair,
                    TargetConfig::Box(b) => LoadTarget::Box(*b),
                    TargetConfig::Elements(ids) => LoadTarget::Elements(ids.clone()),
                };
                (LoadKind::ElementUniform(target), *direction, *b0, window)
            }
            LoadConfig::DistributedCos2 {
                size,
                center,
                support,
                direction,
                b0,
                window,
            } => (
                LoadKind::DistributedCos2 {
                    size: *size,
                    center: *center,
                    support: *support,
                },
                *direction,
                *b0,
                window,
            ),
        };
        let [start, end] = window.unwrap_or(default_window);
        LoadSpec {
            kind,
            direction,
            b0,
            start,
            end,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "one")]
    pub every_n_steps: usize,
    #[serde(default = "default_out")]
    pub directory: PathBuf,
    #[serde(default = "yes")]
    pub vtk: bool,
    #[serde(default = "yes")]
    pub elements: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            every_n_steps: 1,
            directory: default_out(),
            vtk: true,
            elements: true,
        }
    }
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderConfig {
    Free,
    Fixed,
}

impl From<BorderConfig> for Border {
    fn from(b: BorderConfig) -> Self {
        match b {
            BorderConfig::Free => Border::Free,
            BorderConfig::Fixed => Border::Fixed,
        }
    }
}

fn free() -> BorderConfig {
    BorderConfig::Free
}

/// A single simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    pub case: CaseConfig,
    #[serde(default = "free")]
    pub border: BorderConfig,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "half")]
    pub beta1: f64,
    #[serde(default = "half")]
    pub beta2: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Everything needed to start a run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub mesh: Mesh<f64>,
    pub material: MaterialParams<f64>,
    pub scenario: Scenario<f64>,
    pub t_end: f64,
    /// Explicit timestep, if any; otherwise the default rule applies.
    pub tau: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
}

impl ResolvedRun {
    /// Whole number of steps and the timestep that reaches `t_end` exactly.
    pub fn schedule(&self) -> (usize, f64) {
        let rule = self
            .tau
            .unwrap_or_else(|| crate::scenarios::default_timestep(&self.mesh, &self.material));
        crate::scenarios::fit_steps(self.t_end, rule)
    }

    pub fn params(&self) -> Result<NewmarkParams<f64>, ConfigError> {
        let (_, tau) = self.schedule();
        Ok(NewmarkParams::new(self.beta1, self.beta2, tau)?)
    }
}

fn check_time(t_end: f64, tau: Option<f64>) -> Result<(), ConfigError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid("T", format!("must be positive (got {t_end})")));
    }
    if let Some(tau) = tau {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("tau", format!("must be positive (got {tau})")));
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&read(path)?)
    }

    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedRun, ConfigError> {
        check_time(self.t_end, self.tau)?;
        if self.output.every_n_steps == 0 {
            return Err(invalid("output.every_n_steps", "must be at least 1"));
        }
        Ok(ResolvedRun {
            mesh: self.mesh.build(base_dir)?,
            material: self.material.build()?,
            scenario: self.case.build(self.border.clone().into(), self.t_end)?,
            t_end: self.t_end,
            tau: self.tau,
            beta1: self.beta1,
            beta2: self.beta2,
        })
    }
}

/// A refinement study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    pub case: CaseConfig,
    #[serde(default = "free")]
    pub border: BorderConfig,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub k_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(default = "half")]
    pub beta1: f64,
    #[serde(default = "half")]
    pub beta2: f64,
    #[serde(default)]
    pub pin_load_region: bool,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&read(path)?)
    }

    pub fn resolve(&self) -> Result<StudySpec<f64>, ConfigError> {
        check_time(self.t_end, self.tau0)?;
        if self.mesh.msh_path.is_some() {
            return Err(invalid("mesh.msh_path", "a refinement study needs a structured mesh"));
        }
        if self.k_max < 2 {
            return Err(invalid("k_max", format!("need >= 2 levels (got {})", self.k_max)));
        }
        NewmarkParams::new(self.beta1, self.beta2, 1.0)?;
        Ok(StudySpec {
            scenario: self.case.build(self.border.clone().into(), self.t_end)?,
            material: self.material.build()?,
            base: self.mesh.structured()?,
            k_max: self.k_max,
            t_end: self.t_end,
            tau0: self.tau0,
            beta1: self.beta1,
            beta2: self.beta2,
            pin_load_region: self.pin_load_region,
        })
    }
}
