//! Experiment configuration: TOML files plus command-line overrides.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::ito::{ItoConfig, LatticeSpec};
use crate::sim::{IntegrandConfig, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    DensityBound,
    LocalTimeMean,
    BouleauYor,
    NormBound,
    ItoResidual,
    SmoothChain,
    CovariationPartitions,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::DensityBound => "density-bound",
            Self::LocalTimeMean => "local-time-mean",
            Self::BouleauYor => "bouleau-yor",
            Self::NormBound => "norm-bound",
            Self::ItoResidual => "ito-residual",
            Self::SmoothChain => "smooth-chain",
            Self::CovariationPartitions => "covariation-partitions",
        }
    }

    /// Tolerance used when the configuration does not set one.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Self::Simulate => 4.0,
            Self::DensityBound => 0.10,
            Self::LocalTimeMean => 0.05,
            Self::BouleauYor => 0.07,
            Self::NormBound => 0.15,
            Self::ItoResidual => 0.05,
            Self::SmoothChain => 0.5,
            Self::CovariationPartitions => 0.03,
        }
    }
}

/// Parses `2^-k`, `2^k` or a decimal number.
pub fn parse_mesh(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = if let Some(exp) = s.strip_prefix("2^") {
        let k: i32 = exp
            .trim_start_matches('(')
            .trim_end_matches(')')
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in mesh '{s}'")))?;
        2f64.powi(k)
    } else {
        s.parse::<f64>().map_err(|_| Error::Parse(format!("bad mesh '{s}'")))?
    };
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::ConfigInvalid(format!("mesh {v} must lie in (0, 1]")));
    }
    Ok(v)
}

fn de_mesh<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => parse_mesh(&s).map_err(serde::de::Error::custom),
    }
}

fn de_meshes<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    Vec::<Raw>::deserialize(d)?
        .into_iter()
        .map(|r| match r {
            Raw::Num(v) => Ok(v),
            Raw::Text(s) => parse_mesh(&s).map_err(serde::de::Error::custom),
        })
        .collect()
}

/// Everything an experiment needs. Kind-specific fields are ignored by the
/// other kinds. `workers` only affects speed and is left out of reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: Option<String>,
    pub kind: Option<ExperimentKind>,
    pub integrand: IntegrandConfig,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(deserialize_with = "de_mesh")]
    pub mesh: f64,
    /// Extra meshes for a refinement study (ito-residual); the main `mesh`
    /// is always included.
    #[serde(deserialize_with = "de_meshes")]
    pub meshes: Vec<f64>,
    pub t: f64,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing)]
    pub workers: usize,
    #[serde(skip_serializing)]
    pub output: Option<String>,

    /// Local-time level.
    pub level: f64,
    /// Half width of the space grid (local-time-mean) or of the sign
    /// function (bouleau-yor).
    pub half_width: f64,
    /// Level spacing for local-time fields; `None` means `sqrt(mesh)`.
    pub spacing: Option<f64>,
    /// Estimator bandwidth; `None` means `max(spacing, sqrt(mesh))`.
    pub bandwidth: Option<f64>,

    pub times: Vec<f64>,
    pub bins: usize,

    /// Catalog function for ito-residual and smooth-chain.
    pub function: String,
    pub constant: f64,
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
    /// Lower time of the formula window; 0 uses the extension.
    pub eps: f64,
    pub ito: ItoConfig,

    pub kernel_n: Vec<u32>,
    pub lattice: LatticeSpec,

    /// Partition depth; `None` picks the deepest level not finer than the mesh.
    pub partition_depth: Option<u32>,
    /// Covariation test functions (`x`, `sign`).
    pub cov_functions: Vec<String>,

    pub n_functions: usize,
    /// Number of paths written by `simulate`.
    pub dump_paths: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            id: None,
            kind: None,
            integrand: IntegrandConfig::Constant { sigma: 1.0 },
            n_paths: 10_000,
            seed: 1,
            mesh: 1e-4,
            meshes: Vec::new(),
            t: 1.0,
            tolerance: None,
            workers: 0,
            output: None,
            level: 0.0,
            half_width: 3.0,
            spacing: None,
            bandwidth: None,
            times: vec![0.04, 0.25, 1.0],
            bins: 100,
            function: "abs-trunc".into(),
            constant: 1.0,
            cutoff_inner: 4.0,
            cutoff_outer: 6.0,
            eps: 0.0,
            ito: ItoConfig::default(),
            kernel_n: vec![8, 16, 32, 64],
            lattice: LatticeSpec::default(),
            partition_depth: None,
            cov_functions: vec!["x".into(), "sign".into()],
            n_functions: 24,
            dump_paths: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::ConfigInvalid("experiment kind not set".into()))
    }

    pub fn id(&self) -> String {
        match (&self.id, self.kind) {
            (Some(id), _) => id.clone(),
            (None, Some(k)) => k.name().to_string(),
            (None, None) => "experiment".into(),
        }
    }

    pub fn tolerance(&self) -> Result<f64> {
        Ok(self.tolerance.unwrap_or(self.kind()?.default_tolerance()))
    }

    /// Uniform grid for `mesh`; `1/mesh` must be an integer.
    pub fn grid_for(mesh: f64) -> Result<TimeGrid> {
        let steps = 1.0 / mesh;
        let n = steps.round();
        if !(n >= 1.0) || (steps - n).abs() > 1e-6 * n {
            return Err(Error::ConfigInvalid(format!("1/mesh = {steps} is not an integer")));
        }
        TimeGrid::uniform(n as usize)
    }

    /// Checks the fields shared by every kind.
    pub fn validate(&self) -> Result<()> {
        self.kind()?;
        if self.n_paths == 0 {
            return Err(Error::ConfigInvalid("n_paths must be positive".into()));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::ConfigInvalid(format!("t = {} must lie in (0, 1]", self.t)));
        }
        for &m in std::iter::once(&self.mesh).chain(&self.meshes) {
            Self::grid_for(m)?;
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0) {
                return Err(Error::ConfigInvalid(format!("tolerance {tol} must be positive")));
            }
        }
        self.integrand.build()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_forms() {
        assert_eq!(parse_mesh("2^-13").unwrap(), 1.0 / 8192.0);
        assert_eq!(parse_mesh("1e-4").unwrap(), 1e-4);
        assert!(parse_mesh("0").is_err());
        assert!(parse_mesh("2^x").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            kind = "ito-residual"
            n_paths = 500
            mesh = "2^-10"
            meshes = [0.01, "2^-7"]
            function = "square"
            [integrand]
            kind = "bounded-sine"
            rho = 1.0
            eps = 1.0
            [ito]
            eps_schedule = [0.0625]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.kind, Some(ExperimentKind::ItoResidual));
        assert_eq!(cfg.mesh, 1.0 / 1024.0);
        assert_eq!(cfg.meshes, vec![0.01, 1.0 / 128.0]);
        assert_eq!(cfg.ito.eps_schedule, vec![0.0625]);
        cfg.validate().unwrap();
        assert!(ExperimentConfig::from_toml_str("nonsense = 1").is_err());
        let bad = ExperimentConfig {
            kind: Some(ExperimentKind::Simulate),
            mesh: 0.3,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::ConfigInvalid(_))));
    }
}
