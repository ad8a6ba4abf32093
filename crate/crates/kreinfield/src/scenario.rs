//! Scenario configuration: the JSON schema binding grids, potentials,
//! frequency sets, time grids, quadrature and tolerances together, plus
//! the content hash that makes reports reproducible.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::funcalc::QuadratureSpec;
use crate::interval::IntervalUnion;
use crate::lattice::{build_grid, Boundary, Grid, PotentialSpec};
use crate::models::CriticalityKind;
use crate::states::MaximalCase;
use crate::tolerances::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dirac,
    Kg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

/// One potential channel: a constant, explicit samples, a single-column
/// CSV file, or a named built-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialTerm {
    Constant { value: f64 },
    Samples { samples: Vec<f64> },
    Csv { path: String },
    /// V(x) = v0 * exp(-(x - center)^2 / w^2)
    GaussianWell {
        v0: f64,
        w: f64,
        #[serde(default)]
        center: f64,
    },
}

impl PotentialTerm {
    pub fn sample(&self, grid: &Grid, base_dir: &std::path::Path) -> Result<Vec<f64>> {
        match self {
            PotentialTerm::Constant { value } => Ok(vec![*value; grid.n]),
            PotentialTerm::Samples { samples } => {
                if samples.len() != grid.n {
                    return Err(Error::Config(format!(
                        "potential has {} samples, grid has {} sites",
                        samples.len(),
                        grid.n
                    )));
                }
                Ok(samples.clone())
            }
            PotentialTerm::Csv { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    Error::Config(format!("cannot read {}: {e}", full.display()))
                })?;
                let values: std::result::Result<Vec<f64>, _> = text
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(str::parse::<f64>)
                    .collect();
                let values =
                    values.map_err(|e| Error::Config(format!("bad csv value: {e}")))?;
                if values.len() != grid.n {
                    return Err(Error::Config(format!(
                        "csv has {} values, grid has {} sites",
                        values.len(),
                        grid.n
                    )));
                }
                Ok(values)
            }
            PotentialTerm::GaussianWell { v0, w, center } => Ok(grid
                .coords()
                .iter()
                .map(|&x| {
                    let u = (x - center) / w;
                    v0 * (-u * u).exp()
                })
                .collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub v: PotentialTerm,
    #[serde(default = "zero_term")]
    pub a: PotentialTerm,
    pub m: PotentialTerm,
}

fn zero_term() -> PotentialTerm {
    PotentialTerm::Constant { value: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub t_max: f64,
    pub n_steps: usize,
}

/// Expectations the runner enforces; a scenario exits nonzero when any
/// declared expectation fails.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Expectations {
    pub kind: Option<CriticalityKind>,
    pub state_case: Option<MaximalCase2>,
    pub dominating: Option<bool>,
    pub ground: Option<bool>,
    /// Krein positivity of 1_J(b) for the declared J (false in the
    /// overcritical scenarios, where J = [0, inf) swallows obstructions).
    pub krein_positive: Option<bool>,
    /// Expected support of F_0 S+ as (lo, hi) pairs with null for
    /// unbounded ends; leakage is tested against leak_tol.
    pub s_plus_support: Option<Vec<(Option<f64>, Option<f64>)>>,
    pub degeneracy_dim_positive: Option<bool>,
}

/// Serde twin of states::MaximalCase (which only implements Serialize).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalCase2 {
    GroundState,
    MaximalNonground,
}

impl MaximalCase2 {
    pub fn matches(&self, case: MaximalCase) -> bool {
        matches!(
            (self, case),
            (MaximalCase2::GroundState, MaximalCase::GroundState)
                | (MaximalCase2::MaximalNonground, MaximalCase::MaximalNonground)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub name: String,
    pub model: ModelKind,
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    /// Frequency set J as (lo, hi) pairs, null = unbounded.
    #[serde(default)]
    pub j: Option<Vec<(Option<f64>, Option<f64>)>>,
    pub time: TimeConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub expectations: Expectations,
    /// Frame stride for --dump-kernels (1 = every frame).
    #[serde(default = "default_stride")]
    pub dump_stride: usize,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_stride() -> usize {
    16
}

impl Scenario {
    pub fn from_path(path: &std::path::Path) -> Result<(Self, std::path::PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut scenario: Scenario = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if scenario.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                scenario.schema_version
            )));
        }
        scenario.apply_env_overrides();
        let base = path
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| std::path::PathBuf::from("."));
        Ok((scenario, base))
    }

    /// Tolerance knobs may be overridden through the environment
    /// (KREINFIELD_LEAK_TOL etc.); scenario files stay frozen.
    pub fn apply_env_overrides(&mut self) {
        let read = |name: &str| std::env::var(name).ok().and_then(|v| v.parse::<f64>().ok());
        if let Some(v) = read("KREINFIELD_LEAK_TOL") {
            self.tolerances.leak_tol = v;
        }
        if let Some(v) = read("KREINFIELD_TOL_MAT") {
            self.tolerances.tol_mat_rel = v;
        }
        if let Some(v) = read("KREINFIELD_TOL_EIG") {
            self.tolerances.tol_eig_rel = v;
        }
        if let Some(v) = read("KREINFIELD_GAP_MIN") {
            self.tolerances.gap_min_rel = v;
        }
    }

    pub fn build_grid(&self) -> Result<Grid> {
        build_grid(self.grid.n, self.grid.length, self.grid.boundary)
    }

    pub fn potential_spec(&self, grid: &Grid, base_dir: &std::path::Path) -> Result<PotentialSpec> {
        Ok(PotentialSpec {
            v: self.potential.v.sample(grid, base_dir)?,
            a: self.potential.a.sample(grid, base_dir)?,
            m: self.potential.m.sample(grid, base_dir)?,
        })
    }

    pub fn frequency_set(&self) -> IntervalUnion {
        match &self.j {
            Some(pairs) => IntervalUnion::from_json_pairs(pairs),
            None => IntervalUnion::positive_half_line(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        crate::propagator::symmetric_time_grid(self.time.t_max, self.time.n_steps)
    }

    /// Content hash over the canonical JSON form (serde_json sorts map
    /// keys); reports carry it so reruns are comparable byte for byte.
    pub fn content_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        let canonical = serde_json::to_string(&value).expect("canonical form");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
