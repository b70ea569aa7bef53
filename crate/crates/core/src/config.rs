//! Run configuration: a human-editable TOML file (JSON accepted) with
//! nested blocks for the grids, solver, force scenario and experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::Digest;

use crate::forcing::Profile;
use crate::solver::Scheme;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridBlock {
    pub r: f64,
    pub n_v: usize,
    pub n_angular: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            r: 6.0,
            n_v: 16,
            n_angular: 14,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpaceBlock {
    pub dim: usize,
    pub n_x: usize,
    pub box_length: f64,
}

impl Default for SpaceBlock {
    fn default() -> Self {
        SpaceBlock {
            dim: 1,
            n_x: 64,
            box_length: 32.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverBlock {
    pub dt: f64,
    pub scheme: Scheme,
    pub n_order: usize,
    pub s_low: f64,
    pub monitor_every: usize,
    pub enable_gamma: bool,
    pub enable_force: bool,
    pub blowup_factor: f64,
    pub positivity_samples: usize,
    pub dealias: bool,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            dt: 0.05,
            scheme: Scheme::Strang,
            n_order: 4,
            s_low: 0.5,
            monitor_every: 20,
            enable_gamma: true,
            enable_force: true,
            blowup_factor: 10.0,
            positivity_samples: 8,
            dealias: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ForceBlock {
    Zero,
    Potential {
        amplitude: f64,
        sigma: f64,
        #[serde(default)]
        period: Option<f64>,
        #[serde(default = "default_profile")]
        profile: Profile,
    },
    Rotational {
        epsilon: f64,
        m: f64,
        #[serde(default)]
        period: Option<f64>,
        #[serde(default = "default_profile")]
        profile: Profile,
    },
    CustomSpectral {
        coeffs_path: PathBuf,
        #[serde(default)]
        period: Option<f64>,
        #[serde(default = "default_profile")]
        profile: Profile,
    },
}

fn default_profile() -> Profile {
    Profile::Sin
}

impl Default for ForceBlock {
    fn default() -> Self {
        ForceBlock::Zero
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct InitBlock {
    /// "zero" or "shell".
    pub kind: String,
    #[serde(default)]
    pub s0: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub micro_only: bool,
    #[serde(default)]
    pub axis_aligned: bool,
}

impl Default for InitBlock {
    fn default() -> Self {
        InitBlock {
            kind: "zero".into(),
            s0: 0.0,
            amplitude: 0.0,
            micro_only: false,
            axis_aligned: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ExperimentBlock {
    SemigroupDecay {
        #[serde(default = "default_small_band")]
        small_band: Vec<f64>,
        #[serde(default = "default_saturation_band")]
        saturation_band: Vec<f64>,
        #[serde(default = "default_t_small")]
        t_max_small: f64,
        #[serde(default = "default_t_big")]
        t_max_big: f64,
    },
    BesovDecay {
        s: f64,
        s0: f64,
        #[serde(default)]
        micro_only: bool,
        t_max: f64,
        march_dt: f64,
        j0: i32,
        fit_start: f64,
        fit_end: f64,
    },
    Cauchy {
        t_end: f64,
    },
    PeriodMap {
        period: f64,
        epsilon: f64,
        n_max: usize,
        tol: f64,
        #[serde(default)]
        uniqueness_probe: bool,
    },
    StationaryOracle {
        t_per_block: f64,
        tol: f64,
        n_max: usize,
    },
    Stability {
        s0: f64,
        targets: Vec<f64>,
        epsilon: f64,
        amplitude: f64,
        horizon: f64,
        fit_start: f64,
        fit_end: f64,
        sample_every: usize,
    },
}

fn default_small_band() -> Vec<f64> {
    vec![]
}
fn default_saturation_band() -> Vec<f64> {
    vec![]
}
fn default_t_small() -> f64 {
    2000.0
}
fn default_t_big() -> f64 {
    8.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct BudgetBlock {
    pub max_quadrature: u64,
    pub max_dense_nodes: usize,
}

impl Default for BudgetBlock {
    fn default() -> Self {
        let b = crate::collision::Budget::default();
        BudgetBlock {
            max_quadrature: b.max_quadrature,
            max_dense_nodes: b.max_dense_nodes,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub space: SpaceBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub force: ForceBlock,
    #[serde(default)]
    pub init: InitBlock,
    pub experiment: ExperimentBlock,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub budget: BudgetBlock,
    /// Cache the assembled operator to disk.
    #[serde(default)]
    pub cache_operator: bool,
}

fn default_workers() -> usize {
    1
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let parsed: RunConfig = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("json parse: {e}")))?
        } else {
            match toml::from_str(&text) {
                Ok(v) => v,
                Err(toml_err) => serde_json::from_str(&text).map_err(|_| {
                    Error::Config(format!("toml parse: {toml_err}"))
                })?,
            }
        };
        parsed.validate()?;
        Ok(parsed)
    }

    /// Cross-field validation; each failure names the violated constraint.
    pub fn validate(&self) -> Result<()> {
        if self.grid.r <= 0.0 {
            return Err(Error::Config("grid.r: cutoff radius must be positive".into()));
        }
        if self.grid.n_v % 2 != 0 {
            return Err(Error::Config(
                "grid.n_v: velocity grid must be even".into(),
            ));
        }
        if self.grid.n_v < 4 {
            return Err(Error::Config("grid.n_v: need at least 4 nodes per axis".into()));
        }
        if self.grid.n_angular < 6 {
            return Err(Error::Config(
                "grid.n_angular: need at least 6 sphere nodes".into(),
            ));
        }
        if !(1..=3).contains(&self.space.dim) {
            return Err(Error::Config("space.dim: must be 1, 2 or 3".into()));
        }
        if self.space.n_x < 4 || self.space.n_x % 2 != 0 {
            return Err(Error::Config("space.n_x: must be even and at least 4".into()));
        }
        if self.solver.dt <= 0.0 {
            return Err(Error::Config("solver.dt: must be positive".into()));
        }
        if self.solver.n_order < 3 {
            return Err(Error::Config("solver.n_order: must be at least 3".into()));
        }
        let quad_cost = (self.grid.n_v as u64).pow(3) * self.grid.n_angular as u64;
        if quad_cost > self.budget.max_quadrature {
            return Err(Error::Budget(format!(
                "budget.max_quadrature: n_v^3 * n_angular = {quad_cost} exceeds {}",
                self.budget.max_quadrature
            )));
        }
        match &self.experiment {
            ExperimentBlock::PeriodMap {
                period,
                epsilon,
                tol,
                ..
            } => {
                if self.solver.n_order < 4 {
                    return Err(Error::Config(
                        "solver.n_order: period-map experiments need N >= 4".into(),
                    ));
                }
                if !(0.0 < *epsilon && *epsilon < 0.5) {
                    return Err(Error::Config(
                        "experiment.epsilon: must lie in (0, 1/2)".into(),
                    ));
                }
                if *tol <= 0.0 {
                    return Err(Error::Config("experiment.tol: must be positive".into()));
                }
                let spp = period / self.solver.dt;
                if (spp - spp.round()).abs() > 1e-9 {
                    return Err(Error::Config(
                        "solver.dt: must divide the forcing period exactly".into(),
                    ));
                }
            }
            ExperimentBlock::Stability { epsilon, s0, targets, .. } => {
                if self.solver.n_order < 4 {
                    return Err(Error::Config(
                        "solver.n_order: stability experiments need N >= 4".into(),
                    ));
                }
                if !(0.0 < *epsilon && *epsilon < 0.5) {
                    return Err(Error::Config(
                        "experiment.epsilon: must lie in (0, 1/2)".into(),
                    ));
                }
                if !(-1.5 < *s0 && *s0 <= 0.5) {
                    return Err(Error::Config(
                        "experiment.s0: must lie in (-3/2, 1/2]".into(),
                    ));
                }
                for s in targets {
                    if s < s0 {
                        return Err(Error::Config(
                            "experiment.targets: every target must be >= s0".into(),
                        ));
                    }
                }
            }
            ExperimentBlock::BesovDecay { s, s0, .. } => {
                if s < s0 {
                    return Err(Error::Config("experiment.s: must be >= s0".into()));
                }
            }
            _ => {}
        }
        if let ForceBlock::Rotational { m, period, .. } = &self.force {
            if *m <= 2.0 {
                return Err(Error::Config(
                    "force.m: rotational decay exponent must exceed 2".into(),
                ));
            }
            if self.space.dim != 3 {
                return Err(Error::Config(
                    "force.kind: rotational fields need space.dim = 3".into(),
                ));
            }
            if let Some(p) = period {
                let spp = p / self.solver.dt;
                if (spp - spp.round()).abs() > 1e-9 {
                    return Err(Error::Config(
                        "solver.dt: must divide the forcing period exactly".into(),
                    ));
                }
            }
        }
        if let ForceBlock::Potential { period, sigma, .. } = &self.force {
            if *sigma <= 0.0 {
                return Err(Error::Config("force.sigma: must be positive".into()));
            }
            if let Some(p) = period {
                let spp = p / self.solver.dt;
                if (spp - spp.round()).abs() > 1e-9 {
                    return Err(Error::Config(
                        "solver.dt: must divide the forcing period exactly".into(),
                    ));
                }
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers: must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical content hash of the configuration. The worker count and
    /// output directory are execution knobs that must not change results,
    /// so they are excluded.
    pub fn hash(&self) -> String {
        let mut normalized = self.clone();
        normalized.workers = 1;
        normalized.output_dir = std::path::PathBuf::new();
        let canon = serde_json::to_string(&normalized).expect("config serializes");
        let mut h = sha2::Sha256::new();
        h.update(canon.as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to toml")
    }
}
