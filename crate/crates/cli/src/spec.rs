//! Experiment configuration: the JSON file format, builtin defaults and
//! flag overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dilastab::charexp::{
    ExponentOracle, GflpOracle, LevyOracle, StableIntegralOracle, StableLevyOracle, WienerOracle,
    ZbetaOracle,
};
use dilastab::kernels::KernelSpec;
use dilastab::scaling::SearchConfig;
use dilastab::{Law, LevyModel, QuadratureConfig, ScalingGrid, StableLevy};

use crate::builtins;
use crate::CliError;

/// Which process the exponent comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    Gflp {
        model: LevyModel,
        kernel: KernelSpec,
    },
    StableIntegral {
        kernel: KernelSpec,
        stable_index: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    Zbeta {
        beta: f64,
        #[serde(default = "one")]
        c: f64,
    },
    Wiener,
    Levy {
        model: LevyModel,
    },
    StableLevy {
        hurst: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl OracleSpec {
    pub fn build(&self, cfg: &QuadratureConfig) -> Result<Box<dyn ExponentOracle<f64>>, CliError> {
        Ok(match self {
            OracleSpec::Gflp { model, kernel } => {
                model.validate()?;
                Box::new(GflpOracle {
                    model: *model,
                    kernel: kernel.build()?,
                    cfg: *cfg,
                })
            }
            OracleSpec::StableIntegral {
                kernel,
                stable_index,
                sigma,
            } => Box::new(StableIntegralOracle {
                kernel: kernel.build()?,
                stable_index: *stable_index,
                sigma: *sigma,
                cfg: *cfg,
            }),
            OracleSpec::Zbeta { beta, c } => Box::new(ZbetaOracle {
                beta: *beta,
                c: *c,
                cfg: *cfg,
            }),
            OracleSpec::Wiener => Box::new(WienerOracle),
            OracleSpec::Levy { model } => {
                model.validate()?;
                Box::new(LevyOracle { model: *model })
            }
            OracleSpec::StableLevy { hurst, scale } => Box::new(StableLevyOracle {
                process: StableLevy::new(*hurst, *scale)?,
            }),
        })
    }

    /// The dilative-stability law the process is known to satisfy, if any.
    pub fn claimed_law(&self) -> Result<Option<Law>, CliError> {
        Ok(match self {
            OracleSpec::Gflp { kernel, .. } => kernel.build()?.claimed_law(),
            OracleSpec::StableIntegral {
                kernel,
                stable_index,
                ..
            } => {
                let k = kernel.build()?;
                match k.claimed_law() {
                    Some(law) => Some(law),
                    // f(Tt, Tu) = T^{H - 1/a} f(t, u)
                    None => k
                        .params()
                        .get("H")
                        .map(|&h| Law::new(h - 1.0 / stable_index + 0.5, 1.0)),
                }
            }
            OracleSpec::Zbeta { beta, .. } => Some(Law::new(1.0 - beta / 2.0, -beta - 1.0)),
            OracleSpec::Wiener | OracleSpec::Levy { .. } | OracleSpec::StableLevy { .. } => {
                Some(Law::new(0.5, 1.0))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
}

fn default_tol() -> f64 {
    1e-3
}

/// One verification. Omitted law parameters default to the oracle's
/// claimed law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Dilative {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default)]
        expect: Expect,
    },
    /// `(f, g)` law: either `f_power`/`g_power`, or a named pair.
    Fg {
        #[serde(default)]
        f_power: Option<f64>,
        #[serde(default)]
        g_power: Option<f64>,
        #[serde(default)]
        pair: Option<String>,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default)]
        expect: Expect,
    },
    /// Aggregate similarity; without `rho1`/`rho2` the law is converted from
    /// the claimed dilative law.
    Aggregate {
        #[serde(default)]
        rho1: Option<f64>,
        #[serde(default)]
        rho2: Option<f64>,
        m: Vec<u32>,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default)]
        expect: Expect,
    },
    /// Exact rational image of the rigidity law `ρ₁ = ρ₂ = 1/(γ-1)`.
    Rigidity { gammas: Vec<f64> },
    /// Covariance table of a GFLP, compared with the closed form where the
    /// kernel has one.
    Covariance {
        times: Vec<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
}

fn default_z() -> f64 {
    4.0
}

fn default_m() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub n_paths: usize,
    pub times: Vec<f64>,
    /// Window half-width `U`; chosen from the bias target when omitted.
    #[serde(default)]
    pub truncation_radius: Option<f64>,
    #[serde(default = "default_m")]
    pub aggregate_m: u32,
    #[serde(default = "default_z")]
    pub z_threshold: f64,
    /// `(ρ₁, ρ₂)` for the distribution-level aggregate check when
    /// `aggregate_m > 1`; converted from the claimed law when omitted.
    #[serde(default)]
    pub aggregate_law: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    /// Search over `(α, δ)` against the exponent oracle.
    #[default]
    Exponent,
    /// Log-log regression of simulated variances.
    Variance,
}

/// Acceptance window for an estimate. Missing `alpha`/`delta` default to
/// the claimed law; `flat` demands (or forbids) a flat direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateExpect {
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    pub tol: f64,
    #[serde(default)]
    pub flat: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    #[serde(default)]
    pub method: EstimateMethod,
    #[serde(default)]
    pub search: Option<SearchConfig<f64>>,
    #[serde(default)]
    pub expect: Option<EstimateExpect>,
}

/// The configuration file as written; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub checks: Option<Vec<CheckSpec>>,
    #[serde(default)]
    pub grid: Option<ScalingGrid>,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub estimate: Option<EstimateSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Scalar fields settable on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "dilastab-out";

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub experiment: Option<String>,
    pub oracle: Option<OracleSpec>,
    pub checks: Vec<CheckSpec>,
    pub grid: ScalingGrid,
    pub quadrature: QuadratureConfig,
    pub simulation: Option<SimulationSpec>,
    pub estimate: Option<EstimateSpec>,
    pub seed: u64,
    /// Concurrency cap; never part of the outputs' content.
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl ExperimentSpec {
    /// Flag, then file, then builtin, then default.
    pub fn resolve(file: SpecFile, flags: Overrides) -> Result<Self, CliError> {
        let base = match &file.experiment {
            Some(name) => builtins::builtin(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown experiment {name:?}; known: {}",
                    builtins::NAMES.join(", ")
                ))
            })?,
            None => SpecFile::default(),
        };
        let spec = Self {
            experiment: file.experiment,
            oracle: file.oracle.or(base.oracle),
            checks: file.checks.or(base.checks).unwrap_or_default(),
            grid: file.grid.or(base.grid).unwrap_or_default(),
            quadrature: file.quadrature.or(base.quadrature).unwrap_or_default(),
            simulation: file.simulation.or(base.simulation),
            estimate: file.estimate.or(base.estimate),
            seed: flags
                .seed
                .or(file.seed)
                .or(base.seed)
                .unwrap_or(DEFAULT_SEED),
            workers: flags.workers.or(file.workers).or(base.workers),
            out: flags
                .out
                .or(file.out)
                .or(base.out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path, flags: Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: SpecFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::resolve(file, flags)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.grid.validate()?;
        self.quadrature.validate()?;
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if let Some(o) = &self.oracle {
            o.build(&self.quadrature)?;
        }
        for c in &self.checks {
            match c {
                CheckSpec::Aggregate { m, .. } if m.is_empty() || m.contains(&0) => {
                    return Err(CliError::Config(
                        "aggregate check needs positive m values".into(),
                    ))
                }
                CheckSpec::Rigidity { gammas } if gammas.is_empty() => {
                    return Err(CliError::Config("rigidity check needs gamma values".into()))
                }
                CheckSpec::Covariance { times, .. } if times.is_empty() => {
                    return Err(CliError::Config("covariance check needs times".into()))
                }
                CheckSpec::Fg {
                    f_power,
                    g_power,
                    pair,
                    ..
                } => {
                    let powers = f_power.is_some() && g_power.is_some();
                    if powers == pair.is_some() || (f_power.is_some() != g_power.is_some()) {
                        return Err(CliError::Config(
                            "fg check needs either f_power and g_power, or pair".into(),
                        ));
                    }
                    if let Some(p) = pair {
                        if p != "wiener_log" {
                            return Err(CliError::Config(format!(
                                "unknown fg pair {p:?}; known: wiener_log"
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        if let Some(s) = &self.simulation {
            if s.n_paths == 0 || s.times.is_empty() || s.aggregate_m == 0 {
                return Err(CliError::Config(
                    "simulation needs n_paths > 0, nonempty times and aggregate_m > 0".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        self.experiment.clone().unwrap_or_else(|| "custom".into())
    }
}
