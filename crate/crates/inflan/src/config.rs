//! Run configuration: JSON-serializable problem descriptions, solver
//! parameters, and output paths.

use crate::error::{Error, Result};
use crate::kernels::ZStrategy;
use crate::linearization::Disk;
use crate::series::{ScalarFunction, C64};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Scalar function descriptor as it appears in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionSpec {
    Constant,
    NegatedIdentity,
    Monomial { degree: usize },
    /// f(λ) = e^{aλ} with a = rate[0] + i·rate[1]
    Exponential { rate: [f64; 2] },
    Sine,
    LambdaSine,
    /// f(λ) = √(aλ + b), principal branch
    SqrtShift { a: [f64; 2], b: [f64; 2] },
}

fn to_c(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

impl FunctionSpec {
    pub fn to_function(&self) -> ScalarFunction {
        match self {
            FunctionSpec::Constant => ScalarFunction::Constant,
            FunctionSpec::NegatedIdentity => ScalarFunction::NegatedIdentity,
            FunctionSpec::Monomial { degree } => ScalarFunction::Monomial { degree: *degree },
            FunctionSpec::Exponential { rate } => ScalarFunction::Exponential { rate: to_c(*rate) },
            FunctionSpec::Sine => ScalarFunction::Sine,
            FunctionSpec::LambdaSine => ScalarFunction::LambdaSine,
            FunctionSpec::SqrtShift { a, b } => ScalarFunction::SqrtShift {
                a: to_c(*a),
                b: to_c(*b),
            },
        }
    }
}

/// One Matrix Market term: the file plus its scalar function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmTermSpec {
    pub path: PathBuf,
    pub function: FunctionSpec,
    /// Attempt low-rank detection for this term.
    #[serde(default)]
    pub low_rank: bool,
}

/// The problem family to build.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Delay PDE benchmark; `grid` interior points per direction, n = grid².
    DelayPde { grid: usize },
    /// Random delay problem -λI + A₀ + A₁e^{-λ} of size n.
    RandomDep { n: usize, seed: u64 },
    /// Deterministic symmetrized construction of size 2n.
    SymmetrizedRandom { n: usize },
    /// SPMF assembled from Matrix Market files.
    MatrixMarket { terms: Vec<MmTermSpec> },
}

/// Target disk in the original problem coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiskSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

impl DiskSpec {
    pub fn to_disk(self) -> Disk {
        Disk {
            center: to_c(self.center),
            radius: self.radius,
        }
    }
}

fn default_scale() -> [f64; 2] {
    [1.0, 0.0]
}

/// A problem plus the shift-and-scale change of variables λ = λ0 + α·λ̂
/// applied before solving, and the eigenvalue region of interest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(flatten)]
    pub kind: ProblemKind,
    /// λ0 (default 0)
    #[serde(default)]
    pub shift: [f64; 2],
    /// α (default 1)
    #[serde(default = "default_scale")]
    pub scale: [f64; 2],
    #[serde(default)]
    pub target_disk: Option<DiskSpec>,
}

impl ProblemSpec {
    pub fn shift_c(&self) -> C64 {
        to_c(self.shift)
    }

    pub fn scale_c(&self) -> C64 {
        to_c(self.scale)
    }

    pub fn is_identity_transform(&self) -> bool {
        self.shift == [0.0, 0.0] && self.scale == [1.0, 0.0]
    }
}

/// Z-computation strategy name.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StrategySpec {
    #[default]
    Naive,
    LowrankFft,
    Dep,
    PolyLowrank,
}

impl StrategySpec {
    pub fn to_strategy(self, rank: Option<usize>) -> ZStrategy {
        match self {
            StrategySpec::Naive => ZStrategy::Naive,
            StrategySpec::LowrankFft => ZStrategy::LowRankFft { rank },
            StrategySpec::Dep => ZStrategy::Dep,
            StrategySpec::PolyLowrank => ZStrategy::PolyLowRank,
        }
    }

    pub fn parse(name: &str) -> Result<StrategySpec> {
        match name {
            "naive" => Ok(StrategySpec::Naive),
            "lowrank-fft" => Ok(StrategySpec::LowrankFft),
            "dep" => Ok(StrategySpec::Dep),
            "poly-lowrank" => Ok(StrategySpec::PolyLowrank),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected naive, lowrank-fft, dep, poly-lowrank)"
            ))),
        }
    }
}

fn default_tol() -> f64 {
    1e-6
}

fn default_inner() -> usize {
    150
}

fn default_cadence() -> usize {
    10
}

fn default_seed() -> u64 {
    1
}

/// Output file paths.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub results: Option<PathBuf>,
    #[serde(default)]
    pub history: Option<PathBuf>,
}

/// Full solver configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub maxiter: usize,
    #[serde(default)]
    pub strategy: StrategySpec,
    /// Optional fixed rank for the lowrank-fft strategy (adaptive otherwise).
    #[serde(default)]
    pub lowrank_rank: Option<usize>,
    /// Residual tolerance for marking an eigenpair converged.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Inner infinite-Arnoldi iterations for the projected problems.
    #[serde(default = "default_inner")]
    pub inner_iterations: usize,
    /// Run extraction every this many outer iterations (and at the end).
    #[serde(default = "default_cadence")]
    pub extraction_cadence: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<OutputPaths>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.maxiter < 1 {
            return Err(Error::Config("maxiter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.problem.scale == [0.0, 0.0] {
            return Err(Error::Config("scale must be nonzero".into()));
        }
        if self.inner_iterations < 1 {
            return Err(Error::Config("inner_iterations must be at least 1".into()));
        }
        if let Some(d) = &self.problem.target_disk {
            if !(d.radius > 0.0) {
                return Err(Error::Config("target_disk.radius must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
