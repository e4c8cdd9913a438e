//! Per-iteration convex subproblems for the three designs and the loops that
//! drive them.
//!
//! * Algorithm 1 maximizes the minimum rate-to-power ratio (URPR) under
//!   secrecy, QoS, sensing and power constraints.
//! * Algorithm 2 maximizes the minimum secrecy-rate-to-power ratio (USRPR).
//! * Algorithm 3 minimizes the power needed for communication and sensing;
//!   the rest of the budget becomes isotropic artificial noise.
//!
//! A single epigraph `min_k f_k − λP ≥ t` is written as one
//! constraint per user, which is equivalent.

mod assemble;
mod model;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conic::ConicProblem;
use crate::error::{IsacError, Result};
use crate::fim::SchemeSelector;
use crate::linalg::CMat;
use crate::metrics::{BeamformerSet, MetricsReport, RateAllocation};
use crate::sca::SCAState;
use crate::scenario::Scenario;

pub use model::NormalizedModel;
pub use run::{initial_point, max_min_split, run_algorithm, run_with_backend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// watts
    pub p_max: f64,
    /// bits/s/Hz
    pub qos_threshold: f64,
    /// bits/s/Hz
    pub secrecy_threshold: f64,
    /// linear bound on det(CRB)
    pub crb_threshold: f64,
    /// price of the rank-one penalty `Σ tr W − uᴴWu` relative to the price
    /// of transmit power in each subproblem
    pub penalty_weight: f64,
    /// double the penalty weight every iteration (capped at 1e3)
    pub penalty_ramp: bool,
    pub tau: f64,
    pub j_max: usize,
    /// margin used for the strict common-stream security constraint
    pub security_margin: f64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            p_max: 1.0,
            qos_threshold: 3.0,
            secrecy_threshold: 1.0,
            crb_threshold: 1e-7,
            penalty_weight: 1.0,
            penalty_ramp: false,
            tau: 1e-3,
            j_max: 30,
            security_margin: 1e-3,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_max", self.p_max),
            ("qos_threshold", self.qos_threshold),
            ("secrecy_threshold", self.secrecy_threshold),
            ("crb_threshold", self.crb_threshold),
            ("tau", self.tau),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(IsacError::InvalidInput(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.penalty_weight.is_finite() && self.penalty_weight >= 0.0) {
            return Err(IsacError::InvalidInput("penalty_weight must be >= 0".into()));
        }
        if !(self.security_margin.is_finite() && self.security_margin >= 0.0) {
            return Err(IsacError::InvalidInput("security_margin must be >= 0".into()));
        }
        if self.j_max == 0 {
            return Err(IsacError::InvalidInput("j_max must be >= 1".into()));
        }
        Ok(())
    }

    /// Penalty weight used at iteration `j` (0-based).
    pub fn penalty_at(&self, j: usize) -> f64 {
        if self.penalty_ramp {
            (self.penalty_weight * 2f64.powi(j.min(30) as i32)).min(1e3_f64.max(self.penalty_weight))
        } else {
            self.penalty_weight
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Scheme1,
    Scheme2,
    Scheme3,
    Ben1,
    Sdma,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Scheme1,
        Scheme::Scheme2,
        Scheme::Scheme3,
        Scheme::Ben1,
        Scheme::Sdma,
    ];

    pub fn selector(self) -> SchemeSelector {
        match self {
            Scheme::Scheme1 => SchemeSelector::SCHEME1,
            Scheme::Scheme2 => SchemeSelector::SCHEME2,
            Scheme::Scheme3 => SchemeSelector::SCHEME3,
            Scheme::Ben1 => SchemeSelector::BEN1,
            Scheme::Sdma => SchemeSelector::SDMA,
        }
    }

    pub fn has_common(self) -> bool {
        self.selector().rsma
    }

    pub fn has_extra(self) -> bool {
        self.selector().extra_signal_present
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Scheme1 => "scheme1",
            Scheme::Scheme2 => "scheme2",
            Scheme::Scheme3 => "scheme3",
            Scheme::Ben1 => "ben1",
            Scheme::Sdma => "sdma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IsacError::Config(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
        }
    }

    /// Algorithms 1 and 2 maximize, Algorithm 3 minimizes.
    pub fn maximizes(self) -> bool {
        !matches!(self, Algorithm::Alg3)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IsacError::Config(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
    Infeasible(String),
    NumericalFailure(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::IterationLimit => "iteration-limit",
            RunStatus::Infeasible(_) => "infeasible",
            RunStatus::NumericalFailure(_) => "numerical-failure",
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, RunStatus::Converged | RunStatus::IterationLimit)
    }
}

/// Exact residual of one constraint at the returned point; zero when
/// satisfied. Rates are in bits/s/Hz, the sensing constraint in nats of
/// `logdet F`, power relative to `P_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResidual {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub scheme: Scheme,
    /// rank-one beamformers `w wᴴ` in watts; for Algorithm 3 `w_an` is set
    pub beamformers: BeamformerSet,
    /// last relaxed solution, in watts
    pub relaxed: BeamformerSet,
    pub allocation: RateAllocation,
    pub metrics: MetricsReport,
    pub relaxed_metrics: MetricsReport,
    /// URPR / USRPR (per watt) for Algorithms 1/2, `P + ρ·Σ rank residual`
    /// in watts for Algorithm 3
    pub objective_trace: Vec<f64>,
    /// per-watt Dinkelbach factors used by each subproblem
    pub dinkelbach_trace: Vec<f64>,
    /// `Σ (tr W − λ_max(W))` in watts after each iteration
    pub penalty_trace: Vec<f64>,
    pub rank_residuals: Vec<(String, f64)>,
    pub feasibility_report: Vec<ConstraintResidual>,
    /// `−logdet F` at the returned beamformers, i.e. `ln det(CRB)`
    pub crb_log_det: f64,
    pub status: RunStatus,
    pub iterations: usize,
    pub phase_one_iterations: usize,
}

impl RunResult {
    /// Final objective: min URPR, min USRPR, or transmit power.
    pub fn objective(&self) -> f64 {
        match self.algorithm {
            Algorithm::Alg1 => self.metrics.min_urpr(),
            Algorithm::Alg2 => self.metrics.min_usrpr(),
            Algorithm::Alg3 => self.metrics.total_power,
        }
    }

    pub fn crb_det(&self) -> f64 {
        self.crb_log_det.exp()
    }

    pub fn max_feasibility_residual(&self) -> f64 {
        self.feasibility_report
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn max_rank_residual(&self) -> f64 {
        self.rank_residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Isotropic artificial noise filling the unused budget.
pub fn allocate_an(p_max: f64, used_power: f64, n_tx: usize) -> Result<CMat> {
    if n_tx == 0 {
        return Err(IsacError::InvalidInput("n_tx must be >= 1".into()));
    }
    if used_power > p_max + 1e-9 {
        return Err(IsacError::OverBudget {
            used: used_power,
            budget: p_max,
        });
    }
    let per = (p_max - used_power).max(0.0) / n_tx as f64;
    Ok(CMat::identity(n_tx, n_tx).scale(per))
}

/// Which optimization problem a subproblem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// URPR maximization
    P1,
    /// USRPR maximization
    P2,
    /// power minimization
    P3,
}

impl From<Algorithm> for ProblemKind {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Alg1 => ProblemKind::P1,
            Algorithm::Alg2 => ProblemKind::P2,
            Algorithm::Alg3 => ProblemKind::P3,
        }
    }
}

/// Assembled subproblem together with the handles needed to read it back.
pub use assemble::Subproblem;

/// URPR subproblem around `state` (normalized units, see [`NormalizedModel`]).
pub fn assemble_p13(state: &SCAState, scheme: Scheme, model: &NormalizedModel, cfg: &AlgorithmConfig) -> Result<Subproblem> {
    assemble::build(ProblemKind::P1, scheme, model, state, cfg, assemble::Mode::Main, 0)
}

pub fn assemble_p21(state: &SCAState, scheme: Scheme, model: &NormalizedModel, cfg: &AlgorithmConfig) -> Result<Subproblem> {
    assemble::build(ProblemKind::P2, scheme, model, state, cfg, assemble::Mode::Main, 0)
}

pub fn assemble_p31(state: &SCAState, scheme: Scheme, model: &NormalizedModel, cfg: &AlgorithmConfig) -> Result<Subproblem> {
    assemble::build(ProblemKind::P3, scheme, model, state, cfg, assemble::Mode::Main, 0)
}

/// SDMA benchmark subproblem for any of the three designs.
pub fn assemble_sdma(variant: ProblemKind, state: &SCAState, model: &NormalizedModel, cfg: &AlgorithmConfig) -> Result<Subproblem> {
    assemble::build(variant, Scheme::Sdma, model, state, cfg, assemble::Mode::Main, 0)
}

impl Subproblem {
    pub fn problem(&self) -> &ConicProblem {
        &self.problem
    }
}

pub(crate) fn scenario_check(scenario: &Scenario, alg: Algorithm) -> Result<()> {
    scenario.validate()?;
    if scenario.eavesdroppers.is_empty() && alg != Algorithm::Alg3 {
        return Err(IsacError::InvalidInput(
            "eavesdroppers are required for algorithms 1 and 2".into(),
        ));
    }
    Ok(())
}
