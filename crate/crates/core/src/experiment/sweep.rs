//! Parameter sweeps over the reference scenario family.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::ClarabelBackend;
use crate::error::{IsacError, Result};
use crate::scenario::{db_to_linear, dbm_to_watts, Scenario};
use crate::schemes::{run_with_backend, Algorithm, RunResult, RunStatus, Scheme};

/// Swept parameter. Values are given in display units: dB for the CRB
/// threshold, an element count for antennas, bits/s/Hz for the rate
/// thresholds and dBm for the power budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    CrbThreshold,
    Antennas,
    QosThreshold,
    SecrecyThreshold,
    PMax,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::CrbThreshold,
        SweepAxis::Antennas,
        SweepAxis::QosThreshold,
        SweepAxis::SecrecyThreshold,
        SweepAxis::PMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::CrbThreshold => "crb_threshold",
            SweepAxis::Antennas => "antennas",
            SweepAxis::QosThreshold => "qos_threshold",
            SweepAxis::SecrecyThreshold => "secrecy_threshold",
            SweepAxis::PMax => "p_max",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        match self {
            SweepAxis::CrbThreshold => s.algorithm.crb_threshold = db_to_linear(value),
            SweepAxis::Antennas => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(IsacError::Config(format!("antenna count must be a positive integer, got {value}")));
                }
                s = s.with_antennas(value as usize);
            }
            SweepAxis::QosThreshold => s.algorithm.qos_threshold = value,
            SweepAxis::SecrecyThreshold => s.algorithm.secrecy_threshold = value,
            SweepAxis::PMax => s.algorithm.p_max = dbm_to_watts(value),
        }
        s.validate().map_err(|e| IsacError::Config(format!("{} = {value}: {e}", self.name())))?;
        Ok(s)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| IsacError::Config(format!("unknown sweep axis '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(IsacError::Config("sweep needs at least one value".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(IsacError::Config("sweep values must be finite".into()));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(IsacError::Config("sweep values must be strictly monotone".into()));
        }
        if self.algorithms.is_empty() || self.schemes.is_empty() {
            return Err(IsacError::Config("sweep needs at least one algorithm and one scheme".into()));
        }
        Ok(())
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: usize,
    pub algorithm: Algorithm,
    pub scheme: Scheme,
    pub axis_value: Option<f64>,
    /// min URPR / min USRPR (bits/s/Hz/W) or transmit power (W)
    pub objective: Option<f64>,
    pub power_w: Option<f64>,
    pub min_rate: Option<f64>,
    pub min_secrecy_rate: Option<f64>,
    pub crb_det: Option<f64>,
    pub iterations: usize,
    pub status: String,
}

impl ResultRow {
    pub fn from_run(run_id: usize, axis_value: Option<f64>, r: &RunResult) -> Self {
        Self {
            run_id,
            algorithm: r.algorithm,
            scheme: r.scheme,
            axis_value,
            objective: Some(r.objective()),
            power_w: Some(r.metrics.total_power),
            min_rate: Some(r.metrics.min_total_rate()),
            min_secrecy_rate: Some(r.metrics.min_secrecy_rate()),
            crb_det: Some(r.crb_det()),
            iterations: r.iterations,
            status: r.status.label().into(),
        }
    }

    fn failed(run_id: usize, alg: Algorithm, scheme: Scheme, axis_value: Option<f64>, err: &IsacError) -> Self {
        let status = match err {
            IsacError::Infeasible(_) => RunStatus::Infeasible(String::new()),
            _ => RunStatus::NumericalFailure(String::new()),
        };
        Self {
            run_id,
            algorithm: alg,
            scheme,
            axis_value,
            objective: None,
            power_w: None,
            min_rate: None,
            min_secrecy_rate: None,
            crb_det: None,
            iterations: 0,
            status: status.label().into(),
        }
    }
}

/// Convergence trace entry (1-based iteration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run_id: usize,
    pub iteration: usize,
    pub objective: f64,
    pub penalty: f64,
    pub dinkelbach: f64,
}

pub fn trace_rows(run_id: usize, r: &RunResult) -> Vec<TraceRow> {
    r.objective_trace
        .iter()
        .enumerate()
        .map(|(j, &objective)| TraceRow {
            run_id,
            iteration: j + 1,
            objective,
            penalty: r.penalty_trace.get(j).copied().unwrap_or(0.0),
            dinkelbach: r.dinkelbach_trace.get(j).copied().unwrap_or(0.0),
        })
        .collect()
}

/// Finished (or failed) run with its table coordinates.
#[derive(Debug)]
pub struct SweepRun {
    pub run_id: usize,
    pub algorithm: Algorithm,
    pub scheme: Scheme,
    pub axis_value: Option<f64>,
    pub outcome: Result<RunResult>,
}

impl SweepRun {
    pub fn row(&self) -> ResultRow {
        match &self.outcome {
            Ok(r) => ResultRow::from_run(self.run_id, self.axis_value, r),
            Err(e) => ResultRow::failed(self.run_id, self.algorithm, self.scheme, self.axis_value, e),
        }
    }
}

#[derive(Debug, Default)]
pub struct SweepTable {
    pub runs: Vec<SweepRun>,
}

impl SweepTable {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.runs.iter().map(SweepRun::row).collect()
    }

    pub fn traces(&self) -> Vec<TraceRow> {
        self.runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|res| trace_rows(r.run_id, res)))
            .flatten()
            .collect()
    }

    pub fn get(&self, alg: Algorithm, scheme: Scheme, axis_value: Option<f64>) -> Option<&SweepRun> {
        self.runs
            .iter()
            .find(|r| r.algorithm == alg && r.scheme == scheme && r.axis_value == axis_value)
    }
}

/// Runs every (algorithm, scheme) pair on each scenario. Run ids follow the
/// order scenario, algorithm, scheme; the table is sorted by run id.
pub fn run_grid(points: &[(Option<f64>, Scenario)], algorithms: &[Algorithm], schemes: &[Scheme]) -> SweepTable {
    let mut jobs = Vec::new();
    for (value, scenario) in points {
        for &alg in algorithms {
            for &scheme in schemes {
                jobs.push((jobs.len(), *value, scenario, alg, scheme));
            }
        }
    }
    let backend = ClarabelBackend::from_env();
    let mut runs: Vec<SweepRun> = jobs
        .into_par_iter()
        .map(|(run_id, axis_value, scenario, alg, scheme)| SweepRun {
            run_id,
            algorithm: alg,
            scheme,
            axis_value,
            outcome: run_with_backend(alg, scheme, scenario, &backend),
        })
        .collect();
    runs.sort_by_key(|r| r.run_id);
    SweepTable { runs }
}

/// Runs the sweep; individual failures are recorded in their rows.
pub fn run_sweep(spec: &SweepSpec, base: &Scenario) -> Result<SweepTable> {
    spec.validate()?;
    let points = spec
        .values
        .iter()
        .map(|&v| Ok((Some(v), spec.axis.apply(base, v)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_grid(&points, &spec.algorithms, &spec.schemes))
}
