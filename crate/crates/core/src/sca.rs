//! Convexification toolkit shared by all three designs: tangent upper bounds
//! of `log2(tr(·) + σ²)` terms, Dinkelbach updates, the eigenvector rank-one
//! penalty and beamformer extraction.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use log::warn;

use crate::error::{IsacError, Result};
use crate::linalg::{c, leading_eigenpair, outer, real_trace, trace_product, CMat, CVec};
use crate::metrics::{BeamformerSet, MatrixRole};

/// `χ(W) + constant` where `χ(W) = Σ tr(C_q W_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLogTerm {
    pub coefficient_map: Vec<(MatrixRole, CMat)>,
    pub constant: f64,
}

impl TraceLogTerm {
    pub fn new(constant: f64) -> Self {
        Self {
            coefficient_map: Vec::new(),
            constant,
        }
    }

    pub fn with(mut self, role: MatrixRole, coeff: &CMat) -> Self {
        self.coefficient_map.push((role, coeff.clone()));
        self
    }

    /// `χ(W)`, roles absent from `bf` contribute zero.
    pub fn chi(&self, bf: &BeamformerSet) -> f64 {
        self.coefficient_map
            .iter()
            .filter_map(|(role, coeff)| bf.matrix(*role).map(|w| trace_product(coeff, w)))
            .sum()
    }

    /// `χ(W) + constant`
    pub fn argument(&self, bf: &BeamformerSet) -> f64 {
        self.chi(bf) + self.constant
    }

    pub fn log2_value(&self, bf: &BeamformerSet) -> f64 {
        self.argument(bf).log2()
    }
}

/// Tangent of a concave `log2(χ(W) + const)` at an expansion point:
/// `W ↦ log2(A) + (χ(W) − χ⁽ʲ⁾)/(A ln 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTangent {
    pub term: TraceLogTerm,
    pub anchor_chi: f64,
    pub anchor_argument: f64,
}

impl LogTangent {
    pub fn eval(&self, bf: &BeamformerSet) -> f64 {
        self.offset() + self.slope() * self.term.chi(bf)
    }

    /// Multiplier of `χ(W)`.
    pub fn slope(&self) -> f64 {
        1.0 / (self.anchor_argument * LN_2)
    }

    /// Value of the tangent at `χ = 0`.
    pub fn offset(&self) -> f64 {
        self.anchor_argument.log2() - self.anchor_chi * self.slope()
    }
}

pub fn linearize_upper(term: &TraceLogTerm, expansion_point: &BeamformerSet) -> Result<LogTangent> {
    let anchor_chi = term.chi(expansion_point);
    let anchor_argument = anchor_chi + term.constant;
    if !(anchor_argument > 0.0) || !anchor_argument.is_finite() {
        return Err(IsacError::DegenerateExpansion(anchor_argument));
    }
    Ok(LogTangent {
        term: term.clone(),
        anchor_chi,
        anchor_argument,
    })
}

/// Iterate-dependent data of the successive approximation loop.
#[derive(Debug, Clone)]
pub struct SCAState {
    pub expansion_point: BeamformerSet,
    pub penalty_vectors: BTreeMap<MatrixRole, CVec>,
    pub dinkelbach_factor: f64,
    pub iteration: usize,
    pub objective_trace: Vec<f64>,
}

impl SCAState {
    pub fn new(expansion_point: BeamformerSet) -> Self {
        let penalty_vectors = expansion_point
            .matrices()
            .into_iter()
            .map(|(role, w)| (role, refresh_penalty_vector(w).0))
            .collect();
        Self {
            expansion_point,
            penalty_vectors,
            dinkelbach_factor: 0.0,
            iteration: 0,
            objective_trace: Vec::new(),
        }
    }

    /// Moves the expansion point and refreshes every penalty eigenvector.
    pub fn advance(&mut self, next: BeamformerSet, objective: f64) {
        for (role, w) in next.matrices() {
            self.penalty_vectors.insert(role, refresh_penalty_vector(w).0);
        }
        self.expansion_point = next;
        self.objective_trace.push(objective);
        self.iteration = self.objective_trace.len();
    }
}

/// `λ = min_metric / P`.
pub fn dinkelbach_update(min_metric: f64, power: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(IsacError::DegeneratePower(power));
    }
    Ok(min_metric / power)
}

/// `tr(W) − uᴴWu` and its coefficient `I − uuᴴ`, affine in `W` for fixed `u`.
pub fn rank_one_penalty(w: &CMat, u_prev: &CVec) -> (f64, CMat) {
    let norm = u_prev.norm();
    let u = if (norm - 1.0).abs() > 1e-9 {
        warn!("penalty vector has norm {norm}, normalizing");
        if norm > 0.0 {
            u_prev.unscale(norm)
        } else {
            let mut e = CVec::zeros(u_prev.len());
            e[0] = c(1.0, 0.0);
            e
        }
    } else {
        u_prev.clone()
    };
    let n = w.nrows();
    let coeff = CMat::identity(n, n) - outer(&u);
    (trace_product(&coeff, w), coeff)
}

/// Leading eigenvector of `W`; the flag is set when `W` is (numerically) zero
/// and `e_1` is returned instead.
pub fn refresh_penalty_vector(w: &CMat) -> (CVec, bool) {
    let n = w.nrows();
    if w.iter().all(|z| z.norm() == 0.0) {
        let mut e = CVec::zeros(n);
        e[0] = c(1.0, 0.0);
        return (e, true);
    }
    (leading_eigenpair(w).1, false)
}

/// `√λ_max · u_max`, phase-canonicalized.
pub fn extract_beamformer(w: &CMat) -> CVec {
    let (val, vec) = leading_eigenpair(w);
    vec.scale(val.max(0.0).sqrt())
}

/// `(tr W − λ_max) / tr W`, zero for the zero matrix.
pub fn rank_one_residual(w: &CMat) -> f64 {
    let tr = real_trace(w);
    if tr <= 0.0 {
        return 0.0;
    }
    ((tr - leading_eigenpair(w).0) / tr).max(0.0)
}

/// Stop when the last relative objective change is at most `tau`, or after
/// `j_max` iterations.
pub fn converged(trace: &[f64], tau: f64, j_max: usize) -> bool {
    if trace.len() >= j_max {
        return true;
    }
    match trace {
        [.., prev, last] => (last - prev).abs() <= tau * prev.abs().max(f64::MIN_POSITIVE),
        _ => false,
    }
}
