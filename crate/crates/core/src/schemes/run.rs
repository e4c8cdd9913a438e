use log::{debug, info, warn};

use crate::conic::{ClarabelBackend, ConicBackend, SolveStatus};
use crate::error::{IsacError, Result};
use crate::geometry::steering_vector;
use crate::linalg::{leading_eigenpair, logdet_spd, outer, real_trace, trace_product, CMat, RMat};
use crate::metrics::{evaluate, BeamformerSet, MetricsReport, RateAllocation};
use crate::sca::{converged, extract_beamformer, rank_one_residual, SCAState};
use crate::scenario::Scenario;

use super::assemble::{build, Mode};
use super::model::NormalizedModel;
use super::{
    allocate_an, scenario_check, Algorithm, AlgorithmConfig, ConstraintResidual, ProblemKind,
    RunResult, RunStatus, Scheme,
};

/// Largest rank-one residual accepted before the loop may stop.
const RANK_TOL: f64 = 1e-4;
/// Slack below which phase 1 counts as strictly feasible.
const PHASE1_TARGET: f64 = -1e-6;
/// Power share below which a matrix is treated as switched off.
const NEGLIGIBLE_SHARE: f64 = 1e-6;

/// `c_k = max(0, L − base_k)` with `Σ c_k = budget`, which maximizes
/// `min_k (c_k + base_k)`.
pub fn max_min_split(base: &[f64], budget: f64) -> Vec<f64> {
    if base.is_empty() || !(budget > 0.0) {
        return vec![0.0; base.len()];
    }
    let mut sorted = base.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut acc = 0.0;
    let mut level = sorted[0] + budget;
    for i in 0..sorted.len() {
        acc += sorted[i];
        level = (budget + acc) / (i + 1) as f64;
        if i + 1 == sorted.len() || level <= sorted[i + 1] {
            break;
        }
    }
    base.iter().map(|b| (level - b).max(0.0)).collect()
}

/// Matched-filter starting point in watts: private beams on each user's
/// strongest eigen-direction, the common beam on the strongest direction of
/// `Σ H_k`, the extra beam toward all targets at once (the sum of their
/// steering vectors); 40/30/30 power split
/// (renormalized over the streams present) scaled to 0.9·P_max, then shrunk
/// by factors of √2 while every exact constraint of `alg` still holds.
pub fn initial_point(alg: Algorithm, scheme: Scheme, scenario: &Scenario) -> Result<BeamformerSet> {
    let model = NormalizedModel::new(scenario, scheme)?;
    Ok(model.to_watts(&starting_point(ProblemKind::from(alg), &model, scenario)?))
}

fn starting_point(kind: ProblemKind, model: &NormalizedModel, scenario: &Scenario) -> Result<BeamformerSet> {
    let mut a = crate::linalg::CVec::zeros(model.n_tx);
    for &theta in &scenario.sensing.target_azimuths {
        a += steering_vector(theta, model.n_tx, scenario.array.spacing_ratio)?;
    }
    Ok(shrink(kind, model, &scenario.algorithm, initial_normalized(model, &a)))
}

/// Scales the streams of `point` down by √2 steps, one stream at a time in
/// round-robin order, as long as no constraint that holds at `point`
/// becomes violated.
fn shrink(kind: ProblemKind, model: &NormalizedModel, cfg: &AlgorithmConfig, mut point: BeamformerSet) -> BeamformerSet {
    let violated = |bf: &BeamformerSet| -> Vec<bool> {
        residuals(kind, model, cfg, bf, &allocation(kind, model, bf))
            .iter()
            .map(|r| r.residual > 0.0)
            .collect()
    };
    let allowed = violated(&point);
    let floor = 1e-9 * model.p_max;
    let roles = model.roles();
    let mut active = vec![true; roles.len()];
    while active.iter().any(|a| *a) {
        for (i, role) in roles.iter().enumerate() {
            if !active[i] {
                continue;
            }
            let mut trial = point.clone();
            let w = trial.matrix_mut(*role).expect("role present");
            *w = w.scale(std::f64::consts::FRAC_1_SQRT_2);
            let new_violation = violated(&trial).iter().zip(&allowed).any(|(n, a)| *n && !*a);
            if new_violation || real_trace(trial.matrix(*role).expect("role present")) < floor {
                active[i] = false;
            } else {
                point = trial;
            }
        }
    }
    point
}

fn initial_normalized(model: &NormalizedModel, target: &crate::linalg::CVec) -> BeamformerSet {
    let n = model.n_tx;
    let k_users = model.n_users;
    let mut shares = 0.4;
    if model.has_common {
        shares += 0.3;
    }
    if model.has_extra {
        shares += 0.3;
    }
    let total = 0.9 * model.p_max / shares;
    let beam = |h: &CMat, p: f64| outer(&leading_eigenpair(h).1).scale(p);
    let sum_h = model.users.iter().fold(CMat::zeros(n, n), |a, h| a + h);
    // the common beam starts orthogonal to the eavesdroppers' dominant
    // directions so that it is decodable by the users first
    let mut w_c = leading_eigenpair(&sum_h).1;
    for g in &model.eaves {
        let e = leading_eigenpair(g).1;
        w_c -= &e * e.dotc(&w_c);
    }
    let w_c = if w_c.norm() > 1e-6 { w_c.unscale(w_c.norm()) } else { leading_eigenpair(&sum_h).1 };
    BeamformerSet {
        w_common: model.has_common.then(|| outer(&w_c).scale(0.3 * total)),
        w_private: model
            .users
            .iter()
            .map(|h| beam(h, 0.4 * total / k_users as f64))
            .collect(),
        w_extra: model
            .has_extra
            .then(|| outer(&target.unscale(target.norm())).scale(0.3 * total)),
        w_an: None,
    }
}

fn sensing_logdet(model: &NormalizedModel, bf: &BeamformerSet) -> f64 {
    let r = model
        .sensing_roles()
        .into_iter()
        .filter_map(|role| bf.matrix(role))
        .fold(CMat::zeros(model.n_tx, model.n_tx), |a, w| a + w);
    let d = model.fim.len();
    let f = RMat::from_fn(d, d, |i, j| trace_product(&model.fim[i][j], &r));
    logdet_spd(&f).unwrap_or(f64::NEG_INFINITY)
}

struct Rates {
    common: Vec<f64>,
    private: Vec<f64>,
    eaves_common: Vec<f64>,
    /// `[k][m]`
    eaves_private: Vec<Vec<f64>>,
}

fn exact_rates(model: &NormalizedModel, bf: &BeamformerSet) -> Rates {
    let (k_users, m_eaves) = (model.n_users, model.n_eaves);
    Rates {
        common: (0..k_users)
            .map(|k| if model.has_common { model.common_rate(k, false).value(bf) } else { 0.0 })
            .collect(),
        private: (0..k_users).map(|k| model.private_rate(k).value(bf)).collect(),
        eaves_common: (0..m_eaves)
            .map(|m| if model.has_common { model.common_rate(m, true).value(bf) } else { 0.0 })
            .collect(),
        eaves_private: (0..k_users)
            .map(|k| (0..m_eaves).map(|m| model.eaves_private_rate(k, m).value(bf)).collect())
            .collect(),
    }
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

/// Best common-rate split for the exact rates at `bf` (normalized units).
fn allocation(kind: ProblemKind, model: &NormalizedModel, bf: &BeamformerSet) -> RateAllocation {
    let k_users = model.n_users;
    let r = exact_rates(model, bf);
    match kind {
        ProblemKind::P1 | ProblemKind::P3 => RateAllocation {
            common_parts: if model.has_common {
                max_min_split(&r.private, min_of(r.common.iter().copied()))
            } else {
                vec![0.0; k_users]
            },
            secrecy_common_parts: None,
        },
        ProblemKind::P2 => {
            let private_secrecy: Vec<f64> = (0..k_users)
                .map(|k| min_of(r.eaves_private[k].iter().map(|e| r.private[k] - e)).max(0.0))
                .collect();
            let parts = if model.has_common {
                let budget = min_of(
                    r.common
                        .iter()
                        .flat_map(|c| r.eaves_common.iter().map(move |e| c - e)),
                );
                max_min_split(&private_secrecy, budget)
            } else {
                vec![0.0; k_users]
            };
            RateAllocation {
                common_parts: parts.clone(),
                secrecy_common_parts: Some(parts),
            }
        }
    }
}

fn residuals(
    kind: ProblemKind,
    model: &NormalizedModel,
    cfg: &AlgorithmConfig,
    bf: &BeamformerSet,
    alloc: &RateAllocation,
) -> Vec<ConstraintResidual> {
    let r = exact_rates(model, bf);
    let mut out = Vec::new();
    let mut push = |name: String, violation: f64| {
        out.push(ConstraintResidual {
            name,
            residual: violation.max(0.0),
        })
    };
    let c = &alloc.common_parts;
    let c_sum: f64 = c.iter().sum();
    for k in 0..model.n_users {
        match kind {
            ProblemKind::P1 | ProblemKind::P3 => {
                if model.has_common {
                    push(format!("split.{k}"), c_sum - r.common[k]);
                }
                push(format!("qos.{k}"), cfg.qos_threshold - (c[k] + r.private[k]));
                if kind == ProblemKind::P1 {
                    for m in 0..model.n_eaves {
                        if model.has_common {
                            push(
                                format!("common-secure.{k}.{m}"),
                                cfg.security_margin - (r.common[k] - r.eaves_common[m]),
                            );
                        }
                        push(
                            format!("secrecy.{k}.{m}"),
                            cfg.secrecy_threshold - (r.private[k] - r.eaves_private[k][m]),
                        );
                    }
                }
            }
            ProblemKind::P2 => {
                for m in 0..model.n_eaves {
                    if model.has_common {
                        push(
                            format!("secure-split.{k}.{m}"),
                            c_sum - (r.common[k] - r.eaves_common[m]),
                        );
                    }
                    let private = r.private[k] - r.eaves_private[k][m];
                    push(format!("private-secrecy.{k}.{m}"), -private);
                    push(format!("secrecy.{k}.{m}"), cfg.secrecy_threshold - (c[k] + private));
                }
            }
        }
    }
    push("crb".into(), model.logdet_bound - sensing_logdet(model, bf));
    push("power".into(), bf.total_power() / model.p_max - 1.0);
    out
}

fn worst(res: &[ConstraintResidual]) -> Option<&ConstraintResidual> {
    res.iter()
        .filter(|r| r.residual > 0.0)
        .max_by(|a, b| a.residual.total_cmp(&b.residual))
}

/// Slack-minimizing successive approximation from `start` until every
/// relaxed constraint holds strictly. Returns the point and iterations used.
fn phase_one(
    kind: ProblemKind,
    scheme: Scheme,
    model: &NormalizedModel,
    cfg: &AlgorithmConfig,
    start: BeamformerSet,
    backend: &dyn ConicBackend,
) -> std::result::Result<(BeamformerSet, usize), String> {
    let mut state = SCAState::new(start);
    let limit = cfg.j_max.max(10);
    for j in 0..limit {
        let sub = build(kind, scheme, model, &state, cfg, Mode::Phase1, 0).map_err(|e| e.to_string())?;
        let sol = backend.solve(&sub.problem);
        if sol.status != SolveStatus::Optimal {
            return Err(format!(
                "feasibility restoration: solver returned {:?} ({})",
                sol.status, sol.stats.message
            ));
        }
        let s = sub.slack(&sol).unwrap_or(f64::INFINITY);
        debug!("phase 1 iteration {}: slack {s:.4e}", j + 1);
        state.advance(sub.point(&sol), s);
        if s <= PHASE1_TARGET {
            return Ok((state.expansion_point, j + 1));
        }
        let trace = &state.objective_trace;
        if trace.len() >= 3 {
            let prev = trace[trace.len() - 2];
            if (prev - s).abs() <= 1e-6 * prev.abs().max(1e-3) {
                break;
            }
        }
    }
    let alloc = allocation(kind, model, &state.expansion_point);
    let res = residuals(kind, model, cfg, &state.expansion_point, &alloc);
    Err(match worst(&res) {
        Some(r) => format!("constraint {} violated by {:.4e}", r.name, r.residual),
        None => "feasibility restoration did not reach a strict interior point".into(),
    })
}

/// Rank-one residual per matrix; a matrix carrying a negligible share of
/// the power counts as an (empty) rank-one beam.
fn rank_residuals(bf: &BeamformerSet) -> Vec<(String, f64)> {
    let total = bf.total_power();
    bf.matrices()
        .iter()
        .map(|(role, w)| {
            let r = if real_trace(w) <= NEGLIGIBLE_SHARE * total { 0.0 } else { rank_one_residual(w) };
            (role.to_string(), r)
        })
        .collect()
}

/// Objective value at `bf` (normalized units): the penalized power
/// `P + ρ·pen` in watts for alg3, otherwise the smallest rate (or secrecy
/// rate) divided by the penalized power.
fn merit(alg: Algorithm, report: &MetricsReport, bf: &BeamformerSet, rho: f64, unit: f64) -> f64 {
    let power = bf.total_power();
    let penalized = unit * (power + rho * penalty_sum(bf));
    let ratio_to_penalized = |ratio: f64| ratio * unit * power / penalized;
    match alg {
        Algorithm::Alg1 => ratio_to_penalized(report.min_urpr()),
        Algorithm::Alg2 => ratio_to_penalized(report.min_usrpr()),
        Algorithm::Alg3 => penalized,
    }
}

fn powers(model: &NormalizedModel, bf: &BeamformerSet) -> String {
    bf.matrices()
        .iter()
        .map(|(r, w)| format!("{r} {:.3e} W", model.unit * real_trace(w)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn penalty_sum(bf: &BeamformerSet) -> f64 {
    bf.matrices()
        .iter()
        .map(|(_, w)| (real_trace(w) - leading_eigenpair(w).0).max(0.0))
        .sum()
}

fn extract(bf: &BeamformerSet) -> BeamformerSet {
    let one = |w: &CMat| outer(&extract_beamformer(w));
    BeamformerSet {
        w_common: bf.w_common.as_ref().map(one),
        w_private: bf.w_private.iter().map(one).collect(),
        w_extra: bf.w_extra.as_ref().map(one),
        w_an: bf.w_an.clone(),
    }
}

fn metrics_for(
    kind: ProblemKind,
    model: &NormalizedModel,
    scenario: &Scenario,
    bf_norm: &BeamformerSet,
    an: Option<&CMat>,
) -> Result<(RateAllocation, MetricsReport)> {
    let alloc = allocation(kind, model, bf_norm);
    let mut watts = model.to_watts(bf_norm);
    watts.w_an = an.cloned();
    let report = evaluate(&watts, &alloc, &scenario.link_model()?)?;
    Ok((alloc, report))
}

/// Runs one algorithm with the default interior-point backend.
pub fn run_algorithm(alg: Algorithm, scheme: Scheme, scenario: &Scenario) -> Result<RunResult> {
    run_with_backend(alg, scheme, scenario, &ClarabelBackend::default())
}

struct Traces {
    objective: Vec<f64>,
    dinkelbach: Vec<f64>,
    penalty: Vec<f64>,
}

pub fn run_with_backend(
    alg: Algorithm,
    scheme: Scheme,
    scenario: &Scenario,
    backend: &dyn ConicBackend,
) -> Result<RunResult> {
    scenario_check(scenario, alg)?;
    let cfg = &scenario.algorithm;
    let kind = ProblemKind::from(alg);
    let model = NormalizedModel::new(scenario, scheme)?;
    let mut point = starting_point(kind, &model, scenario)?;
    let mut traces = Traces {
        objective: Vec::new(),
        dinkelbach: Vec::new(),
        penalty: Vec::new(),
    };

    let mut phase_one_iterations = 0;
    let alloc = allocation(kind, &model, &point);
    if worst(&residuals(kind, &model, cfg, &point, &alloc)).is_some() {
        match phase_one(kind, scheme, &model, cfg, point.clone(), backend) {
            Ok((p, iters)) => {
                point = shrink(kind, &model, cfg, p);
                phase_one_iterations = iters;
            }
            Err(reason) => {
                warn!("{alg}/{scheme}: {reason}");
                return finish(alg, scheme, scenario, &model, point, traces, RunStatus::Infeasible(reason), 0, phase_one_iterations);
            }
        }
    }

    debug!("{alg}/{scheme} start: {}", powers(&model, &point));
    if alg.maximizes() {
        let sub = build(kind, scheme, &model, &SCAState::new(point.clone()), cfg, Mode::MinPower, 0)?;
        let sol = backend.solve(&sub.problem);
        if sol.status == SolveStatus::Optimal {
            point = sub.point(&sol);
            phase_one_iterations += 1;
            debug!("{alg}/{scheme} after power step: {}", powers(&model, &point));
        } else {
            debug!("{alg}/{scheme}: power-minimizing start step returned {:?}", sol.status);
        }
    }
    let mut state = SCAState::new(point);
    if alg.maximizes() {
        // Dinkelbach factor starts at the ratio of the (feasible) start
        let (_, report) = metrics_for(kind, &model, scenario, &state.expansion_point, None)?;
        let ratio = merit(alg, &report, &state.expansion_point, cfg.penalty_at(0), model.unit);
        state.dinkelbach_factor = ratio.max(0.0) * model.unit;
    }
    let mut status = RunStatus::IterationLimit;
    let mut restored = false;
    for j in 0..cfg.j_max {
        let sub = build(kind, scheme, &model, &state, cfg, Mode::Main, j)?;
        let sol = backend.solve(&sub.problem);
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible if !restored => {
                restored = true;
                warn!("{alg}/{scheme}: subproblem {} infeasible, restoring", j + 1);
                match phase_one(kind, scheme, &model, cfg, state.expansion_point.clone(), backend) {
                    Ok((p, iters)) => {
                        phase_one_iterations += iters;
                        let lambda = state.dinkelbach_factor;
                        let trace = std::mem::take(&mut state.objective_trace);
                        state = SCAState::new(p);
                        state.dinkelbach_factor = lambda;
                        state.objective_trace = trace;
                        continue;
                    }
                    Err(reason) => {
                        status = RunStatus::Infeasible(reason);
                        break;
                    }
                }
            }
            SolveStatus::Infeasible => {
                status = RunStatus::Infeasible(format!("subproblem {} infeasible", j + 1));
                break;
            }
            other => {
                status = RunStatus::NumericalFailure(format!(
                    "iteration {}: solver returned {:?} ({})",
                    j + 1,
                    other,
                    sol.stats.message
                ));
                break;
            }
        }
        let next = sub.point(&sol);
        let (_, report) = metrics_for(kind, &model, scenario, &next, None)?;
        let pen = penalty_sum(&next);
        let merit = merit(alg, &report, &next, cfg.penalty_at(j), model.unit);
        traces.dinkelbach.push(state.dinkelbach_factor / model.unit);
        traces.penalty.push(pen * model.unit);
        traces.objective.push(merit);
        let max_rank = rank_residuals(&next).into_iter().map(|(_, r)| r).fold(0.0, f64::max);
        debug!(
            "{alg}/{scheme} iteration {}: objective {merit:.6e}, rank residual {max_rank:.2e}",
            j + 1
        );
        debug!("{alg}/{scheme} iteration {}: {}", j + 1, powers(&model, &next));
        state.advance(next, merit);
        if alg.maximizes() {
            state.dinkelbach_factor = merit * model.unit;
        }
        if converged(&traces.objective, cfg.tau, usize::MAX) && max_rank <= RANK_TOL {
            status = RunStatus::Converged;
            break;
        }
    }
    let iterations = traces.objective.len();
    info!("{alg}/{scheme}: {} after {iterations} iterations", status.label());
    finish(alg, scheme, scenario, &model, state.expansion_point, traces, status, iterations, phase_one_iterations)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    alg: Algorithm,
    scheme: Scheme,
    scenario: &Scenario,
    model: &NormalizedModel,
    relaxed_norm: BeamformerSet,
    traces: Traces,
    mut status: RunStatus,
    iterations: usize,
    phase_one_iterations: usize,
) -> Result<RunResult> {
    let kind = ProblemKind::from(alg);
    let cfg = &scenario.algorithm;
    let extracted_norm = extract(&relaxed_norm);
    let an = if alg == Algorithm::Alg3 {
        let used = model.unit * extracted_norm.total_power();
        match allocate_an(cfg.p_max, used, model.n_tx) {
            Ok(w) => Some(w),
            Err(IsacError::OverBudget { used, budget }) => {
                if status.is_success() {
                    status = RunStatus::Infeasible(format!(
                        "required power {used:.4e} W exceeds P_max = {budget:.4e} W"
                    ));
                }
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let (allocation, metrics) = metrics_for(kind, model, scenario, &extracted_norm, an.as_ref())?;
    let (_, relaxed_metrics) = metrics_for(kind, model, scenario, &relaxed_norm, an.as_ref())?;
    let feasibility_report = residuals(kind, model, cfg, &extracted_norm, &allocation);
    let rank_residuals = rank_residuals(&relaxed_norm);
    let mut beamformers = model.to_watts(&extracted_norm);
    beamformers.w_an = an;
    Ok(RunResult {
        algorithm: alg,
        scheme,
        beamformers,
        relaxed: model.to_watts(&relaxed_norm),
        allocation,
        metrics,
        relaxed_metrics,
        objective_trace: traces.objective,
        dinkelbach_trace: traces.dinkelbach,
        penalty_trace: traces.penalty,
        rank_residuals,
        feasibility_report,
        crb_log_det: -sensing_logdet(model, &extracted_norm),
        status,
        iterations,
        phase_one_iterations,
    })
}
