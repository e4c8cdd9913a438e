use std::collections::{BTreeMap, HashMap};
use std::f64::consts::LN_2;

use crate::conic::{ConicProblem, LinExpr, MatVar, ScalarVar, Solution, SymAffine};
use crate::error::Result;
use crate::linalg::{outer, trace_product, CMat};
use crate::metrics::{BeamformerSet, MatrixRole};
use crate::sca::{linearize_upper, SCAState, TraceLogTerm};

use super::model::{NormalizedModel, RateExpr};
use super::{AlgorithmConfig, ProblemKind, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Main,
    /// every rate and sensing constraint relaxed by a common slack, which is
    /// minimized
    Phase1,
    /// the constraints of the problem with total power as the objective;
    /// used once to place the starting point
    MinPower,
}

/// Lower bound of the phase-1 slack; keeps the problem bounded and leaves
/// a margin once feasibility is reached.
pub(crate) const PHASE1_FLOOR: f64 = -0.05;

#[derive(Debug, Clone)]
pub struct Subproblem {
    pub(crate) problem: ConicProblem,
    pub(crate) vars: BTreeMap<MatrixRole, MatVar>,
    pub(crate) common_parts: Vec<ScalarVar>,
    pub(crate) slack: Option<ScalarVar>,
    pub(crate) n_tx: usize,
    pub(crate) n_users: usize,
}

impl Subproblem {
    /// Matrix variables of the solution as a beamformer set (normalized units).
    pub fn point(&self, sol: &Solution) -> BeamformerSet {
        let get = |r: MatrixRole| self.vars.get(&r).map(|v| sol.matrix(*v).clone());
        BeamformerSet {
            w_common: get(MatrixRole::Common),
            w_private: (0..self.n_users)
                .map(|k| get(MatrixRole::Private(k)).unwrap_or_else(|| CMat::zeros(self.n_tx, self.n_tx)))
                .collect(),
            w_extra: get(MatrixRole::Extra),
            w_an: None,
        }
    }

    pub fn common_parts(&self, sol: &Solution) -> Vec<f64> {
        self.common_parts.iter().map(|v| sol.scalar(*v)).collect()
    }

    pub fn slack(&self, sol: &Solution) -> Option<f64> {
        self.slack.map(|s| sol.scalar(s))
    }

    pub fn n_matrix_vars(&self) -> usize {
        self.vars.len()
    }
}

struct Lowering<'a> {
    vars: &'a BTreeMap<MatrixRole, MatVar>,
    point: &'a BeamformerSet,
    logs: HashMap<String, LinExpr>,
}

impl Lowering<'_> {
    fn chi(&self, p: &ConicProblem, term: &TraceLogTerm) -> LinExpr {
        let mut e = LinExpr::zero();
        for (role, coeff) in &term.coefficient_map {
            if let Some(v) = self.vars.get(role) {
                e.add_scaled(&p.trace(*v, coeff), 1.0);
            }
        }
        e
    }

    /// Concave minorant of `expr` in bits, tight at the expansion point:
    /// added logs stay exact, subtracted ones are replaced by tangents.
    fn lower(&mut self, p: &mut ConicProblem, expr: &RateExpr) -> Result<LinExpr> {
        let mut out = LinExpr::zero();
        for (sign, key, term) in &expr.terms {
            if *sign > 0.0 {
                let u = match self.logs.get(key) {
                    Some(u) => u.clone(),
                    None => {
                        let arg = self.chi(p, term).plus_constant(term.constant);
                        let u = p.log_of(format!("ln[{key}]"), arg);
                        self.logs.insert(key.clone(), u.clone());
                        u
                    }
                };
                out.add_scaled(&u, sign / LN_2);
            } else {
                let tan = linearize_upper(term, self.point)?;
                let lin = self.chi(p, term).scaled(tan.slope()).plus_constant(tan.offset());
                out.add_scaled(&lin, *sign);
            }
        }
        Ok(out)
    }
}

fn sum(exprs: impl IntoIterator<Item = LinExpr>) -> LinExpr {
    exprs.into_iter().fold(LinExpr::zero(), |a, b| a.plus(&b))
}

/// Equilibrated sensing constraint `logdet(D F D) ≥ bound + 2 Σ ln D_i`.
fn add_sensing(
    p: &mut ConicProblem,
    model: &NormalizedModel,
    vars: &BTreeMap<MatrixRole, MatVar>,
    point: &BeamformerSet,
    slack: Option<&LinExpr>,
) {
    let roles = model.sensing_roles();
    let r_point = roles
        .iter()
        .filter_map(|r| point.matrix(*r))
        .fold(CMat::zeros(model.n_tx, model.n_tx), |a, w| a + w);
    let d = model.fim.len();
    let probe_identity = CMat::identity(model.n_tx, model.n_tx).scale(model.p_max / model.n_tx as f64);
    let scale: Vec<f64> = (0..d)
        .map(|i| {
            let at_point = trace_product(&model.fim[i][i], &r_point);
            let fallback = trace_product(&model.fim[i][i], &probe_identity);
            let v = if at_point > 1e-12 * fallback { at_point } else { fallback };
            1.0 / v.sqrt()
        })
        .collect();
    let mut entries = vec![vec![LinExpr::zero(); d]; d];
    for i in 0..d {
        for j in i..d {
            let e = sum(roles
                .iter()
                .filter_map(|r| vars.get(r))
                .map(|v| p.trace(*v, &model.fim[i][j])))
            .scaled(scale[i] * scale[j]);
            entries[i][j] = e.clone();
            entries[j][i] = e;
        }
    }
    let map = SymAffine::from_fn(d, |i, j| entries[i][j].clone());
    let shift: f64 = scale.iter().map(|s| 2.0 * s.ln()).sum();
    let bound = LinExpr::constant(model.logdet_bound + shift);
    let bound = match slack {
        Some(s) => bound.minus(s),
        None => bound,
    };
    p.constrain_logdet_ge("crb", map, bound);
}

pub(crate) fn build(
    kind: ProblemKind,
    scheme: Scheme,
    model: &NormalizedModel,
    state: &SCAState,
    cfg: &AlgorithmConfig,
    mode: Mode,
    iteration: usize,
) -> Result<Subproblem> {
    debug_assert_eq!(scheme.has_common(), model.has_common);
    let mut p = ConicProblem::new();
    let n = model.n_tx;
    let k_users = model.n_users;
    let m_eaves = model.n_eaves;
    let point = &state.expansion_point;

    let mut vars = BTreeMap::new();
    for role in model.roles() {
        let v = p.hermitian_var(role.to_string(), n);
        p.constrain_psd(v);
        vars.insert(role, v);
    }
    let rsma = model.has_common;

    let slack = (mode == Mode::Phase1).then(|| {
        let s = p.scalar_var("slack");
        let se = p.scalar(s);
        p.constrain_ge("slack.floor", se, LinExpr::constant(PHASE1_FLOOR));
        s
    });
    let slack_expr = slack.map(|s| p.scalar(s));
    let relaxed = |e: LinExpr| match &slack_expr {
        Some(s) => e.plus(s),
        None => e,
    };

    let mut low = Lowering {
        vars: &vars,
        point,
        logs: HashMap::new(),
    };

    let power = sum(vars.values().map(|v| p.trace_identity(*v)));
    if kind != ProblemKind::P3 || mode != Mode::Main {
        p.constrain_le("power", power.clone(), LinExpr::constant(model.p_max));
    }

    // common-rate split: c_k (P1/P3) or secrecy parts c_sec_k (P2)
    let common_parts: Vec<ScalarVar> = if rsma {
        (0..k_users).map(|k| p.scalar_var(format!("c{k}"))).collect()
    } else {
        Vec::new()
    };
    for (k, c) in common_parts.iter().enumerate() {
        p.constrain_ge(format!("c{k}.nonneg"), p.scalar(*c), LinExpr::zero());
    }
    let c_sum = sum(common_parts.iter().map(|c| p.scalar(*c)));
    let c_of = |p: &ConicProblem, k: usize| -> LinExpr {
        common_parts.get(k).map_or(LinExpr::zero(), |c| p.scalar(*c))
    };

    let private: Vec<RateExpr> = (0..k_users).map(|k| model.private_rate(k)).collect();
    let common: Vec<RateExpr> = (0..k_users).map(|k| model.common_rate(k, false)).collect();

    let mut epigraph: Vec<LinExpr> = Vec::new();
    match kind {
        ProblemKind::P1 | ProblemKind::P3 => {
            if rsma {
                for (k, rc) in common.iter().enumerate() {
                    let lb = low.lower(&mut p, rc)?;
                    p.constrain_ge(format!("split.{k}"), relaxed(lb), c_sum.clone());
                }
            }
            if kind == ProblemKind::P1 {
                for k in 0..k_users {
                    for m in 0..m_eaves {
                        if rsma {
                            let margin = common[k].clone().sub(&model.common_rate(m, true));
                            let lb = low.lower(&mut p, &margin)?;
                            p.constrain_ge(
                                format!("common-secure.{k}.{m}"),
                                relaxed(lb),
                                LinExpr::constant(cfg.security_margin),
                            );
                        }
                        let sec = private[k].clone().sub(&model.eaves_private_rate(k, m));
                        let lb = low.lower(&mut p, &sec)?;
                        p.constrain_ge(
                            format!("secrecy.{k}.{m}"),
                            relaxed(lb),
                            LinExpr::constant(cfg.secrecy_threshold),
                        );
                    }
                }
            }
            for (k, rp) in private.iter().enumerate() {
                let total = c_of(&p, k).plus(&low.lower(&mut p, rp)?);
                p.constrain_ge(
                    format!("qos.{k}"),
                    relaxed(total.clone()),
                    LinExpr::constant(cfg.qos_threshold),
                );
                epigraph.push(total);
            }
        }
        ProblemKind::P2 => {
            if rsma {
                for (k, rc) in common.iter().enumerate() {
                    for m in 0..m_eaves {
                        let budget = rc.clone().sub(&model.common_rate(m, true));
                        let lb = low.lower(&mut p, &budget)?;
                        p.constrain_ge(format!("secure-split.{k}.{m}"), relaxed(lb), c_sum.clone());
                    }
                }
            }
            for k in 0..k_users {
                for m in 0..m_eaves {
                    let sec = private[k].clone().sub(&model.eaves_private_rate(k, m));
                    let lb = low.lower(&mut p, &sec)?;
                    p.constrain_ge(format!("private-secrecy.{k}.{m}"), relaxed(lb.clone()), LinExpr::zero());
                    let total = c_of(&p, k).plus(&lb);
                    p.constrain_ge(
                        format!("secrecy.{k}.{m}"),
                        relaxed(total.clone()),
                        LinExpr::constant(cfg.secrecy_threshold),
                    );
                    epigraph.push(total);
                }
            }
        }
    }

    add_sensing(&mut p, model, &vars, point, slack_expr.as_ref());

    match mode {
        Mode::Phase1 => {
            p.minimize(slack_expr.clone().expect("phase 1 has a slack"));
        }
        Mode::MinPower => p.minimize(power),
        Mode::Main => {
            // rho is the price of penalty power relative to the price of
            // transmit power: 1 in P3, the Dinkelbach factor in P1/P2
            let rho = match kind {
                ProblemKind::P3 => cfg.penalty_at(iteration),
                _ => cfg.penalty_at(iteration) * state.dinkelbach_factor,
            };
            let mut penalty = LinExpr::zero();
            for (role, v) in &vars {
                let u = state
                    .penalty_vectors
                    .get(role)
                    .cloned()
                    .unwrap_or_else(|| crate::sca::refresh_penalty_vector(&CMat::zeros(n, n)).0);
                let coeff = CMat::identity(n, n) - outer(&u.unscale(u.norm().max(1e-300)));
                penalty.add_scaled(&p.trace(*v, &coeff), 1.0);
            }
            match kind {
                ProblemKind::P3 => p.minimize(power.plus(&penalty.scaled(rho))),
                _ => {
                    let t = p.scalar_var("t");
                    let te = p.scalar(t);
                    let lambda = state.dinkelbach_factor;
                    for (i, f) in epigraph.into_iter().enumerate() {
                        p.constrain_ge(
                            format!("epigraph.{i}"),
                            f.minus(&power.clone().scaled(lambda)),
                            te.clone(),
                        );
                    }
                    p.maximize(te.minus(&penalty.scaled(rho)));
                }
            }
        }
    }

    Ok(Subproblem {
        problem: p,
        vars,
        common_parts,
        slack,
        n_tx: n,
        n_users: k_users,
    })
}
