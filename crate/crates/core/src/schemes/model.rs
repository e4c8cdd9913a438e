//! Channel, rate and sensing data in the units used by the subproblems.
//!
//! Powers are expressed in a reference unit `u` (noise power over the
//! strongest user eigen-gain), so that `tr(H̃ W̃)` is an SNR and stays O(1)
//! near the operating point. Covariances are pre-divided by the receiver
//! noise, which turns every log argument into `tr(·) + 1`.

use crate::error::Result;
use crate::fim::{fim_coefficients, logdet_floor, SchemeSelector};
use crate::linalg::{max_eigenvalue, CMat};
use crate::metrics::{BeamformerSet, MatrixRole};
use crate::sca::TraceLogTerm;
use crate::scenario::Scenario;

use super::Scheme;

#[derive(Debug, Clone)]
pub struct NormalizedModel {
    pub n_tx: usize,
    pub n_users: usize,
    pub n_eaves: usize,
    /// watts per normalized power unit
    pub unit: f64,
    /// `H_k · u / σ_k²`
    pub users: Vec<CMat>,
    /// `G_m · u / σ_m²`
    pub eaves: Vec<CMat>,
    /// `C̃_ij` with `F_ij = tr(C̃_ij R̃)`
    pub fim: Vec<Vec<CMat>>,
    /// lower bound on `logdet F`
    pub logdet_bound: f64,
    pub p_max: f64,
    pub has_common: bool,
    pub has_extra: bool,
    pub selector: SchemeSelector,
}

impl NormalizedModel {
    pub fn new(scenario: &Scenario, scheme: Scheme) -> Result<Self> {
        let link = scenario.link_model()?;
        let strongest = link
            .users
            .iter()
            .map(|h| max_eigenvalue(&h.covariance))
            .fold(0.0, f64::max);
        let unit = link.user_noise / strongest;
        let users = link
            .users
            .iter()
            .map(|h| h.covariance.scale(unit / link.user_noise))
            .collect();
        let eaves = link
            .eavesdroppers
            .iter()
            .map(|g| g.covariance.scale(unit / link.eaves_noise))
            .collect();
        let fim = fim_coefficients(&scenario.sensing, &scenario.array)?
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.scale(unit)).collect())
            .collect();
        Ok(Self {
            n_tx: scenario.array.n_tx,
            n_users: scenario.n_users(),
            n_eaves: scenario.n_eavesdroppers(),
            unit,
            users,
            eaves,
            fim,
            logdet_bound: logdet_floor(scenario.algorithm.crb_threshold)?,
            p_max: scenario.algorithm.p_max / unit,
            has_common: scheme.has_common(),
            has_extra: scheme.has_extra(),
            selector: scheme.selector(),
        })
    }

    /// Roles of the optimization variables, in a fixed order.
    pub fn roles(&self) -> Vec<MatrixRole> {
        let mut r = Vec::new();
        if self.has_common {
            r.push(MatrixRole::Common);
        }
        r.extend((0..self.n_users).map(MatrixRole::Private));
        if self.has_extra {
            r.push(MatrixRole::Extra);
        }
        r
    }

    pub fn sensing_roles(&self) -> Vec<MatrixRole> {
        let mut r = Vec::new();
        if self.selector.alpha1 {
            r.push(MatrixRole::Common);
        }
        if self.selector.alpha2 {
            r.push(MatrixRole::Extra);
        }
        r
    }

    pub fn to_watts(&self, bf: &BeamformerSet) -> BeamformerSet {
        bf.scaled(self.unit)
    }

    pub fn from_watts(&self, bf: &BeamformerSet) -> BeamformerSet {
        bf.scaled(1.0 / self.unit)
    }

    fn term(&self, h: &CMat, include: impl Fn(MatrixRole) -> bool) -> TraceLogTerm {
        self.roles()
            .into_iter()
            .filter(|r| include(*r))
            .fold(TraceLogTerm::new(1.0), |t, r| t.with(r, h))
    }

    /// `R_{c,k}` at a user (`eaves = false`) or `R^E_{c,m}` at an eavesdropper.
    pub fn common_rate(&self, node: usize, eaves: bool) -> RateExpr {
        let h = if eaves { &self.eaves[node] } else { &self.users[node] };
        let tag = if eaves { format!("e{node}") } else { format!("u{node}") };
        RateExpr::default()
            .plus(format!("{tag}:all"), self.term(h, |_| true))
            .minus(
                format!("{tag}:nocommon"),
                self.term(h, |r| r != MatrixRole::Common),
            )
    }

    /// Private rate of stream `k` at user `k`.
    pub fn private_rate(&self, k: usize) -> RateExpr {
        let h = &self.users[k];
        let tag = format!("u{k}");
        RateExpr::default()
            .plus(
                format!("{tag}:nocommon"),
                self.term(h, |r| r != MatrixRole::Common),
            )
            .minus(
                format!("{tag}:nocommon-no{k}"),
                self.term(h, |r| r != MatrixRole::Common && r != MatrixRole::Private(k)),
            )
    }

    /// Rate of stream `k` leaked to eavesdropper `m`, which cannot remove
    /// the common stream.
    pub fn eaves_private_rate(&self, k: usize, m: usize) -> RateExpr {
        let g = &self.eaves[m];
        let tag = format!("e{m}");
        RateExpr::default()
            .plus(format!("{tag}:all"), self.term(g, |_| true))
            .minus(
                format!("{tag}:no{k}"),
                self.term(g, |r| r != MatrixRole::Private(k)),
            )
    }
}

/// `Σ ± log2(argument)` of trace terms; the key identifies a term so that
/// exact log variables can be shared between constraints.
#[derive(Debug, Clone, Default)]
pub struct RateExpr {
    pub terms: Vec<(f64, String, TraceLogTerm)>,
}

impl RateExpr {
    pub fn plus(mut self, key: String, term: TraceLogTerm) -> Self {
        self.terms.push((1.0, key, term));
        self
    }

    pub fn minus(mut self, key: String, term: TraceLogTerm) -> Self {
        self.terms.push((-1.0, key, term));
        self
    }

    pub fn sub(mut self, other: &RateExpr) -> Self {
        self.terms
            .extend(other.terms.iter().map(|(s, k, t)| (-s, k.clone(), t.clone())));
        self
    }

    pub fn add(mut self, other: &RateExpr) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn value(&self, bf: &BeamformerSet) -> f64 {
        self.terms
            .iter()
            .map(|(s, _, t)| s * t.log2_value(bf))
            .sum()
    }
}
