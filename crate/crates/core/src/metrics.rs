//! Expected SINRs, achievable and eavesdropping rates, secrecy rates and
//! rate-to-power ratios for a set of transmit covariances.

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::geometry::ChannelStats;
use crate::linalg::{min_eigenvalue, real_trace, trace_product, CMat};

/// Transmit covariances `W_c`, `W_k`, `W_v` and the optional artificial-noise
/// covariance. A missing common stream (SDMA) or extra signal (Ben1) is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    pub w_common: Option<CMat>,
    pub w_private: Vec<CMat>,
    pub w_extra: Option<CMat>,
    pub w_an: Option<CMat>,
}

impl BeamformerSet {
    pub fn zeros(n_tx: usize, n_users: usize, common: bool, extra: bool) -> Self {
        let z = || CMat::zeros(n_tx, n_tx);
        Self {
            w_common: common.then(z),
            w_private: (0..n_users).map(|_| z()).collect(),
            w_extra: extra.then(z),
            w_an: None,
        }
    }

    pub fn n_users(&self) -> usize {
        self.w_private.len()
    }

    pub fn n_tx(&self) -> usize {
        self.w_private
            .first()
            .or(self.w_common.as_ref())
            .or(self.w_extra.as_ref())
            .map(|w| w.nrows())
            .unwrap_or(0)
    }

    /// Information-bearing and sensing matrices, in the order
    /// common, private 1..K, extra.
    pub fn matrices(&self) -> Vec<(MatrixRole, &CMat)> {
        let mut out = Vec::with_capacity(self.w_private.len() + 2);
        if let Some(w) = &self.w_common {
            out.push((MatrixRole::Common, w));
        }
        for (k, w) in self.w_private.iter().enumerate() {
            out.push((MatrixRole::Private(k), w));
        }
        if let Some(w) = &self.w_extra {
            out.push((MatrixRole::Extra, w));
        }
        out
    }

    pub fn matrix(&self, role: MatrixRole) -> Option<&CMat> {
        match role {
            MatrixRole::Common => self.w_common.as_ref(),
            MatrixRole::Private(k) => self.w_private.get(k),
            MatrixRole::Extra => self.w_extra.as_ref(),
        }
    }

    pub fn matrix_mut(&mut self, role: MatrixRole) -> Option<&mut CMat> {
        match role {
            MatrixRole::Common => self.w_common.as_mut(),
            MatrixRole::Private(k) => self.w_private.get_mut(k),
            MatrixRole::Extra => self.w_extra.as_mut(),
        }
    }

    /// `tr(W_c) + Σ tr(W_k) + tr(W_v)`; artificial noise is not counted.
    pub fn total_power(&self) -> f64 {
        self.matrices().iter().map(|(_, w)| real_trace(w)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w_common: self.w_common.as_ref().map(|w| w.scale(factor)),
            w_private: self.w_private.iter().map(|w| w.scale(factor)).collect(),
            w_extra: self.w_extra.as_ref().map(|w| w.scale(factor)),
            w_an: self.w_an.as_ref().map(|w| w.scale(factor)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_tx();
        for (role, w) in self.matrices() {
            if w.nrows() != n || w.ncols() != n {
                return Err(IsacError::Dimension(format!(
                    "{role} is {}x{}, expected {n}x{n}",
                    w.nrows(),
                    w.ncols()
                )));
            }
            let tr = real_trace(w).abs();
            if min_eigenvalue(w) < -1e-9 * tr.max(1e-300) {
                return Err(IsacError::InvalidInput(format!("{role} is not PSD")));
            }
        }
        Ok(())
    }

    fn interference_private(&self, h: &CMat, skip: Option<usize>) -> f64 {
        let mut acc = 0.0;
        for (i, w) in self.w_private.iter().enumerate() {
            if Some(i) != skip {
                acc += trace_product(h, w);
            }
        }
        acc
    }
}

/// Identifies one of the optimized covariance matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatrixRole {
    Common,
    Private(usize),
    Extra,
}

impl std::fmt::Display for MatrixRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatrixRole::Common => write!(f, "W_c"),
            MatrixRole::Private(k) => write!(f, "W_{}", k + 1),
            MatrixRole::Extra => write!(f, "W_v"),
        }
    }
}

/// Common-rate split `c_k` and, for the secrecy design, `c^sec_k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateAllocation {
    pub common_parts: Vec<f64>,
    pub secrecy_common_parts: Option<Vec<f64>>,
}

impl RateAllocation {
    pub fn zeros(n_users: usize) -> Self {
        Self {
            common_parts: vec![0.0; n_users],
            secrecy_common_parts: None,
        }
    }

    fn is_zero(&self) -> bool {
        self.common_parts.iter().all(|&c| c == 0.0)
            && self
                .secrecy_common_parts
                .as_ref()
                .is_none_or(|v| v.iter().all(|&c| c == 0.0))
    }
}

/// Users, eavesdroppers and receiver noise powers: everything the link
/// metrics need apart from the beamformers.
#[derive(Debug, Clone)]
pub struct LinkModel {
    pub users: Vec<ChannelStats>,
    pub eavesdroppers: Vec<ChannelStats>,
    pub user_noise: f64,
    pub eaves_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub common_rates: Vec<f64>,
    pub private_rates: Vec<f64>,
    pub total_rates: Vec<f64>,
    pub eaves_common_rates: Vec<f64>,
    /// indexed `[k][m]`
    pub eaves_private_rates: Vec<Vec<f64>>,
    pub secrecy_rates: Vec<f64>,
    pub total_power: f64,
    pub urpr: Vec<f64>,
    pub usrpr: Vec<f64>,
    pub degenerate_power: bool,
}

impl MetricsReport {
    pub fn min_total_rate(&self) -> f64 {
        self.total_rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_secrecy_rate(&self) -> f64 {
        self.secrecy_rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_urpr(&self) -> f64 {
        self.urpr.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_usrpr(&self) -> f64 {
        self.usrpr.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `min_k R_{c,k} − max_m R^E_{c,m}`.
    pub fn common_security_margin(&self) -> f64 {
        let eaves = self
            .eaves_common_rates
            .iter()
            .copied()
            .fold(0.0_f64, f64::max);
        common_rate_budget(&self.common_rates) - eaves
    }

    /// Whether no eavesdropper can decode the common stream, up to `tol`.
    pub fn common_stream_secure(&self, tol: f64) -> bool {
        self.common_security_margin() >= -tol
    }
}

fn check_noise(noise_power: f64) -> Result<()> {
    if noise_power.is_finite() && noise_power >= 0.0 {
        Ok(())
    } else {
        Err(IsacError::InvalidInput(format!(
            "noise power must be non-negative, got {noise_power}"
        )))
    }
}

fn check_dims(bf: &BeamformerSet, ch: &ChannelStats) -> Result<()> {
    if bf.n_tx() != ch.n_tx() {
        return Err(IsacError::Dimension(format!(
            "beamformers have {} antennas, channel has {}",
            bf.n_tx(),
            ch.n_tx()
        )));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        0.0
    } else {
        num / den
    }
}

fn opt_trace(h: &CMat, w: Option<&CMat>) -> f64 {
    w.map_or(0.0, |w| trace_product(h, w))
}

/// `tr(H W_c) / (tr(H ΣW_i) + tr(H W_v) + σ²)`
pub fn common_sinr(bf: &BeamformerSet, ch: &ChannelStats, noise_power: f64) -> Result<f64> {
    check_noise(noise_power)?;
    check_dims(bf, ch)?;
    let h = &ch.covariance;
    let num = opt_trace(h, bf.w_common.as_ref());
    let den = bf.interference_private(h, None) + opt_trace(h, bf.w_extra.as_ref()) + noise_power;
    Ok(ratio(num, den))
}

/// `tr(H_k W_k) / (Σ_{i≠k} tr(H_k W_i) + tr(H_k W_v) + σ²)` (common stream removed by SIC).
pub fn private_sinr(
    bf: &BeamformerSet,
    ch: &ChannelStats,
    user: usize,
    noise_power: f64,
) -> Result<f64> {
    check_noise(noise_power)?;
    check_dims(bf, ch)?;
    let h = &ch.covariance;
    let w_k = bf.w_private.get(user).ok_or(IsacError::IndexOutOfRange {
        index: user,
        len: bf.n_users(),
    })?;
    let num = trace_product(h, w_k);
    let den = bf.interference_private(h, Some(user)) + opt_trace(h, bf.w_extra.as_ref()) + noise_power;
    Ok(ratio(num, den))
}

/// Common-stream SINR at an eavesdropper; artificial noise, when present,
/// adds to the interference.
pub fn eaves_common_sinr(bf: &BeamformerSet, ch: &ChannelStats, noise_power: f64) -> Result<f64> {
    check_noise(noise_power)?;
    check_dims(bf, ch)?;
    let g = &ch.covariance;
    let num = opt_trace(g, bf.w_common.as_ref());
    let den = bf.interference_private(g, None)
        + opt_trace(g, bf.w_extra.as_ref())
        + opt_trace(g, bf.w_an.as_ref())
        + noise_power;
    Ok(ratio(num, den))
}

/// SINR of user `user`'s private stream at an eavesdropper, which cannot
/// cancel the common stream.
pub fn eaves_private_sinr(
    bf: &BeamformerSet,
    ch: &ChannelStats,
    user: usize,
    noise_power: f64,
) -> Result<f64> {
    check_noise(noise_power)?;
    check_dims(bf, ch)?;
    let g = &ch.covariance;
    let w_k = bf.w_private.get(user).ok_or(IsacError::IndexOutOfRange {
        index: user,
        len: bf.n_users(),
    })?;
    let num = trace_product(g, w_k);
    let den = opt_trace(g, bf.w_common.as_ref())
        + bf.interference_private(g, Some(user))
        + opt_trace(g, bf.w_extra.as_ref())
        + opt_trace(g, bf.w_an.as_ref())
        + noise_power;
    Ok(ratio(num, den))
}

pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// `R_c = min_k R_{c,k}`.
pub fn common_rate_budget(common_rates: &[f64]) -> f64 {
    common_rates.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Evaluates every rate, secrecy and ratio metric.
pub fn evaluate(bf: &BeamformerSet, alloc: &RateAllocation, link: &LinkModel) -> Result<MetricsReport> {
    let k_users = bf.n_users();
    if k_users != link.users.len() {
        return Err(IsacError::Dimension(format!(
            "{} private beamformers for {} users",
            k_users,
            link.users.len()
        )));
    }
    if alloc.common_parts.len() != k_users
        || alloc
            .secrecy_common_parts
            .as_ref()
            .is_some_and(|v| v.len() != k_users)
    {
        return Err(IsacError::Dimension("rate allocation does not match K".into()));
    }
    let mut common_rates = Vec::with_capacity(k_users);
    let mut private_rates = Vec::with_capacity(k_users);
    for (k, h) in link.users.iter().enumerate() {
        common_rates.push(rate(common_sinr(bf, h, link.user_noise)?));
        private_rates.push(rate(private_sinr(bf, h, k, link.user_noise)?));
    }
    let mut eaves_common_rates = Vec::with_capacity(link.eavesdroppers.len());
    for g in &link.eavesdroppers {
        eaves_common_rates.push(rate(eaves_common_sinr(bf, g, link.eaves_noise)?));
    }
    let mut eaves_private_rates = vec![Vec::with_capacity(link.eavesdroppers.len()); k_users];
    for (k, row) in eaves_private_rates.iter_mut().enumerate() {
        for g in &link.eavesdroppers {
            row.push(rate(eaves_private_sinr(bf, g, k, link.eaves_noise)?));
        }
    }
    let total_rates: Vec<f64> = (0..k_users)
        .map(|k| alloc.common_parts[k] + private_rates[k])
        .collect();
    let secrecy_rates: Vec<f64> = (0..k_users)
        .map(|k| {
            let leak = eaves_private_rates[k].iter().copied().fold(0.0_f64, f64::max);
            let common = alloc
                .secrecy_common_parts
                .as_ref()
                .map_or(0.0, |v| v[k]);
            common + (private_rates[k] - leak).max(0.0)
        })
        .collect();
    let total_power = bf.total_power();
    let degenerate_power = total_power <= 0.0;
    if degenerate_power && !alloc.is_zero() {
        return Err(IsacError::DegeneratePower(total_power));
    }
    let per_watt = |r: &f64| if degenerate_power { 0.0 } else { r / total_power };
    Ok(MetricsReport {
        urpr: total_rates.iter().map(per_watt).collect(),
        usrpr: secrecy_rates.iter().map(per_watt).collect(),
        common_rates,
        private_rates,
        total_rates,
        eaves_common_rates,
        eaves_private_rates,
        secrecy_rates,
        total_power,
        degenerate_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{channel_covariance, ArrayConfig, UserGeometry};
    use crate::linalg::{c, outer, CVec};

    fn geom(d: f64, deg: f64) -> UserGeometry {
        UserGeometry {
            distance: d,
            azimuth: deg.to_radians(),
            rician_factor: 100.0,
            pathloss_exponent: 2.2,
            ref_gain: 1e-3,
        }
    }

    fn link(n: usize) -> LinkModel {
        let array = ArrayConfig::half_wavelength(n, n).unwrap();
        LinkModel {
            users: [geom(60.0, -60.0), geom(80.0, -5.0)]
                .iter()
                .map(|g| channel_covariance(g, &array).unwrap())
                .collect(),
            eavesdroppers: vec![channel_covariance(&geom(70.0, -15.0), &array).unwrap()],
            user_noise: 1e-10,
            eaves_noise: 1e-10,
        }
    }

    fn beam(n: usize, seed: f64) -> CMat {
        let v = CVec::from_fn(n, |i, _| c((seed * (i as f64 + 1.0)).cos(), (seed * i as f64).sin()));
        outer(&v).scale(1e-3)
    }

    fn full_set(n: usize) -> BeamformerSet {
        BeamformerSet {
            w_common: Some(beam(n, 0.3)),
            w_private: vec![beam(n, 0.7), beam(n, 1.9)],
            w_extra: Some(beam(n, 2.5)),
            w_an: None,
        }
    }

    #[test]
    fn zero_common_gives_zero_sinr() {
        let l = link(4);
        let mut bf = full_set(4);
        bf.w_common = Some(CMat::zeros(4, 4));
        assert_eq!(common_sinr(&bf, &l.users[0], 1e-10).unwrap(), 0.0);
        assert_eq!(eaves_common_sinr(&bf, &l.eavesdroppers[0], 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn interference_free_common_sinr() {
        let l = link(4);
        let mut bf = BeamformerSet::zeros(4, 2, true, true);
        bf.w_common = Some(beam(4, 0.3));
        let expected = trace_product(&l.users[0].covariance, bf.w_common.as_ref().unwrap()) / 1e-10;
        let got = common_sinr(&bf, &l.users[0], 1e-10).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn single_user_private_sinr() {
        let l = link(4);
        let bf = BeamformerSet {
            w_common: None,
            w_private: vec![beam(4, 0.7)],
            w_extra: Some(CMat::zeros(4, 4)),
            w_an: None,
        };
        let expected = trace_product(&l.users[0].covariance, &bf.w_private[0]) / 1e-10;
        let got = private_sinr(&bf, &l.users[0], 0, 1e-10).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn noise_free_sinrs_are_scale_invariant() {
        let l = link(4);
        let bf = full_set(4);
        let big = bf.scaled(7.5);
        for k in 0..2 {
            let a = private_sinr(&bf, &l.users[k], k, 0.0).unwrap();
            let b = private_sinr(&big, &l.users[k], k, 0.0).unwrap();
            assert!((a - b).abs() <= 1e-12 * a);
        }
        assert!((big.total_power() - 7.5 * bf.total_power()).abs() < 1e-15);
    }

    #[test]
    fn index_out_of_range() {
        let l = link(4);
        let bf = full_set(4);
        assert!(matches!(
            private_sinr(&bf, &l.users[0], 5, 1e-10),
            Err(IsacError::IndexOutOfRange { .. })
        ));
        assert!(eaves_private_sinr(&bf, &l.eavesdroppers[0], 2, 1e-10).is_err());
    }

    #[test]
    fn negative_noise_rejected() {
        let l = link(4);
        assert!(common_sinr(&full_set(4), &l.users[0], -1.0).is_err());
    }

    #[test]
    fn eavesdropper_twin_of_user_has_same_common_sinr() {
        let l = link(4);
        let bf = full_set(4);
        let a = common_sinr(&bf, &l.users[1], 1e-10).unwrap();
        let b = eaves_common_sinr(&bf, &l.users[1], 1e-10).unwrap();
        assert!((a - b).abs() <= 1e-14 * a);
    }

    #[test]
    fn strong_common_stream_hurts_private_eavesdropping() {
        let l = link(4);
        let mut bf = full_set(4);
        bf.w_common = Some(CMat::zeros(4, 4));
        let quiet = eaves_private_sinr(&bf, &l.eavesdroppers[0], 0, 1e-10).unwrap();
        bf.w_common = Some(beam(4, 1.1).scale(100.0));
        let loud = eaves_private_sinr(&bf, &l.eavesdroppers[0], 0, 1e-10).unwrap();
        assert!(loud < quiet);
        bf.w_private[0] = CMat::zeros(4, 4);
        assert_eq!(eaves_private_sinr(&bf, &l.eavesdroppers[0], 0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn unit_sinr_gives_unit_rate() {
        assert!((rate(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_beamformers_flag_degenerate_power() {
        let l = link(4);
        let bf = BeamformerSet::zeros(4, 2, true, true);
        let rep = evaluate(&bf, &RateAllocation::zeros(2), &l).unwrap();
        assert!(rep.degenerate_power);
        assert_eq!(rep.total_power, 0.0);
        assert!(rep.total_rates.iter().all(|&r| r == 0.0));
        let alloc = RateAllocation {
            common_parts: vec![1.0, 0.0],
            secrecy_common_parts: None,
        };
        assert!(matches!(evaluate(&bf, &alloc, &l), Err(IsacError::DegeneratePower(_))));
    }

    #[test]
    fn urpr_identity_and_clamp() {
        let l = link(4);
        let bf = full_set(4);
        let alloc = RateAllocation {
            common_parts: vec![0.5, 0.25],
            secrecy_common_parts: Some(vec![0.1, 0.0]),
        };
        let rep = evaluate(&bf, &alloc, &l).unwrap();
        for k in 0..2 {
            assert!((rep.urpr[k] * rep.total_power - rep.total_rates[k]).abs() < 1e-12);
            assert!(rep.secrecy_rates[k] >= 0.0);
            let leak = rep.eaves_private_rates[k].iter().copied().fold(0.0, f64::max);
            let sc = alloc.secrecy_common_parts.as_ref().unwrap()[k];
            let unclamped = rep.private_rates[k] - leak;
            assert_eq!(rep.secrecy_rates[k], sc + unclamped.max(0.0));
        }
    }

    #[test]
    fn budget_is_minimum() {
        assert_eq!(common_rate_budget(&[2.0, 5.0]), 2.0);
        assert_eq!(common_rate_budget(&[3.5, 3.5, 3.5]), 3.5);
    }
}
