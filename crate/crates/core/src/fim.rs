//! Sensing covariance, Fisher information of the target echo model and the
//! CRB-determinant constraint.
//!
//! Parameters are ordered `[θ_1..θ_T, Re β_1..Re β_T, Im β_1..Im β_T]`. The
//! echo is `Y = A_r B A_tᴴ X + Q`, so every transmit-side factor enters as
//! `T(X, Y)_{st} = x_tᴴ R y_s`, i.e. `(Xᴴ R Y)ᵀ`. Written with conjugated
//! steering vectors this is the familiar `Xᴴ R* Y` form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::geometry::{steering_derivative, steering_vector, ArrayConfig};
use crate::linalg::{is_hermitian, logdet_spd, symmetric_condition, CMat, RMat};
use crate::metrics::BeamformerSet;

/// Condition number above which the CRB is reported as unusable.
pub const MAX_FIM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingGeometry {
    /// radians
    pub target_azimuths: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub snapshots: usize,
    pub noise_power: f64,
}

impl SensingGeometry {
    pub fn n_targets(&self) -> usize {
        self.target_azimuths.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_azimuths.is_empty() {
            return Err(IsacError::InvalidInput("at least one target required".into()));
        }
        if self.amplitudes.len() != self.target_azimuths.len() {
            return Err(IsacError::InvalidInput(format!(
                "{} amplitudes for {} targets",
                self.amplitudes.len(),
                self.target_azimuths.len()
            )));
        }
        if self.snapshots == 0 {
            return Err(IsacError::InvalidInput("snapshots must be >= 1".into()));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(IsacError::InvalidInput("sensing noise power must be > 0".into()));
        }
        if self.target_azimuths.iter().any(|a| !a.is_finite())
            || self.amplitudes.iter().any(|b| !(b.re.is_finite() && b.im.is_finite()))
        {
            return Err(IsacError::InvalidInput("non-finite target parameter".into()));
        }
        Ok(())
    }
}

/// Which transmitted streams illuminate the targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSelector {
    pub alpha1: bool,
    pub alpha2: bool,
    pub extra_signal_present: bool,
    pub rsma: bool,
}

impl SchemeSelector {
    /// Extra signal senses.
    pub const SCHEME1: Self = Self {
        alpha1: false,
        alpha2: true,
        extra_signal_present: true,
        rsma: true,
    };
    /// Common stream senses; extra signal acts as noise.
    pub const SCHEME2: Self = Self {
        alpha1: true,
        alpha2: false,
        extra_signal_present: true,
        rsma: true,
    };
    /// Both sense.
    pub const SCHEME3: Self = Self {
        alpha1: true,
        alpha2: true,
        extra_signal_present: true,
        rsma: true,
    };
    /// No extra signal; common stream senses.
    pub const BEN1: Self = Self {
        alpha1: true,
        alpha2: false,
        extra_signal_present: false,
        rsma: true,
    };
    /// No common stream; extra signal senses.
    pub const SDMA: Self = Self {
        alpha1: false,
        alpha2: true,
        extra_signal_present: true,
        rsma: false,
    };

    pub fn validate(&self) -> Result<()> {
        if !self.alpha1 && !self.alpha2 {
            return Err(IsacError::InvalidInput("no stream selected for sensing".into()));
        }
        if self.alpha1 && !self.rsma {
            return Err(IsacError::InvalidInput(
                "SDMA has no common stream to sense with".into(),
            ));
        }
        if self.alpha2 && !self.extra_signal_present {
            return Err(IsacError::InvalidInput("sensing with an absent extra signal".into()));
        }
        Ok(())
    }
}

/// `R = α₁ W_c + α₂ W_v`.
pub fn sensing_covariance(bf: &BeamformerSet, sel: &SchemeSelector) -> Result<CMat> {
    sel.validate()?;
    let n = bf.n_tx();
    let mut r = CMat::zeros(n, n);
    if sel.alpha1 {
        r += bf
            .w_common
            .as_ref()
            .ok_or_else(|| IsacError::InvalidInput("selector needs W_c".into()))?;
    }
    if sel.alpha2 {
        r += bf
            .w_extra
            .as_ref()
            .ok_or_else(|| IsacError::InvalidInput("selector needs W_v".into()))?;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherInformation {
    pub block_f11: CMat,
    pub block_f12: CMat,
    pub block_f22: CMat,
    pub full: RMat,
}

impl FisherInformation {
    pub fn n_targets(&self) -> usize {
        self.block_f22.nrows()
    }

    pub fn logdet(&self) -> Option<f64> {
        logdet_spd(&self.full)
    }
}

/// Steering matrices for all targets.
pub(crate) struct TargetResponses {
    a_r: CMat,
    da_r: CMat,
    a_t: CMat,
    da_t: CMat,
}

impl TargetResponses {
    pub(crate) fn new(azimuths: &[f64], array: &ArrayConfig) -> Result<Self> {
        let cols = |n: usize, deriv: bool| -> Result<CMat> {
            let mut m = CMat::zeros(n, azimuths.len());
            for (t, &az) in azimuths.iter().enumerate() {
                let v = if deriv {
                    steering_derivative(az, n, array.spacing_ratio)?
                } else {
                    steering_vector(az, n, array.spacing_ratio)?
                };
                m.set_column(t, &v);
            }
            Ok(m)
        };
        Ok(Self {
            a_r: cols(array.n_rx, false)?,
            da_r: cols(array.n_rx, true)?,
            a_t: cols(array.n_tx, false)?,
            da_t: cols(array.n_tx, true)?,
        })
    }
}

/// `T(X, Y)_{st} = x_tᴴ R y_s`
fn tx_corr(x: &CMat, r: &CMat, y: &CMat) -> CMat {
    (x.adjoint() * r * y).transpose()
}

pub(crate) fn fim_unchecked(
    r: &CMat,
    geom: &SensingGeometry,
    resp: &TargetResponses,
) -> FisherInformation {
    let t = geom.n_targets();
    let snaps = geom.snapshots as f64;
    let beta = &geom.amplitudes;
    let TargetResponses { a_r, da_r, a_t, da_t } = resp;

    let g_dd = da_r.adjoint() * da_r;
    let g_d0 = da_r.adjoint() * a_r;
    let g_0d = a_r.adjoint() * da_r;
    let g_00 = a_r.adjoint() * a_r;

    let t_00 = tx_corr(a_t, r, a_t);
    let t_0d = tx_corr(a_t, r, da_t);
    let t_d0 = tx_corr(da_t, r, a_t);
    let t_dd = tx_corr(da_t, r, da_t);

    let f11 = CMat::from_fn(t, t, |s, u| {
        let w = beta[s].conj() * beta[u];
        let acc = g_dd[(s, u)] * t_00[(s, u)]
            + g_0d[(s, u)] * t_0d[(s, u)]
            + g_d0[(s, u)] * t_d0[(s, u)]
            + g_00[(s, u)] * t_dd[(s, u)];
        acc * w * snaps
    });
    let f12 = CMat::from_fn(t, t, |s, u| {
        let acc = g_d0[(s, u)] * t_00[(s, u)] + g_00[(s, u)] * t_0d[(s, u)];
        acc * beta[s].conj() * snaps
    });
    let f22 = CMat::from_fn(t, t, |s, u| g_00[(s, u)] * t_00[(s, u)] * snaps);

    let scale = 2.0 / geom.noise_power;
    let mut full = RMat::zeros(3 * t, 3 * t);
    for s in 0..t {
        for u in 0..t {
            full[(s, u)] = f11[(s, u)].re;
            full[(s, t + u)] = f12[(s, u)].re;
            full[(s, 2 * t + u)] = -f12[(s, u)].im;
            full[(t + s, u)] = f12[(u, s)].re;
            full[(t + s, t + u)] = f22[(s, u)].re;
            full[(t + s, 2 * t + u)] = -f22[(s, u)].im;
            full[(2 * t + s, u)] = -f12[(u, s)].im;
            full[(2 * t + s, t + u)] = -f22[(u, s)].im;
            full[(2 * t + s, 2 * t + u)] = f22[(s, u)].re;
        }
    }
    full *= scale;
    FisherInformation {
        block_f11: f11,
        block_f12: f12,
        block_f22: f22,
        full,
    }
}

/// Fisher information of `[θ, Re β, Im β]` for transmit covariance `r`.
pub fn fisher_information(
    r: &CMat,
    geom: &SensingGeometry,
    array: &ArrayConfig,
) -> Result<FisherInformation> {
    geom.validate()?;
    array.validate()?;
    if r.nrows() != array.n_tx || r.ncols() != array.n_tx {
        return Err(IsacError::Dimension(format!(
            "sensing covariance is {}x{}, array has {} transmit elements",
            r.nrows(),
            r.ncols(),
            array.n_tx
        )));
    }
    if !is_hermitian(r, 1e-9) {
        return Err(IsacError::InvalidInput(
            "sensing covariance is not Hermitian".into(),
        ));
    }
    let resp = TargetResponses::new(&geom.target_azimuths, array)?;
    Ok(fim_unchecked(r, geom, &resp))
}

/// `det(F⁻¹)`.
pub fn crb_determinant(fim: &FisherInformation) -> Result<f64> {
    Ok((-crb_log_inverse(fim)?).exp())
}

/// `logdet F`, refusing ill-conditioned matrices.
pub fn crb_log_inverse(fim: &FisherInformation) -> Result<f64> {
    let cond = symmetric_condition(&fim.full);
    if !(cond <= MAX_FIM_CONDITION) {
        return Err(IsacError::IllConditioned(cond));
    }
    fim.logdet().ok_or(IsacError::IllConditioned(f64::INFINITY))
}

/// `|CRB| ≤ ϑ  ⇔  logdet F ≥ −ln ϑ`.
pub fn logdet_floor(threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(IsacError::InvalidInput(format!(
            "CRB threshold must be positive and finite, got {threshold}"
        )));
    }
    Ok(-threshold.ln())
}

/// Real-linear map `R ↦ F(R)` expressed as one Hermitian coefficient per FIM
/// entry, so that `F_ij = tr(C_ij R)` for every Hermitian `R`.
pub fn fim_coefficients(geom: &SensingGeometry, array: &ArrayConfig) -> Result<Vec<Vec<CMat>>> {
    geom.validate()?;
    array.validate()?;
    let resp = TargetResponses::new(&geom.target_azimuths, array)?;
    let n = array.n_tx;
    let d = 3 * geom.n_targets();
    let mut coeffs = vec![vec![CMat::zeros(n, n); d]; d];
    for p in 0..n {
        for q in p..n {
            let mut sym = CMat::zeros(n, n);
            sym[(p, q)] = Complex64::new(1.0, 0.0);
            sym[(q, p)] = Complex64::new(1.0, 0.0);
            let f_sym = fim_unchecked(&sym, geom, &resp).full;
            if p == q {
                for i in 0..d {
                    for j in 0..d {
                        coeffs[i][j][(p, p)] = Complex64::new(f_sym[(i, j)], 0.0);
                    }
                }
                continue;
            }
            let mut asym = CMat::zeros(n, n);
            asym[(p, q)] = Complex64::new(0.0, 1.0);
            asym[(q, p)] = Complex64::new(0.0, -1.0);
            let f_asym = fim_unchecked(&asym, geom, &resp).full;
            for i in 0..d {
                for j in 0..d {
                    // tr(C·sym) = 2 Re C_pq and tr(C·asym) = 2 Im C_pq for Hermitian C
                    let cpq = Complex64::new(f_sym[(i, j)] / 2.0, f_asym[(i, j)] / 2.0);
                    coeffs[i][j][(p, q)] = cpq;
                    coeffs[i][j][(q, p)] = cpq.conj();
                }
            }
        }
    }
    Ok(coeffs)
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let scale = m.amax();
    (m - m.transpose()).amax() <= rel_tol * scale.max(1e-300)
}
