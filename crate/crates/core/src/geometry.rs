//! Uniform linear array responses and Rician channel statistics.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::linalg::{c, outer, CMat, CVec, J};

pub const DEFAULT_SPACING_RATIO: f64 = 0.5;

/// Transmit/receive array sizes and element spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub spacing_ratio: f64,
}

impl ArrayConfig {
    pub fn new(n_tx: usize, n_rx: usize, spacing_ratio: f64) -> Result<Self> {
        let cfg = Self {
            n_tx,
            n_rx,
            spacing_ratio,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn half_wavelength(n_tx: usize, n_rx: usize) -> Result<Self> {
        Self::new(n_tx, n_rx, DEFAULT_SPACING_RATIO)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(IsacError::InvalidInput(
                "array needs at least one transmit and one receive element".into(),
            ));
        }
        if !(self.spacing_ratio.is_finite() && self.spacing_ratio > 0.0) {
            return Err(IsacError::InvalidInput(format!(
                "element spacing ratio must be positive, got {}",
                self.spacing_ratio
            )));
        }
        Ok(())
    }
}

/// Position and large-scale propagation of a single-antenna node
/// (legitimate user or eavesdropper).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserGeometry {
    /// meters
    pub distance: f64,
    /// radians
    pub azimuth: f64,
    pub rician_factor: f64,
    pub pathloss_exponent: f64,
    /// linear channel gain at 1 m
    pub ref_gain: f64,
}

impl UserGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(IsacError::InvalidInput(format!("{what} out of range: {v}")))
        };
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return bad("distance", self.distance);
        }
        if !self.azimuth.is_finite() {
            return bad("azimuth", self.azimuth);
        }
        if !(self.rician_factor >= 0.0) {
            return bad("rician factor", self.rician_factor);
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent > 0.0) {
            return bad("path-loss exponent", self.pathloss_exponent);
        }
        if !(self.ref_gain.is_finite() && self.ref_gain > 0.0) {
            return bad("reference gain", self.ref_gain);
        }
        Ok(())
    }

    /// Large-scale gain `β₀ / d^α`.
    pub fn large_scale_gain(&self) -> f64 {
        self.ref_gain / self.distance.powf(self.pathloss_exponent)
    }
}

/// Second-order statistics `E{h hᴴ} = a⁰ āāᴴ + a¹ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub covariance: CMat,
    pub los_coeff: f64,
    pub nlos_coeff: f64,
    pub los_vector: CVec,
}

impl ChannelStats {
    pub fn n_tx(&self) -> usize {
        self.los_vector.len()
    }

    /// Same channel with the covariance divided by `noise_power`.
    pub fn normalized(&self, noise_power: f64) -> Self {
        Self {
            covariance: self.covariance.unscale(noise_power),
            los_coeff: self.los_coeff / noise_power,
            nlos_coeff: self.nlos_coeff / noise_power,
            los_vector: self.los_vector.clone(),
        }
    }
}

fn check_angle(azimuth: f64) -> Result<()> {
    if azimuth.is_finite() {
        Ok(())
    } else {
        Err(IsacError::InvalidInput(format!("azimuth must be finite, got {azimuth}")))
    }
}

/// `a(θ)_n = exp(j 2π (d/λ) n sin θ)`, `n = 0..n_elems`.
pub fn steering_vector(azimuth: f64, n_elems: usize, spacing_ratio: f64) -> Result<CVec> {
    check_angle(azimuth)?;
    let phase = 2.0 * PI * spacing_ratio * azimuth.sin();
    Ok(CVec::from_fn(n_elems, |n, _| {
        let p = phase * n as f64;
        c(p.cos(), p.sin())
    }))
}

/// `∂a(θ)/∂θ`.
pub fn steering_derivative(azimuth: f64, n_elems: usize, spacing_ratio: f64) -> Result<CVec> {
    let a = steering_vector(azimuth, n_elems, spacing_ratio)?;
    let k = 2.0 * PI * spacing_ratio * azimuth.cos();
    Ok(CVec::from_fn(n_elems, |n, _| J * (k * n as f64) * a[n]))
}

pub fn channel_covariance(geom: &UserGeometry, array: &ArrayConfig) -> Result<ChannelStats> {
    geom.validate()?;
    array.validate()?;
    let gain = geom.large_scale_gain();
    let rho = geom.rician_factor;
    let (los_coeff, nlos_coeff) = if rho.is_infinite() {
        (gain, 0.0)
    } else {
        (gain * rho / (1.0 + rho), gain / (1.0 + rho))
    };
    let los_vector = steering_vector(geom.azimuth, array.n_tx, array.spacing_ratio)?;
    let mut covariance = outer(&los_vector).scale(los_coeff);
    for i in 0..array.n_tx {
        covariance[(i, i)] += c(nlos_coeff, 0.0);
    }
    Ok(ChannelStats {
        covariance,
        los_coeff,
        nlos_coeff,
        los_vector,
    })
}

/// One `CN(0, 1)` draw: real and imaginary parts each `N(0, 1/2)`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
}

/// Draws one Rician channel realization.
pub fn sample_channel<R: Rng + ?Sized>(
    geom: &UserGeometry,
    array: &ArrayConfig,
    rng: &mut R,
) -> Result<CVec> {
    geom.validate()?;
    array.validate()?;
    let rho = geom.rician_factor;
    let (w_los, w_nlos) = if rho.is_infinite() {
        (1.0, 0.0)
    } else {
        ((rho / (1.0 + rho)).sqrt(), (1.0 / (1.0 + rho)).sqrt())
    };
    let los = steering_vector(geom.azimuth, array.n_tx, array.spacing_ratio)?;
    let scale = geom.large_scale_gain().sqrt();
    Ok(CVec::from_fn(array.n_tx, |n, _| {
        let nlos = standard_complex_normal(rng);
        (los[n] * w_los + nlos * w_nlos) * scale
    }))
}
