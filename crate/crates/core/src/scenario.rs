//! A complete simulation setup: geometry, noise, sensing and solver settings.

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::fim::SensingGeometry;
use crate::geometry::{channel_covariance, ArrayConfig, UserGeometry};
use crate::metrics::LinkModel;
use crate::schemes::AlgorithmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub users: Vec<UserGeometry>,
    pub eavesdroppers: Vec<UserGeometry>,
    pub sensing: SensingGeometry,
    /// watts
    pub user_noise: f64,
    /// watts
    pub eaves_noise: f64,
    pub algorithm: AlgorithmConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_eavesdroppers(&self) -> usize {
        self.eavesdroppers.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.users.is_empty() {
            return Err(IsacError::InvalidInput("at least one user required".into()));
        }
        for (i, u) in self.users.iter().enumerate() {
            u.validate()
                .map_err(|e| IsacError::InvalidInput(format!("user {}: {e}", i + 1)))?;
        }
        for (i, e) in self.eavesdroppers.iter().enumerate() {
            e.validate()
                .map_err(|err| IsacError::InvalidInput(format!("eavesdropper {}: {err}", i + 1)))?;
        }
        self.sensing.validate()?;
        for (name, v) in [("user noise", self.user_noise), ("eavesdropper noise", self.eaves_noise)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(IsacError::InvalidInput(format!("{name} must be > 0, got {v}")));
            }
        }
        self.algorithm.validate()
    }

    pub fn link_model(&self) -> Result<LinkModel> {
        Ok(LinkModel {
            users: self
                .users
                .iter()
                .map(|g| channel_covariance(g, &self.array))
                .collect::<Result<_>>()?,
            eavesdroppers: self
                .eavesdroppers
                .iter()
                .map(|g| channel_covariance(g, &self.array))
                .collect::<Result<_>>()?,
            user_noise: self.user_noise,
            eaves_noise: self.eaves_noise,
        })
    }

    /// Copy with `N_t = N_r = n`.
    pub fn with_antennas(&self, n: usize) -> Self {
        let mut s = self.clone();
        s.array.n_tx = n;
        s.array.n_rx = n;
        s
    }
}

/// Watts from dBm.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Linear ratio from dB.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Default radar receiver noise power (watts) for the reference scenario;
/// see the scenario file for how it was chosen.
pub const REFERENCE_SENSING_NOISE_DBM: f64 = 40.0;

impl Scenario {
    /// The three-user, two-eavesdropper, two-target reference setup.
    pub fn reference() -> Self {
        let node = |d: f64, deg: f64| UserGeometry {
            distance: d,
            azimuth: deg.to_radians(),
            rician_factor: 100.0,
            pathloss_exponent: 2.2,
            ref_gain: db_to_linear(-30.0),
        };
        Self {
            array: ArrayConfig::half_wavelength(12, 12).expect("valid array"),
            users: vec![node(60.0, -60.0), node(80.0, -5.0), node(100.0, 50.0)],
            eavesdroppers: vec![node(70.0, -15.0), node(90.0, 40.0)],
            sensing: SensingGeometry {
                target_azimuths: vec![(-30f64).to_radians(), 30f64.to_radians()],
                amplitudes: vec![num_complex::Complex64::new(1.0, 0.0); 2],
                snapshots: 1024,
                noise_power: dbm_to_watts(REFERENCE_SENSING_NOISE_DBM),
            },
            user_noise: dbm_to_watts(-70.0),
            eaves_noise: dbm_to_watts(-70.0),
            algorithm: AlgorithmConfig {
                p_max: dbm_to_watts(30.0),
                qos_threshold: 3.0,
                secrecy_threshold: 1.0,
                crb_threshold: db_to_linear(-70.0),
                ..AlgorithmConfig::default()
            },
            seed: 1,
        }
    }
}
