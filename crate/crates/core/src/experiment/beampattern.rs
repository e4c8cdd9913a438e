//! Transmit beampatterns `a(θ)ᴴ W a(θ)` of the designed covariances.

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::geometry::{steering_vector, ArrayConfig};
use crate::linalg::CMat;
use crate::metrics::BeamformerSet;

/// Gains below this are reported at the floor.
pub const GAIN_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeampatternRow {
    pub matrix_id: String,
    pub angle_deg: f64,
    pub gain_db: f64,
}

/// −90° to 90° in 0.5° steps, in radians.
pub fn default_grid() -> Vec<f64> {
    (0..=360).map(|i| (-90.0 + 0.5 * i as f64).to_radians()).collect()
}

/// Linear gain `a(θ)ᴴ W a(θ)`, clamped at zero.
pub fn gain(w: &CMat, azimuth: f64, array: &ArrayConfig) -> Result<f64> {
    let a = steering_vector(azimuth, array.n_tx, array.spacing_ratio)?;
    if w.nrows() != a.len() || w.ncols() != a.len() {
        return Err(IsacError::Dimension(format!(
            "{}x{} matrix for {} antennas",
            w.nrows(),
            w.ncols(),
            a.len()
        )));
    }
    Ok((a.adjoint() * w * &a)[(0, 0)].re.max(0.0))
}

pub fn to_db(linear: f64) -> f64 {
    if linear > 0.0 {
        (10.0 * linear.log10()).max(GAIN_FLOOR_DB)
    } else {
        GAIN_FLOOR_DB
    }
}

/// Gain of every matrix of `bf` (including `W_AN` when present) on `grid`.
pub fn beampattern(bf: &BeamformerSet, grid: &[f64], array: &ArrayConfig) -> Result<Vec<BeampatternRow>> {
    if grid.is_empty() {
        return Err(IsacError::InvalidInput("empty angle grid".into()));
    }
    let mut named: Vec<(String, &CMat)> = bf.matrices().into_iter().map(|(role, w)| (role.to_string(), w)).collect();
    if let Some(an) = &bf.w_an {
        named.push(("W_AN".into(), an));
    }
    let mut rows = Vec::with_capacity(named.len() * grid.len());
    for (id, w) in named {
        for &theta in grid {
            rows.push(BeampatternRow {
                matrix_id: id.clone(),
                angle_deg: theta.to_degrees(),
                gain_db: to_db(gain(w, theta, array)?),
            });
        }
    }
    Ok(rows)
}

/// Angles (degrees) of strict local maxima of one matrix's pattern.
pub fn local_maxima(rows: &[BeampatternRow], matrix_id: &str) -> Vec<f64> {
    let r: Vec<&BeampatternRow> = rows.iter().filter(|r| r.matrix_id == matrix_id).collect();
    r.windows(3)
        .filter(|w| w[1].gain_db > w[0].gain_db && w[1].gain_db > w[2].gain_db)
        .map(|w| w[1].angle_deg)
        .collect()
}
