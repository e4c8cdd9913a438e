//! Monte-Carlo check of the closed-form expectations `E{hᴴWh} = tr(HW)`
//! used by every SINR in the model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::geometry::{channel_covariance, sample_channel, standard_complex_normal, UserGeometry};
use crate::linalg::{outer, trace_product, CMat, CVec};
use crate::scenario::Scenario;

pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    /// `user1`, `eve2`, ...
    pub node: String,
    pub matrix_id: String,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub rows: Vec<ValidationRow>,
    pub max_deviation: f64,
    pub rms_deviation: f64,
}

/// Test matrices: two random rank-one covariances and one full-rank one.
fn test_matrices(n: usize, rng: &mut ChaCha8Rng) -> Vec<(String, CMat)> {
    let a = outer(&CVec::from_fn(n, |_, _| standard_complex_normal(rng)));
    let b = outer(&CVec::from_fn(n, |_, _| standard_complex_normal(rng)));
    let g = CMat::from_fn(n, n, |_, _| standard_complex_normal(rng));
    let full = (&g * g.adjoint()).unscale(n as f64);
    vec![("rank1_a".into(), a), ("rank1_b".into(), b), ("full".into(), full)]
}

/// Compares sample means of `hᴴWh` over `samples` Rician draws with the
/// trace formula for every user and eavesdropper.
pub fn validate_statistics(scenario: &Scenario, samples: usize) -> Result<ValidationReport> {
    if samples < MIN_SAMPLES {
        return Err(IsacError::InvalidInput(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    scenario.validate()?;
    let n = scenario.array.n_tx;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let matrices = test_matrices(n, &mut rng);
    let nodes: Vec<(String, &UserGeometry)> = scenario
        .users
        .iter()
        .enumerate()
        .map(|(k, g)| (format!("user{}", k + 1), g))
        .chain(scenario.eavesdroppers.iter().enumerate().map(|(m, g)| (format!("eve{}", m + 1), g)))
        .collect();

    let per_node = nodes
        .par_iter()
        .enumerate()
        .map(|(idx, (name, geom))| -> Result<Vec<ValidationRow>> {
            let stats = channel_covariance(geom, &scenario.array)?;
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(idx as u64 + 1);
            let mut sums = vec![0.0; matrices.len()];
            for _ in 0..samples {
                let h = sample_channel(geom, &scenario.array, &mut rng)?;
                for (s, (_, w)) in sums.iter_mut().zip(&matrices) {
                    *s += (h.adjoint() * w * &h)[(0, 0)].re;
                }
            }
            Ok(matrices
                .iter()
                .zip(sums)
                .map(|((id, w), sum)| {
                    let closed_form = trace_product(&stats.covariance, w);
                    let monte_carlo = sum / samples as f64;
                    ValidationRow {
                        node: name.clone(),
                        matrix_id: id.clone(),
                        closed_form,
                        monte_carlo,
                        relative_deviation: (monte_carlo - closed_form).abs() / closed_form.abs(),
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ValidationRow> = per_node.into_iter().flatten().collect();
    let max_deviation = rows.iter().map(|r| r.relative_deviation).fold(0.0, f64::max);
    let rms_deviation =
        (rows.iter().map(|r| r.relative_deviation.powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    Ok(ValidationReport {
        samples,
        rows,
        max_deviation,
        rms_deviation,
    })
}
