//! Helpers shared by integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rsma_isac::fim::SensingGeometry;
use rsma_isac::geometry::{standard_complex_normal, steering_vector, ArrayConfig};
use rsma_isac::linalg::CMat;

pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| standard_complex_normal(rng));
    (&g * g.adjoint()).unscale(n as f64)
}

pub fn random_geometry(t: usize, rng: &mut ChaCha8Rng) -> SensingGeometry {
    // well-separated azimuths keep the FIM comfortably nonsingular
    let mut az: Vec<f64> = (0..t).map(|i| -1.0 + 2.0 * i as f64 / t as f64 + rng.random_range(0.0..0.5)).collect();
    az.sort_by(f64::total_cmp);
    SensingGeometry {
        target_azimuths: az,
        amplitudes: (0..t)
            .map(|_| Complex64::new(rng.random_range(0.3..1.5), rng.random_range(-1.0..1.0)))
            .collect(),
        snapshots: 16,
        noise_power: rng.random_range(0.5..2.0),
    }
}

/// Echo response `G(ζ) = Σ β_t a_r(θ_t) a_t(θ_t)ᴴ` for `ζ = [θ, Re β, Im β]`.
fn response(zeta: &[f64], t: usize, array: &ArrayConfig) -> CMat {
    let mut g = CMat::zeros(array.n_rx, array.n_tx);
    for s in 0..t {
        let beta = Complex64::new(zeta[t + s], zeta[2 * t + s]);
        let ar = steering_vector(zeta[s], array.n_rx, array.spacing_ratio).unwrap();
        let at = steering_vector(zeta[s], array.n_tx, array.spacing_ratio).unwrap();
        g += (ar * at.adjoint()) * beta;
    }
    g
}

/// KL divergence between the echo likelihoods at `zeta0` and `zeta`:
/// `L·tr(ΔGᴴ ΔG R)/σ²` for `Y = G X + Q`, `XXᴴ = L R`.
fn divergence(zeta0: &[f64], zeta: &[f64], t: usize, r: &CMat, geom: &SensingGeometry, array: &ArrayConfig) -> f64 {
    let d = response(zeta, t, array) - response(zeta0, t, array);
    let m = d.adjoint() * &d * r;
    geom.snapshots as f64 * m.trace().re / geom.noise_power
}

/// Fisher information as the Hessian of the divergence, by central
/// second differences.
pub fn oracle_fim(r: &CMat, geom: &SensingGeometry, array: &ArrayConfig) -> DMatrix<f64> {
    let t = geom.n_targets();
    let zeta0: Vec<f64> = geom
        .target_azimuths
        .iter()
        .copied()
        .chain(geom.amplitudes.iter().map(|b| b.re))
        .chain(geom.amplitudes.iter().map(|b| b.im))
        .collect();
    let h = 1e-4;
    let d = 3 * t;
    let kl = |di: &[(usize, f64)]| {
        let mut z = zeta0.clone();
        for &(i, s) in di {
            z[i] += s;
        }
        divergence(&zeta0, &z, t, r, geom, array)
    };
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            (kl(&[(i, h)]) - 2.0 * kl(&[]) + kl(&[(i, -h)])) / (h * h)
        } else {
            (kl(&[(i, h), (j, h)]) - kl(&[(i, h), (j, -h)]) - kl(&[(i, -h), (j, h)]) + kl(&[(i, -h), (j, -h)]))
                / (4.0 * h * h)
        }
    })
}
