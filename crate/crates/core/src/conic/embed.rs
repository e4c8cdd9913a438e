//! Real coordinates of Hermitian matrices and the `[[Re, −Im], [Im, Re]]`
//! embedding used to hand complex PSD constraints to a real solver.
//!
//! A Hermitian `n×n` matrix is stored as `n²` reals: the diagonal, then
//! `Re W_pq` for `p < q` (row-major), then `Im W_pq` in the same order.

use num_complex::Complex64;

use crate::error::{IsacError, Result};
use crate::linalg::{hermitian_defect, max_abs, CMat, RMat};

pub fn n_coords(n: usize) -> usize {
    n * n
}

fn pair_index(n: usize, p: usize, q: usize) -> usize {
    debug_assert!(p < q && q < n);
    // pairs (0,1),(0,2),..,(0,n-1),(1,2),..
    p * (2 * n - p - 1) / 2 + (q - p - 1)
}

fn n_pairs(n: usize) -> usize {
    n * (n - 1) / 2
}

pub fn coord_diag(_n: usize, p: usize) -> usize {
    p
}

pub fn coord_re(n: usize, p: usize, q: usize) -> usize {
    n + pair_index(n, p, q)
}

pub fn coord_im(n: usize, p: usize, q: usize) -> usize {
    n + n_pairs(n) + pair_index(n, p, q)
}

/// Real coordinates of a Hermitian matrix (upper triangle is read).
pub fn to_coords(w: &CMat) -> Vec<f64> {
    let n = w.nrows();
    let mut x = vec![0.0; n_coords(n)];
    for p in 0..n {
        x[coord_diag(n, p)] = w[(p, p)].re;
        for q in p + 1..n {
            x[coord_re(n, p, q)] = w[(p, q)].re;
            x[coord_im(n, p, q)] = w[(p, q)].im;
        }
    }
    x
}

/// Inverse of [`to_coords`]; the result is exactly Hermitian.
pub fn from_coords(n: usize, x: &[f64]) -> CMat {
    let mut w = CMat::zeros(n, n);
    for p in 0..n {
        w[(p, p)] = Complex64::new(x[coord_diag(n, p)], 0.0);
        for q in p + 1..n {
            let z = Complex64::new(x[coord_re(n, p, q)], x[coord_im(n, p, q)]);
            w[(p, q)] = z;
            w[(q, p)] = z.conj();
        }
    }
    w
}

/// Coefficients `g` with `tr(C W) = g · coords(W)` for Hermitian `C`, `W`.
pub fn trace_coefficients(coeff: &CMat) -> Vec<f64> {
    let n = coeff.nrows();
    let mut g = vec![0.0; n_coords(n)];
    for p in 0..n {
        g[coord_diag(n, p)] = coeff[(p, p)].re;
        for q in p + 1..n {
            // tr(C W) picks up C_qp W_pq + C_pq W_qp = 2 Re(C_pq) Re(W_pq) + 2 Im(C_pq) Im(W_pq)
            let cpq = (coeff[(p, q)] + coeff[(q, p)].conj()) * 0.5;
            g[coord_re(n, p, q)] = 2.0 * cpq.re;
            g[coord_im(n, p, q)] = 2.0 * cpq.im;
        }
    }
    g
}

/// Entry `(i, j)` of the `2n×2n` embedding as `(coordinate, sign)`, or `None`
/// for a structural zero.
pub fn embedding_entry(n: usize, i: usize, j: usize) -> Option<(usize, f64)> {
    let (bi, ri) = (i / n, i % n);
    let (bj, rj) = (j / n, j % n);
    let real_part = |p: usize, q: usize| -> Option<(usize, f64)> {
        if p == q {
            Some((coord_diag(n, p), 1.0))
        } else {
            Some((coord_re(n, p.min(q), p.max(q)), 1.0))
        }
    };
    // Im W_pq = x_im(p,q) for p<q, −x_im(q,p) for p>q, 0 on the diagonal
    let imag_part = |p: usize, q: usize| -> Option<(usize, f64)> {
        match p.cmp(&q) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => Some((coord_im(n, p, q), 1.0)),
            std::cmp::Ordering::Greater => Some((coord_im(n, q, p), -1.0)),
        }
    };
    match (bi, bj) {
        (0, 0) | (1, 1) => real_part(ri, rj),
        (0, 1) => imag_part(ri, rj).map(|(c, s)| (c, -s)),
        (1, 0) => imag_part(ri, rj),
        _ => unreachable!("block index out of range"),
    }
}

/// `[[Re H, −Im H], [Im H, Re H]]`.
pub fn embed_complex(h: &CMat) -> Result<RMat> {
    if !h.is_square() {
        return Err(IsacError::Dimension("embedding needs a square matrix".into()));
    }
    if hermitian_defect(h) > 1e-9 * max_abs(h).max(1.0) {
        return Err(IsacError::InvalidInput(format!(
            "matrix is not Hermitian (defect {:.3e})",
            hermitian_defect(h)
        )));
    }
    let n = h.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(n + i, n + j)] = z.re;
            out[(i, n + j)] = -z.im;
            out[(n + i, j)] = z.im;
        }
    }
    Ok(out)
}

/// Inverse of [`embed_complex`], averaging the redundant blocks.
pub fn de_embed(m: &RMat) -> CMat {
    let n = m.nrows() / 2;
    let raw = CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (m[(i, j)] + m[(n + i, n + j)]);
        let im = 0.5 * (m[(n + i, j)] - m[(i, n + j)]);
        Complex64::new(re, im)
    });
    crate::linalg::hermitian_part(&raw)
}
