//! Small complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative tolerance for grouping eigenvalues as "equal" when picking a
/// leading eigenvector.
const EIG_TIE_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `v vᴴ`
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `Re tr(A B)`; exact trace of the product for Hermitian pairs.
pub fn trace_product(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.ncols(), b.nrows());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

pub fn real_trace(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Largest entrywise deviation of `a` from `aᴴ`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn is_hermitian(a: &CMat, rel_tol: f64) -> bool {
    a.is_square() && hermitian_defect(a) <= rel_tol * max_abs(a).max(1e-300)
}

/// `(A + Aᴴ)/2`
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigh(a).0[0]
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    *eigh(a).0.last().expect("non-empty matrix")
}

/// Rotates `v` so that its first entry with modulus above `1e-12·‖v‖` is
/// real and positive.
pub fn canonical_phase(v: &CVec) -> CVec {
    let scale = v.norm();
    match v.iter().find(|z| z.norm() > 1e-12 * scale.max(1e-300)) {
        Some(z) => {
            let rot = z.conj() / z.norm();
            v.map(|x| x * rot)
        }
        None => v.clone(),
    }
}

/// Leading eigen-pair with a deterministic choice inside a degenerate top
/// eigenspace: the unit vector of that space with the largest first
/// component (the normalized projection of `e_1`, falling back to `e_2`, ...),
/// phase-canonicalized.
pub fn leading_eigenpair(a: &CMat) -> (f64, CVec) {
    let n = a.nrows();
    let (vals, vecs) = eigh(a);
    let top = vals[n - 1];
    let spread = vals[n - 1].abs().max(vals[0].abs()).max(1e-300);
    let members: Vec<usize> = (0..n)
        .filter(|&i| (top - vals[i]).abs() <= EIG_TIE_TOL * spread)
        .collect();
    if members.len() == 1 {
        let v = vecs.column(n - 1).into_owned();
        return (top, canonical_phase(&v));
    }
    for axis in 0..n {
        let mut proj = CVec::zeros(n);
        for &i in &members {
            let col = vecs.column(i);
            proj += col.scale(1.0) * col[axis].conj();
        }
        let norm = proj.norm();
        if norm > 1e-8 {
            return (top, canonical_phase(&proj.unscale(norm)));
        }
    }
    let v = vecs.column(n - 1).into_owned();
    (top, canonical_phase(&v))
}

/// Real-symmetric log-determinant via Cholesky; `None` when not positive definite.
pub fn logdet_spd(a: &RMat) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(a.clone())?;
    Some(2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Condition number of a real symmetric matrix (ratio of extreme |eigenvalues|).
pub fn symmetric_condition(a: &RMat) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for v in eig.eigenvalues.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_eigvec_of_diagonal() {
        let mut a = zeros(2);
        a[(0, 0)] = c(3.0, 0.0);
        a[(1, 1)] = c(1.0, 0.0);
        let (val, v) = leading_eigenpair(&a);
        assert!((val - 3.0).abs() < 1e-12);
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(v[1].norm() < 1e-12);
    }

    #[test]
    fn tie_break_prefers_first_axis() {
        let a = identity(2).scale(2.0);
        let (_, v) = leading_eigenpair(&a);
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(v[1].norm() < 1e-12);
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = CMat::from_fn(3, 3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let b = CMat::from_fn(3, 3, |i, j| c((i * j) as f64, 1.0));
        let dense = (&a * &b).trace().re;
        assert!((trace_product(&a, &b) - dense).abs() < 1e-12);
    }

    #[test]
    fn canonical_phase_makes_first_entry_positive() {
        let v = CVec::from_vec(vec![c(0.0, 2.0), c(1.0, 1.0)]);
        let w = canonical_phase(&v);
        assert!(w[0].im.abs() < 1e-12 && w[0].re > 0.0);
        assert!((w.norm() - v.norm()).abs() < 1e-12);
    }
}
