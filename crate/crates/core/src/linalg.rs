//! Dense helpers shared by every module.
//!
//! All operators are stored as complex matrices. Real symmetric inputs (the
//! orthogonal symmetry class) carry exactly zero imaginary parts, and the
//! routines below detect that and dispatch to the real code paths.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Pivot-ratio threshold above which a factorization is declared singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn real_part(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn from_real(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    assert!(m.is_square());
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M*) / 2`, written so that the result is Hermitian bit-for-bit.
pub fn hermitian_part(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = c(m[(i, i)].re);
        for j in (i + 1)..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = z;
            out[(j, i)] = z.conj();
        }
    }
    out
}

pub fn submatrix(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn principal_submatrix(m: &CMat, idx: &[usize]) -> CMat {
    submatrix(m, idx, idx)
}

pub fn shifted(m: &CMat, shift: Complex64) -> CMat {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] -= shift;
    }
    out
}

fn pivot_condition<T: nalgebra::ComplexField<RealField = f64>>(u_diag: impl Iterator<Item = T>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for p in u_diag {
        let a = p.modulus();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if lo == 0.0 || !lo.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `m x = rhs` by LU with partial pivoting.
///
/// Fails with [`Error::Singular`] when the pivot ratio exceeds
/// [`SINGULAR_CONDITION`] or the solution is not finite.
pub fn solve(m: &CMat, rhs: &CMat) -> Result<CMat> {
    assert_eq!(m.nrows(), rhs.nrows());
    if m.nrows() == 0 {
        return Ok(rhs.clone());
    }
    let out = if is_real(m) && is_real(rhs) {
        let lu = real_part(m).lu();
        let cond = pivot_condition(lu.u().diagonal().iter().copied());
        if cond > SINGULAR_CONDITION {
            return Err(Error::Singular(format!("pivot ratio {cond:.3e}")));
        }
        let x = lu
            .solve(&real_part(rhs))
            .ok_or_else(|| Error::Singular("zero pivot".into()))?;
        from_real(&x)
    } else {
        let lu = m.clone().lu();
        let cond = pivot_condition(lu.u().diagonal().iter().copied());
        if cond > SINGULAR_CONDITION {
            return Err(Error::Singular(format!("pivot ratio {cond:.3e}")));
        }
        lu.solve(rhs)
            .ok_or_else(|| Error::Singular("zero pivot".into()))?
    };
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular("non-finite solution".into()));
    }
    Ok(out)
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    solve(m, &CMat::identity(m.nrows(), m.ncols()))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Sorted eigenvalues of a matrix assumed Hermitian (only the lower triangle is read).
pub fn eigenvalues_unchecked(m: &CMat) -> Vec<f64> {
    let mut vals: Vec<f64> = if m.nrows() == 0 {
        Vec::new()
    } else if is_real(m) {
        real_part(m).symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.symmetric_eigenvalues().iter().copied().collect()
    };
    vals.sort_by(f64::total_cmp);
    vals
}

/// Sorted eigenpairs of a matrix assumed Hermitian; eigenvectors are columns.
pub fn eigh_unchecked(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let (vals, vecs) = if is_real(m) {
        let e = SymmetricEigen::new(real_part(m));
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), from_real(&e.eigenvectors))
    } else {
        let e = SymmetricEigen::new(m.clone());
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| vecs[(r, order[k])]);
    (sorted, vectors)
}

/// Pairwise (tree) summation; the association order depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}
