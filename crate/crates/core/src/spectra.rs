//! Dense spectral computations on Hermitian matrices.

use serde::{Deserialize, Serialize};

use crate::linalg::{
    self, c, eigh_unchecked, eigenvalues_unchecked, hermiticity_defect, max_abs, shifted, CMat, CVec,
};
use crate::operators::BlockHamiltonian;
use crate::{Error, Result};

/// Open interval `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("interval needs finite a < b, got ({a}, {b})")));
        }
        Ok(Interval { a, b })
    }

    /// `(center − length/2, center + length/2)`.
    pub fn centered(center: f64, length: f64) -> Result<Self> {
        Self::new(center - 0.5 * length, center + 0.5 * length)
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: Option<CMat>,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Spectrum { eigenvalues, eigenvectors: None }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest absolute eigenvalue (the operator norm of the matrix).
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

fn check_hermitian(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid("matrix is not square"));
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-12 * max_abs(m) {
        return Err(Error::invalid(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    Ok(())
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn eig_hermitian(m: &CMat) -> Result<Spectrum> {
    check_hermitian(m)?;
    Ok(Spectrum { eigenvalues: eigenvalues_unchecked(m), eigenvectors: None })
}

/// Sorted eigenvalues and eigenvectors of a Hermitian matrix.
pub fn eigh_hermitian(m: &CMat) -> Result<Spectrum> {
    check_hermitian(m)?;
    let (vals, vecs) = eigh_unchecked(m);
    Ok(Spectrum { eigenvalues: vals, eigenvectors: Some(vecs) })
}

/// `#{i : a < λ_i < b}`.
pub fn count_in_interval(spec: &Spectrum, i: &Interval) -> usize {
    count_sorted(&spec.eigenvalues, i.a, i.b)
}

/// Open-interval count on a sorted slice.
pub fn count_sorted(sorted: &[f64], a: f64, b: f64) -> usize {
    let lo = sorted.partition_point(|&x| x <= a);
    let hi = sorted.partition_point(|&x| x < b);
    hi.saturating_sub(lo)
}

/// `P_x (H − λ)⁻¹ P_y*` by one dense solve against the columns of `P_y*`.
pub fn resolvent_block(h: &BlockHamiltonian, lambda: f64, x: usize, y: usize) -> Result<CMat> {
    h.check_block(x)?;
    h.check_block(y)?;
    let cols = resolvent_columns(h, lambda, y)?;
    let rx = h.block_range(x);
    Ok(cols.rows(rx.start, rx.len()).into_owned())
}

/// `(H − λ)⁻¹ P_y*`: all rows of the `y` block column.
pub fn resolvent_columns(h: &BlockHamiltonian, lambda: f64, y: usize) -> Result<CMat> {
    h.check_block(y)?;
    let ry = h.block_range(y);
    let mut rhs = CMat::zeros(h.dim(), ry.len());
    for (k, i) in ry.enumerate() {
        rhs[(i, k)] = c(1.0);
    }
    linalg::solve(&shifted(h.matrix(), c(lambda)), &rhs)
}

/// `(H − λ)⁻¹ P_y* v` for every block row at once.
pub fn resolvent_column(h: &BlockHamiltonian, lambda: f64, y: usize, v: &CVec) -> Result<CVec> {
    let u = crate::operators::embed_block_vector(h, y, v)?;
    let x = linalg::solve(&shifted(h.matrix(), c(lambda)), &CMat::from_column_slice(u.len(), 1, u.as_slice()))?;
    Ok(x.column(0).into_owned())
}

/// `‖(H − λ)⁻¹(x, y) v‖^s`.
pub fn fractional_moment_sample(
    h: &BlockHamiltonian,
    lambda: f64,
    x: usize,
    y: usize,
    v: &CVec,
    s: f64,
) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("fractional moment needs 0 < s < 1, got {s}")));
    }
    if (v.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("probe vector must be a unit vector"));
    }
    h.check_block(x)?;
    let col = resolvent_column(h, lambda, y, v)?;
    let rx = h.block_range(x);
    Ok(col.rows(rx.start, rx.len()).norm().powf(s))
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if linalg::is_real(m) {
        linalg::real_part(m).singular_values().max()
    } else {
        m.singular_values().max()
    }
}

/// Weak interlacing `λ_i(before) ≤ λ_i(after) ≤ λ_{i+1}(before)` with tolerance
/// `10⁻⁹ · max(‖before‖, ‖after‖, 1)`.
pub fn check_interlacing(before: &Spectrum, after: &Spectrum) -> Result<bool> {
    if before.len() != after.len() {
        return Err(Error::invalid(format!(
            "interlacing needs equal dimensions, got {} and {}",
            before.len(),
            after.len()
        )));
    }
    let tol = 1e-9 * before.spectral_radius().max(after.spectral_radius()).max(1.0);
    let (b, a) = (&before.eigenvalues, &after.eigenvalues);
    let n = b.len();
    Ok((0..n).all(|i| b[i] <= a[i] + tol && (i + 1 == n || a[i] <= b[i + 1] + tol)))
}

/// The compression of `m` to `u^⊥`, expressed in an orthonormal basis of the complement
/// (a Householder reflector mapping `u/‖u‖` to `e₁`, then dropping the first coordinate).
pub fn compress_to_complement(m: &CMat, u: &CVec) -> Result<CMat> {
    let n = m.nrows();
    let norm = u.norm();
    if u.len() != n || n == 0 || norm == 0.0 {
        return Err(Error::invalid("compression needs a nonzero vector of matching dimension"));
    }
    let q = householder_to_e1(&(u / c(norm)));
    let k = q.adjoint() * m * &q;
    Ok(linalg::hermitian_part(&k.view((1, 1), (n - 1, n - 1)).into_owned()))
}

/// Householder reflector `Q = I − 2ww*`, unitary and Hermitian, with `Q e₁ ∝ u` for a unit `u`.
fn householder_to_e1(u: &CVec) -> CMat {
    let n = u.len();
    let phase = if u[0].norm() > 0.0 { u[0] / u[0].norm() } else { c(1.0) };
    // w ∝ u + phase·e₁ avoids cancellation; then Q u = −phase·e₁
    let mut w = u.clone();
    w[0] += phase;
    let w = &w / c(w.norm());
    CMat::identity(n, n) - &w * w.adjoint() * c(2.0)
}
