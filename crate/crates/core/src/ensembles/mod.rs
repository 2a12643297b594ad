//! Gaussian samplers and band-matrix shape functions.
//!
//! Normalizations follow the Gaussian ensembles with densities proportional to
//! `exp{−(N/4) tr V²}` (orthogonal) and `exp{−(N/2) tr V²}` (unitary). Both are
//! drawn as `(X + X*)/√(2N)` with `X` a matrix of i.i.d. standard real or
//! complex Gaussians.

mod rng;
mod shape;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use rng::RngStream;
pub use shape::{eval_shape, susy_kernel_value, GreenQuadrature, Profile, ShapeFunction, SusyKernel};

use crate::linalg::{c, CMat, CVec};
use crate::operators::{BandModelSpec, BlockHamiltonian};
use crate::{Complex64, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryClass {
    Orthogonal,
    Unitary,
}

impl SymmetryClass {
    /// Dyson index: 1 for orthogonal, 2 for unitary.
    pub fn beta(self) -> u32 {
        match self {
            SymmetryClass::Orthogonal => 1,
            SymmetryClass::Unitary => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SymmetryClass::Orthogonal => "orthogonal",
            SymmetryClass::Unitary => "unitary",
        }
    }
}

impl std::str::FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orthogonal" => Ok(SymmetryClass::Orthogonal),
            "unitary" => Ok(SymmetryClass::Unitary),
            other => Err(Error::invalid(format!("unknown symmetry class {other:?}"))),
        }
    }
}

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// One Gaussian entry with `E|z|² = var`: real, or complex with independent parts of variance `var/2`.
pub(crate) fn gaussian_entry<R: Rng + ?Sized>(symmetry: SymmetryClass, var: f64, rng: &mut R) -> Complex64 {
    match symmetry {
        SymmetryClass::Orthogonal => c(var.sqrt() * normal(rng)),
        SymmetryClass::Unitary => {
            let s = (0.5 * var).sqrt();
            Complex64::new(s * normal(rng), s * normal(rng))
        }
    }
}

/// Matrix with i.i.d. entries of the given symmetry class and `E|X_ij|² = var`, row-major draw order.
pub fn sample_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    var: f64,
    symmetry: SymmetryClass,
    rng: &mut R,
) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian_entry(symmetry, var, rng);
        }
    }
    m
}

/// I.i.d. complex Gaussian entries with `E|X_ij|² = variance_per_entry`.
pub fn sample_complex_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance_per_entry: f64,
    rng: &mut R,
) -> Result<CMat> {
    if !(variance_per_entry > 0.0 && variance_per_entry.is_finite()) {
        return Err(Error::invalid(format!("variance per entry must be positive, got {variance_per_entry}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    Ok(sample_gaussian_matrix(rows, cols, variance_per_entry, SymmetryClass::Unitary, rng))
}

/// `(X + X*) · scale`, assembled so the result is Hermitian (real symmetric) bit-for-bit.
pub(crate) fn symmetrize(x: &CMat, scale: f64) -> CMat {
    let n = x.nrows();
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = c(2.0 * x[(i, i)].re * scale);
        for j in (i + 1)..n {
            let z = (x[(i, j)] + x[(j, i)].conj()) * scale;
            out[(i, j)] = z;
            out[(j, i)] = z.conj();
        }
    }
    out
}

/// A GOE or GUE matrix of size `n`.
pub fn sample_gaussian_ensemble<R: Rng + ?Sized>(n: usize, symmetry: SymmetryClass, rng: &mut R) -> Result<CMat> {
    if n == 0 {
        return Err(Error::invalid("ensemble size N must be >= 1"));
    }
    let x = sample_gaussian_matrix(n, n, 1.0, symmetry, rng);
    Ok(symmetrize(&x, 1.0 / (2.0 * n as f64).sqrt()))
}

pub fn sample_goe<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CMat> {
    sample_gaussian_ensemble(n, SymmetryClass::Orthogonal, rng)
}

pub fn sample_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CMat> {
    sample_gaussian_ensemble(n, SymmetryClass::Unitary, rng)
}

/// `H = (X + X*)/√2` on the box with `E|X(x, y)|² = ψ(x − y)`.
pub fn sample_band_matrix<R: Rng + ?Sized>(spec: &BandModelSpec, rng: &mut R) -> Result<BlockHamiltonian> {
    spec.validate()?;
    let lattice = spec.lattice;
    let sites = lattice.sites();
    let n = sites.len();
    // ψ depends only on the displacement; tabulate it once
    let mut psi = Vec::with_capacity(n * n);
    for x in &sites {
        for y in &sites {
            let r: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            psi.push(spec.shape.eval(&r));
        }
    }
    let mut x = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = psi[i * n + j];
            if v > 0.0 {
                x[(i, j)] = gaussian_entry(spec.symmetry, v, rng);
            }
        }
    }
    let h = symmetrize(&x, std::f64::consts::FRAC_1_SQRT_2);
    BlockHamiltonian::lattice(h, 1, spec.symmetry, sites)
}

/// A vector drawn uniformly from the real or complex unit sphere.
pub fn sample_unit_vector<R: Rng + ?Sized>(n: usize, symmetry: SymmetryClass, rng: &mut R) -> CVec {
    loop {
        let v = CVec::from_fn(n, |_, _| gaussian_entry(symmetry, 1.0, rng));
        let norm = v.norm();
        if norm > 1e-300 {
            return v / c(norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_defect, is_real};
    use crate::operators::LatticeBox;

    #[test]
    fn goe_one_by_one_variance() {
        let mut rng = RngStream::new(11, 0);
        let n = 100_000;
        let s: f64 = (0..n).map(|_| sample_goe(1, &mut rng).unwrap()[(0, 0)].re.powi(2)).sum();
        assert!((s / n as f64 - 2.0).abs() < 0.1);
    }

    #[test]
    fn gue_one_by_one_variance() {
        let mut rng = RngStream::new(12, 0);
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            let m = sample_gue(1, &mut rng).unwrap();
            assert_eq!(m[(0, 0)].im, 0.0);
            s += m[(0, 0)].re.powi(2);
        }
        assert!((s / n as f64 - 1.0).abs() < 0.05);
    }

    #[test]
    fn exact_symmetry() {
        let mut rng = RngStream::new(1, 1);
        for n in [1, 2, 7, 20] {
            let g = sample_goe(n, &mut rng).unwrap();
            assert!(is_real(&g));
            assert_eq!(g.transpose(), g);
            let u = sample_gue(n, &mut rng).unwrap();
            assert_eq!(hermiticity_defect(&u), 0.0);
        }
    }

    #[test]
    fn zero_size_rejected() {
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(sample_goe(0, &mut rng), Err(Error::InvalidArgument(_))));
        assert!(matches!(sample_gue(0, &mut rng), Err(Error::InvalidArgument(_))));
        assert!(sample_complex_gaussian_matrix(2, 2, 0.0, &mut rng).is_err());
        assert_eq!(sample_complex_gaussian_matrix(2, 3, 1.0, &mut rng).unwrap().shape(), (2, 3));
    }

    #[test]
    fn complex_gaussian_moments() {
        let mut rng = RngStream::new(5, 0);
        let n = 100_000;
        let m = sample_complex_gaussian_matrix(1, n, 1.0, &mut rng).unwrap();
        let abs2 = m.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((abs2 - 1.0).abs() < 0.03);
        // E X² = 0: each of Re and Im of X² has variance 1/2 per draw
        let sq: Complex64 = m.iter().map(|z| z * z).sum::<Complex64>() / n as f64;
        let sigma = (0.5 / n as f64).sqrt();
        assert!(sq.re.abs() < 3.0 * sigma && sq.im.abs() < 3.0 * sigma, "{sq}");
        let m = sample_complex_gaussian_matrix(1, n, 0.1, &mut rng).unwrap();
        let var_re = m.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        assert!((var_re - 0.05).abs() < 0.05 * 0.05);
    }

    #[test]
    fn band_diagonal_only_profile() {
        let lattice = LatticeBox::new(1, 3).unwrap();
        let delta = ShapeFunction::susy_kernel(0, 1).unwrap();
        let mut rng = RngStream::new(2, 0);
        let mut sums = [0.0, 0.0];
        let draws = 20_000;
        for (k, sym) in [SymmetryClass::Orthogonal, SymmetryClass::Unitary].into_iter().enumerate() {
            let spec = BandModelSpec::new(lattice, delta.clone(), sym).unwrap();
            for _ in 0..draws {
                let h = sample_band_matrix(&spec, &mut rng).unwrap();
                let m = h.matrix();
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        if i != j {
                            assert_eq!(m[(i, j)], Complex64::new(0.0, 0.0));
                        }
                    }
                }
                sums[k] += m[(0, 0)].re.powi(2);
            }
        }
        assert!((sums[0] / draws as f64 - 2.0).abs() < 0.1);
        assert!((sums[1] / draws as f64 - 1.0).abs() < 0.05);
    }

    #[test]
    fn band_sharp_cutoff_offdiagonal_variance() {
        let lattice = LatticeBox::new(1, 2).unwrap();
        let spec = BandModelSpec::new(lattice, ShapeFunction::sharp_cutoff(2).unwrap(), SymmetryClass::Unitary).unwrap();
        let mut rng = RngStream::new(3, 0);
        let draws = 100_000;
        let (mut s01, mut s02) = (0.0, 0.0);
        for _ in 0..draws {
            let h = sample_band_matrix(&spec, &mut rng).unwrap();
            assert_eq!(hermiticity_defect(h.matrix()), 0.0);
            // sites are ordered −2,−1,0,1,2: index 2 is site 0, index 3 is site 1
            s01 += h.matrix()[(2, 3)].norm_sqr();
            s02 += h.matrix()[(2, 4)].norm_sqr();
        }
        assert!((s01 / draws as f64 - 0.5).abs() < 0.025);
        assert_eq!(s02, 0.0);
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = RngStream::new(4, 0);
        for sym in [SymmetryClass::Orthogonal, SymmetryClass::Unitary] {
            let v = sample_unit_vector(9, sym, &mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-14);
            if sym == SymmetryClass::Orthogonal {
                assert!(v.iter().all(|z| z.im == 0.0));
            }
        }
    }

    #[test]
    fn symmetry_class_parse_roundtrip() {
        for s in [SymmetryClass::Orthogonal, SymmetryClass::Unitary] {
            assert_eq!(s.name().parse::<SymmetryClass>().unwrap(), s);
        }
        assert!("symplectic".parse::<SymmetryClass>().is_err());
    }
}
