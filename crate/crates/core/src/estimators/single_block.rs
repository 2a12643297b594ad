use rand::Rng;
use serde::Serialize;

use super::stats::MCEstimate;
use super::{check_samples, map_realizations, map_realizations_redraw};
use crate::ensembles::{gaussian_entry, sample_gaussian_ensemble, sample_unit_vector, SymmetryClass};
use crate::linalg::{c, hermiticity_defect, is_real, max_abs, solve, CMat};
use crate::spectra::operator_norm;
use crate::{Error, Result};

/// A fixed deformation for `k` blocks: `within·(B + B*)/√2` inside each diagonal block and
/// `coupling·(M + M*)/√2` between blocks, with unit-variance Gaussian `B`, `M`.
pub fn random_deformation<R: Rng + ?Sized>(
    block_sizes: &[usize],
    within: f64,
    coupling: f64,
    symmetry: SymmetryClass,
    rng: &mut R,
) -> Result<CMat> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::invalid("block sizes must be positive"));
    }
    let n: usize = block_sizes.iter().sum();
    let mut owner = Vec::with_capacity(n);
    for (j, &m) in block_sizes.iter().enumerate() {
        owner.extend(std::iter::repeat_n(j, m));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMat::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = c(2.0 * scale * within * gaussian_entry(SymmetryClass::Orthogonal, 1.0, rng).re);
        for k in (i + 1)..n {
            let w = if owner[i] == owner[k] { within } else { coupling };
            let z = (gaussian_entry(symmetry, 1.0, rng) + gaussian_entry(symmetry, 1.0, rng).conj()) * (scale * w);
            h[(i, k)] = z;
            h[(k, i)] = z.conj();
        }
    }
    Ok(h)
}

fn check_hermitian(a: &CMat, symmetry: SymmetryClass) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::invalid("A must be a non-empty square matrix"));
    }
    if hermiticity_defect(a) > 1e-12 * max_abs(a).max(1.0) {
        return Err(Error::invalid("A must be Hermitian"));
    }
    if symmetry == SymmetryClass::Orthogonal && !is_real(a) {
        return Err(Error::invalid("A must be real symmetric in the orthogonal class"));
    }
    Ok(())
}

/// Binomial standard error `√(p(1−p)/n)`.
fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailPoint {
    pub t: f64,
    pub prob: f64,
    pub stderr: f64,
    pub t_times_p: f64,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailResult {
    pub n_dim: usize,
    pub points: Vec<TailPoint>,
    pub s: f64,
    /// `E‖(A + V)⁻¹ e₁‖^s`.
    pub fractional_moment: MCEstimate,
    /// `N^{s/2}/(1 − s)`.
    pub shape: f64,
    /// `fractional_moment / shape`, the fitted constant.
    pub constant: f64,
    /// `max t·P̂ / min t·P̂` over grid points with a positive estimate.
    pub spread: Option<f64>,
    pub redraws: u64,
}

/// Tails `P{‖(A + V)⁻¹ e₁‖ ≥ t√N}` with `V` drawn from the Gaussian ensemble of `A`'s size.
pub fn run_single_block_tail(
    a: &CMat,
    symmetry: SymmetryClass,
    t_grid: &[f64],
    s: f64,
    n: usize,
    base_seed: u64,
) -> Result<TailResult> {
    check_hermitian(a, symmetry)?;
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t >= 1.0) || !t.is_finite()) {
        return Err(Error::invalid("t grid must be non-empty with every t ≥ 1"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("fractional moment exponent must satisfy 0 < s < 1, got {s}")));
    }
    check_samples(n, 2)?;
    let dim = a.nrows();
    let mut e1 = CMat::zeros(dim, 1);
    e1[(0, 0)] = c(1.0);
    let (norms, redraws) = map_realizations_redraw(n, base_seed, |rng| {
        let v = sample_gaussian_ensemble(dim, symmetry, rng)?;
        let x = solve(&(a + v), &e1)?;
        Ok(x.norm())
    })?;
    let root_n = (dim as f64).sqrt();
    let points: Vec<TailPoint> = t_grid
        .iter()
        .map(|&t| {
            let hits: Vec<f64> = norms.iter().map(|&r| if r >= t * root_n { 1.0 } else { 0.0 }).collect();
            let e = MCEstimate::from_samples(&hits);
            let p = e.mean();
            TailPoint { t, prob: p, stderr: binomial_stderr(p, e.n), t_times_p: t * p, n: e.n }
        })
        .collect();
    let moments: Vec<f64> = norms.iter().map(|r| r.powf(s)).collect();
    let fractional_moment = MCEstimate::from_samples(&moments);
    let shape = (dim as f64).powf(s / 2.0) / (1.0 - s);
    let positive: Vec<f64> = points.iter().map(|p| p.t_times_p).filter(|&x| x > 0.0).collect();
    let spread = if positive.len() == points.len() {
        let hi = positive.iter().cloned().fold(f64::MIN, f64::max);
        let lo = positive.iter().cloned().fold(f64::MAX, f64::min);
        Some(hi / lo)
    } else {
        None
    };
    Ok(TailResult {
        n_dim: dim,
        points,
        s,
        constant: fractional_moment.mean() / shape,
        fractional_moment,
        shape,
        spread,
        redraws,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallBallPoint {
    pub eps: f64,
    pub prob: f64,
    pub stderr: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallBallResult {
    pub n_dim: usize,
    pub op_norm: f64,
    pub points: Vec<SmallBallPoint>,
    pub n: u64,
}

impl SmallBallResult {
    pub fn all_ok(&self) -> bool {
        self.points.iter().all(|p| p.ok)
    }
}

/// `P{‖A v‖ ≤ (ε/√N)‖A‖_op}` for `v` uniform on the sphere of the symmetry class.
pub fn run_small_ball_check(
    a: &CMat,
    symmetry: SymmetryClass,
    eps_grid: &[f64],
    n: usize,
    base_seed: u64,
) -> Result<SmallBallResult> {
    check_hermitian(a, symmetry)?;
    if max_abs(a) == 0.0 {
        return Err(Error::invalid("A must be nonzero"));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::invalid("ε grid must be non-empty and positive"));
    }
    check_samples(n, 1)?;
    let dim = a.nrows();
    let op_norm = operator_norm(a);
    let norms = map_realizations(n, base_seed, |rng| {
        let v = sample_unit_vector(dim, symmetry, rng);
        Ok((a * v).norm())
    })?;
    let root_n = (dim as f64).sqrt();
    let points = eps_grid
        .iter()
        .map(|&eps| {
            let thr = eps / root_n * op_norm;
            let hits: Vec<f64> = norms.iter().map(|&r| if r <= thr { 1.0 } else { 0.0 }).collect();
            let e = MCEstimate::from_samples(&hits);
            let p = e.mean();
            let stderr = binomial_stderr(p, e.n);
            SmallBallPoint { eps, prob: p, stderr, bound: 5.0 * eps, ok: p <= 5.0 * eps + 3.0 * stderr }
        })
        .collect();
    Ok(SmallBallResult { n_dim: dim, op_norm, points, n: n as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::RngStream;

    #[test]
    fn huge_shift_has_no_tail() {
        let a = CMat::identity(16, 16) * c(1e6);
        let r = run_single_block_tail(&a, SymmetryClass::Orthogonal, &[1.0], 0.5, 200, 3).unwrap();
        assert_eq!(r.points[0].prob, 0.0);
    }

    #[test]
    fn far_tail_vanishes() {
        let a = CMat::zeros(8, 8);
        let r = run_single_block_tail(&a, SymmetryClass::Unitary, &[1.0, 1e6], 0.5, 500, 4).unwrap();
        assert!(r.points[0].prob > 0.0);
        assert_eq!(r.points[1].prob, 0.0);
        assert!(r.points.iter().all(|p| (0.0..=1.0).contains(&p.prob)));
    }

    #[test]
    fn tail_rejects_small_t() {
        let a = CMat::zeros(4, 4);
        assert!(run_single_block_tail(&a, SymmetryClass::Orthogonal, &[0.5], 0.5, 10, 0).is_err());
    }

    #[test]
    fn identity_small_ball() {
        let a = CMat::identity(9, 9);
        // ‖v‖ = 1 > ε/3 for ε < 3
        let r = run_small_ball_check(&a, SymmetryClass::Orthogonal, &[0.5, 2.9], 300, 1).unwrap();
        assert!(r.points.iter().all(|p| p.prob == 0.0));
        assert!(run_small_ball_check(&CMat::zeros(3, 3), SymmetryClass::Orthogonal, &[0.1], 10, 0).is_err());
    }

    #[test]
    fn rank_one_matches_sphere_marginal() {
        // N = 4, A = e₁e₁ᵀ, ε = 0.5: P{|v₁| ≤ 0.25}
        let mut a = CMat::zeros(4, 4);
        a[(0, 0)] = c(1.0);
        let x: f64 = 0.25;
        // real sphere in R⁴: v₁ has density (2/π)√(1 − u²)
        let real = 2.0 / std::f64::consts::PI * (x * (1.0 - x * x).sqrt() + x.asin());
        // complex sphere in C⁴: |v₁|² ~ Beta(1, 3)
        let complex = 1.0 - (1.0 - x * x).powi(3);
        for (sym, exact) in [(SymmetryClass::Orthogonal, real), (SymmetryClass::Unitary, complex)] {
            let r = run_small_ball_check(&a, sym, &[0.5], 20000, 9).unwrap();
            let p = &r.points[0];
            assert!((p.prob - exact).abs() < 4.0 * p.stderr + 1e-3, "{sym:?}: {} vs {exact}", p.prob);
        }
    }

    #[test]
    fn deformation_is_hermitian_with_weak_coupling() {
        let mut rng = RngStream::new(1, 0);
        let h = random_deformation(&[2, 3], 1.0, 0.0, SymmetryClass::Unitary, &mut rng).unwrap();
        assert_eq!(hermiticity_defect(&h), 0.0);
        assert_eq!(h[(0, 2)], c(0.0));
        assert!(h[(2, 3)].norm() > 0.0);
        let r = random_deformation(&[2, 2], 1.0, 1.0, SymmetryClass::Orthogonal, &mut rng).unwrap();
        assert!(is_real(&r));
    }
}
