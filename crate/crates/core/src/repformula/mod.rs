//! Block representation of eigenvalue counts.
//!
//! For `H = H0 + ⊕_j V(j)` and an interval `I`,
//!
//! ```text
//! N(H, I)/|I| = lim_{η→0} Σ_j Ave_{λ,t,ξ}^η (1/2ξ) N(V(j) + A(j,λ,η,t), (−ξ, ξ))
//! A(j,λ,η,t)  = −λ + A(j) − B(j)* (C(j) − λ + tη) ((C(j) − λ)² + η²)⁻¹ B(j)
//! ```
//!
//! with `A(j) = P_j H0 P_j*`, `B(j) = Q_j H P_j*`, `C(j) = Q_j H Q_j*`.

mod quadrature;

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use quadrature::{ave_quadrature, t_rule, xi_angle_average, QuadratureSpec, Rule};

use crate::linalg::{
    self, c, eigenvalues_unchecked, eigh_unchecked, hermitian_part, pairwise_sum, shifted, submatrix, CMat,
};
use crate::operators::{BlockHamiltonian, DeformedBlockSpec};
use crate::spectra::{count_sorted, operator_norm, Interval};
use crate::{Complex64, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SchurData {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

/// `A = P_j H0 P_j*`, `B = Q_j H P_j*`, `C = Q_j H Q_j*`.
pub fn schur_pieces(h: &BlockHamiltonian, h0: &CMat, j: usize) -> Result<SchurData> {
    h.check_block(j)?;
    if h0.shape() != h.matrix().shape() {
        return Err(Error::invalid(format!(
            "H0 has shape {:?}, H has shape {:?}",
            h0.shape(),
            h.matrix().shape()
        )));
    }
    let p: Vec<usize> = h.block_range(j).collect();
    let q: Vec<usize> = (0..h.dim()).filter(|i| !h.block_range(j).contains(i)).collect();
    Ok(SchurData {
        a: submatrix(h0, &p, &p),
        b: submatrix(h.matrix(), &q, &p),
        c: submatrix(h.matrix(), &q, &q),
    })
}

/// `A(j, λ, η, t)` by direct solves in the complementary space.
pub fn a_matrix(sd: &SchurData, lambda: f64, eta: f64, t: f64) -> Result<CMat> {
    if !(eta > 0.0) {
        return Err(Error::invalid("a_matrix needs η > 0"));
    }
    let base = shifted(&sd.a, c(lambda));
    if sd.c.nrows() == 0 {
        return Ok(hermitian_part(&base));
    }
    let d = shifted(&sd.c, c(lambda));
    let d2 = shifted(&(&d * &d), c(-eta * eta));
    let solved = linalg::solve(&d2, &sd.b)?;
    let numer = shifted(&d, c(-t * eta));
    Ok(hermitian_part(&(base - sd.b.adjoint() * numer * solved)))
}

/// `Z(j) = −λ + A − B*(C − λ − iη)⁻¹ B`; its Hermitian part is `X(j)`.
pub fn z_matrix(sd: &SchurData, lambda: f64, eta: f64) -> Result<CMat> {
    let base = shifted(&sd.a, c(lambda));
    if sd.c.nrows() == 0 {
        return Ok(base);
    }
    let d = shifted(&sd.c, Complex64::new(lambda, eta));
    Ok(base - sd.b.adjoint() * linalg::solve(&d, &sd.b)?)
}

/// Schur pieces with `C` diagonalized once, so that `X(λ, η)` and `Y(λ, η)` cost
/// one pass over the complementary eigenbasis per `(λ, η)`.
#[derive(Clone, Debug)]
pub struct PreparedBlock {
    a: CMat,
    c_eigs: Vec<f64>,
    /// Rows of `U* B` with `C = U diag(c_eigs) U*`.
    bt: CMat,
}

impl PreparedBlock {
    pub fn new(sd: &SchurData) -> Self {
        let (c_eigs, u) = eigh_unchecked(&sd.c);
        let bt = if sd.c.nrows() == 0 { CMat::zeros(0, sd.a.nrows()) } else { u.adjoint() * &sd.b };
        PreparedBlock { a: sd.a.clone(), c_eigs, bt }
    }

    /// `(X, Y)` with `A(j, λ, η, t) = X + tY` and `Y ⪯ 0`.
    pub fn xy(&self, lambda: f64, eta: f64) -> (CMat, CMat) {
        let n = self.a.nrows();
        let mut x = shifted(&self.a, c(lambda));
        let mut y = CMat::zeros(n, n);
        for (k, &ck) in self.c_eigs.iter().enumerate() {
            let dk = ck - lambda;
            let den = dk * dk + eta * eta;
            let row = self.bt.row(k);
            for p in 0..n {
                for q in p..n {
                    let outer = row[p].conj() * row[q];
                    x[(p, q)] -= outer * (dk / den);
                    y[(p, q)] -= outer * (eta / den);
                }
            }
        }
        for p in 0..n {
            x[(p, p)].im = 0.0;
            y[(p, p)].im = 0.0;
            for q in (p + 1)..n {
                x[(q, p)] = x[(p, q)].conj();
                y[(q, p)] = y[(p, q)].conj();
            }
        }
        (x, y)
    }
}

fn im_trace_resolvent(eigs: &[f64], eta: f64) -> f64 {
    let terms: Vec<f64> = eigs.iter().map(|m| eta / (m * m + eta * eta)).collect();
    pairwise_sum(&terms)
}

/// `(lhs, rhs)` of `Im tr(X + iY − iη)⁻¹ = ∫ dt/(π(1+t²)) Im tr(X + tY − iη)⁻¹`.
///
/// The `t` integral is taken in `θ = arctan t`: `quad.t_nodes` equal panels, each refined by
/// adaptive Gauss-Kronrod (7/15) bisection.
pub fn poisson_identity_check(x: &CMat, y: &CMat, eta: f64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    if !(eta > 0.0) {
        return Err(Error::invalid("Poisson identity needs η > 0"));
    }
    if x.shape() != y.shape() || !x.is_square() {
        return Err(Error::invalid("X and Y must be square of equal size"));
    }
    let (x, y) = (hermitian_part(x), hermitian_part(y));
    let top = eigenvalues_unchecked(&y).last().copied().unwrap_or(0.0);
    if top > 1e-10 {
        return Err(Error::invalid(format!("Y must be negative semi-definite, has eigenvalue {top:.3e}")));
    }
    let n = x.nrows();
    let m = &x + &y * Complex64::i() - CMat::identity(n, n) * Complex64::new(0.0, eta);
    let inv = linalg::inverse(&m)?;
    let lhs = (0..n).map(|i| inv[(i, i)].im).sum::<f64>();
    let f = |theta: f64| im_trace_resolvent(&eigenvalues_unchecked(&hermitian_part(&(&x + &y * c(theta.tan())))), eta);
    let coarse = quad.t_nodes.max(8);
    let h = std::f64::consts::PI / coarse as f64;
    let panels = (0..coarse).map(|k| (-FRAC_PI_2 + h * k as f64, -FRAC_PI_2 + h * (k + 1) as f64));
    // near-singular Y puts peaks of width ~η/(|y|t²) close to θ = ±π/2, so refine adaptively
    Ok((lhs, adaptive_gk15(&f, panels, 1e-11, 200_000) / std::f64::consts::PI))
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const G7_WEIGHTS: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Kronrod 15-point value and its distance from the embedded 7-point Gauss value.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let (mut k, mut g) = (0.0, 0.0);
    for i in 0..8 {
        let vals = if i == 7 { f(mid) } else { f(mid - half * GK15_NODES[i]) + f(mid + half * GK15_NODES[i]) };
        k += GK15_KRONROD[i] * vals;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * vals;
        }
    }
    (k * half, (k - g) * half)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err).then(o.a.total_cmp(&self.a))
    }
}

/// Globally adaptive Gauss-Kronrod: bisects the panel with the largest error estimate until
/// the total estimate is below `tol` or `max_panels` is reached. Deterministic.
fn adaptive_gk15<F: Fn(f64) -> f64>(f: &F, panels: impl Iterator<Item = (f64, f64)>, tol: f64, max_panels: usize) -> f64 {
    let panel = |a: f64, b: f64| {
        let (value, e) = gk15(f, a, b);
        Panel { a, b, value, err: e.abs() }
    };
    let mut heap: std::collections::BinaryHeap<Panel> = panels.map(|(a, b)| panel(a, b)).collect();
    let mut total: f64 = heap.iter().map(|p| p.err).sum();
    while heap.len() < max_panels && total > tol {
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        let (l, r) = (panel(worst.a, m), panel(m, worst.b));
        total += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
    }
    let mut done = heap.into_vec();
    done.sort_by(|p, q| p.a.total_cmp(&q.a));
    pairwise_sum(&done.iter().map(|p| p.value).collect::<Vec<_>>())
}

/// `∫_I (dλ/π) Im tr(H − λ − iη)⁻¹` in closed form from the spectrum.
pub fn perron_stieltjes_count(eigs: &[f64], i: &Interval, eta: f64) -> f64 {
    let terms: Vec<f64> = eigs
        .iter()
        .map(|&l| (((i.b - l) / eta).atan() - ((i.a - l) / eta).atan()) / std::f64::consts::PI)
        .collect();
    pairwise_sum(&terms)
}

/// Both sides of the integration by parts in `ξ` for a spectrum `μ`:
/// `Σ_μ η/(μ² + η²)` against `∫₀^∞ N((−ξ, ξ)) 2ηξ/(ξ² + η²)² dξ`, the latter by
/// the midpoint rule in `ξ = η tan φ` with `nodes` points.
pub fn integration_by_parts_check(spectrum: &[f64], eta: f64, nodes: usize) -> (f64, f64) {
    let stieltjes = im_trace_resolvent(spectrum, eta);
    let mut abs: Vec<f64> = spectrum.iter().map(|m| m.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let h = std::f64::consts::FRAC_PI_2 / nodes as f64;
    let terms: Vec<f64> = (0..nodes)
        .map(|k| {
            let phi = (k as f64 + 0.5) * h;
            let xi = eta * phi.tan();
            let count = abs.partition_point(|&m| m < xi) as f64;
            count * (2.0 * phi).sin() / eta * h
        })
        .collect();
    (stieltjes, pairwise_sum(&terms))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationPoint {
    pub eta: f64,
    pub lambda_nodes: usize,
    /// `|I| Σ_j Ave(...)` at this `η`.
    pub value: f64,
    /// The `η`-smoothed Perron–Stieltjes count at the same `η`.
    pub perron_stieltjes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationResult {
    /// The interval actually used, after any endpoint nudge.
    pub interval: Interval,
    pub points: Vec<RepresentationPoint>,
    pub exact_count: usize,
    pub warnings: Vec<String>,
}

impl RepresentationResult {
    pub fn finest(&self) -> &RepresentationPoint {
        self.points.last().expect("nonempty schedule")
    }

    /// `2v(η/2) − v(η)` from the last two points, when the schedule halves.
    pub fn richardson(&self) -> Option<f64> {
        let n = self.points.len();
        if n < 2 {
            return None;
        }
        let (p, q) = (&self.points[n - 2], &self.points[n - 1]);
        ((q.eta * 2.0 - p.eta).abs() < 1e-12 * p.eta).then_some(2.0 * q.value - p.value)
    }
}

/// Moves the endpoints of `i` outward until no eigenvalue lies within `tol` of them.
fn nudge_interval(eigs: &[f64], i: &Interval, tol: f64) -> Interval {
    let near = |x: f64| eigs.iter().any(|&l| (l - x).abs() <= tol);
    let (mut a, mut b) = (i.a, i.b);
    for _ in 0..64 {
        if !near(a) {
            break;
        }
        a -= tol;
    }
    for _ in 0..64 {
        if !near(b) {
            break;
        }
        b += tol;
    }
    Interval { a, b }
}

/// Suffix sums `S_k = Σ_{k' ≥ k} w_{k'}/(2ξ_{k'})`, so that
/// `Σ_k w_k N((−ξ_k, ξ_k))/(2ξ_k) = Σ_μ S_{first k with ξ_k > |μ|}`.
fn xi_suffix(rule: &Rule) -> Vec<f64> {
    let n = rule.len();
    let mut s = vec![0.0; n + 1];
    for k in (0..n).rev() {
        s[k] = s[k + 1] + rule.weights[k] / (2.0 * rule.nodes[k]);
    }
    s
}

/// The representation of `N(H, I)` evaluated along `quad.eta_schedule`.
pub fn representation_count(
    spec: &DeformedBlockSpec,
    h: &BlockHamiltonian,
    i: &Interval,
    quad: &QuadratureSpec,
) -> Result<RepresentationResult> {
    quad.validate()?;
    if h.block_sizes() != spec.block_sizes() {
        return Err(Error::invalid("realization does not match the spec's block structure"));
    }
    let eigs = eigenvalues_unchecked(h.matrix());
    let norm = operator_norm(h.matrix()).max(f64::MIN_POSITIVE);
    let interval = nudge_interval(&eigs, i, 1e-9 * norm);
    let mut warnings = Vec::new();
    if interval != *i {
        warnings.push(format!("interval endpoints nudged to ({}, {})", interval.a, interval.b));
    }
    let exact_count = count_sorted(&eigs, interval.a, interval.b);

    let mut blocks = Vec::with_capacity(h.n_blocks());
    for j in 0..h.n_blocks() {
        let sd = schur_pieces(h, spec.h0(), j)?;
        let v = h.block(j, j) - &sd.a;
        blocks.push((PreparedBlock::new(&sd), v));
    }
    let t = quad.t_rule();
    let mut points = Vec::with_capacity(quad.eta_schedule.len());
    for &eta in &quad.eta_schedule {
        let lam = quad.lambda_rule(&interval, eta);
        let xi = quad.xi_rule(eta);
        let suffix = xi_suffix(&xi);
        let per_lambda: Vec<f64> = lam
            .nodes
            .par_iter()
            .map(|&l| {
                let per_block: Vec<f64> = blocks
                    .iter()
                    .map(|(pb, v)| {
                        let (x, y) = pb.xy(l, eta);
                        let base = &x + v;
                        let per_t: Vec<f64> = t
                            .nodes
                            .iter()
                            .map(|&tt| {
                                let m = hermitian_part(&(&base + &y * c(tt)));
                                let mu = eigenvalues_unchecked(&m);
                                let terms: Vec<f64> =
                                    mu.iter().map(|m| suffix[xi.nodes.partition_point(|&x| x <= m.abs())]).collect();
                                pairwise_sum(&terms)
                            })
                            .collect();
                        pairwise_sum(&per_t) / t.len() as f64
                    })
                    .collect();
                pairwise_sum(&per_block)
            })
            .collect();
        let value = interval.length() * pairwise_sum(&per_lambda) / lam.len() as f64;
        points.push(RepresentationPoint {
            eta,
            lambda_nodes: lam.len(),
            value,
            perron_stieltjes: perron_stieltjes_count(&eigs, &interval, eta),
        });
    }
    for w in points.windows(2) {
        if (w[1].value - w[0].value).abs() > 0.5 {
            warnings.push(format!(
                "quadrature resolution insufficient: value moved by {:.3} between η = {} and η = {}",
                w[1].value - w[0].value,
                w[0].eta,
                w[1].eta
            ));
        }
    }
    Ok(RepresentationResult { interval, points, exact_count, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_gaussian_ensemble, RngStream, SymmetryClass};
    use crate::linalg::{from_real, is_real};
    use crate::operators::build_deformed_block;
    use nalgebra::DMatrix;

    fn random_instance(sym: SymmetryClass, sizes: Vec<usize>, seed: u64) -> (DeformedBlockSpec, BlockHamiltonian) {
        let mut rng = RngStream::new(seed, 0);
        let dim = sizes.iter().sum();
        let h0 = sample_gaussian_ensemble(dim, sym, &mut rng).unwrap();
        let spec = DeformedBlockSpec::new(sizes, h0, sym).unwrap();
        let h = build_deformed_block(&spec, &mut rng).unwrap();
        (spec, h)
    }

    #[test]
    fn pieces_slice_correctly() {
        let m = from_real(&DMatrix::from_fn(5, 5, |i, j| (i.min(j) * 10 + i.max(j)) as f64));
        let h = BlockHamiltonian::new(m.clone(), &[2, 3], SymmetryClass::Orthogonal).unwrap();
        let h0 = m.map(|z| z * 0.5);
        let sd = schur_pieces(&h, &h0, 1).unwrap();
        assert_eq!(sd.a, h0.view((2, 2), (3, 3)).into_owned());
        assert_eq!(sd.b, m.view((0, 2), (2, 3)).into_owned());
        assert_eq!(sd.c, m.view((0, 0), (2, 2)).into_owned());
        assert_eq!(schur_pieces(&h, &CMat::zeros(5, 5), 0).unwrap().a, CMat::zeros(2, 2));
        assert!(schur_pieces(&h, &CMat::zeros(4, 4), 0).is_err());
    }

    #[test]
    fn a_matrix_properties() {
        for sym in [SymmetryClass::Orthogonal, SymmetryClass::Unitary] {
            let (spec, h) = random_instance(sym, vec![2, 3], 5);
            let sd = schur_pieces(&h, spec.h0(), 0).unwrap();
            let (l, eta) = (0.2, 0.3);
            let a0 = a_matrix(&sd, l, eta, 0.0).unwrap();
            let a1 = a_matrix(&sd, l, eta, 1.0).unwrap();
            let a3 = a_matrix(&sd, l, eta, 3.0).unwrap();
            assert_eq!(linalg::hermiticity_defect(&a3), 0.0);
            if sym == SymmetryClass::Orthogonal {
                assert!(is_real(&a3));
            }
            let y = &a1 - &a0;
            assert!((&a3 - &a0 - &y * c(3.0)).norm() < 1e-12);
            assert!(*eigenvalues_unchecked(&hermitian_part(&y)).last().unwrap() <= 1e-10);
            let z = z_matrix(&sd, l, eta).unwrap();
            let x = (&z + z.adjoint()) * c(0.5);
            assert!((&a0 - x).norm() < 1e-12);
            let pb = PreparedBlock::new(&sd);
            let (px, py) = pb.xy(l, eta);
            assert!((&px - &a0).norm() < 1e-12);
            assert!((&py - &y).norm() < 1e-12);
        }
    }

    #[test]
    fn a_matrix_without_coupling() {
        let m = from_real(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0])));
        let h = BlockHamiltonian::new(m, &[1, 2], SymmetryClass::Orthogonal).unwrap();
        let h0 = from_real(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.0, 0.0])));
        let sd = schur_pieces(&h, &h0, 0).unwrap();
        assert_eq!(sd.b, CMat::zeros(2, 1));
        assert_eq!(a_matrix(&sd, 0.25, 0.1, 7.0).unwrap()[(0, 0)], c(0.25));
    }

    #[test]
    fn poisson_examples() {
        let q = QuadratureSpec::default();
        let x = from_real(&DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, -0.4]));
        let (lhs, rhs) = poisson_identity_check(&x, &CMat::zeros(2, 2), 0.5, &q).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let n = 3;
        let (lhs, rhs) = poisson_identity_check(&CMat::zeros(n, n), &(-CMat::identity(n, n)), 1.0, &q).unwrap();
        assert!((lhs - n as f64 / 2.0).abs() < 1e-12);
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} {rhs}");
        assert!(poisson_identity_check(&x, &CMat::identity(2, 2), 0.5, &q).is_err());
    }

    #[test]
    fn perron_stieltjes_scalar() {
        let i = Interval::new(-1.0, 1.0).unwrap();
        for eta in [1.0, 0.1, 0.01] {
            let v = perron_stieltjes_count(&[0.0], &i, eta);
            assert!((v - 2.0 * (1.0 / eta).atan() / std::f64::consts::PI).abs() < 1e-15);
        }
        assert!(perron_stieltjes_count(&[0.0], &Interval::new(50.0, 51.0).unwrap(), 1e-4) < 1e-6);
    }

    #[test]
    fn integration_by_parts() {
        let mu = [-0.7, -0.05, 0.0, 0.2, 1.3];
        let (s, d) = integration_by_parts_check(&mu, 0.1, 20_000);
        assert!((s - d).abs() < 1e-3 * s, "{s} {d}");
    }

    #[test]
    fn representation_single_block_full_spectrum() {
        let spec = DeformedBlockSpec::zero_h0(vec![4], SymmetryClass::Orthogonal).unwrap();
        let h = build_deformed_block(&spec, &mut RngStream::new(2, 0)).unwrap();
        let q = QuadratureSpec { eta_schedule: vec![0.05], t_nodes: 21, xi_nodes: 201, ..Default::default() };
        let r = representation_count(&spec, &h, &Interval::new(-1.0, 1.0).unwrap(), &q).unwrap();
        let p = r.finest();
        assert!((p.value - p.perron_stieltjes).abs() < 0.02, "{r:?}");
    }
}
