//! Fast oracle checks with closed-form answers.

use orbital_rmt::ensembles::{sample_goe, sample_gue, RngStream, ShapeFunction, SymmetryClass};
use orbital_rmt::estimators::{
    run_localisation_experiment, run_minami_experiment, run_perturbation_shift_check, run_single_block_tail,
    run_small_ball_check, run_wegner_experiment, FractionalMomentConfig, PerturbationConfig,
};
use orbital_rmt::linalg::{c, hermiticity_defect};
use orbital_rmt::operators::{
    block_partition_band, build_orbital_hamiltonian, rank_one_perturb, restrict, BlockHamiltonian, DeformedBlockSpec,
    LatticeBox, OrbitalKind, OrbitalModelSpec,
};
use orbital_rmt::repformula::{ave_quadrature, poisson_identity_check, QuadratureSpec};
use orbital_rmt::spectra::{
    check_interlacing, count_in_interval, eig_hermitian, fractional_moment_sample, operator_norm, resolvent_block,
    Interval, Spectrum,
};
use orbital_rmt::walk_expansion::{enumerate_sa_walks, walk_expansion_resolvent};
use orbital_rmt::{CMat, CVec};

use crate::config::parse_config;

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn diag(v: &[f64]) -> CMat {
    CMat::from_fn(v.len(), v.len(), |i, j| if i == j { c(v[i]) } else { c(0.0) })
}

fn orbital(kind: OrbitalKind, l: u32, n: usize, g: f64) -> OrbitalModelSpec {
    OrbitalModelSpec::new(LatticeBox::new(1, l).expect("valid box"), n, g, SymmetryClass::Orthogonal, kind).expect("valid spec")
}

pub const CHECKS: &[Check] = &[
    ("goe is symmetric", || {
        let m = sample_goe(7, &mut RngStream::new(1, 0)).map_err(e)?;
        ensure(m == m.transpose(), "GOE sample differs from its transpose")
    }),
    ("gue is hermitian", || {
        let m = sample_gue(7, &mut RngStream::new(1, 1)).map_err(e)?;
        ensure(hermiticity_defect(&m) == 0.0, "GUE sample is not Hermitian")
    }),
    ("susy kernel at W = 0 is the delta", || {
        let k = ShapeFunction::susy_kernel(0, 1).map_err(e)?;
        let (g0, g1) = (k.eval(&[0]), k.eval(&[1]));
        ensure((g0 - 1.0).abs() < 1e-12 && g1.abs() < 1e-12, format!("G(0) = {g0}, G(1) = {g1}"))
    }),
    ("g = 0 orbital model is block diagonal", || {
        let h = build_orbital_hamiltonian(&orbital(OrbitalKind::WegnerOrbital, 2, 3, 0.0), &mut RngStream::new(2, 0)).map_err(e)?;
        ensure(h.block(0, 1).iter().all(|z| *z == c(0.0)), "off-diagonal block is nonzero")
    }),
    ("restriction to all sites is the identity map", || {
        let spec = orbital(OrbitalKind::BlockAnderson, 2, 2, 0.4);
        let h = build_orbital_hamiltonian(&spec, &mut RngStream::new(3, 0)).map_err(e)?;
        let r = restrict(&h, &spec.lattice.sites()).map_err(e)?;
        ensure(r.matrix() == h.matrix(), "restriction changed the matrix")
    }),
    ("rank-one perturbation of zero", || {
        let h = BlockHamiltonian::new(CMat::zeros(2, 2), &[2], SymmetryClass::Orthogonal).map_err(e)?;
        let m = rank_one_perturb(&h, 0, &CVec::from_vec(vec![c(1.0), c(0.0)]), 5.0).map_err(e)?;
        ensure(m == diag(&[5.0, 0.0]), "expected diag(5, 0)")
    }),
    ("eigenvalues of small matrices", || {
        let a = eig_hermitian(&diag(&[3.0, 1.0, 2.0])).map_err(e)?.eigenvalues;
        let sw = CMat::from_fn(2, 2, |i, j| if i == j { c(0.0) } else { c(1.0) });
        let b = eig_hermitian(&sw).map_err(e)?.eigenvalues;
        ensure(a == vec![1.0, 2.0, 3.0] && (b[0] + 1.0).abs() < 1e-14 && (b[1] - 1.0).abs() < 1e-14, format!("{a:?} {b:?}"))
    }),
    ("open-interval counting", || {
        let s = Spectrum::from_eigenvalues(vec![0.0, 1.0, 2.0]);
        let n1 = count_in_interval(&s, &Interval::new(-0.5, 1.5).map_err(e)?);
        let n2 = count_in_interval(&s, &Interval::new(5.0, 5.0001).map_err(e)?);
        let n3 = count_in_interval(&s, &Interval::new(0.0, 0.5).map_err(e)?);
        ensure((n1, n2, n3) == (2, 0, 0), format!("counts {n1}, {n2}, {n3}"))
    }),
    ("resolvent of a diagonal block", || {
        let h = BlockHamiltonian::new(diag(&[1.0, 3.0]), &[2], SymmetryClass::Orthogonal).map_err(e)?;
        let g = resolvent_block(&h, 0.5, 0, 0).map_err(e)?;
        ensure((g[(0, 0)].re - 2.0).abs() < 1e-14 && (g[(1, 1)].re - 0.4).abs() < 1e-14, "expected diag(2, 0.4)")
    }),
    ("fractional moment of 2·Id", || {
        let h = BlockHamiltonian::new(diag(&[2.0, 2.0]), &[2], SymmetryClass::Orthogonal).map_err(e)?;
        let v = CVec::from_vec(vec![c(1.0), c(0.0)]);
        let m = fractional_moment_sample(&h, 0.0, 0, 0, &v, 0.5).map_err(e)?;
        ensure((m - 0.5f64.sqrt()).abs() < 1e-14, format!("got {m}"))
    }),
    ("operator norms", || {
        let a = operator_norm(&diag(&[1.0, -3.0, 2.0]));
        let u = CVec::from_vec(vec![c(2.0), c(0.0)]);
        let v = CVec::from_vec(vec![c(0.6), c(0.8)]);
        let b = operator_norm(&(&u * v.adjoint()));
        ensure((a - 3.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12, format!("{a}, {b}"))
    }),
    ("weak interlacing examples", || {
        let s = Spectrum::from_eigenvalues(vec![0.0, 1.0]);
        let t = Spectrum::from_eigenvalues(vec![0.5, 2.0]);
        ensure(check_interlacing(&s, &s).map_err(e)? && check_interlacing(&s, &t).map_err(e)?, "interlacing rejected")
    }),
    ("unique walk on a path", || {
        let sites: Vec<Vec<i64>> = (0..3).map(|i| vec![i]).collect();
        let w = enumerate_sa_walks(&sites, 0, 2, 5);
        let short = enumerate_sa_walks(&sites, 0, 2, 1);
        ensure(w.len() == 1 && w[0].vertices == vec![0, 1, 2] && short.is_empty(), format!("{} walks", w.len()))
    }),
    ("walk expansion with x = y is the diagonal resolvent", || {
        let h = build_orbital_hamiltonian(&orbital(OrbitalKind::WegnerOrbital, 1, 2, 0.3), &mut RngStream::new(4, 0)).map_err(e)?;
        let a = walk_expansion_resolvent(&h, 0.1, 1, 1, 2).map_err(e)?;
        let b = resolvent_block(&h, 0.1, 1, 1).map_err(e)?;
        ensure((a - b).norm() < 1e-10, "mismatch")
    }),
    ("poisson identity with Y = 0", || {
        let x = diag(&[0.3, -1.2]);
        let (lhs, rhs) = poisson_identity_check(&x, &CMat::zeros(2, 2), 0.5, &QuadratureSpec::default()).map_err(e)?;
        ensure((lhs - rhs).abs() < 1e-12, format!("{lhs} vs {rhs}"))
    }),
    ("average of a constant is one", || {
        let q = QuadratureSpec { t_nodes: 21, xi_nodes: 21, lambda_min_nodes: 11, lambda_nodes_per_eta: 0.0, ..QuadratureSpec::default() };
        let v = ave_quadrature(|_, _, _| 1.0, &Interval::new(-1.0, 1.0).map_err(e)?, 0.1, &q);
        ensure((v - 1.0).abs() < 1e-10, format!("got {v}"))
    }),
    ("count over the whole line", || {
        let m = DeformedBlockSpec::zero_h0(vec![3, 2], SymmetryClass::Unitary).map_err(e)?;
        let w = run_wegner_experiment(&m, &Interval::new(-1e6, 1e6).map_err(e)?, 10, 1).map_err(e)?;
        ensure(w.estimate.mean() == 5.0, format!("mean {}", w.estimate.mean()))
    }),
    ("first Minami moment is the Wegner mean", || {
        let m = DeformedBlockSpec::zero_h0(vec![3, 3], SymmetryClass::Orthogonal).map_err(e)?;
        let i = Interval::new(-0.2, 0.3).map_err(e)?;
        let a = run_wegner_experiment(&m, &i, 50, 2).map_err(e)?;
        let b = run_minami_experiment(&m, &i, 1, 50, 2).map_err(e)?;
        ensure(a.estimate == b.factorial_moment, "estimates differ")
    }),
    ("decoupled blocks give a degenerate decay fit", || {
        let spec = orbital(OrbitalKind::WegnerOrbital, 2, 2, 0.0);
        let cfg = FractionalMomentConfig::from_corner(&spec.lattice, 0.5, 0.0).map_err(e)?;
        let r = run_localisation_experiment(&spec, &cfg, 10, 3).map_err(e)?;
        ensure(r.fit.is_none() && r.per_distance[1..].iter().all(|p| p.estimate.mean() == 0.0), "nonzero off-diagonal moment")
    }),
    ("huge shift has no resolvent tail", || {
        let r = run_single_block_tail(&(CMat::identity(8, 8) * c(1e6)), SymmetryClass::Orthogonal, &[1.0], 0.5, 50, 4).map_err(e)?;
        ensure(r.points[0].prob == 0.0, "tail is positive")
    }),
    ("identity has no small ball", || {
        let r = run_small_ball_check(&CMat::identity(4, 4), SymmetryClass::Unitary, &[0.5], 100, 5).map_err(e)?;
        ensure(r.points[0].prob == 0.0, "probability is positive")
    }),
    ("no coupling, no shift", || {
        let cfg = PerturbationConfig::new(32, 1, 0.0, SymmetryClass::Orthogonal).map_err(e)?;
        let r = run_perturbation_shift_check(&cfg, 4, 6).map_err(e)?;
        ensure(r.bins.iter().all(|b| b.shift.mean().abs() < 1e-10), "nonzero shift")
    }),
    ("band partition with W = 1 in two dimensions", || {
        let p = block_partition_band(3, 1, 2).map_err(e)?;
        ensure(p.n_boxes() == 9, format!("{} boxes", p.n_boxes()))
    }),
    ("config rejects s outside (0, 1) and W not dividing 2L+1", || {
        let a = parse_config("experiment = \"locdecay\"\n[model]\nkind = \"wegner_orbital\"\nl = 2\nn = 2\ng = 0.1\n[params]\ns = 1.2\n");
        let b = parse_config("experiment = \"bandloc\"\n[model]\nkind = \"band\"\nl = 31\nwidth = 4\n");
        let ok_a = a.is_err_and(|x| x.to_string().contains("0 < s < 1"));
        let ok_b = b.is_err_and(|x| x.to_string().contains("must divide 2L+1"));
        ensure(ok_a && ok_b, "expected validation errors")
    }),
];

/// Runs every check; returns `(name, outcome)` pairs.
pub fn run_selftest() -> Vec<(&'static str, Result<(), String>)> {
    CHECKS.iter().map(|(name, f)| (*name, f())).collect()
}
