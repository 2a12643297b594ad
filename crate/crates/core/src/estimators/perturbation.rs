//! Eigenvalue shifts of one block when the coupling `g = a/√N` is switched on.
//!
//! Geometry: block Anderson on the box of side 3 in `d` dimensions. The centre site has
//! its full `2d` neighbours inside the box, so the second-order prediction for its levels is
//! `a²/N · 2d · λ/2 = a²dλ/N` (each neighbour contributes the semicircle principal value `λ/2`).
//! The uniform diagonal term `2dg` is subtracted before comparing.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, MCEstimate};
use super::{check_samples, map_realizations};
use crate::ensembles::SymmetryClass;
use crate::linalg::{c, eigh_unchecked};
use crate::operators::{build_orbital_hamiltonian, LatticeBox, OrbitalKind, OrbitalModelSpec};
use crate::{Error, Result};

/// Probe energies are levels of the centre block inside `[−PROBE_EDGE, PROBE_EDGE]`.
pub const PROBE_EDGE: f64 = 1.5;

const BINS: [(f64, f64); 3] = [(-1.5, -0.5), (-0.5, 0.5), (0.5, 1.5)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub n: usize,
    pub d: usize,
    pub a: f64,
    pub symmetry: SymmetryClass,
    pub batches: usize,
}

impl PerturbationConfig {
    pub fn new(n: usize, d: usize, a: f64, symmetry: SymmetryClass) -> Result<Self> {
        let cfg = PerturbationConfig { n, d, a, symmetry, batches: 20 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 32 {
            return Err(Error::invalid(format!("perturbation check needs N ≥ 32, got {}", self.n)));
        }
        if self.d == 0 || self.d > 3 {
            return Err(Error::invalid("dimension d must be 1, 2 or 3"));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::invalid("a must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn g(&self) -> f64 {
        self.a / (self.n as f64).sqrt()
    }

    /// Predicted coefficient `a²d/N` of the shift in `λ`.
    pub fn predicted_coefficient(&self) -> f64 {
        self.a * self.a * self.d as f64 / self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftBin {
    pub lo: f64,
    pub hi: f64,
    pub shift: MCEstimate,
    pub mean_lambda: f64,
    /// `a²d/N` times the mean probe energy in the bin.
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: Option<f64>,
    pub predicted: f64,
    pub bins: Vec<ShiftBin>,
    pub probes: u64,
    pub discarded: u64,
    pub discard_rate: f64,
}

fn semicircle(x: f64) -> f64 {
    (4.0 - x * x).max(0.0).sqrt() / (2.0 * std::f64::consts::PI)
}

struct Sample {
    pairs: Vec<(f64, f64)>,
    probes: u64,
    discarded: u64,
}

fn one_realization(cfg: &PerturbationConfig, spec: &OrbitalModelSpec, rng: &mut crate::ensembles::RngStream) -> Result<Sample> {
    let n = cfg.n;
    let h = build_orbital_hamiltonian(spec, rng)?;
    let centre = spec.lattice.index(&vec![0; cfg.d]).expect("origin is in the box");
    let shift = 2.0 * cfg.d as f64 * spec.g;
    let mut full = h.matrix().clone();
    for i in 0..full.nrows() {
        full[(i, i)] -= c(shift);
    }
    let (levels, vectors) = eigh_unchecked(&full);
    // unperturbed blocks
    let mut own = (Vec::new(), crate::CMat::zeros(0, 0));
    let mut others = Vec::new();
    for x in 0..h.n_blocks() {
        let r = h.block_range(x);
        let block = full.view((r.start, r.start), (n, n)).into_owned();
        if x == centre {
            own = eigh_unchecked(&block);
        } else {
            others.extend(eigh_unchecked(&block).0);
        }
    }
    let (lam, v) = own;
    let off = h.block_range(centre).start;
    let mut out = Sample { pairs: Vec::new(), probes: 0, discarded: 0 };
    for j in 0..n {
        let l = lam[j];
        if l.abs() > PROBE_EDGE {
            continue;
        }
        out.probes += 1;
        let spacing = 1.0 / (n as f64 * semicircle(l));
        let nearest = others.iter().map(|&m| (m - l).abs()).fold(f64::INFINITY, f64::min);
        if nearest < spacing / 4.0 {
            out.discarded += 1;
            continue;
        }
        let mut best = (0usize, -1.0);
        for m in 0..levels.len() {
            let overlap: f64 = (0..n).map(|i| vectors[(off + i, m)].conj() * v[(i, j)]).sum::<crate::Complex64>().norm_sqr();
            if overlap > best.1 {
                best = (m, overlap);
            }
        }
        out.pairs.push((l, levels[best.0] - l));
    }
    Ok(out)
}

fn slope_of(samples: &[Sample]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().flat_map(|s| s.pairs.iter().copied()).unzip();
    linear_fit(&x, &y).map(|f| f.0)
}

/// Mean shift of tracked centre-block levels against their unperturbed energy.
pub fn run_perturbation_shift_check(cfg: &PerturbationConfig, n_samples: usize, base_seed: u64) -> Result<PerturbationResult> {
    cfg.validate()?;
    check_samples(n_samples, 2)?;
    let spec = OrbitalModelSpec::new(LatticeBox::new(cfg.d, 1)?, cfg.n, cfg.g(), cfg.symmetry, OrbitalKind::BlockAnderson)?;
    let samples = map_realizations(n_samples, base_seed, |rng| one_realization(cfg, &spec, rng))?;
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().flat_map(|s| s.pairs.iter().copied()).unzip();
    let (slope, intercept) = match linear_fit(&x, &y) {
        Some((s, i, _)) => (s, i),
        None => (0.0, 0.0),
    };
    let slope_stderr = if cfg.batches >= 2 && n_samples >= 2 * cfg.batches {
        let per: Option<Vec<f64>> = (0..cfg.batches)
            .map(|b| slope_of(&samples[b * n_samples / cfg.batches..(b + 1) * n_samples / cfg.batches]))
            .collect();
        per.map(|s| MCEstimate::from_samples(&s).stderr())
    } else {
        None
    };
    let bins = BINS
        .iter()
        .map(|&(lo, hi)| {
            let (ls, ss): (Vec<f64>, Vec<f64>) = x
                .iter()
                .zip(&y)
                .filter(|(l, _)| **l >= lo && **l < hi)
                .map(|(l, s)| (*l, *s))
                .unzip();
            let mean_lambda = if ls.is_empty() { f64::NAN } else { ls.iter().sum::<f64>() / ls.len() as f64 };
            ShiftBin {
                lo,
                hi,
                shift: MCEstimate::from_samples(&ss),
                mean_lambda,
                predicted: cfg.predicted_coefficient() * mean_lambda,
            }
        })
        .collect();
    let probes: u64 = samples.iter().map(|s| s.probes).sum();
    let discarded: u64 = samples.iter().map(|s| s.discarded).sum();
    Ok(PerturbationResult {
        slope,
        intercept,
        slope_stderr,
        predicted: cfg.predicted_coefficient(),
        bins,
        probes,
        discarded,
        discard_rate: if probes == 0 { 0.0 } else { discarded as f64 / probes as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_gives_zero_shift() {
        let cfg = PerturbationConfig::new(32, 1, 0.0, SymmetryClass::Orthogonal).unwrap();
        let r = run_perturbation_shift_check(&cfg, 8, 1).unwrap();
        for b in &r.bins {
            assert!(b.shift.mean().abs() < 1e-10, "{b:?}");
        }
        assert!(r.slope.abs() < 1e-10);
    }

    #[test]
    fn rejects_small_n() {
        assert!(PerturbationConfig::new(8, 1, 0.2, SymmetryClass::Orthogonal).is_err());
    }
}
