use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{batch_slope_stderr, fit_decay, DecayFit, MCEstimate};
use super::{check_samples, map_realizations_redraw};
use crate::ensembles::{sample_band_matrix, sample_unit_vector, RngStream, ShapeFunction, SymmetryClass};
use crate::linalg::{c, CVec};
use crate::operators::{build_orbital_hamiltonian, l1_distance, BandModelSpec, LatticeBox, OrbitalModelSpec, Site};
use crate::spectra::{operator_norm, resolvent_column};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVector {
    /// The first standard basis vector of the source block.
    E1,
    /// Uniform on the unit sphere, drawn per realization.
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalMomentConfig {
    pub s: f64,
    pub lambda: f64,
    pub probe: ProbeVector,
    /// `(x, y)` pairs; the moment is `E‖G(x, y) v‖^s`.
    pub pairs: Vec<(Site, Site)>,
    /// Inclusive distance range for the exponential fit; all distances when absent.
    pub fit_window: Option<(f64, f64)>,
    /// Number of batches for the slope standard error.
    pub batches: usize,
}

impl FractionalMomentConfig {
    /// Source at the corner `(−L, …, −L)`, targets along the first axis from the source
    /// to the opposite face: distances `0, …, 2L`.
    pub fn from_corner(lattice: &LatticeBox, s: f64, lambda: f64) -> Result<Self> {
        let l = lattice.l as i64;
        let y: Site = vec![-l; lattice.d];
        let pairs = (0..=2 * l)
            .map(|k| {
                let mut x = y.clone();
                x[0] += k;
                (x, y.clone())
            })
            .collect();
        let cfg = FractionalMomentConfig { s, lambda, probe: ProbeVector::E1, pairs, fit_window: None, batches: 20 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::invalid(format!("fractional moment exponent must satisfy 0 < s < 1, got {}", self.s)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invalid("energy λ must be finite"));
        }
        if self.pairs.is_empty() {
            return Err(Error::invalid("no (x, y) pairs given"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistancePoint {
    pub distance: u64,
    pub estimate: MCEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalisationResult {
    pub per_distance: Vec<DistancePoint>,
    /// `None` when fewer than three distances carry a positive moment (e.g. `g = 0`).
    pub fit: Option<DecayFit>,
    pub redraws: u64,
    pub redraw_rate: f64,
    pub warnings: Vec<String>,
    /// Empirical `(E‖W(x, y)‖_op^s)^{1/s}` over the sampled hopping blocks.
    pub g_eff: f64,
}

/// `(E‖W‖_op^s)^{1/s}` estimated from the hopping blocks of the given realizations, as an MCEstimate
/// of the per-realization mean of `‖W(x, y)‖_op^s` over edges.
pub fn effective_coupling(spec: &OrbitalModelSpec, s: f64, n: usize, base_seed: u64) -> Result<(f64, MCEstimate)> {
    let edges = spec.lattice.edges();
    if edges.is_empty() {
        return Ok((0.0, MCEstimate::from_samples(&vec![0.0; n.max(1)])));
    }
    let (vals, _) = map_realizations_redraw(n, base_seed, |rng| {
        let h = build_orbital_hamiltonian(spec, rng)?;
        let per: Vec<f64> = edges.iter().map(|&(x, y)| operator_norm(&h.block(x, y)).powf(s)).collect();
        Ok(per.iter().sum::<f64>() / per.len() as f64)
    })?;
    let est = MCEstimate::from_samples(&vals);
    Ok((est.mean().powf(1.0 / s), est))
}

/// Groups pair indices by source and by distance.
fn layout(lattice: &LatticeBox, pairs: &[(Site, Site)]) -> Result<(BTreeMap<usize, Vec<(usize, usize)>>, Vec<u64>)> {
    let mut distances: Vec<u64> = Vec::new();
    let mut by_source: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (x, y) in pairs {
        let (ix, iy) = match (lattice.index(x), lattice.index(y)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid(format!("pair ({x:?}, {y:?}) is outside the box"))),
        };
        let d = l1_distance(x, y) as u64;
        let slot = match distances.binary_search(&d) {
            Ok(k) => k,
            Err(k) => {
                distances.insert(k, d);
                for list in by_source.values_mut() {
                    for entry in list.iter_mut() {
                        if entry.1 >= k {
                            entry.1 += 1;
                        }
                    }
                }
                k
            }
        };
        by_source.entry(iy).or_default().push((ix, slot));
    }
    Ok((by_source, distances))
}

fn summarize(
    samples: Vec<Vec<f64>>,
    distances: &[u64],
    fit_window: Option<(f64, f64)>,
    batches: usize,
    redraws: u64,
) -> (Vec<DistancePoint>, Option<DecayFit>, f64, Vec<String>) {
    let n = samples.len();
    let per_distance: Vec<DistancePoint> = distances
        .iter()
        .enumerate()
        .map(|(k, &d)| DistancePoint {
            distance: d,
            estimate: MCEstimate::from_samples(&samples.iter().map(|s| s[k]).collect::<Vec<_>>()),
        })
        .collect();
    let dist_f: Vec<f64> = distances.iter().map(|&d| d as f64).collect();
    let means: Vec<f64> = per_distance.iter().map(|p| p.estimate.mean()).collect();
    let fit = fit_decay(&dist_f, &means, fit_window).map(|mut f| {
        f.slope_stderr = batch_slope_stderr(&samples, &dist_f, fit_window, batches);
        f
    });
    let redraw_rate = redraws as f64 / n as f64;
    let mut warnings = Vec::new();
    if redraw_rate > 0.01 {
        warnings.push(format!("{redraws} singular re-draws in {n} realizations ({:.2}%)", 100.0 * redraw_rate));
    }
    if fit.is_none() {
        warnings.push("decay fit is degenerate (fewer than three positive moments)".into());
    }
    (per_distance, fit, redraw_rate, warnings)
}

fn probe_vector(probe: ProbeVector, n: usize, symmetry: SymmetryClass, rng: &mut RngStream) -> CVec {
    match probe {
        ProbeVector::E1 => {
            let mut v = CVec::zeros(n);
            v[0] = c(1.0);
            v
        }
        ProbeVector::Sphere => sample_unit_vector(n, symmetry, rng),
    }
}

/// Fractional moments `E‖(H_Λ − λ)⁻¹(x, y) v‖^s` against `‖x − y‖₁`, with an exponential fit.
pub fn run_localisation_experiment(
    spec: &OrbitalModelSpec,
    cfg: &FractionalMomentConfig,
    n: usize,
    base_seed: u64,
) -> Result<LocalisationResult> {
    spec.validate()?;
    cfg.validate()?;
    check_samples(n, 2)?;
    let (by_source, distances) = layout(&spec.lattice, &cfg.pairs)?;
    let mut multiplicity = vec![0usize; distances.len()];
    for list in by_source.values() {
        for &(_, slot) in list {
            multiplicity[slot] += 1;
        }
    }
    let no = spec.n;
    let (samples, redraws) = map_realizations_redraw(n, base_seed, |rng| {
        let h = build_orbital_hamiltonian(spec, rng)?;
        let v = probe_vector(cfg.probe, no, spec.symmetry, rng);
        let mut acc = vec![0.0; distances.len()];
        for (&y, targets) in &by_source {
            let col = resolvent_column(&h, cfg.lambda, y, &v)?;
            for &(x, slot) in targets {
                acc[slot] += col.rows(x * no, no).norm().powf(cfg.s);
            }
        }
        for (a, &m) in acc.iter_mut().zip(&multiplicity) {
            *a /= m as f64;
        }
        Ok(acc)
    })?;
    let (per_distance, fit, redraw_rate, warnings) = summarize(samples, &distances, cfg.fit_window, cfg.batches, redraws);
    let (g_eff, _) = effective_coupling(spec, cfg.s, n.min(200), base_seed ^ 0x6765_6666)?;
    Ok(LocalisationResult { per_distance, fit, redraws, redraw_rate, warnings, g_eff })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandLocalisationResult {
    pub width: u32,
    pub per_distance: Vec<DistancePoint>,
    pub fit: Option<DecayFit>,
    pub redraws: u64,
    pub redraw_rate: f64,
    pub warnings: Vec<String>,
}

impl BandLocalisationResult {
    /// Decay rate `−slope` of the fit.
    pub fn rate(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| -f.slope)
    }
}

/// Entrywise moments `E|(H_L − λ)⁻¹(i, j)|^s` from the first row `i = −L` against `|i − j|`.
pub fn run_band_localisation_experiment(
    spec: &BandModelSpec,
    lambda: f64,
    s: f64,
    n: usize,
    base_seed: u64,
    batches: usize,
) -> Result<BandLocalisationResult> {
    spec.validate()?;
    let width = match &spec.shape {
        ShapeFunction::SharpCutoff { width } => *width,
        _ => return Err(Error::invalid("band localisation needs a sharp cutoff shape")),
    };
    if spec.lattice.d != 1 {
        return Err(Error::invalid("band localisation is one-dimensional"));
    }
    let side = spec.lattice.side();
    if !side.is_multiple_of(width as usize) {
        return Err(Error::invalid(format!("band width W = {width} must divide 2L+1 = {side}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("fractional moment exponent must satisfy 0 < s < 1, got {s}")));
    }
    check_samples(n, 2)?;
    let e1 = CVec::from_element(1, c(1.0));
    let (samples, redraws) = map_realizations_redraw(n, base_seed, |rng| {
        let h = sample_band_matrix(spec, rng)?;
        let col = resolvent_column(&h, lambda, 0, &e1)?;
        Ok(col.iter().map(|z| z.norm().powf(s)).collect::<Vec<f64>>())
    })?;
    let distances: Vec<u64> = (0..side as u64).collect();
    let (per_distance, fit, redraw_rate, warnings) = summarize(samples, &distances, None, batches, redraws);
    Ok(BandLocalisationResult { width, per_distance, fit, redraws, redraw_rate, warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandScanEntry {
    pub width: u32,
    pub rate: Option<f64>,
    pub rate_stderr: Option<f64>,
    pub r_squared: Option<f64>,
    pub result: BandLocalisationResult,
}

/// [`run_band_localisation_experiment`] over a list of widths; realization streams are
/// shared across widths (same seed).
pub fn run_band_localisation_scan(
    lattice: LatticeBox,
    widths: &[u32],
    symmetry: SymmetryClass,
    lambda: f64,
    s: f64,
    n: usize,
    base_seed: u64,
    batches: usize,
) -> Result<Vec<BandScanEntry>> {
    widths
        .iter()
        .map(|&w| {
            let spec = BandModelSpec::new(lattice, ShapeFunction::sharp_cutoff(w)?, symmetry)?;
            let result = run_band_localisation_experiment(&spec, lambda, s, n, base_seed, batches)?;
            Ok(BandScanEntry {
                width: w,
                rate: result.rate(),
                rate_stderr: result.fit.as_ref().and_then(|f| f.slope_stderr),
                r_squared: result.fit.as_ref().map(|f| f.r_squared),
                result,
            })
        })
        .collect()
}
