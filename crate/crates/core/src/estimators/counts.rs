use serde::Serialize;

use super::stats::{linear_fit, MCEstimate};
use super::{check_samples, map_realizations, RandomModel};
use crate::linalg::eigenvalues_unchecked;
use crate::spectra::{count_sorted, Interval};
use crate::{Error, Result};

/// Sorted spectra of `n` realizations, in realization order.
pub fn sample_spectra(model: &dyn RandomModel, n: usize, base_seed: u64) -> Result<Vec<Vec<f64>>> {
    map_realizations(n, base_seed, |rng| Ok(eigenvalues_unchecked(model.sample(rng)?.matrix())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WegnerResult {
    pub interval: Interval,
    pub total_dim: usize,
    pub estimate: MCEstimate,
    /// `E N(H, I) / (Σ N_j |I|)`.
    pub ratio: f64,
    pub ratio_stderr: f64,
}

pub(crate) fn wegner_from_spectra(spectra: &[Vec<f64>], total_dim: usize, i: &Interval) -> WegnerResult {
    let counts: Vec<f64> = spectra.iter().map(|s| count_sorted(s, i.a, i.b) as f64).collect();
    let estimate = MCEstimate::from_samples(&counts);
    let norm = total_dim as f64 * i.length();
    WegnerResult {
        interval: *i,
        total_dim,
        estimate,
        ratio: estimate.mean() / norm,
        ratio_stderr: estimate.stderr() / norm,
    }
}

/// Exact eigenvalue counts in `I` over `n` realizations.
pub fn run_wegner_experiment(model: &dyn RandomModel, i: &Interval, n: usize, base_seed: u64) -> Result<WegnerResult> {
    check_samples(n, 2)?;
    let spectra = sample_spectra(model, n, base_seed)?;
    Ok(wegner_from_spectra(&spectra, model.total_dim(), i))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinamiResult {
    pub interval: Interval,
    pub m: u32,
    /// `E Π_{ℓ<m} (N − ℓ)`.
    pub factorial_moment: MCEstimate,
    /// `P{N ≥ m}`.
    pub tail_prob: MCEstimate,
}

fn falling_factorial(count: usize, m: u32) -> f64 {
    (0..m as usize).map(|l| count as f64 - l as f64).map(|x| x.max(0.0)).product()
}

pub(crate) fn minami_from_spectra(spectra: &[Vec<f64>], i: &Interval, m: u32) -> MinamiResult {
    let counts: Vec<usize> = spectra.iter().map(|s| count_sorted(s, i.a, i.b)).collect();
    let fm: Vec<f64> = counts.iter().map(|&c| falling_factorial(c, m)).collect();
    let tail: Vec<f64> = counts.iter().map(|&c| if c >= m as usize { 1.0 } else { 0.0 }).collect();
    MinamiResult {
        interval: *i,
        m,
        factorial_moment: MCEstimate::from_samples(&fm),
        tail_prob: MCEstimate::from_samples(&tail),
    }
}

/// Factorial moment and tail probability of the count in `I`.
pub fn run_minami_experiment(
    model: &dyn RandomModel,
    i: &Interval,
    m: u32,
    n: usize,
    base_seed: u64,
) -> Result<MinamiResult> {
    if m == 0 {
        return Err(Error::invalid("Minami order m must be >= 1"));
    }
    check_samples(n, 2)?;
    let spectra = sample_spectra(model, n, base_seed)?;
    Ok(minami_from_spectra(&spectra, i, m))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinamiScan {
    pub points: Vec<MinamiResult>,
    /// Slope of `ln E Π(N − ℓ)` against `ln |I|`.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
}

/// [`run_minami_experiment`] for several intervals on a shared set of realizations,
/// with the log-log scaling slope and its batch-means standard error.
pub fn run_minami_scan(
    model: &dyn RandomModel,
    intervals: &[Interval],
    m: u32,
    n: usize,
    base_seed: u64,
    batches: usize,
) -> Result<MinamiScan> {
    if m == 0 {
        return Err(Error::invalid("Minami order m must be >= 1"));
    }
    check_samples(n, 2)?;
    let spectra = sample_spectra(model, n, base_seed)?;
    let points: Vec<MinamiResult> = intervals.iter().map(|i| minami_from_spectra(&spectra, i, m)).collect();
    let x: Vec<f64> = intervals.iter().map(|i| i.length().ln()).collect();
    let slope_of = |sp: &[Vec<f64>]| -> Option<f64> {
        let y: Vec<f64> = intervals.iter().map(|i| minami_from_spectra(sp, i, m).factorial_moment.mean().ln()).collect();
        linear_fit(&x, &y).map(|f| f.0)
    };
    let slope = slope_of(&spectra);
    let slope_stderr = if batches >= 2 && n >= 2 * batches {
        let slopes: Option<Vec<f64>> =
            (0..batches).map(|b| slope_of(&spectra[b * n / batches..(b + 1) * n / batches])).collect();
        slopes.map(|s| MCEstimate::from_samples(&s).stderr())
    } else {
        None
    };
    Ok(MinamiScan { points, slope, slope_stderr })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DosHistogram {
    pub edges: Vec<f64>,
    /// Per-bin `N(H, bin) / (Σ N_j · width)`.
    pub density: Vec<MCEstimate>,
    /// `Σ_bins mean density · width`; one when every eigenvalue falls in a bin.
    pub integral: f64,
    /// Fraction of eigenvalues outside the binned range.
    pub outside_fraction: f64,
}

/// Density-of-states histogram on equal bins `[lo + k w, lo + (k+1) w)`.
pub fn run_dos_histogram(
    model: &dyn RandomModel,
    lo: f64,
    hi: f64,
    bins: usize,
    n: usize,
    base_seed: u64,
) -> Result<DosHistogram> {
    if !(lo < hi) || bins == 0 {
        return Err(Error::invalid("histogram needs lo < hi and at least one bin"));
    }
    check_samples(n, 2)?;
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let dim = model.total_dim() as f64;
    let spectra = sample_spectra(model, n, base_seed)?;
    let mut per_bin = vec![Vec::with_capacity(n); bins];
    let mut outside = 0usize;
    for s in &spectra {
        let mut counts = vec![0usize; bins];
        for &l in s {
            let k = ((l - lo) / width).floor();
            if k >= 0.0 && (k as usize) < bins {
                counts[k as usize] += 1;
            } else {
                outside += 1;
            }
        }
        for (k, cnt) in counts.into_iter().enumerate() {
            per_bin[k].push(cnt as f64 / (dim * width));
        }
    }
    let density: Vec<MCEstimate> = per_bin.iter().map(|v| MCEstimate::from_samples(v)).collect();
    let integral = crate::linalg::pairwise_sum(&density.iter().map(|d| d.mean() * width).collect::<Vec<_>>());
    Ok(DosHistogram { edges, density, integral, outside_fraction: outside as f64 / (dim * n as f64) })
}

/// Average of the semicircle density `(2π)⁻¹√((4 − λ²)₊)` over `[a, b]`, from its CDF.
pub fn semicircle_bin_average(a: f64, b: f64) -> f64 {
    let cdf = |x: f64| {
        let x = x.clamp(-2.0, 2.0);
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI) + (x / 2.0).asin() / std::f64::consts::PI
    };
    (cdf(b) - cdf(a)) / (b - a)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundResult {
    /// `√(E tr H² / Σ N_j)` used for the scan.
    pub s2: f64,
    /// Whether `s2` came from the covariance structure or from the samples.
    pub s2_exact: bool,
    /// The same quantity estimated from the sampled realizations.
    pub s2_empirical: f64,
    pub found_interval: Interval,
    pub empirical_mean: MCEstimate,
    /// `Σ N_j · t / (10 s₂)`.
    pub bound_value: f64,
    /// `mean ≥ bound − 3σ`.
    pub satisfied: bool,
    /// Sum of mean counts over every fourth (hence disjoint) window.
    pub disjoint_window_total: f64,
}

/// Scans windows of length `t` over `[−2s₂, 2s₂]` with stride `t/4` and reports the
/// window with the largest mean count.
pub fn check_lower_bound(model: &dyn RandomModel, t: f64, n: usize, base_seed: u64) -> Result<LowerBoundResult> {
    check_samples(n, 2)?;
    let dim = model.total_dim() as f64;
    let samples = map_realizations(n, base_seed, |rng| {
        let h = model.sample(rng)?;
        let tr2 = h.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>();
        Ok((eigenvalues_unchecked(h.matrix()), tr2))
    })?;
    let tr2: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let s2_empirical = (MCEstimate::from_samples(&tr2).mean() / dim).sqrt();
    let (s2, s2_exact) = match model.exact_trace_second_moment() {
        Some(m) => ((m / dim).sqrt(), true),
        None => (s2_empirical, false),
    };
    if !(t > 0.0 && t < s2) {
        return Err(Error::invalid(format!("window length t = {t} must satisfy 0 < t < s2 = {s2}")));
    }
    let spectra: Vec<Vec<f64>> = samples.into_iter().map(|s| s.0).collect();
    let stride = t / 4.0;
    let n_windows = ((4.0 * s2 - t) / stride + 1e-9).floor() as usize + 1;
    let mut best: Option<(Interval, MCEstimate)> = None;
    let mut disjoint_window_total = 0.0;
    for k in 0..n_windows {
        let a = -2.0 * s2 + k as f64 * stride;
        let i = Interval::new(a, a + t)?;
        let counts: Vec<f64> = spectra.iter().map(|s| count_sorted(s, i.a, i.b) as f64).collect();
        let est = MCEstimate::from_samples(&counts);
        if k % 4 == 0 {
            disjoint_window_total += est.mean();
        }
        if best.as_ref().is_none_or(|(_, b)| est.mean() > b.mean()) {
            best = Some((i, est));
        }
    }
    let (found_interval, empirical_mean) = best.expect("at least one window");
    let bound_value = dim * t / (10.0 * s2);
    Ok(LowerBoundResult {
        s2,
        s2_exact,
        s2_empirical,
        found_interval,
        empirical_mean,
        bound_value,
        satisfied: empirical_mean.mean() >= bound_value - 3.0 * empirical_mean.stderr(),
        disjoint_window_total,
    })
}
