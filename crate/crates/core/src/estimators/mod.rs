//! Monte Carlo experiment drivers.
//!
//! Realization `r` of every experiment is drawn from `RngStream::new(base_seed, r)`.
//! Per-realization values are collected in realization order and reduced with
//! [`MCEstimate::from_samples`], so results do not depend on the worker count.

mod counts;
mod localisation;
mod models;
mod perturbation;
mod single_block;
mod stats;

use rayon::prelude::*;

pub use counts::{
    check_lower_bound, run_dos_histogram, run_minami_experiment, run_minami_scan, run_wegner_experiment,
    sample_spectra, semicircle_bin_average, DosHistogram, LowerBoundResult, MinamiResult, MinamiScan, WegnerResult,
};
pub use localisation::{
    effective_coupling, run_band_localisation_experiment, run_band_localisation_scan, run_localisation_experiment,
    BandLocalisationResult, BandScanEntry, DistancePoint, FractionalMomentConfig, LocalisationResult, ProbeVector,
};
pub use models::RandomModel;
pub use perturbation::{run_perturbation_shift_check, PerturbationConfig, PerturbationResult, ShiftBin};
pub use single_block::{
    random_deformation, run_single_block_tail, run_small_ball_check, SmallBallPoint, SmallBallResult, TailPoint,
    TailResult,
};
pub use stats::{batch_slope_stderr, fit_decay, linear_fit, DecayFit, MCEstimate};

use crate::ensembles::RngStream;
use crate::{Error, Result};

/// Maximum re-draws of a single realization before giving up.
pub const MAX_REDRAWS: u64 = 16;

/// Runs `f` on realizations `0..n` in parallel and returns the results in realization order.
pub fn map_realizations<T, F>(n: usize, base_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> =
        (0..n as u64).into_par_iter().map(|r| f(&mut RngStream::new(base_seed, r))).collect();
    out.into_iter().collect()
}

/// Like [`map_realizations`], re-drawing on [`Error::Singular`] from derived sub-streams.
/// Returns the values and the total number of re-draws.
pub fn map_realizations_redraw<T, F>(n: usize, base_seed: u64, f: F) -> Result<(Vec<T>, u64)>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    let out: Vec<Result<(T, u64)>> = (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let root = RngStream::new(base_seed, r);
            let mut rng = root.clone();
            for attempt in 0..=MAX_REDRAWS {
                match f(&mut rng) {
                    Ok(v) => return Ok((v, attempt)),
                    Err(Error::Singular(_)) => rng = root.derive(attempt + 1),
                    Err(e) => return Err(e),
                }
            }
            Err(Error::Singular(format!("realization {r} stayed singular after {MAX_REDRAWS} re-draws")))
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    let mut redraws = 0;
    for item in out {
        let (v, k) = item?;
        values.push(v);
        redraws += k;
    }
    Ok((values, redraws))
}

pub(crate) fn check_samples(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::invalid(format!("need at least {min} samples, got {n}")));
    }
    Ok(())
}
