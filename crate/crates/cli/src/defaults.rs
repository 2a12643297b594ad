//! Every default value used by the config parser. `describe` prints these.

use crate::config::Experiment;

pub const BASE_SEED: u64 = 1;
pub const S: f64 = 0.5;
pub const LAMBDA: f64 = 0.0;
pub const BATCHES: usize = 20;

pub const WEGNER_INTERVAL: [f64; 2] = [-0.025, 0.025];
pub const MINAMI_M: u32 = 2;
pub const MINAMI_LENGTHS: [f64; 3] = [0.2, 0.1, 0.05];
pub const DOS_RANGE: [f64; 2] = [-2.2, 2.2];
pub const DOS_BINS: usize = 40;
pub const REP_INTERVAL: [f64; 2] = [-1.0, 1.0];
pub const TAIL_T_GRID: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const SMALLBALL_EPS: [f64; 3] = [0.01, 0.05, 0.2];
pub const LOWERBOUND_T_FRACTION: f64 = 0.25;
pub const PERTSHIFT_A: f64 = 0.2;
pub const PERTSHIFT_N: usize = 32;
pub const WALK_LAMBDA: f64 = 0.05;

/// Random deformation (`[model.h0] type = "random"`): within-block and off-block amplitudes.
pub const H0_WITHIN: f64 = 0.5;
pub const H0_COUPLING: f64 = 0.005;
pub const H0_SEED: u64 = 0;

pub fn n_samples(e: Experiment) -> usize {
    match e {
        Experiment::Wegner | Experiment::Locdecay | Experiment::Bandloc => 2000,
        Experiment::Minami => 100_000,
        Experiment::Dos => 100,
        Experiment::Repformula => 20,
        Experiment::Tail => 5000,
        Experiment::Smallball => 10_000,
        Experiment::Lowerbound => 2000,
        Experiment::Pertshift => 2000,
        Experiment::Walkcheck => 50,
    }
}

pub fn min_samples(e: Experiment) -> usize {
    match e {
        Experiment::Repformula | Experiment::Walkcheck | Experiment::Smallball => 1,
        _ => 2,
    }
}

/// `(key, default, meaning)` rows of the `[params]` table for one experiment.
pub fn param_table(e: Experiment) -> Vec<(&'static str, String, &'static str)> {
    let f = |x: f64| format!("{x}");
    let list = |v: &[f64]| format!("{v:?}");
    match e {
        Experiment::Wegner => vec![("interval", list(&WEGNER_INTERVAL), "open interval I = (a, b)")],
        Experiment::Minami => vec![
            ("m", MINAMI_M.to_string(), "order of the factorial moment E N(N−1)…(N−m+1)"),
            ("center", f(0.0), "centre of every interval"),
            ("lengths", list(&MINAMI_LENGTHS), "interval lengths |I| for the log-log fit"),
            ("batches", BATCHES.to_string(), "batches for the slope standard error"),
        ],
        Experiment::Locdecay => vec![
            ("s", f(S), "fractional moment exponent, 0 < s < 1"),
            ("lambda", f(LAMBDA), "real energy λ"),
            ("probe", "\"e1\"".into(), "probe vector v: \"e1\" or \"sphere\""),
            ("fit_window", "all distances".into(), "[lo, hi] distance range of the fit"),
            ("batches", BATCHES.to_string(), "batches for the slope standard error"),
        ],
        Experiment::Dos => vec![
            ("lo", f(DOS_RANGE[0]), "left end of the histogram"),
            ("hi", f(DOS_RANGE[1]), "right end of the histogram"),
            ("bins", DOS_BINS.to_string(), "number of equal bins"),
        ],
        Experiment::Bandloc => vec![
            ("widths", "[model.width]".into(), "band widths W, each dividing 2L+1"),
            ("s", f(S), "fractional moment exponent, 0 < s < 1"),
            ("lambda", f(LAMBDA), "real energy λ"),
            ("batches", BATCHES.to_string(), "batches for the slope standard error"),
        ],
        Experiment::Repformula => vec![
            ("interval", list(&REP_INTERVAL), "counting interval I"),
            ("quadrature.t_nodes", "201".into(), "midpoint nodes in θ = arctan t"),
            ("quadrature.xi_nodes", "201".into(), "midpoint nodes in φ = arctan(ξ/η)"),
            ("quadrature.lambda_min_nodes", "101".into(), "minimum λ nodes"),
            ("quadrature.lambda_nodes_per_eta", "1.0".into(), "λ nodes per unit of |I|/η"),
            ("quadrature.eta_schedule", "[0.1, 0.05, 0.025]".into(), "smoothing scales η"),
        ],
        Experiment::Tail => vec![
            ("t_grid", list(&TAIL_T_GRID), "thresholds t ≥ 1"),
            ("s", f(S), "exponent of the reported fractional moment"),
        ],
        Experiment::Smallball => vec![("eps_grid", list(&SMALLBALL_EPS), "thresholds ε")],
        Experiment::Lowerbound => vec![
            ("t", "t_fraction · s₂".into(), "window length, 0 < t < s₂"),
            ("t_fraction", f(LOWERBOUND_T_FRACTION), "t as a fraction of s₂ (exclusive with t)"),
        ],
        Experiment::Pertshift => vec![
            ("a", f(PERTSHIFT_A), "coupling g = a/√N"),
            ("batches", BATCHES.to_string(), "batches for the slope standard error"),
        ],
        Experiment::Walkcheck => vec![
            ("lambda", f(WALK_LAMBDA), "real energy λ"),
            ("k_max", "|Λ| − 1".into(), "maximum walk length (|Λ| − 1 is exact)"),
            ("x", "(−L, …, −L)".into(), "row site"),
            ("y", "(L, …, L)".into(), "column site"),
        ],
    }
}
