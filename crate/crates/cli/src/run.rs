//! Dispatches a validated config to the estimators and flattens the results into
//! per-point records, a summary and a CSV table.

use orbital_rmt::ensembles::{RngStream, SymmetryClass};
use orbital_rmt::estimators::{
    check_lower_bound, map_realizations_redraw, random_deformation, run_band_localisation_scan, run_dos_histogram,
    run_localisation_experiment, run_minami_scan, run_perturbation_shift_check, run_single_block_tail,
    run_small_ball_check, run_wegner_experiment, semicircle_bin_average, FractionalMomentConfig, MCEstimate,
    PerturbationConfig, ProbeVector, RandomModel,
};
use orbital_rmt::operators::{build_deformed_block, build_orbital_hamiltonian, DeformedBlockSpec};
use orbital_rmt::repformula::representation_count;
use orbital_rmt::spectra::{resolvent_block, Interval};
use orbital_rmt::walk_expansion::{enumerate_box_walks, walk_expansion_resolvent};
use orbital_rmt::{CMat, Complex64, Error, Result};
use serde_json::{json, Value};

use crate::config::{DeformationConfig, DeformationKind, Experiment, ExperimentConfig, ModelConfig, Params, Probe};

/// Flat table with a fixed header per experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub points: Vec<Value>,
    pub summary: Value,
    pub table: Table,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn est(e: &MCEstimate) -> Value {
    json!({"mean": e.mean(), "stderr": e.stderr(), "n": e.n})
}

pub fn deformation_matrix(def: &DeformationConfig, sizes: &[usize], symmetry: SymmetryClass) -> Result<CMat> {
    let n: usize = sizes.iter().sum();
    Ok(match def.kind {
        DeformationKind::Zero => CMat::zeros(n, n),
        DeformationKind::Identity => CMat::identity(n, n) * Complex64::new(def.scale, 0.0),
        DeformationKind::Random => {
            random_deformation(sizes, def.scale, def.coupling, symmetry, &mut RngStream::new(def.seed, 0))?
        }
    })
}

fn deformed_spec(model: &ModelConfig) -> Option<Result<DeformedBlockSpec>> {
    match model {
        ModelConfig::DeformedBlock { block_sizes, symmetry, h0 } => Some(
            deformation_matrix(h0, block_sizes, *symmetry)
                .and_then(|m| DeformedBlockSpec::new(block_sizes.clone(), m, *symmetry)),
        ),
        ModelConfig::SingleBlock { n, symmetry, a } => Some(
            deformation_matrix(a, &[*n], *symmetry).and_then(|m| DeformedBlockSpec::new(vec![*n], m, *symmetry)),
        ),
        _ => None,
    }
}

/// The sampler behind a model block.
pub fn random_model(model: &ModelConfig) -> Result<Box<dyn RandomModel>> {
    if let Some(s) = model.orbital_spec() {
        return Ok(Box::new(s?));
    }
    if let Some(s) = model.band_spec() {
        return Ok(Box::new(s?));
    }
    match deformed_spec(model) {
        Some(s) => Ok(Box::new(s?)),
        None => unreachable!("every model kind has a sampler"),
    }
}

fn interval(p: [f64; 2]) -> Result<Interval> {
    Interval::new(p[0], p[1])
}

fn wrong_params() -> Error {
    Error::InvalidArgument("params do not match the experiment".into())
}

/// Runs the experiment described by `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let (n, seed) = (cfg.n_samples, cfg.base_seed);
    match (cfg.experiment, &cfg.params) {
        (Experiment::Wegner, Params::Wegner { interval: iv }) => {
            let model = random_model(&cfg.model)?;
            let r = run_wegner_experiment(model.as_ref(), &interval(*iv)?, n, seed)?;
            let mut t = Table::new(&["a", "b", "mean", "stderr", "n", "ratio", "ratio_stderr"]);
            let e = &r.estimate;
            t.push(vec![num(iv[0]), num(iv[1]), num(e.mean()), num(e.stderr()), e.n.to_string(), num(r.ratio), num(r.ratio_stderr)]);
            let point = json!({"a": iv[0], "b": iv[1], "mean": e.mean(), "stderr": e.stderr(), "n": e.n,
                "ratio": r.ratio, "ratio_stderr": r.ratio_stderr});
            Ok(RunOutput {
                points: vec![point],
                summary: json!({"total_dim": r.total_dim, "ratio": r.ratio, "ratio_stderr": r.ratio_stderr}),
                table: t,
            })
        }
        (Experiment::Minami, Params::Minami { m, center, lengths, batches }) => {
            let model = random_model(&cfg.model)?;
            let ivs: Vec<Interval> = lengths.iter().map(|&l| Interval::centered(*center, l)).collect::<Result<_>>()?;
            let r = run_minami_scan(model.as_ref(), &ivs, *m, n, seed, *batches)?;
            let mut t = Table::new(&["a", "b", "length", "factorial_moment", "stderr", "tail_prob", "tail_stderr", "n"]);
            let mut points = Vec::new();
            for p in &r.points {
                let (f, q) = (&p.factorial_moment, &p.tail_prob);
                t.push(vec![
                    num(p.interval.a),
                    num(p.interval.b),
                    num(p.interval.length()),
                    num(f.mean()),
                    num(f.stderr()),
                    num(q.mean()),
                    num(q.stderr()),
                    f.n.to_string(),
                ]);
                points.push(json!({"a": p.interval.a, "b": p.interval.b, "length": p.interval.length(), "m": p.m,
                    "factorial_moment": est(f), "tail_prob": est(q)}));
            }
            Ok(RunOutput {
                points,
                summary: json!({"m": m, "loglog_slope": r.slope, "slope_stderr": r.slope_stderr, "target_slope": m}),
                table: t,
            })
        }
        (Experiment::Locdecay, Params::Locdecay { s, lambda, probe, fit_window, batches }) => {
            let spec = cfg.model.orbital_spec().ok_or_else(wrong_params)??;
            let mut fm = FractionalMomentConfig::from_corner(&spec.lattice, *s, *lambda)?;
            fm.probe = match probe {
                Probe::E1 => ProbeVector::E1,
                Probe::Sphere => ProbeVector::Sphere,
            };
            fm.fit_window = fit_window.map(|w| (w[0], w[1]));
            fm.batches = *batches;
            let r = run_localisation_experiment(&spec, &fm, n, seed)?;
            let mut t = Table::new(&["distance", "mean", "stderr", "n"]);
            let mut points = Vec::new();
            for p in &r.per_distance {
                let e = &p.estimate;
                t.push(vec![p.distance.to_string(), num(e.mean()), num(e.stderr()), e.n.to_string()]);
                points.push(json!({"distance": p.distance, "mean": e.mean(), "stderr": e.stderr(), "n": e.n}));
            }
            Ok(RunOutput {
                points,
                summary: json!({"fit": r.fit, "g": spec.g, "g_eff": r.g_eff, "redraws": r.redraws,
                    "redraw_rate": r.redraw_rate, "warnings": r.warnings}),
                table: t,
            })
        }
        (Experiment::Dos, Params::Dos { lo, hi, bins }) => {
            let model = random_model(&cfg.model)?;
            let r = run_dos_histogram(model.as_ref(), *lo, *hi, *bins, n, seed)?;
            let sum_check = r.integral + r.outside_fraction;
            let mut t = Table::new(&["bin_lo", "bin_hi", "density", "stderr", "semicircle", "sum_check"]);
            let mut points = Vec::new();
            let mut sup: f64 = 0.0;
            for (k, d) in r.density.iter().enumerate() {
                let (a, b) = (r.edges[k], r.edges[k + 1]);
                let sc = semicircle_bin_average(a, b);
                sup = sup.max((d.mean() - sc).abs());
                t.push(vec![num(a), num(b), num(d.mean()), num(d.stderr()), num(sc), num(sum_check)]);
                points.push(json!({"bin_lo": a, "bin_hi": b, "density": d.mean(), "stderr": d.stderr(), "n": d.n, "semicircle": sc}));
            }
            Ok(RunOutput {
                points,
                summary: json!({"integral": r.integral, "outside_fraction": r.outside_fraction, "sum_check": sum_check,
                    "sup_deviation_from_semicircle": sup}),
                table: t,
            })
        }
        (Experiment::Bandloc, Params::Bandloc { widths, s, lambda, batches }) => {
            let spec = cfg.model.band_spec().ok_or_else(wrong_params)??;
            let scan = run_band_localisation_scan(spec.lattice, widths, spec.symmetry, *lambda, *s, n, seed, *batches)?;
            let mut t = Table::new(&["width", "distance", "mean", "stderr", "n"]);
            let mut points = Vec::new();
            let mut fits = Vec::new();
            for e in &scan {
                for p in &e.result.per_distance {
                    let m = &p.estimate;
                    t.push(vec![e.width.to_string(), p.distance.to_string(), num(m.mean()), num(m.stderr()), m.n.to_string()]);
                    points.push(json!({"width": e.width, "distance": p.distance, "mean": m.mean(), "stderr": m.stderr(), "n": m.n}));
                }
                fits.push(json!({"width": e.width, "rate": e.rate, "rate_stderr": e.rate_stderr, "r_squared": e.r_squared,
                    "fit": e.result.fit, "redraws": e.result.redraws, "warnings": e.result.warnings}));
            }
            Ok(RunOutput { points, summary: json!({"fits": fits}), table: t })
        }
        (Experiment::Repformula, Params::Repformula { interval: iv, quadrature }) => {
            let spec = deformed_spec(&cfg.model).ok_or_else(wrong_params)??;
            let iv = interval(*iv)?;
            let mut t = Table::new(&["instance", "exact_count", "eta", "lambda_nodes", "value", "perron_stieltjes"]);
            let mut points = Vec::new();
            let (mut worst_finest, mut worst_rich, mut worst_ps, mut within) = (0.0f64, 0.0f64, 0.0f64, 0usize);
            for r in 0..n {
                let h = build_deformed_block(&spec, &mut RngStream::new(seed, r as u64))?;
                let res = representation_count(&spec, &h, &iv, quadrature)?;
                for p in &res.points {
                    t.push(vec![r.to_string(), res.exact_count.to_string(), num(p.eta), p.lambda_nodes.to_string(), num(p.value), num(p.perron_stieltjes)]);
                }
                let exact = res.exact_count as f64;
                let f = res.finest();
                worst_finest = worst_finest.max((f.value - exact).abs());
                worst_ps = worst_ps.max((f.value - f.perron_stieltjes).abs());
                if let Some(rv) = res.richardson() {
                    worst_rich = worst_rich.max((rv - exact).abs());
                }
                within += usize::from((f.value - exact).abs() < 0.1);
                points.push(json!({"instance": r, "exact_count": res.exact_count, "interval": res.interval,
                    "points": res.points, "richardson": res.richardson(), "warnings": res.warnings}));
            }
            Ok(RunOutput {
                points,
                summary: json!({"instances": n, "within_0.1_of_exact": within, "max_abs_error_finest": worst_finest,
                    "max_abs_error_richardson": worst_rich, "max_abs_gap_to_perron_stieltjes": worst_ps}),
                table: t,
            })
        }
        (Experiment::Tail, Params::Tail { t_grid, s }) => {
            let spec = deformed_spec(&cfg.model).ok_or_else(wrong_params)??;
            let r = run_single_block_tail(spec.h0(), spec.symmetry(), t_grid, *s, n, seed)?;
            let mut t = Table::new(&["t", "prob", "stderr", "t_times_p", "n"]);
            let mut points = Vec::new();
            for p in &r.points {
                t.push(vec![num(p.t), num(p.prob), num(p.stderr), num(p.t_times_p), p.n.to_string()]);
                points.push(serde_json::to_value(p).expect("serializable"));
            }
            Ok(RunOutput {
                points,
                summary: json!({"spread_of_t_times_p": r.spread, "fractional_moment": est(&r.fractional_moment),
                    "s": r.s, "shape_N^{s/2}/(1-s)": r.shape, "fitted_constant": r.constant, "redraws": r.redraws}),
                table: t,
            })
        }
        (Experiment::Smallball, Params::Smallball { eps_grid }) => {
            let spec = deformed_spec(&cfg.model).ok_or_else(wrong_params)??;
            let r = run_small_ball_check(spec.h0(), spec.symmetry(), eps_grid, n, seed)?;
            let mut t = Table::new(&["eps", "prob", "stderr", "bound", "ok", "n"]);
            let mut points = Vec::new();
            for p in &r.points {
                t.push(vec![num(p.eps), num(p.prob), num(p.stderr), num(p.bound), p.ok.to_string(), r.n.to_string()]);
                points.push(serde_json::to_value(p).expect("serializable"));
            }
            Ok(RunOutput { points, summary: json!({"op_norm": r.op_norm, "all_ok": r.all_ok()}), table: t })
        }
        (Experiment::Lowerbound, Params::Lowerbound { t: len }) => {
            let model = random_model(&cfg.model)?;
            let r = check_lower_bound(model.as_ref(), *len, n, seed)?;
            let mut t = Table::new(&["s2", "window_a", "window_b", "mean", "stderr", "n", "bound", "satisfied"]);
            let e = &r.empirical_mean;
            t.push(vec![
                num(r.s2),
                num(r.found_interval.a),
                num(r.found_interval.b),
                num(e.mean()),
                num(e.stderr()),
                e.n.to_string(),
                num(r.bound_value),
                r.satisfied.to_string(),
            ]);
            Ok(RunOutput {
                points: vec![json!({"window": r.found_interval, "mean": e.mean(), "stderr": e.stderr(), "n": e.n})],
                summary: {
                    let mut v = serde_json::to_value(&r).expect("serializable");
                    v["empirical_mean"] = est(e);
                    v
                },
                table: t,
            })
        }
        (Experiment::Pertshift, Params::Pertshift { a, batches }) => {
            let ModelConfig::BlockAnderson { n: dim, d, symmetry, .. } = cfg.model else {
                return Err(wrong_params());
            };
            let pc = PerturbationConfig { n: dim, d, a: *a, symmetry, batches: *batches };
            let r = run_perturbation_shift_check(&pc, n, seed)?;
            let mut t = Table::new(&["bin_lo", "bin_hi", "mean_lambda", "shift", "stderr", "n", "predicted"]);
            let mut points = Vec::new();
            for b in &r.bins {
                t.push(vec![num(b.lo), num(b.hi), num(b.mean_lambda), num(b.shift.mean()), num(b.shift.stderr()), b.shift.n.to_string(), num(b.predicted)]);
                points.push(json!({"bin_lo": b.lo, "bin_hi": b.hi, "mean_lambda": b.mean_lambda, "shift": est(&b.shift), "predicted": b.predicted}));
            }
            Ok(RunOutput {
                points,
                summary: json!({"slope": r.slope, "slope_stderr": r.slope_stderr, "intercept": r.intercept,
                    "predicted_slope": r.predicted, "probes": r.probes, "discarded": r.discarded, "discard_rate": r.discard_rate}),
                table: t,
            })
        }
        (Experiment::Walkcheck, Params::Walkcheck { lambda, k_max, x, y }) => {
            let spec = cfg.model.orbital_spec().ok_or_else(wrong_params)??;
            let lat = spec.lattice;
            let (ix, iy) = match (lat.index(x), lat.index(y)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::InvalidArgument("walk endpoints outside the box".into())),
            };
            let walks = enumerate_box_walks(&lat, x, y, *k_max)?.len();
            let (errs, redraws) = map_realizations_redraw(n, seed, |rng| {
                let h = build_orbital_hamiltonian(&spec, rng)?;
                let exact = resolvent_block(&h, *lambda, ix, iy)?;
                let walk = walk_expansion_resolvent(&h, *lambda, ix, iy, *k_max)?;
                let abs = (&walk - &exact).norm();
                Ok((abs, abs / exact.norm().max(f64::MIN_POSITIVE)))
            })?;
            let mut t = Table::new(&["instance", "abs_error", "rel_error"]);
            let mut points = Vec::new();
            let mut worst: f64 = 0.0;
            for (r, (abs, rel)) in errs.iter().enumerate() {
                worst = worst.max(*rel);
                t.push(vec![r.to_string(), num(*abs), num(*rel)]);
                points.push(json!({"instance": r, "abs_error": abs, "rel_error": rel}));
            }
            Ok(RunOutput {
                points,
                summary: json!({"walks": walks, "k_max": k_max, "max_rel_error": worst, "redraws": redraws}),
                table: t,
            })
        }
        _ => Err(wrong_params()),
    }
}
