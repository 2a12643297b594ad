//! Acceptance suite. One line per criterion: `PASS` or `FAIL`, the measured values and the
//! wall time. Runs through the same config parser and experiment dispatch as the binary.
//!
//! Criteria 4 and 14 are known to fail at desk scale (see README). They are reported as
//! `FAIL` but do not fail the process unless `ACCEPTANCE_STRICT=1` is set; any other
//! failure exits nonzero.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use serde_json::Value;

use orbital_rmt::ensembles::{sample_goe, sample_gue, sample_unit_vector, RngStream, SymmetryClass};
use orbital_rmt::linalg::c;
use orbital_rmt::operators::{
    build_deformed_block, build_orbital_hamiltonian, rank_one_perturb, DeformedBlockSpec, LatticeBox, OrbitalKind,
    OrbitalModelSpec,
};
use orbital_rmt::repformula::{poisson_identity_check, QuadratureSpec};
use orbital_rmt::spectra::{check_interlacing, compress_to_complement, count_in_interval, eig_hermitian, resolvent_block, Interval};
use orbital_rmt::walk_expansion::walk_expansion_resolvent;
use orbital_rmt::CMat;
use orbital_rmt_cli::{parse_config, render_csv, render_jsonl, run, with_workers, write_results, RunOutput};

const KNOWN_FAILURES: [u32; 2] = [4, 14];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run_toml(text: &str) -> RunOutput {
    let cfg = parse_config(text).unwrap_or_else(|e| panic!("config rejected:\n{e}\n{text}"));
    run(&cfg).unwrap_or_else(|e| panic!("{} failed: {e}", cfg.experiment))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

fn c01_normalization() -> Outcome {
    let (n, draws) = (64usize, 2000u64);
    let mut detail = Vec::new();
    let mut pass = true;
    for (sym, target_tr, diag_var) in [(SymmetryClass::Orthogonal, n as f64 + 1.0, 2.0), (SymmetryClass::Unitary, n as f64, 1.0)] {
        let (mut tr, mut d, mut o) = (0.0, 0.0, 0.0);
        for r in 0..draws {
            let mut rng = RngStream::new(11, r);
            let v = match sym {
                SymmetryClass::Orthogonal => sample_goe(n, &mut rng),
                SymmetryClass::Unitary => sample_gue(n, &mut rng),
            }
            .unwrap();
            for i in 0..n {
                for j in 0..n {
                    let x = v[(i, j)].norm_sqr();
                    tr += x;
                    if i == j {
                        d += x;
                    } else {
                        o += x;
                    }
                }
            }
        }
        let dr = draws as f64;
        let tr = tr / dr;
        let dv = d / (dr * n as f64) * n as f64;
        let ov = o / (dr * (n * n - n) as f64) * n as f64;
        let ok = (tr / target_tr - 1.0).abs() < 0.05 && (dv / diag_var - 1.0).abs() < 0.05 && (ov - 1.0).abs() < 0.05;
        pass &= ok;
        detail.push(format!(
            "{}: E tr V² = {tr:.2} (target {target_tr}), N·var diag {dv:.3} (target {diag_var}), N·var off {ov:.3} (target 1)",
            sym.name()
        ));
    }
    outcome(pass, detail.join("; "))
}

/// `∫_a^b ρ_sc / (b − a)` from the closed-form semicircle distribution function.
fn semicircle_average(a: f64, b: f64) -> f64 {
    let cdf = |x: f64| {
        let x = x.clamp(-2.0, 2.0);
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI) + (x / 2.0).asin() / std::f64::consts::PI
    };
    (cdf(b) - cdf(a)) / (b - a)
}

fn c02_semicircle() -> Outcome {
    let out = run_toml(
        "experiment = \"dos\"\nn_samples = 100\n[model]\nkind = \"single_block\"\nn = 512\n[params]\nlo = -2.2\nhi = 2.2\nbins = 40\n",
    );
    let sup = out
        .points
        .iter()
        .map(|p| (f(&p["density"]) - semicircle_average(f(&p["bin_lo"]), f(&p["bin_hi"]))).abs())
        .fold(0.0, f64::max);
    outcome(sup < 0.05 && out.points.len() == 40, format!("sup-bin deviation {sup:.4} (tol 0.05)"))
}

fn random_hermitian(n: usize, rng: &mut RngStream) -> CMat {
    let sym = if rng.random_bool(0.5) { SymmetryClass::Orthogonal } else { SymmetryClass::Unitary };
    orbital_rmt::ensembles::sample_gaussian_ensemble(n, sym, rng).unwrap() * c(rng.random_range(0.3..3.0))
}

fn c03_poisson() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for r in 0..100u64 {
        let mut rng = RngStream::new(33, r);
        let n = rng.random_range(1..=8);
        let x = random_hermitian(n, &mut rng);
        let b = random_hermitian(n, &mut rng);
        let y = -(&b * b.adjoint()) * c(rng.random_range(0.1..1.0));
        let eta = [0.1, 0.5, 1.0][(r % 3) as usize];
        let (lhs, rhs) = poisson_identity_check(&x, &y, eta, &quad).unwrap();
        worst = worst.max((lhs - rhs).abs());
        count += 1;
    }
    outcome(worst < 1e-6, format!("{count} instances, max |lhs − rhs| = {worst:.2e} (tol 1e-6)"))
}

fn c04_representation() -> Outcome {
    let out = run_toml(
        "experiment = \"repformula\"\nn_samples = 20\n[model]\nkind = \"deformed_block\"\nblock_sizes = [4, 4, 4]\n\
         [model.h0]\ntype = \"random\"\n[params]\ninterval = [-1.0, 1.0]\n[params.quadrature]\neta_schedule = [0.1, 0.05, 0.025]\n",
    );
    let s = &out.summary;
    let within = s["within_0.1_of_exact"].as_u64().unwrap();
    outcome(
        within == 20,
        format!(
            "{within}/20 finest-η values within 0.1 of the exact count; max error finest {:.3}, Richardson {:.3}; \
             max gap to the Perron-Stieltjes smoothed count {:.4}",
            f(&s["max_abs_error_finest"]),
            f(&s["max_abs_error_richardson"]),
            f(&s["max_abs_gap_to_perron_stieltjes"])
        ),
    )
}

fn c05_walks() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in 0..50u64 {
        let mut rng = RngStream::new(55, r);
        let l = rng.random_range(1..=2u32);
        let n = rng.random_range(1..=3usize);
        let sym = if r % 2 == 0 { SymmetryClass::Orthogonal } else { SymmetryClass::Unitary };
        let kind = if rng.random_bool(0.5) { OrbitalKind::WegnerOrbital } else { OrbitalKind::BlockAnderson };
        let spec = OrbitalModelSpec::new(LatticeBox::new(1, l).unwrap(), n, rng.random_range(0.1..1.0), sym, kind).unwrap();
        let h = build_orbital_hamiltonian(&spec, &mut rng).unwrap();
        let size = spec.lattice.size();
        let (x, y) = (rng.random_range(0..size), rng.random_range(0..size));
        let lambda = rng.random_range(-1.0..1.0);
        let a = walk_expansion_resolvent(&h, lambda, x, y, size - 1).unwrap();
        let b = resolvent_block(&h, lambda, x, y).unwrap();
        worst = worst.max((a - &b).norm() / b.norm());
    }
    outcome(worst < 1e-8, format!("50 instances, max relative error {worst:.2e} (tol 1e-8)"))
}

fn c06_wegner() -> Outcome {
    let mut rs = Vec::new();
    for n in [2, 4, 8] {
        let out = run_toml(&format!(
            "experiment = \"wegner\"\nn_samples = 2000\n[model]\nkind = \"wegner_orbital\"\nd = 1\nl = 3\nn = {n}\ng = 0.3\n\
             [params]\ninterval = [-0.025, 0.025]\n"
        ));
        rs.push((n, f(&out.summary["ratio"]), f(&out.summary["ratio_stderr"])));
    }
    let ratios: Vec<f64> = rs.iter().map(|r| r.1).collect();
    let sp = spread(&ratios);
    let mut overlap = true;
    for i in 0..rs.len() {
        for j in (i + 1)..rs.len() {
            overlap &= (rs[i].1 - rs[j].1).abs() <= 3.0 * (rs[i].2 + rs[j].2);
        }
    }
    let list: Vec<String> = rs.iter().map(|(n, r, e)| format!("N={n}: {r:.3} ± {e:.3}")).collect();
    outcome(sp < 1.5 && overlap, format!("{}; max/min {sp:.3} (tol 1.5), 3σ intervals overlap: {overlap}", list.join(", ")))
}

fn c07_minami() -> Outcome {
    let out = run_toml(
        "experiment = \"minami\"\nn_samples = 100000\n[model]\nkind = \"deformed_block\"\nblock_sizes = [4, 4, 4, 4]\n\
         symmetry = \"orthogonal\"\n[model.h0]\ntype = \"random\"\n[params]\nm = 2\ncenter = 0.0\nlengths = [0.2, 0.1, 0.05]\n",
    );
    let slope = f(&out.summary["loglog_slope"]);
    let se = f(&out.summary["slope_stderr"]);
    outcome((slope - 2.0).abs() <= 0.4, format!("log-log slope {slope:.3} ± {se:.3} (target 2.0 ± 0.4)"))
}

fn c08_locdecay() -> Outcome {
    let mut fits = Vec::new();
    for g in [0.02, 0.05, 0.1] {
        let out = run_toml(&format!(
            "experiment = \"locdecay\"\nn_samples = 2000\n[model]\nkind = \"wegner_orbital\"\nd = 1\nl = 10\nn = 4\ng = {g}\n\
             [params]\ns = 0.5\nlambda = 0.0\n"
        ));
        let fit = &out.summary["fit"];
        fits.push((g, f(&fit["slope"]), f(&fit["slope_stderr"]), f(&fit["r_squared"])));
    }
    let first = fits[0];
    let mut pass = first.1 < 0.0 && first.3 > 0.9;
    for w in fits.windows(2) {
        let sep = (w[1].1 - w[0].1) / (w[0].2.powi(2) + w[1].2.powi(2)).sqrt();
        pass &= w[0].1 < w[1].1 && sep >= 2.0;
    }
    let list: Vec<String> = fits.iter().map(|(g, s, e, r2)| format!("g={g}: slope {s:.3} ± {e:.3}, r² {r2:.4}")).collect();
    outcome(pass, list.join("; "))
}

fn c09_tail() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, a) in [("A = 0", "type = \"zero\""), ("A random", "type = \"random\"\nscale = 1.0\nseed = 9")] {
        let out = run_toml(&format!(
            "experiment = \"tail\"\nn_samples = 5000\n[model]\nkind = \"single_block\"\nn = 16\n[model.a]\n{a}\n\
             [params]\nt_grid = [1.0, 2.0, 4.0, 8.0]\n"
        ));
        let tp: Vec<f64> = out.points.iter().map(|p| f(&p["t"]) * f(&p["prob"])).collect();
        let sp = spread(&tp);
        pass &= sp < 2.0;
        detail.push(format!("{label}: t·P̂ = {:?}, max/min {sp:.3}", tp.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()));
    }
    outcome(pass, format!("{} (tol 2)", detail.join("; ")))
}

fn c10_small_ball() -> Outcome {
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for sym in ["orthogonal", "unitary"] {
        let out = run_toml(&format!(
            "experiment = \"smallball\"\nn_samples = 10000\n[model]\nkind = \"single_block\"\nn = 16\nsymmetry = \"{sym}\"\n\
             [model.a]\ntype = \"random\"\nscale = 1.0\nseed = 10\n[params]\neps_grid = [0.01, 0.05, 0.2]\n"
        ));
        for p in &out.points {
            let (eps, prob, se) = (f(&p["eps"]), f(&p["prob"]), f(&p["stderr"]));
            pass &= prob <= 5.0 * eps + 3.0 * se;
            worst = worst.max(prob - 5.0 * eps);
        }
    }
    outcome(pass, format!("6 cells, max P̂ − 5ε = {worst:.4}"))
}

fn c11_interlacing() -> Outcome {
    let mut all_interlace = true;
    let mut mismatches = 0;
    for r in 0..100u64 {
        let mut rng = RngStream::new(111, r);
        let k = rng.random_range(1..=4usize);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=3usize)).collect();
        let sym = if r % 2 == 0 { SymmetryClass::Orthogonal } else { SymmetryClass::Unitary };
        let spec = DeformedBlockSpec::zero_h0(sizes.clone(), sym).unwrap();
        let h = build_deformed_block(&spec, &mut rng).unwrap();
        let j = rng.random_range(0..k);
        let v = sample_unit_vector(sizes[j], sym, &mut rng);
        let before = eig_hermitian(h.matrix()).unwrap();
        for tau in [1.0, 1e3, 1e8] {
            let p = rank_one_perturb(&h, j, &v, tau).unwrap();
            let after = eig_hermitian(&p).unwrap();
            all_interlace &= check_interlacing(&before, &after).unwrap();
            if tau == 1e8 {
                let u = orbital_rmt::operators::embed_block_vector(&h, j, &v).unwrap();
                let ku = eig_hermitian(&compress_to_complement(h.matrix(), &u).unwrap()).unwrap();
                for _ in 0..20 {
                    let a = rng.random_range(-3.0..3.0);
                    let i = Interval::new(a, a + rng.random_range(0.01..3.0)).unwrap();
                    mismatches += usize::from(count_in_interval(&after, &i) != count_in_interval(&ku, &i));
                }
            }
        }
    }
    outcome(all_interlace && mismatches == 0, format!("interlacing holds: {all_interlace}; count mismatches at τ = 1e8: {mismatches}/2000"))
}

fn c12_band_wegner() -> Outcome {
    let mut rs = Vec::new();
    for w in [3, 7, 21] {
        let out = run_toml(&format!(
            "experiment = \"wegner\"\nn_samples = 2000\n[model]\nkind = \"band\"\nd = 1\nl = 31\nshape = \"sharp\"\nwidth = {w}\n\
             [params]\ninterval = [-0.05, 0.05]\n"
        ));
        rs.push((w, f(&out.summary["ratio"]), f(&out.summary["ratio_stderr"])));
    }
    let sp = spread(&rs.iter().map(|r| r.1).collect::<Vec<_>>());
    let list: Vec<String> = rs.iter().map(|(w, r, e)| format!("W={w}: {r:.3} ± {e:.3}")).collect();
    outcome(sp < 2.0, format!("{}; max/min {sp:.3} (tol 2)", list.join(", ")))
}

fn c13_lower_bound() -> Outcome {
    let out = run_toml(
        "experiment = \"lowerbound\"\nn_samples = 2000\n[model]\nkind = \"wegner_orbital\"\nd = 1\nl = 2\nn = 4\ng = 0.3\n",
    );
    // E tr H² = |Λ|(N+1) + 2·g²·N·#edges for real blocks
    let (sites, n, g, edges) = (5.0f64, 4.0, 0.3, 4.0);
    let s2 = ((sites * (n + 1.0) + 2.0 * g * g * n * edges) / (sites * n)).sqrt();
    let t = s2 / 4.0;
    let bound = sites * n * t / (10.0 * s2);
    let s = &out.summary;
    let (mean, se) = (f(&s["empirical_mean"]["mean"]), f(&s["empirical_mean"]["stderr"]));
    let pass = (f(&s["s2"]) - s2).abs() < 1e-12 && mean >= bound - 3.0 * se;
    outcome(pass, format!("s₂ = {s2:.5} (reported {:.5}), best window mean {mean:.3} ± {se:.3} vs bound {bound:.3}", f(&s["s2"])))
}

fn c14_band_localisation() -> Outcome {
    let out = run_toml(
        "experiment = \"bandloc\"\nn_samples = 2000\n[model]\nkind = \"band\"\nd = 1\nl = 31\nshape = \"sharp\"\nwidth = 3\n\
         [params]\nwidths = [3, 7, 21]\ns = 0.5\nlambda = 0.0\n",
    );
    let fits = out.summary["fits"].as_array().unwrap();
    let rows: Vec<(u64, f64, f64, f64)> = fits
        .iter()
        .map(|x| (x["width"].as_u64().unwrap(), f(&x["rate"]), f(&x["rate_stderr"]), f(&x["r_squared"])))
        .collect();
    let mut pass = rows.iter().all(|r| r.3 > 0.9);
    for w in rows.windows(2) {
        pass &= w[1].1 - w[0].1 <= 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt();
    }
    let list: Vec<String> = rows.iter().map(|(w, r, e, r2)| format!("W={w}: rate {r:.4} ± {e:.4}, r² {r2:.3}")).collect();
    outcome(pass, list.join("; "))
}

const DETERMINISM_CONFIGS: &[&str] = &[
    "experiment = \"wegner\"\nn_samples = 200\n[model]\nkind = \"wegner_orbital\"\nl = 2\nn = 3\ng = 0.3\n",
    "experiment = \"minami\"\nn_samples = 500\n[model]\nkind = \"deformed_block\"\nblock_sizes = [3, 3]\n[model.h0]\ntype = \"random\"\n",
    "experiment = \"locdecay\"\nn_samples = 100\n[model]\nkind = \"block_anderson\"\nl = 3\nn = 2\ng = 0.1\n",
    "experiment = \"dos\"\nn_samples = 20\n[model]\nkind = \"single_block\"\nn = 32\nsymmetry = \"unitary\"\n",
    "experiment = \"bandloc\"\nn_samples = 50\n[model]\nkind = \"band\"\nl = 4\nwidth = 3\n",
    "experiment = \"repformula\"\nn_samples = 2\n[model]\nkind = \"deformed_block\"\nblock_sizes = [2, 2]\n\
     [params.quadrature]\nt_nodes = 21\nxi_nodes = 21\nlambda_min_nodes = 11\nlambda_nodes_per_eta = 0.2\neta_schedule = [0.2, 0.1]\n",
    "experiment = \"tail\"\nn_samples = 300\n[model]\nkind = \"single_block\"\nn = 8\n[model.a]\ntype = \"random\"\n",
    "experiment = \"smallball\"\nn_samples = 300\n[model]\nkind = \"single_block\"\nn = 8\n[model.a]\ntype = \"identity\"\n",
    "experiment = \"lowerbound\"\nn_samples = 200\n[model]\nkind = \"band\"\nl = 4\nshape = \"gaussian\"\nwidth = 2\n",
    "experiment = \"pertshift\"\nn_samples = 20\n[model]\nkind = \"block_anderson\"\nn = 32\n",
    "experiment = \"walkcheck\"\nn_samples = 5\n[model]\nkind = \"wegner_orbital\"\nl = 1\nd = 2\nn = 2\ng = 0.4\n[params]\nk_max = 4\n",
];

fn c15_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    for (k, text) in DETERMINISM_CONFIGS.iter().enumerate() {
        let cfg = parse_config(text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let mut files: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
        for (rep, workers) in [1usize, 1, 4, 7].into_iter().enumerate() {
            let out = with_workers(workers, || run(&cfg)).unwrap();
            let prefix = dir.path().join(format!("{k}_{rep}"));
            let (j, c) = write_results(&cfg, &out, &prefix).unwrap();
            let bytes = (std::fs::read(j).unwrap(), std::fs::read(c).unwrap());
            assert_eq!(bytes.0, render_jsonl(&cfg, &out).into_bytes());
            assert_eq!(bytes.1, render_csv(&out).into_bytes());
            files.push(bytes);
        }
        if files.windows(2).any(|w| w[0] != w[1]) {
            bad.push(cfg.experiment.to_string());
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} experiments × 4 runs (workers 1, 1, 4, 7); differing: {bad:?}", DETERMINISM_CONFIGS.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 15] = [
        (1, "ensemble normalization", c01_normalization),
        (2, "semicircle density", c02_semicircle),
        (3, "Poisson identity", c03_poisson),
        (4, "representation formula", c04_representation),
        (5, "walk expansion exactness", c05_walks),
        (6, "Wegner N-independence", c06_wegner),
        (7, "Minami |I|² scaling", c07_minami),
        (8, "localisation decay", c08_locdecay),
        (9, "single-block tail", c09_tail),
        (10, "small-ball bound", c10_small_ball),
        (11, "rank-one interlacing", c11_interlacing),
        (12, "band Wegner uniformity", c12_band_wegner),
        (13, "lower bound", c13_lower_bound),
        (14, "band localisation", c14_band_localisation),
        (15, "determinism", c15_determinism),
    ];
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    let (mut passed, mut total) = (0, 0);
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else if KNOWN_FAILURES.contains(&id) { "FAIL (known)" } else { "FAIL" };
        println!("{tag:<12} [{id:>2}] {name}: {} ({secs:.1}s)", o.detail);
        total += 1;
        if o.pass {
            passed += 1;
        } else if strict || !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/{total} criteria pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
