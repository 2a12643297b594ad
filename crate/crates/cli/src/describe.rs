use std::fmt::Write;

use crate::config::Experiment;
use crate::defaults;

struct Entry {
    title: &'static str,
    statement: &'static str,
    models: &'static str,
    columns: &'static str,
}

fn entry(e: Experiment) -> Entry {
    match e {
        Experiment::Wegner => Entry {
            title: "Wegner estimate",
            statement: "E N(H, I) ≤ C · ΣN_j · |I| with C independent of the block size N; \
                        the experiment reports E N(H, I)/(ΣN_j |I|), which should not grow with N.",
            models: "block_anderson, wegner_orbital, deformed_block, band, single_block",
            columns: "a, b, mean, stderr, n, ratio, ratio_stderr",
        },
        Experiment::Minami => Entry {
            title: "Minami-type estimate",
            statement: "E N(N−1)…(N−m+1) ≤ C (ΣN_j |I|)^m for deformed block-Gaussian matrices; \
                        the log-log slope of the factorial moment against |I| should be close to m.",
            models: "block_anderson, wegner_orbital, deformed_block, band, single_block",
            columns: "a, b, length, factorial_moment, stderr, tail_prob, tail_stderr, n",
        },
        Experiment::Locdecay => Entry {
            title: "Fractional-moment localisation",
            statement: "E‖(H_Λ − λ)⁻¹(x, y) v‖^s ≤ (C N^{s/2}/(1−s)) · (C d (g_eff √N)^s/(1−s))^{‖x−y‖₁}; \
                        the log moment should be linear in the distance with a slope that steepens as g decreases.",
            models: "block_anderson, wegner_orbital",
            columns: "distance, mean, stderr, n",
        },
        Experiment::Dos => Entry {
            title: "Density of states",
            statement: "for a single Gaussian block the normalised eigenvalue histogram approaches the \
                        semicircle density (2π)⁻¹√((4−λ²)₊).",
            models: "block_anderson, wegner_orbital, deformed_block, band, single_block",
            columns: "bin_lo, bin_hi, density, stderr, semicircle, sum_check",
        },
        Experiment::Bandloc => Entry {
            title: "Band-matrix localisation",
            statement: "for the sharp cutoff with W dividing 2L+1, E|(H_L − λ)⁻¹(i, j)|^s ≤ A W^{s/2} e^{−α|i−j|/W⁷}; \
                        only the exponential shape and a decay rate nonincreasing in W are checked.",
            models: "band (shape = \"sharp\")",
            columns: "width, distance, mean, stderr, n",
        },
        Experiment::Repformula => Entry {
            title: "Block representation of the eigenvalue count",
            statement: "N(H, I) = lim_{η→0} |I| Σ_j Ave_{λ∈I, t, ξ} N(X_j + tY_j + V_j, (−ξ, ξ))/(2ξ) with \
                        X_j, Y_j from the Schur complement of block j; compared with the exact count.",
            models: "deformed_block, single_block",
            columns: "instance, exact_count, eta, lambda_nodes, value, perron_stieltjes",
        },
        Experiment::Tail => Entry {
            title: "Single-block resolvent tail",
            statement: "P{‖(A+V)⁻¹v‖ ≥ t√N‖v‖} ≤ C/t uniformly in the Hermitian A; t·P̂ should be flat in t.",
            models: "single_block (the deformation is A)",
            columns: "t, prob, stderr, t_times_p, n",
        },
        Experiment::Smallball => Entry {
            title: "Small-ball bound for a random unit vector",
            statement: "P{‖Av‖ ≤ (ε/√N)‖A‖_op} ≤ 5ε for v uniform on the real or complex unit sphere.",
            models: "single_block (the deformation is A, nonzero)",
            columns: "eps, prob, stderr, bound, ok, n",
        },
        Experiment::Lowerbound => Entry {
            title: "Complementary lower bound",
            statement: "some I ⊆ [−2s₂, 2s₂] of length t < s₂ has E N(H, I) ≥ ΣN_j |I|/(10 s₂), \
                        where s₂² = E tr H²/ΣN_j.",
            models: "block_anderson, wegner_orbital, deformed_block, band, single_block",
            columns: "s2, window_a, window_b, mean, stderr, n, bound, satisfied",
        },
        Experiment::Pertshift => Entry {
            title: "Second-order perturbation heuristic",
            statement: "at g = a/√N the levels λ_j(x) of one block shift by about a²dλ_j(x)/N; the experiment \
                        regresses tracked shifts of the centre block of a 3^d box on λ.",
            models: "block_anderson (n, d, symmetry only)",
            columns: "bin_lo, bin_hi, mean_lambda, shift, stderr, n, predicted",
        },
        Experiment::Walkcheck => Entry {
            title: "Self-avoiding-walk expansion",
            statement: "G(x, y) = Σ over self-avoiding walks of alternating products of hopping blocks and \
                        resolvents of depleted operators; at full depth it equals the dense resolvent block.",
            models: "block_anderson, wegner_orbital (at most 12 sites)",
            columns: "instance, abs_error, rel_error",
        },
    }
}

pub fn describe(e: Experiment) -> String {
    let en = entry(e);
    let mut s = String::new();
    let _ = writeln!(s, "{}: {}", e.name(), en.title);
    let _ = writeln!(s, "\n  tests: {}", en.statement);
    let _ = writeln!(s, "\n  [model] kinds: {}", en.models);
    let _ = writeln!(s, "\n  top level:");
    let top = [
        ("base_seed", defaults::BASE_SEED.to_string(), "seed of all realization streams"),
        ("n_samples", defaults::n_samples(e).to_string(), "number of realizations"),
        ("output", "(required for run)".to_string(), "path prefix for .jsonl and .csv"),
    ];
    for (k, d, m) in top {
        let _ = writeln!(s, "    {k:<30} {d:<22} {m}");
    }
    let _ = writeln!(s, "\n  [params]:");
    for (k, d, m) in defaults::param_table(e) {
        let _ = writeln!(s, "    {k:<30} {d:<22} {m}");
    }
    let _ = writeln!(s, "\n  csv columns: {}", en.columns);
    s
}

pub fn list() -> String {
    let mut s = String::from("experiments:\n");
    for e in Experiment::ALL {
        let _ = writeln!(s, "  {:<12} {}", e.name(), entry(e).title);
    }
    s
}
