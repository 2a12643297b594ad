use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::pairwise_sum;
use crate::spectra::Interval;
use crate::{Error, Result};

/// Grids realizing `Ave_{λ,t,ξ}^η`.
///
/// - `λ`: uniform midpoint rule on `I` with `max(lambda_min_nodes, ⌈lambda_nodes_per_eta·|I|/η⌉)` nodes.
/// - `t = tan θ`, `θ` uniform on `(−π/2, π/2)`: weight `dθ/π`.
/// - `ξ = η tan φ`, `φ` uniform on `(0, π/2)`: weight `(4/π) sin²φ dφ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub lambda_min_nodes: usize,
    pub lambda_nodes_per_eta: f64,
    pub t_nodes: usize,
    pub xi_nodes: usize,
    pub eta_schedule: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            lambda_min_nodes: 101,
            lambda_nodes_per_eta: 1.0,
            t_nodes: 201,
            xi_nodes: 201,
            eta_schedule: vec![0.1, 0.05, 0.025],
        }
    }
}

/// Nodes and weights of a one-dimensional rule; weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

fn midpoints(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(move |k| lo + (k as f64 + 0.5) * h)
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_min_nodes == 0 || self.t_nodes == 0 || self.xi_nodes == 0 {
            return Err(Error::invalid("quadrature node counts must be positive"));
        }
        if !(self.lambda_nodes_per_eta >= 0.0) {
            return Err(Error::invalid("lambda_nodes_per_eta must be >= 0"));
        }
        if self.eta_schedule.is_empty() {
            return Err(Error::invalid("eta schedule is empty"));
        }
        if self.eta_schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("eta schedule entries must be positive"));
        }
        if self.eta_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("eta schedule must be strictly decreasing"));
        }
        Ok(())
    }

    pub fn lambda_node_count(&self, i: &Interval, eta: f64) -> usize {
        let scaled = (self.lambda_nodes_per_eta * i.length() / eta).ceil();
        self.lambda_min_nodes.max(if scaled.is_finite() { scaled as usize } else { 0 })
    }

    pub fn lambda_rule(&self, i: &Interval, eta: f64) -> Rule {
        let n = self.lambda_node_count(i, eta);
        Rule { nodes: midpoints(n, i.a, i.b).collect(), weights: vec![1.0 / n as f64; n] }
    }

    pub fn t_rule(&self) -> Rule {
        t_rule(self.t_nodes)
    }

    pub fn xi_rule(&self, eta: f64) -> Rule {
        let n = self.xi_nodes;
        let phis: Vec<f64> = midpoints(n, 0.0, FRAC_PI_2).collect();
        Rule {
            nodes: phis.iter().map(|p| eta * p.tan()).collect(),
            // (4/π) sin²φ · (π/2)/n
            weights: phis.iter().map(|p| 2.0 * p.sin().powi(2) / n as f64).collect(),
        }
    }
}

/// `t = tan θ` with `θ` midpoints on `(−π/2, π/2)` and weights `1/n` (the Cauchy measure).
pub fn t_rule(n: usize) -> Rule {
    Rule { nodes: midpoints(n, -FRAC_PI_2, FRAC_PI_2).map(f64::tan).collect(), weights: vec![1.0 / n as f64; n] }
}

/// Triple average `Ave_{λ,t,ξ}^η f(λ, t, ξ)`, with `λ` nodes processed in parallel and
/// every level reduced by pairwise summation in node order.
pub fn ave_quadrature<F>(integrand: F, i: &Interval, eta: f64, quad: &QuadratureSpec) -> f64
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let lam = quad.lambda_rule(i, eta);
    let t = quad.t_rule();
    let xi = quad.xi_rule(eta);
    let per_lambda: Vec<f64> = lam
        .nodes
        .par_iter()
        .zip(lam.weights.par_iter())
        .map(|(&l, &wl)| {
            let inner: Vec<f64> = t
                .nodes
                .iter()
                .zip(&t.weights)
                .map(|(&tt, &wt)| {
                    let terms: Vec<f64> = xi.nodes.iter().zip(&xi.weights).map(|(&x, &wx)| wx * integrand(l, tt, x)).collect();
                    wt * pairwise_sum(&terms)
                })
                .collect();
            wl * pairwise_sum(&inner)
        })
        .collect();
    pairwise_sum(&per_lambda)
}

/// `(4/π)∫₀^{π/2} g(φ) sin²φ dφ` by the same midpoint rule used for `ξ`.
pub fn xi_angle_average<G: Fn(f64) -> f64>(g: G, n: usize) -> f64 {
    let terms: Vec<f64> = midpoints(n, 0.0, FRAC_PI_2).map(|p| 2.0 * p.sin().powi(2) / n as f64 * g(p)).collect();
    pairwise_sum(&terms)
}
