use serde::{Deserialize, Serialize};

/// Mergeable sample statistic `(n, Σx, Σx²)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MCEstimate {
    pub fn single(x: f64) -> Self {
        MCEstimate { n: 1, sum: x, sum_sq: x * x }
    }

    pub fn merge(self, other: MCEstimate) -> MCEstimate {
        MCEstimate { n: self.n + other.n, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    /// Pairwise tree reduction in index order; the association depends only on the length.
    pub fn from_samples(xs: &[f64]) -> MCEstimate {
        match xs.len() {
            0 => MCEstimate::default(),
            1 => MCEstimate::single(xs[0]),
            n => {
                let (lo, hi) = xs.split_at(n / 2);
                MCEstimate::from_samples(lo).merge(MCEstimate::from_samples(hi))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum / self.n as f64
    }

    /// `√((Σx²/n − mean²)/(n − 1))`; zero for fewer than two samples.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.mean();
        ((self.sum_sq / n - m * m).max(0.0) / (n - 1.0)).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> MCEstimate {
        MCEstimate { n: self.n, sum: self.sum * factor, sum_sq: self.sum_sq * factor * factor }
    }
}

/// Least-squares line through `(distance, ln mean)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Inclusive range of distances used.
    pub window: (f64, f64),
    pub n_points: usize,
    /// Standard error of the slope from batch means, when available.
    pub slope_stderr: Option<f64>,
}

/// Ordinary least squares `y ≈ intercept + slope·x`; needs three points with distinct `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n || y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Some((slope, my - slope * mx, r2))
}

/// Exponential fit of `mean(distance)`; `None` when fewer than three positive means remain
/// (for example all off-diagonal moments vanish).
pub fn fit_decay(distances: &[f64], means: &[f64], window: Option<(f64, f64)>) -> Option<DecayFit> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let (xs, ys): (Vec<f64>, Vec<f64>) = distances
        .iter()
        .zip(means)
        .filter(|(d, m)| **d >= lo && **d <= hi && **m > 0.0)
        .map(|(d, m)| (*d, m.ln()))
        .unzip();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys)?;
    Some(DecayFit {
        slope,
        intercept,
        r_squared,
        window: (xs[0], *xs.last().unwrap()),
        n_points: xs.len(),
        slope_stderr: None,
    })
}

/// Slope standard error from `batches` contiguous batches of realizations; `samples[r][k]`
/// is realization `r` at distance `distances[k]`.
pub fn batch_slope_stderr(samples: &[Vec<f64>], distances: &[f64], window: Option<(f64, f64)>, batches: usize) -> Option<f64> {
    let n = samples.len();
    if batches < 2 || n < 2 * batches {
        return None;
    }
    let mut slopes = Vec::with_capacity(batches);
    for b in 0..batches {
        let (start, end) = (b * n / batches, (b + 1) * n / batches);
        let means: Vec<f64> = (0..distances.len())
            .map(|k| samples[start..end].iter().map(|s| s[k]).sum::<f64>() / (end - start) as f64)
            .collect();
        slopes.push(fit_decay(distances, &means, window)?.slope);
    }
    Some(MCEstimate::from_samples(&slopes).stderr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_moments() {
        let e = MCEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.n, 4);
        assert_eq!(e.mean(), 2.5);
        // sample sd of 1..4 is √(5/3); stderr = sd/2
        assert!((e.stderr() - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(MCEstimate::from_samples(&[7.0]).stderr(), 0.0);
    }

    #[test]
    fn exact_line_fit() {
        let d = [0.0f64, 1.0, 2.0, 3.0];
        let m: Vec<f64> = d.iter().map(|x| (0.5 - 0.7 * x).exp()).collect();
        let f = fit_decay(&d, &m, None).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12 && (f.intercept - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_decay(&d, &[1.0, 0.0, 0.0, 0.0], None).is_none());
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative_on_integers(xs in proptest::collection::vec(-1000i32..1000, 1..60), cut1 in 0usize..60, cut2 in 0usize..60) {
            // integer-valued samples make floating sums exact, so any grouping must agree
            let v: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
            let (a, b) = (cut1.min(v.len()), cut2.min(v.len()));
            let (lo, hi) = (a.min(b), a.max(b));
            let p = MCEstimate::from_samples(&v[..lo]);
            let q = MCEstimate::from_samples(&v[lo..hi]);
            let r = MCEstimate::from_samples(&v[hi..]);
            prop_assert_eq!(p.merge(q).merge(r), p.merge(q.merge(r)));
            prop_assert_eq!(p.merge(q), q.merge(p));
            prop_assert_eq!(p.merge(q).merge(r), MCEstimate::from_samples(&v));
        }
    }
}
