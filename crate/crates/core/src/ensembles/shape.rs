//! Variance profiles `ψ(r) = E|X(x, y)|²`, `r = x − y`, for Gaussian band matrices.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::{Error, Result};

/// An even, nonnegative profile `φ` on `R^d`.
pub type Profile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Quadrature controls for the lattice Green function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenQuadrature {
    /// Starting number of k-points per dimension, per unit of `W`.
    pub points_per_width: usize,
    /// Agreement required between two successive resolutions.
    pub tolerance: f64,
    /// Upper bound on the total grid size `m^d`.
    pub max_grid: usize,
}

impl Default for GreenQuadrature {
    fn default() -> Self {
        GreenQuadrature { points_per_width: 64, tolerance: 1e-8, max_grid: 1 << 24 }
    }
}

#[derive(Clone)]
pub enum ShapeFunction {
    /// `ψ(r) = 1/W` for `|r| < W`, else 0 (one dimension).
    SharpCutoff { width: u32 },
    /// `ψ(r) = φ(r/W) / W^d`.
    ScaledProfile { name: String, profile: Profile, width: u32, dim: usize },
    /// `ψ(r) = (−W²Δ + 1)⁻¹(0, r)` on the infinite lattice `Z^d`.
    SusyKernel(SusyKernel),
}

impl fmt::Debug for ShapeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeFunction::SharpCutoff { width } => write!(f, "SharpCutoff(W={width})"),
            ShapeFunction::ScaledProfile { name, width, dim, .. } => {
                write!(f, "ScaledProfile({name}, W={width}, d={dim})")
            }
            ShapeFunction::SusyKernel(k) => write!(f, "SusyKernel(W={}, d={})", k.width, k.dim),
        }
    }
}

impl ShapeFunction {
    pub fn sharp_cutoff(width: u32) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("sharp cutoff needs W >= 1"));
        }
        Ok(ShapeFunction::SharpCutoff { width })
    }

    /// `φ = 1{‖ρ‖_∞ ≤ 1}`.
    pub fn indicator(width: u32, dim: usize) -> Result<Self> {
        Self::scaled(
            "indicator",
            Arc::new(|rho: &[f64]| if rho.iter().all(|x| x.abs() <= 1.0) { 1.0 } else { 0.0 }),
            width,
            dim,
        )
    }

    /// `φ(ρ) = exp(−‖ρ‖²/2)`.
    pub fn gaussian(width: u32, dim: usize) -> Result<Self> {
        Self::scaled(
            "gaussian",
            Arc::new(|rho: &[f64]| (-0.5 * rho.iter().map(|x| x * x).sum::<f64>()).exp()),
            width,
            dim,
        )
    }

    pub fn scaled(name: &str, profile: Profile, width: u32, dim: usize) -> Result<Self> {
        if width == 0 || dim == 0 {
            return Err(Error::invalid("scaled profile needs W >= 1 and d >= 1"));
        }
        Ok(ShapeFunction::ScaledProfile { name: name.to_string(), profile, width, dim })
    }

    pub fn susy_kernel(width: u32, dim: usize) -> Result<Self> {
        Ok(ShapeFunction::SusyKernel(SusyKernel::new(width, dim, GreenQuadrature::default())?))
    }

    pub fn width(&self) -> u32 {
        match self {
            ShapeFunction::SharpCutoff { width } | ShapeFunction::ScaledProfile { width, .. } => *width,
            ShapeFunction::SusyKernel(k) => k.width,
        }
    }

    /// Dimension the shape is defined on, if it is fixed.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ShapeFunction::SharpCutoff { .. } => Some(1),
            ShapeFunction::ScaledProfile { dim, .. } => Some(*dim),
            ShapeFunction::SusyKernel(k) => Some(k.dim),
        }
    }

    /// Evaluates `ψ(r)`.
    pub fn eval(&self, r: &[i64]) -> f64 {
        match self {
            ShapeFunction::SharpCutoff { width } => {
                let w = *width as i64;
                if r.iter().all(|x| x.abs() < w) {
                    1.0 / w as f64
                } else {
                    0.0
                }
            }
            ShapeFunction::ScaledProfile { profile, width, dim, .. } => {
                let w = *width as f64;
                let rho: Vec<f64> = r.iter().map(|&x| x as f64 / w).collect();
                profile(&rho) / w.powi(*dim as i32)
            }
            ShapeFunction::SusyKernel(k) => k.value(r),
        }
    }
}

/// Free function form of [`ShapeFunction::eval`].
pub fn eval_shape(shape: &ShapeFunction, r: &[i64]) -> f64 {
    shape.eval(r)
}

/// Lattice Green function `(−W²Δ + 1)⁻¹` with a resolution fixed at construction.
#[derive(Clone)]
pub struct SusyKernel {
    width: u32,
    dim: usize,
    resolution: usize,
    cache: Arc<Mutex<HashMap<Vec<i64>, f64>>>,
}

impl SusyKernel {
    pub fn new(width: u32, dim: usize, quad: GreenQuadrature) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("lattice dimension must be >= 1"));
        }
        let resolution = if width == 0 {
            0
        } else {
            let origin = vec![0i64; dim];
            converged_resolution(width, &origin, quad)?
        };
        Ok(SusyKernel { width, dim, resolution, cache: Arc::new(Mutex::new(HashMap::new())) })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn value(&self, r: &[i64]) -> f64 {
        assert_eq!(r.len(), self.dim, "lattice vector has wrong dimension");
        if self.width == 0 {
            return if r.iter().all(|&x| x == 0) { 1.0 } else { 0.0 };
        }
        // canonical representative: the kernel is even in every coordinate and symmetric under permutations
        let mut key: Vec<i64> = r.iter().map(|x| x.abs()).collect();
        key.sort_unstable();
        if let Some(v) = self.cache.lock().expect("kernel cache poisoned").get(&key) {
            return *v;
        }
        let v = green_trapezoid(self.width, &key, self.resolution);
        self.cache.lock().expect("kernel cache poisoned").insert(key, v);
        v
    }
}

/// Trapezoid rule with `m` points per dimension for
/// `(2π)^{−d} ∫ e^{ik·r} / (1 + 2W² Σ(1 − cos k_i)) dk`.
fn green_trapezoid(width: u32, r: &[i64], m: usize) -> f64 {
    let d = r.len();
    let w2 = (width as f64).powi(2);
    let ks: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
    let one_minus_cos: Vec<f64> = ks.iter().map(|k| 1.0 - k.cos()).collect();
    let phases: Vec<Vec<f64>> = r
        .iter()
        .map(|&ri| ks.iter().map(|k| (k * ri as f64).cos()).collect())
        .collect();
    let total = m.pow(d as u32);
    let mut idx = vec![0usize; d];
    let mut acc = 0.0;
    for _ in 0..total {
        let mut denom = 1.0;
        let mut phase = 1.0;
        for (axis, &j) in idx.iter().enumerate() {
            denom += 2.0 * w2 * one_minus_cos[j];
            phase *= phases[axis][j];
        }
        acc += phase / denom;
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    acc / total as f64
}

fn converged_resolution(width: u32, r: &[i64], quad: GreenQuadrature) -> Result<usize> {
    let d = r.len();
    let mut m = (quad.points_per_width * width as usize).max(16);
    let mut prev = green_trapezoid(width, r, m);
    loop {
        let next_m = 2 * m;
        if next_m.checked_pow(d as u32).is_none_or(|g| g > quad.max_grid) {
            return Err(Error::Accuracy(format!(
                "lattice Green function did not converge to {:e} within a {}^{} grid",
                quad.tolerance, m, d
            )));
        }
        let next = green_trapezoid(width, r, next_m);
        if (next - prev).abs() < quad.tolerance {
            return Ok(next_m);
        }
        prev = next;
        m = next_m;
    }
}

/// `G_W(r)` on the infinite lattice by Fourier quadrature, refining until two
/// successive resolutions agree.
pub fn susy_kernel_value(width: u32, dim: usize, r: &[i64], quad: GreenQuadrature) -> Result<f64> {
    if width == 0 || dim == 0 {
        return Err(Error::invalid("susy_kernel_value needs W >= 1 and d >= 1"));
    }
    if r.len() != dim {
        return Err(Error::invalid(format!("lattice vector of length {} in dimension {dim}", r.len())));
    }
    let m = converged_resolution(width, r, quad)?;
    Ok(green_trapezoid(width, r, m))
}
