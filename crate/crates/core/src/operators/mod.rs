//! Hamiltonian constructors: lattice orbital models, deformed block-Gaussian
//! matrices, band matrices, finite-volume restriction and rank-one updates.

mod lattice;

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use lattice::{l1_distance, LatticeBox, Site};

use crate::ensembles::{gaussian_entry, sample_gaussian_ensemble, ShapeFunction, SymmetryClass};
use crate::linalg::{c, hermitian_part, hermiticity_defect, is_real, max_abs, principal_submatrix, CMat, CVec};
use crate::{Error, Result};

/// A dense Hermitian matrix together with its block partition.
///
/// For lattice models block `j` is the site `sites[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockHamiltonian {
    matrix: CMat,
    offsets: Vec<usize>,
    symmetry: SymmetryClass,
    sites: Option<Vec<Site>>,
}

impl BlockHamiltonian {
    pub fn new(matrix: CMat, block_sizes: &[usize], symmetry: SymmetryClass) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("Hamiltonian must be square"));
        }
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::invalid("block sizes must be positive and nonempty"));
        }
        let mut offsets = Vec::with_capacity(block_sizes.len() + 1);
        offsets.push(0);
        for &n in block_sizes {
            offsets.push(offsets.last().unwrap() + n);
        }
        if *offsets.last().unwrap() != matrix.nrows() {
            return Err(Error::invalid(format!(
                "block sizes sum to {} but the matrix has dimension {}",
                offsets.last().unwrap(),
                matrix.nrows()
            )));
        }
        if hermiticity_defect(&matrix) != 0.0 {
            return Err(Error::invalid("matrix is not exactly Hermitian"));
        }
        if symmetry == SymmetryClass::Orthogonal && !is_real(&matrix) {
            return Err(Error::invalid("orthogonal class requires a real matrix"));
        }
        Ok(BlockHamiltonian { matrix, offsets, symmetry, sites: None })
    }

    /// Lattice operator with `n` orbitals on each of `sites`.
    pub fn lattice(matrix: CMat, n: usize, symmetry: SymmetryClass, sites: Vec<Site>) -> Result<Self> {
        let sizes = vec![n; sites.len()];
        let mut h = Self::new(matrix, &sizes, symmetry)?;
        h.sites = Some(sites);
        Ok(h)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn n_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn block_range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    pub fn block_size(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn sites(&self) -> Option<&[Site]> {
        self.sites.as_deref()
    }

    pub fn block_of_site(&self, x: &[i64]) -> Option<usize> {
        self.sites.as_ref()?.iter().position(|s| s.as_slice() == x)
    }

    pub fn check_block(&self, j: usize) -> Result<()> {
        if j >= self.n_blocks() {
            return Err(Error::invalid(format!("block index {j} out of range (k = {})", self.n_blocks())));
        }
        Ok(())
    }

    /// The `(x, y)` block `P_x H P_y*`.
    pub fn block(&self, x: usize, y: usize) -> CMat {
        let (rx, ry) = (self.block_range(x), self.block_range(y));
        self.matrix.view((rx.start, ry.start), (rx.len(), ry.len())).into_owned()
    }

    /// Flat indices of the listed blocks, in the given order.
    pub fn indices_of_blocks(&self, blocks: &[usize]) -> Vec<usize> {
        blocks.iter().flat_map(|&b| self.block_range(b)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalKind {
    BlockAnderson,
    WegnerOrbital,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalModelSpec {
    pub lattice: LatticeBox,
    pub n: usize,
    pub g: f64,
    pub symmetry: SymmetryClass,
    pub kind: OrbitalKind,
}

impl OrbitalModelSpec {
    pub fn new(lattice: LatticeBox, n: usize, g: f64, symmetry: SymmetryClass, kind: OrbitalKind) -> Result<Self> {
        let spec = OrbitalModelSpec { lattice, n, g, symmetry, kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        LatticeBox::new(self.lattice.d, self.lattice.l)?;
        if self.n == 0 {
            return Err(Error::invalid("orbitals per site N must be >= 1"));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::invalid(format!("coupling g must be >= 0, got {}", self.g)));
        }
        Ok(())
    }

    pub fn total_dim(&self) -> usize {
        self.n * self.lattice.size()
    }
}

/// Lattice operator with GOE/GUE on-site blocks `V(x) + shift·I` and hopping
/// blocks drawn by `hopping(x, y, rng)` once per unordered edge `x < y`
/// (lexicographic indices); the `(y, x)` block is the adjoint.
///
/// All on-site blocks are drawn first, in site order, then the edges in order.
pub fn build_lattice_hamiltonian<R, F>(
    lattice: LatticeBox,
    n: usize,
    symmetry: SymmetryClass,
    diagonal_shift: f64,
    rng: &mut R,
    mut hopping: F,
) -> Result<BlockHamiltonian>
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize, &mut R) -> CMat,
{
    let sites = lattice.sites();
    let dim = n * sites.len();
    let mut m = CMat::zeros(dim, dim);
    for x in 0..sites.len() {
        let v = sample_gaussian_ensemble(n, symmetry, rng)?;
        let o = x * n;
        m.view_mut((o, o), (n, n)).copy_from(&v);
        if diagonal_shift != 0.0 {
            for i in 0..n {
                m[(o + i, o + i)] += c(diagonal_shift);
            }
        }
    }
    for (x, y) in lattice.edges() {
        let w = hopping(x, y, rng);
        if w.shape() != (n, n) {
            return Err(Error::invalid(format!("hopping block has shape {:?}, expected ({n}, {n})", w.shape())));
        }
        if symmetry == SymmetryClass::Orthogonal && !is_real(&w) {
            return Err(Error::invalid("orthogonal model requires real hopping blocks"));
        }
        m.view_mut((x * n, y * n), (n, n)).copy_from(&w);
        m.view_mut((y * n, x * n), (n, n)).copy_from(&w.adjoint());
    }
    BlockHamiltonian::lattice(m, n, symmetry, sites)
}

/// Block Anderson or Wegner orbital model on the box.
///
/// Block Anderson: diagonal `V(x) + 2dg`, hopping `−g I`; the `2dg` term uses
/// the full-lattice degree at every site, boundary sites included.
/// Wegner orbital: hopping `g W(x, y)` with `W` entries of variance `1/N`.
pub fn build_orbital_hamiltonian<R: Rng + ?Sized>(spec: &OrbitalModelSpec, rng: &mut R) -> Result<BlockHamiltonian> {
    spec.validate()?;
    let (n, g, sym) = (spec.n, spec.g, spec.symmetry);
    match spec.kind {
        OrbitalKind::BlockAnderson => {
            let shift = 2.0 * spec.lattice.d as f64 * g;
            let hop = CMat::identity(n, n) * c(-g);
            build_lattice_hamiltonian(spec.lattice, n, sym, shift, rng, |_, _, _| hop.clone())
        }
        OrbitalKind::WegnerOrbital => {
            let var = 1.0 / n as f64;
            build_lattice_hamiltonian(spec.lattice, n, sym, 0.0, rng, |_, _, r| {
                CMat::from_fn(n, n, |_, _| gaussian_entry(sym, var, r)) * c(g)
            })
        }
    }
}

/// `P_S H P_S*` over the listed blocks; indices are sorted and deduplicated.
pub fn restrict_blocks(h: &BlockHamiltonian, blocks: &[usize]) -> Result<BlockHamiltonian> {
    let mut sel = blocks.to_vec();
    sel.sort_unstable();
    sel.dedup();
    if sel.is_empty() {
        return Err(Error::invalid("restriction to an empty set"));
    }
    if let Some(&bad) = sel.iter().find(|&&b| b >= h.n_blocks()) {
        return Err(Error::invalid(format!("block index {bad} out of range")));
    }
    let idx = h.indices_of_blocks(&sel);
    let sizes: Vec<usize> = sel.iter().map(|&b| h.block_size(b)).collect();
    let mut out = BlockHamiltonian::new(principal_submatrix(&h.matrix, &idx), &sizes, h.symmetry)?;
    out.sites = h.sites.as_ref().map(|s| sel.iter().map(|&b| s[b].clone()).collect());
    Ok(out)
}

/// `H_Λ = P_Λ H P_Λ*` for a set of lattice sites.
pub fn restrict(h: &BlockHamiltonian, subdomain: &[Site]) -> Result<BlockHamiltonian> {
    if h.sites.is_none() {
        return Err(Error::invalid("restriction by sites needs a lattice Hamiltonian"));
    }
    let blocks = subdomain
        .iter()
        .map(|x| h.block_of_site(x).ok_or_else(|| Error::invalid(format!("site {x:?} is not in the domain"))))
        .collect::<Result<Vec<_>>>()?;
    restrict_blocks(h, &blocks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeformedBlockSpec {
    block_sizes: Vec<usize>,
    h0: CMat,
    symmetry: SymmetryClass,
}

impl DeformedBlockSpec {
    /// `H0` must be Hermitian within `10⁻¹² max|H0|`; it is stored exactly Hermitian.
    pub fn new(block_sizes: Vec<usize>, h0: CMat, symmetry: SymmetryClass) -> Result<Self> {
        let dim: usize = block_sizes.iter().sum();
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::invalid("block sizes must be positive and nonempty"));
        }
        if h0.shape() != (dim, dim) {
            return Err(Error::invalid(format!("H0 has shape {:?}, blocks need ({dim}, {dim})", h0.shape())));
        }
        if hermiticity_defect(&h0) > 1e-12 * max_abs(&h0) {
            return Err(Error::invalid("H0 is not Hermitian"));
        }
        if symmetry == SymmetryClass::Orthogonal && !is_real(&h0) {
            return Err(Error::invalid("orthogonal class requires a real H0"));
        }
        Ok(DeformedBlockSpec { block_sizes, h0: hermitian_part(&h0), symmetry })
    }

    pub fn zero_h0(block_sizes: Vec<usize>, symmetry: SymmetryClass) -> Result<Self> {
        let dim = block_sizes.iter().sum();
        Self::new(block_sizes, CMat::zeros(dim, dim), symmetry)
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn h0(&self) -> &CMat {
        &self.h0
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn total_dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

/// `H = H0 + ⊕_j V(j)` with independent GOE/GUE blocks drawn in block order.
pub fn build_deformed_block<R: Rng + ?Sized>(spec: &DeformedBlockSpec, rng: &mut R) -> Result<BlockHamiltonian> {
    let mut m = spec.h0.clone();
    let mut o = 0;
    for &n in &spec.block_sizes {
        let v = sample_gaussian_ensemble(n, spec.symmetry, rng)?;
        let mut view = m.view_mut((o, o), (n, n));
        view += v;
        o += n;
    }
    // adding two exactly Hermitian matrices keeps conj symmetry entrywise
    BlockHamiltonian::new(m, &spec.block_sizes, spec.symmetry)
}

#[derive(Clone, Debug)]
pub struct BandModelSpec {
    pub lattice: LatticeBox,
    pub shape: ShapeFunction,
    pub symmetry: SymmetryClass,
}

impl BandModelSpec {
    pub fn new(lattice: LatticeBox, shape: ShapeFunction, symmetry: SymmetryClass) -> Result<Self> {
        let spec = BandModelSpec { lattice, shape, symmetry };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        LatticeBox::new(self.lattice.d, self.lattice.l)?;
        match self.shape.dim() {
            Some(d) if d != self.lattice.d => Err(Error::invalid(format!(
                "shape function lives in dimension {d}, box in dimension {}",
                self.lattice.d
            ))),
            _ => Ok(()),
        }
    }
}

/// `u = P_j* v` embedded in the full space.
pub fn embed_block_vector(h: &BlockHamiltonian, j: usize, v: &CVec) -> Result<CVec> {
    h.check_block(j)?;
    let r = h.block_range(j);
    if v.len() != r.len() {
        return Err(Error::invalid(format!("vector has length {}, block {j} has size {}", v.len(), r.len())));
    }
    let mut u = CVec::zeros(h.dim());
    u.rows_mut(r.start, r.len()).copy_from(v);
    Ok(u)
}

/// `H + τ P_j* v v* P_j`, exactly Hermitian.
pub fn rank_one_perturb(h: &BlockHamiltonian, j: usize, v: &CVec, tau: f64) -> Result<CMat> {
    if (v.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("v must be a unit vector, |v| = {}", v.norm())));
    }
    let u = embed_block_vector(h, j, v)?;
    let mut m = h.matrix.clone();
    let n = m.nrows();
    for a in 0..n {
        m[(a, a)] += c(tau * u[a].norm_sqr());
        for b in (a + 1)..n {
            let z = u[a] * u[b].conj() * tau;
            m[(a, b)] += z;
            m[(b, a)] += z.conj();
        }
    }
    Ok(m)
}

/// Partition of `Λ_L^d` into Cartesian products of 1D intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BandPartition {
    pub lattice: LatticeBox,
    /// Inclusive coordinate ranges `[lo, hi]` of the 1D intervals.
    pub intervals: Vec<(i64, i64)>,
}

impl BandPartition {
    pub fn n_boxes(&self) -> usize {
        self.intervals.len().pow(self.lattice.d as u32)
    }

    /// The boxes as lists of site indices, boxes in lexicographic order of their interval labels.
    pub fn boxes(&self) -> Vec<Vec<usize>> {
        let k = self.intervals.len();
        let d = self.lattice.d;
        let mut out = vec![Vec::new(); self.n_boxes()];
        for i in 0..self.lattice.size() {
            let x = self.lattice.site(i);
            let label = x.iter().fold(0, |acc, &c| {
                let iv = self.intervals.iter().position(|&(lo, hi)| (lo..=hi).contains(&c)).unwrap();
                acc * k + iv
            });
            out[label].push(i);
        }
        debug_assert_eq!(out.len(), k.pow(d as u32));
        out
    }
}

/// Greedy partition of `{−L, …, L}` into intervals of length in `[W+1, 2W+1]`:
/// intervals of length `W+1` from the left, the last one absorbing the remainder.
pub fn block_partition_band(l: u32, w: u32, d: usize) -> Result<BandPartition> {
    if w > 2 * l {
        return Err(Error::invalid(format!("partition width W={w} exceeds 2L={}", 2 * l)));
    }
    let lattice = LatticeBox::new(d, l)?;
    let step = w as i64 + 1;
    let hi = l as i64;
    let mut intervals = Vec::new();
    let mut start = -hi;
    while hi - start + 1 >= 2 * step {
        intervals.push((start, start + step - 1));
        start += step;
    }
    intervals.push((start, hi));
    Ok(BandPartition { lattice, intervals })
}
