use crate::ensembles::{sample_band_matrix, RngStream, SymmetryClass};
use crate::operators::{
    build_deformed_block, build_orbital_hamiltonian, BandModelSpec, BlockHamiltonian, DeformedBlockSpec, OrbitalKind,
    OrbitalModelSpec,
};
use crate::Result;

/// A random ensemble of block Hamiltonians.
pub trait RandomModel: Sync {
    fn sample(&self, rng: &mut RngStream) -> Result<BlockHamiltonian>;

    /// `Σ_j N_j`.
    fn total_dim(&self) -> usize;

    fn symmetry(&self) -> SymmetryClass;

    /// `E tr H²` from the covariance structure, when it is available in closed form.
    fn exact_trace_second_moment(&self) -> Option<f64>;
}

/// `E tr V²` of one GOE/GUE block of size `n`.
pub(crate) fn ensemble_trace_second_moment(n: usize, symmetry: SymmetryClass) -> f64 {
    match symmetry {
        SymmetryClass::Orthogonal => n as f64 + 1.0,
        SymmetryClass::Unitary => n as f64,
    }
}

impl RandomModel for OrbitalModelSpec {
    fn sample(&self, rng: &mut RngStream) -> Result<BlockHamiltonian> {
        build_orbital_hamiltonian(self, rng)
    }

    fn total_dim(&self) -> usize {
        OrbitalModelSpec::total_dim(self)
    }

    fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    fn exact_trace_second_moment(&self) -> Option<f64> {
        let sites = self.lattice.size() as f64;
        let edges = self.lattice.edges().len() as f64;
        let n = self.n as f64;
        let onsite = ensemble_trace_second_moment(self.n, self.symmetry);
        // each edge contributes both off-diagonal blocks, each of squared Frobenius norm g²N
        let hop = 2.0 * edges * self.g * self.g * n;
        Some(match self.kind {
            OrbitalKind::WegnerOrbital => sites * onsite + hop,
            OrbitalKind::BlockAnderson => {
                let shift = 2.0 * self.lattice.d as f64 * self.g;
                sites * (onsite + shift * shift * n) + hop
            }
        })
    }
}

impl RandomModel for DeformedBlockSpec {
    fn sample(&self, rng: &mut RngStream) -> Result<BlockHamiltonian> {
        build_deformed_block(self, rng)
    }

    fn total_dim(&self) -> usize {
        DeformedBlockSpec::total_dim(self)
    }

    fn symmetry(&self) -> SymmetryClass {
        DeformedBlockSpec::symmetry(self)
    }

    fn exact_trace_second_moment(&self) -> Option<f64> {
        let h0 = self.h0().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let blocks: f64 = self.block_sizes().iter().map(|&n| ensemble_trace_second_moment(n, self.symmetry())).sum();
        Some(h0 + blocks)
    }
}

impl RandomModel for BandModelSpec {
    fn sample(&self, rng: &mut RngStream) -> Result<BlockHamiltonian> {
        sample_band_matrix(self, rng)
    }

    fn total_dim(&self) -> usize {
        self.lattice.size()
    }

    fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    fn exact_trace_second_moment(&self) -> Option<f64> {
        let sites = self.lattice.sites();
        let diag = match self.symmetry {
            SymmetryClass::Orthogonal => 2.0,
            SymmetryClass::Unitary => 1.0,
        };
        let mut total = 0.0;
        for x in &sites {
            for y in &sites {
                let r: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                let psi = self.shape.eval(&r);
                total += if x == y { diag * psi } else { psi };
            }
        }
        Some(total)
    }
}
