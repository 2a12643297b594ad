//! Self-avoiding-walk expansion of resolvent blocks on a finite domain.
//!
//! For `x ≠ y`,
//!
//! ```text
//! G(x, y) = Σ_k (−1)^k Σ_{π ∈ Π_k(x, y)} G_Λ(π₀, π₀) H(π₀, π₁) G_{Λ∖{π₀}}(π₁, π₁) ⋯ G_{Λ∖{π₀,…,π_{k−1}}}(π_k, π_k)
//! ```
//!
//! where `G_S = (H_S − λ)⁻¹` and the walks are self-avoiding nearest-neighbour
//! paths inside the domain. On a finite domain the sum has finitely many
//! terms and is exact.

use std::collections::HashMap;
use std::rc::Rc;

use crate::linalg::{self, c, norm_1, principal_submatrix, shifted, CMat, SINGULAR_CONDITION};
use crate::operators::{l1_distance, BlockHamiltonian, LatticeBox, Site};
use crate::{Error, Result};

/// A self-avoiding walk given by indices into the domain's site list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SAWalk {
    pub vertices: Vec<usize>,
}

impl SAWalk {
    /// Number of steps `k`.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }
}

fn adjacency(sites: &[Site]) -> Vec<Vec<usize>> {
    sites
        .iter()
        .map(|x| (0..sites.len()).filter(|&j| l1_distance(x, &sites[j]) == 1).collect())
        .collect()
}

/// All self-avoiding walks from `x` to `y` of length at most `k_max` inside the domain `sites`.
///
/// Walks are produced in depth-first order with neighbours visited by increasing index.
pub fn enumerate_sa_walks(sites: &[Site], x: usize, y: usize, k_max: usize) -> Vec<SAWalk> {
    assert!(x < sites.len() && y < sites.len(), "walk endpoints outside the domain");
    if x == y {
        return vec![SAWalk { vertices: vec![x] }];
    }
    let adj = adjacency(sites);
    let mut out = Vec::new();
    let mut path = vec![x];
    let mut used = vec![false; sites.len()];
    used[x] = true;
    fn dfs(
        adj: &[Vec<usize>],
        sites: &[Site],
        y: usize,
        k_max: usize,
        path: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<SAWalk>,
    ) {
        let here = *path.last().unwrap();
        let steps = path.len() - 1;
        for &next in &adj[here] {
            if used[next] {
                continue;
            }
            if steps + 1 + l1_distance(&sites[next], &sites[y]) as usize > k_max {
                continue;
            }
            path.push(next);
            if next == y {
                out.push(SAWalk { vertices: path.clone() });
            } else {
                used[next] = true;
                dfs(adj, sites, y, k_max, path, used, out);
                used[next] = false;
            }
            path.pop();
        }
    }
    dfs(&adj, sites, y, k_max, &mut path, &mut used, &mut out);
    out
}

/// [`enumerate_sa_walks`] on the whole box `Λ_L^d`, endpoints given as sites.
pub fn enumerate_box_walks(lattice: &LatticeBox, x: &[i64], y: &[i64], k_max: usize) -> Result<Vec<SAWalk>> {
    let (ix, iy) = match (lattice.index(x), lattice.index(y)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("walk endpoints outside the box")),
    };
    Ok(enumerate_sa_walks(&lattice.sites(), ix, iy, k_max))
}

/// Memo of depleted resolvents `(H_{Λ∖S} − λ)⁻¹`, keyed by the removed set `S`.
struct Depleted<'a> {
    h: &'a BlockHamiltonian,
    lambda: f64,
    memo: HashMap<u64, Rc<(Vec<usize>, CMat)>>,
}

impl Depleted<'_> {
    /// Diagonal block at `site` of the resolvent with the blocks in `removed` deleted.
    fn diag_block(&mut self, removed: u64, site: usize) -> Option<CMat> {
        let entry = match self.memo.get(&removed) {
            Some(e) => e.clone(),
            None => {
                let kept: Vec<usize> = (0..self.h.n_blocks()).filter(|b| removed & (1 << b) == 0).collect();
                let idx = self.h.indices_of_blocks(&kept);
                let a = shifted(&principal_submatrix(self.h.matrix(), &idx), c(self.lambda));
                let inv = linalg::inverse(&a).ok()?;
                if norm_1(&a) * norm_1(&inv) > SINGULAR_CONDITION {
                    return None;
                }
                // block start offsets of the kept blocks inside the submatrix
                let mut starts = vec![usize::MAX; self.h.n_blocks()];
                let mut o = 0;
                for &b in &kept {
                    starts[b] = o;
                    o += self.h.block_size(b);
                }
                let e = Rc::new((starts, inv));
                self.memo.insert(removed, e.clone());
                e
            }
        };
        let (starts, inv) = &*entry;
        let n = self.h.block_size(site);
        Some(inv.view((starts[site], starts[site]), (n, n)).into_owned())
    }
}

fn check_lattice(h: &BlockHamiltonian) -> Result<&[Site]> {
    let sites = h.sites().ok_or_else(|| Error::invalid("walk expansion needs a lattice Hamiltonian"))?;
    if sites.len() > 64 {
        return Err(Error::invalid("walk expansion supports at most 64 sites"));
    }
    Ok(sites)
}

fn singular_prefix(h: &BlockHamiltonian, prefix: &[usize]) -> Error {
    let sites = h.sites().unwrap_or(&[]);
    let labels: Vec<&Site> = prefix.iter().filter_map(|&p| sites.get(p)).collect();
    Error::Singular(format!("depleted restriction is singular after walk prefix {labels:?}"))
}

/// Partial sum of the walk expansion of `G_λ[H](x, y)` over walks of length `≤ k_max`.
///
/// `x` and `y` are block (site) indices of `h`. With `k_max = |Λ| − 1` the sum is exact.
pub fn walk_expansion_resolvent(h: &BlockHamiltonian, lambda: f64, x: usize, y: usize, k_max: usize) -> Result<CMat> {
    let sites = check_lattice(h)?;
    h.check_block(x)?;
    h.check_block(y)?;
    let mut dep = Depleted { h, lambda, memo: HashMap::new() };
    let g0 = dep.diag_block(0, x).ok_or_else(|| singular_prefix(h, &[]))?;
    if x == y {
        return Ok(g0);
    }
    let adj = adjacency(sites);
    let mut total = CMat::zeros(h.block_size(x), h.block_size(y));
    struct Walker<'a, 'b> {
        dep: &'a mut Depleted<'b>,
        adj: &'a [Vec<usize>],
        sites: &'a [Site],
        y: usize,
        k_max: usize,
        total: &'a mut CMat,
        path: Vec<usize>,
    }
    impl Walker<'_, '_> {
        // prefix = −… product up to G_{Λ∖{π₀..π_{i−1}}}(π_i, π_i);  removed = {π₀..π_{i−1}}
        fn step(&mut self, prefix: &CMat, removed: u64) -> Result<()> {
            let here = *self.path.last().unwrap();
            let removed_here = removed | (1 << here);
            let steps = self.path.len() - 1;
            for k in 0..self.adj[here].len() {
                let next = self.adj[here][k];
                if removed_here & (1 << next) != 0 {
                    continue;
                }
                if steps + 1 + l1_distance(&self.sites[next], &self.sites[self.y]) as usize > self.k_max {
                    continue;
                }
                self.path.push(next);
                let g = match self.dep.diag_block(removed_here, next) {
                    Some(g) => g,
                    None => return Err(singular_prefix(self.dep.h, &self.path)),
                };
                let hop = self.dep.h.block(here, next);
                let term = -(prefix * hop * g);
                if next == self.y {
                    *self.total += &term;
                } else {
                    self.step(&term, removed_here)?;
                }
                self.path.pop();
            }
            Ok(())
        }
    }
    let mut w = Walker { dep: &mut dep, adj: &adj, sites, y, k_max, total: &mut total, path: vec![x] };
    w.step(&g0, 0)?;
    Ok(total)
}

/// `−Σ_{π₁∼x} G_Λ(x, x) H(x, π₁) G_{Λ∖{x}}(π₁, y)`, the first step of the expansion.
pub fn one_step_expansion(h: &BlockHamiltonian, lambda: f64, x: usize, y: usize) -> Result<CMat> {
    let sites = check_lattice(h)?;
    h.check_block(x)?;
    h.check_block(y)?;
    if x == y {
        return Err(Error::invalid("one-step expansion needs x ≠ y"));
    }
    let gxx = crate::spectra::resolvent_block(h, lambda, x, x)?;
    let rest: Vec<usize> = (0..h.n_blocks()).filter(|&b| b != x).collect();
    let depleted = crate::operators::restrict_blocks(h, &rest)?;
    let pos = |b: usize| rest.iter().position(|&r| r == b).unwrap();
    let mut total = CMat::zeros(h.block_size(x), h.block_size(y));
    for (p, site) in sites.iter().enumerate() {
        if p == x || l1_distance(site, &sites[x]) != 1 {
            continue;
        }
        let g = crate::spectra::resolvent_block(&depleted, lambda, pos(p), pos(y))?;
        total -= &gxx * h.block(x, p) * g;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{RngStream, SymmetryClass};
    use crate::operators::{build_orbital_hamiltonian, OrbitalKind, OrbitalModelSpec};
    use crate::spectra::resolvent_block;

    fn brute_force_count(sites: &[Site], x: usize, y: usize, k_max: usize) -> usize {
        // every sequence of distinct vertices, filtered for adjacency
        fn rec(sites: &[Site], path: &mut Vec<usize>, y: usize, k_max: usize, n: &mut usize) {
            let last = *path.last().unwrap();
            if last == y {
                let ok = path.windows(2).all(|w| l1_distance(&sites[w[0]], &sites[w[1]]) == 1);
                if ok {
                    *n += 1;
                }
                return;
            }
            if path.len() > k_max {
                return;
            }
            for v in 0..sites.len() {
                if !path.contains(&v) {
                    path.push(v);
                    rec(sites, path, y, k_max, n);
                    path.pop();
                }
            }
        }
        let mut n = 0;
        rec(sites, &mut vec![x], y, k_max, &mut n);
        n
    }

    #[test]
    fn path_graph_has_one_walk() {
        let sites: Vec<Site> = vec![vec![0], vec![1], vec![2]];
        let w = enumerate_sa_walks(&sites, 0, 2, 2);
        assert_eq!(w, vec![SAWalk { vertices: vec![0, 1, 2] }]);
        assert!(enumerate_sa_walks(&sites, 0, 2, 1).is_empty());
    }

    #[test]
    fn square_counts_match_brute_force() {
        let b = LatticeBox::new(2, 1).unwrap();
        let sites = b.sites();
        let x = b.index(&[0, 0]).unwrap();
        let y = b.index(&[1, 1]).unwrap();
        for k in 0..=8 {
            let w = enumerate_sa_walks(&sites, x, y, k);
            assert_eq!(w.len(), brute_force_count(&sites, x, y, k), "k_max={k}");
            for walk in &w {
                let mut v = walk.vertices.clone();
                v.sort_unstable();
                v.dedup();
                assert_eq!(v.len(), walk.vertices.len());
            }
        }
        let all = enumerate_sa_walks(&sites, x, y, 8);
        for k in 1..=8 {
            let nk = all.iter().filter(|w| w.len() == k).count();
            assert!(nk <= 4usize.pow(k as u32));
        }
    }

    fn model(kind: OrbitalKind, sym: SymmetryClass, g: f64, seed: u64) -> BlockHamiltonian {
        let spec = OrbitalModelSpec::new(LatticeBox::new(1, 2).unwrap(), 2, g, sym, kind).unwrap();
        let h = build_orbital_hamiltonian(&spec, &mut RngStream::new(seed, 0)).unwrap();
        crate::operators::restrict_blocks(&h, &[0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn full_depth_is_exact() {
        let h = model(OrbitalKind::WegnerOrbital, SymmetryClass::Orthogonal, 0.05, 1);
        let direct = resolvent_block(&h, 0.1, 0, 3).unwrap();
        let walk = walk_expansion_resolvent(&h, 0.1, 0, 3, 3).unwrap();
        assert!((&walk - &direct).norm() <= 1e-8 * direct.norm());
        let h = model(OrbitalKind::BlockAnderson, SymmetryClass::Unitary, 0.7, 2);
        let direct = resolvent_block(&h, 0.3, 3, 1).unwrap();
        let walk = walk_expansion_resolvent(&h, 0.3, 3, 1, 3).unwrap();
        assert!((&walk - &direct).norm() <= 1e-8 * direct.norm());
    }

    #[test]
    fn trivial_cases() {
        let h = model(OrbitalKind::WegnerOrbital, SymmetryClass::Unitary, 0.3, 3);
        assert_eq!(walk_expansion_resolvent(&h, 0.2, 1, 1, 0).unwrap(), resolvent_block(&h, 0.2, 1, 1).unwrap());
        let h0 = model(OrbitalKind::WegnerOrbital, SymmetryClass::Unitary, 0.0, 3);
        assert!(walk_expansion_resolvent(&h0, 0.2, 0, 2, 3).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn one_step_identity() {
        for (kind, sym) in [
            (OrbitalKind::WegnerOrbital, SymmetryClass::Orthogonal),
            (OrbitalKind::BlockAnderson, SymmetryClass::Unitary),
        ] {
            let h = model(kind, sym, 0.4, 7);
            let direct = resolvent_block(&h, 0.05, 1, 3).unwrap();
            let step = one_step_expansion(&h, 0.05, 1, 3).unwrap();
            assert!((&step - &direct).norm() <= 1e-8 * direct.norm());
        }
    }

    #[test]
    fn singular_prefix_reported() {
        // λ equal to the (removed-site-independent) eigenvalue of an isolated site
        let m = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![c(1.0), c(2.0)]));
        let mut m = m;
        m[(0, 1)] = c(0.5);
        m[(1, 0)] = c(0.5);
        let h = BlockHamiltonian::lattice(m, 1, SymmetryClass::Orthogonal, vec![vec![0], vec![1]]).unwrap();
        let err = walk_expansion_resolvent(&h, 2.0, 0, 1, 1).unwrap_err();
        assert!(matches!(err, Error::Singular(ref s) if s.contains("prefix")), "{err}");
    }
}
