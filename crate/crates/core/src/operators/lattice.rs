use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A lattice site `x ∈ Z^d`.
pub type Site = Vec<i64>;

/// The box `Λ_L^d = {−L, …, L}^d` with lexicographic site indexing
/// (first coordinate most significant).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub d: usize,
    pub l: u32,
}

impl LatticeBox {
    pub fn new(d: usize, l: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("lattice dimension d must be >= 1"));
        }
        let side = 2 * l as u64 + 1;
        if side.checked_pow(d as u32).is_none_or(|n| n > (1 << 32)) {
            return Err(Error::invalid(format!("box with L={l}, d={d} is too large")));
        }
        Ok(LatticeBox { d, l })
    }

    pub fn side(&self) -> usize {
        2 * self.l as usize + 1
    }

    pub fn size(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let l = self.l as i64;
        x.len() == self.d && x.iter().all(|&c| (-l..=l).contains(&c))
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side();
        Some(x.iter().fold(0, |acc, &c| acc * side + (c + self.l as i64) as usize))
    }

    pub fn site(&self, mut index: usize) -> Site {
        assert!(index < self.size(), "site index {index} outside the box");
        let side = self.side();
        let mut x = vec![0i64; self.d];
        for slot in x.iter_mut().rev() {
            *slot = (index % side) as i64 - self.l as i64;
            index /= side;
        }
        x
    }

    pub fn sites(&self) -> Vec<Site> {
        (0..self.size()).map(|i| self.site(i)).collect()
    }

    /// In-box nearest neighbours of site `index`, in increasing index order.
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let x = self.site(index);
        let mut out = Vec::with_capacity(2 * self.d);
        for axis in 0..self.d {
            for step in [-1i64, 1] {
                let mut y = x.clone();
                y[axis] += step;
                if let Some(j) = self.index(&y) {
                    out.push(j);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Unordered nearest-neighbour edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.size() {
            for j in self.neighbors(i) {
                if j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

pub fn l1_distance(x: &[i64], y: &[i64]) -> i64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lexicographic_order() {
        let b = LatticeBox::new(2, 1).unwrap();
        assert_eq!(b.size(), 9);
        assert_eq!(b.site(0), vec![-1, -1]);
        assert_eq!(b.site(1), vec![-1, 0]);
        assert_eq!(b.site(3), vec![0, -1]);
        assert_eq!(b.index(&[1, 1]), Some(8));
        assert_eq!(b.index(&[2, 0]), None);
    }

    #[test]
    fn edge_count() {
        // d (2L+1)^{d−1} · 2L edges
        let b = LatticeBox::new(2, 2).unwrap();
        assert_eq!(b.edges().len(), 2 * 5 * 4);
        let b = LatticeBox::new(1, 0).unwrap();
        assert!(b.edges().is_empty());
    }

    proptest! {
        #[test]
        fn indexing_is_bijective(d in 1usize..4, l in 0u32..4) {
            let b = LatticeBox::new(d, l).unwrap();
            for i in 0..b.size() {
                let x = b.site(i);
                prop_assert!(b.contains(&x));
                prop_assert_eq!(b.index(&x), Some(i));
                for j in b.neighbors(i) {
                    prop_assert_eq!(l1_distance(&x, &b.site(j)), 1);
                }
            }
        }
    }
}
