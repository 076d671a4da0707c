//! Joint-typicality decoding of bin-index pairs.

use std::collections::BTreeMap;

use crate::typicality::jointly_typical;

/// Decoder output for one cell (i, j), as member indices of the two typical sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decoded {
    Pair(usize, usize),
    Sentinel,
}

/// Map (i, j) → unique jointly typical codeword pair, or the sentinel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecoderTable {
    cells: BTreeMap<(usize, usize), Decoded>,
    /// Cells with at least one candidate.
    pub occupied: usize,
    /// Cells with more than one candidate.
    pub collisions: usize,
}

impl DecoderTable {
    /// F(i, j); cells with index 0 or without a unique candidate give the sentinel.
    pub fn decode(&self, i: usize, j: usize) -> Decoded {
        if i == 0 || j == 0 {
            return Decoded::Sentinel;
        }
        self.cells.get(&(i, j)).copied().unwrap_or(Decoded::Sentinel)
    }

    /// Cells that decode to a pair.
    pub fn decoded_cells(&self) -> impl Iterator<Item = (&(usize, usize), &Decoded)> {
        self.cells.iter().filter(|(_, d)| matches!(d, Decoded::Pair(..)))
    }

    pub fn collision_rate(&self) -> f64 {
        if self.occupied == 0 {
            0.0
        } else {
            self.collisions as f64 / self.occupied as f64
        }
    }
}

/// Codewords of one side for one μ: distinct member indices with their bins.
pub struct BinnedCodebook<'a> {
    pub members: &'a [Vec<usize>],
    pub codewords: &'a [usize],
    pub bin_of: &'a dyn Fn(usize) -> usize,
}

fn distinct(c: &[usize]) -> Vec<usize> {
    let mut v = c.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// D_{i,j} = {(uⁿ, vⁿ) codewords in bins (i, j), jointly δ-typical}; F(i,j) is its
/// only element when |D_{i,j}| = 1.
pub fn build_decoder(
    a: &BinnedCodebook<'_>,
    b: &BinnedCodebook<'_>,
    p_uv: &[Vec<f64>],
    delta: f64,
) -> DecoderTable {
    let mut cands: BTreeMap<(usize, usize), (usize, Decoded)> = BTreeMap::new();
    let ua = distinct(a.codewords);
    let vb = distinct(b.codewords);
    for &u in &ua {
        for &v in &vb {
            if !jointly_typical(&a.members[u], &b.members[v], p_uv, delta) {
                continue;
            }
            let cell = ((a.bin_of)(u), (b.bin_of)(v));
            let e = cands.entry(cell).or_insert((0, Decoded::Pair(u, v)));
            e.0 += 1;
        }
    }
    let mut t = DecoderTable::default();
    for (cell, (count, first)) in cands {
        t.occupied += 1;
        if count > 1 {
            t.collisions += 1;
            t.cells.insert(cell, Decoded::Sentinel);
        } else {
            t.cells.insert(cell, first);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr() -> Vec<Vec<f64>> {
        vec![vec![0.5, 0.0], vec![0.0, 0.5]]
    }

    #[test]
    fn single_pair_single_bin() {
        let members = vec![vec![0, 1]];
        let one = |_: usize| 1;
        let a = BinnedCodebook { members: &members, codewords: &[0], bin_of: &one };
        let t = build_decoder(&a, &a, &corr(), 0.1);
        assert_eq!(t.decode(1, 1), Decoded::Pair(0, 0));
        assert_eq!(t.decode(0, 1), Decoded::Sentinel);
        assert_eq!(t.collisions, 0);
    }

    #[test]
    fn empty_cell_and_collision() {
        let members = vec![vec![0, 1], vec![1, 0], vec![1, 1]];
        let one = |_: usize| 1;
        let a = BinnedCodebook { members: &members, codewords: &[0, 1], bin_of: &one };
        let t = build_decoder(&a, &a, &corr(), 0.1);
        assert_eq!(t.decode(1, 1), Decoded::Sentinel);
        assert_eq!(t.collisions, 1);
        assert_eq!(t.decode(2, 2), Decoded::Sentinel);

        let own = |m: usize| m + 1;
        let a = BinnedCodebook { members: &members, codewords: &[0, 1], bin_of: &own };
        let t = build_decoder(&a, &a, &corr(), 0.1);
        assert_eq!(t.collisions, 0);
        assert_eq!(t.decode(1, 1), Decoded::Pair(0, 0));
        assert_eq!(t.decode(2, 2), Decoded::Pair(1, 1));
        assert_eq!(t.decode(1, 2), Decoded::Sentinel);
    }
}
