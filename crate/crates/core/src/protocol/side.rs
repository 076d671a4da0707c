//! One party's share of the protocol: ensemble, projectors, codebooks and bins.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, EIG_CUTOFF};
use crate::measurement::canonical_ensemble;
use crate::povm::{Ensemble, Povm};
use crate::state::DensityOperator;
use crate::typicality::{pruned_distribution, smallest_atypical, ProjectorBundle, PrunedDistribution};

/// Which random object a substream feeds.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    CodebookA = 0,
    CodebookB = 1,
    BinsA = 2,
    BinsB = 3,
    Packing = 4,
    Covering = 5,
    Collision = 6,
}

/// Independent generator for (seed, purpose, index); order of use never matters.
pub fn substream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) | index);
    rng
}

/// Sequence that undecodable cells map to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sentinel {
    /// Lexicographically smallest atypical sequence.
    Sequence(Vec<usize>),
    /// Every sequence is typical: an out-of-alphabet symbol.
    Reserved,
}

/// Precomputed, seed-independent data for one side.
#[derive(Debug, Clone)]
pub struct SideModel {
    pub povm: Povm,
    pub rho: DensityOperator,
    /// POVM outcome index of each ensemble letter.
    pub kept: Vec<usize>,
    pub ensemble: Ensemble,
    pub bundle: ProjectorBundle,
    pub pruned: PrunedDistribution,
    /// ρ^{-1/2} Λ_{xⁿ} ρ^{-1/2} for each typical member, before the γ weight.
    pub base_ops: Vec<CMat>,
    /// Rank-one factors: base = Σ_k f_k f_k†.
    pub factors: Vec<Vec<CVec>>,
    pub sentinel: Sentinel,
}

impl SideModel {
    pub fn new(rho: &DensityOperator, povm: &Povm, n: usize, delta: f64) -> Result<Self> {
        if !povm.is_complete() {
            return Err(Error::InvalidPovm("each side needs a complete POVM".into()));
        }
        let ce = canonical_ensemble(rho, povm)?;
        let bundle = ProjectorBundle::new(rho, &ce.ensemble, n, delta)?;
        let pruned = pruned_distribution(&bundle.typical)?;
        let (_, pinv1) = linalg::matrix_sqrt_and_pinv_sqrt(rho.matrix(), EIG_CUTOFF)?;
        let pinv = linalg::kron_all(std::iter::repeat_n(&pinv1, n));
        let mut base_ops = Vec::with_capacity(bundle.lambdas.len());
        let mut factors = Vec::with_capacity(bundle.lambdas.len());
        for pair in &bundle.lambdas {
            let b = linalg::hermitize(&(&pinv * &pair.lambda * &pinv));
            let e = linalg::eigh(&b);
            let floor = e.floor();
            let fs = (0..e.values.len())
                .filter(|&k| e.values[k] > floor)
                .map(|k| e.vector(k).scale(e.values[k].sqrt()))
                .collect();
            factors.push(fs);
            base_ops.push(b);
        }
        let sentinel = match smallest_atypical(ce.ensemble.weights(), n, delta)? {
            Some(s) => Sentinel::Sequence(s),
            None => Sentinel::Reserved,
        };
        Ok(Self {
            povm: povm.clone(),
            rho: rho.clone(),
            kept: ce.kept,
            ensemble: ce.ensemble,
            bundle,
            pruned,
            base_ops,
            factors,
            sentinel,
        })
    }

    pub fn n(&self) -> usize {
        self.bundle.n
    }

    pub fn epsilon(&self) -> f64 {
        self.bundle.epsilon
    }

    pub fn members(&self) -> &[Vec<usize>] {
        self.bundle.typical.members()
    }

    /// POVM outcome labels of an ensemble-letter sequence.
    pub fn labels(&self, seq: &[usize]) -> Vec<&str> {
        seq.iter().map(|&a| self.povm.outcomes()[self.kept[a]].as_str()).collect()
    }

    /// (1−ε)/((1+η)L).
    pub fn gamma_unit(&self, l: usize, eta: f64) -> f64 {
        (1.0 - self.epsilon()) / ((1.0 + eta) * l as f64)
    }
}

/// Codewords (as indices into the typical set) for each common-randomness value.
#[derive(Debug, Clone, PartialEq)]
pub struct SideCodebook {
    pub codewords: Vec<Vec<usize>>,
}

impl SideCodebook {
    /// Draws `size` codewords per μ from the pruned distribution.
    pub fn draw(
        pruned: &PrunedDistribution,
        size: usize,
        count: usize,
        seed: u64,
        stream: Stream,
    ) -> Self {
        let codewords = (0..count)
            .map(|mu| {
                let mut rng = substream(seed, stream, mu as u64);
                (0..size).map(|_| pruned.sample_index(&mut rng)).collect()
            })
            .collect();
        Self { codewords }
    }

    pub fn size(&self) -> usize {
        self.codewords.first().map_or(0, |c| c.len())
    }

    pub fn count(&self) -> usize {
        self.codewords.len()
    }

    /// (member, multiplicity) pairs for one μ, by member index.
    pub fn multiplicities(&self, mu: usize) -> Vec<(usize, usize)> {
        let mut c = self.codewords[mu].clone();
        c.sort_unstable();
        let mut out: Vec<(usize, usize)> = Vec::new();
        for m in c {
            match out.last_mut() {
                Some((x, k)) if *x == m => *k += 1,
                _ => out.push((m, 1)),
            }
        }
        out
    }
}

/// Bin index in 1..=bins of every typical member, per μ.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMap {
    pub bins: usize,
    pub assignment: Vec<Vec<usize>>,
}

impl BinMap {
    pub fn draw(members: usize, bins: usize, count: usize, seed: u64, stream: Stream) -> Self {
        let assignment = (0..count)
            .map(|mu| {
                let mut rng = substream(seed, stream, mu as u64);
                (0..members).map(|_| rng.random_range(1..=bins)).collect()
            })
            .collect();
        Self { bins, assignment }
    }

    /// Every member in its own bin, numbered from 1.
    pub fn singletons(members: usize, count: usize) -> Self {
        Self {
            bins: members,
            assignment: vec![(1..=members).collect(); count],
        }
    }

    pub fn bin(&self, mu: usize, member: usize) -> usize {
        self.assignment[mu][member]
    }

    /// (smallest, largest) bin occupancy over all μ.
    pub fn spread(&self) -> (usize, usize) {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for a in &self.assignment {
            let mut sizes = vec![0usize; self.bins + 1];
            for &b in a {
                sizes[b] += 1;
            }
            for &s in &sizes[1..] {
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (if lo == usize::MAX { 0 } else { lo }, hi)
    }
}
