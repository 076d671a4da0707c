//! Full-dimensional construction of the simulated measurement, for small n.

use std::collections::BTreeMap;

use super::decoder::{Decoded, DecoderTable};
use super::engine::{to_interleaved, PairKey, ProtocolSetup, Realization, ZKey};
use super::lemmas::ReconstructedOutcome;
use super::params::ProtocolParams;
use super::side::{SideCodebook, SideModel, Stream};
use crate::error::{Error, Result};
use crate::linalg::{self, check_dim_cap, pow_u128, CMat};
use crate::measurement::{compose_decomposition, faithfulness_terms, FaithfulnessTerms};
use crate::povm::Povm;
use crate::state::DensityOperator;
use crate::typicality::{index_sequence, PrunedDistribution};

/// Codebooks of both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub a: SideCodebook,
    pub b: SideCodebook,
}

/// Independent draws of 2^{nR̃} codewords per μ from each pruned distribution.
pub fn generate_codebooks(
    params: &ProtocolParams,
    pruned_u: &PrunedDistribution,
    pruned_v: &PrunedDistribution,
) -> Result<Codebook> {
    params.validate()?;
    let (l1, l2, _, _) = params.counts()?;
    Ok(Codebook {
        a: SideCodebook::draw(pruned_u, l1, params.n1, params.seed, Stream::CodebookA),
        b: SideCodebook::draw(pruned_v, l2, params.n2, params.seed, Stream::CodebookB),
    })
}

/// A_{uⁿ} = γ_{uⁿ} ρ^{-1/2} Λ_{uⁿ} ρ^{-1/2} for every typical member (zero when
/// uⁿ is not a codeword), with γ = (1−ε)/(1+η) · |{l : Uⁿ(l) = uⁿ}| / L.
pub fn build_approx_operators(
    side: &SideModel,
    codebook: &SideCodebook,
    mu: usize,
    eta: f64,
) -> Result<Vec<CMat>> {
    if mu >= codebook.count() {
        return Err(Error::InvalidParameter(format!("no codebook for index {mu}")));
    }
    let d = side.base_ops.first().map_or(0, |b| b.nrows());
    let unit = side.gamma_unit(codebook.size(), eta);
    let mut ops = vec![linalg::zeros(d, d); side.base_ops.len()];
    for (m, c) in codebook.multiplicities(mu) {
        ops[m] = side.base_ops[m].scale(unit * c as f64);
    }
    Ok(ops)
}

/// Γ_i = Σ_{j : bin(j) = i} ops_j for i = 1..=bins, returned with Γ_1 first.
pub fn bin_povm(ops: &[CMat], assignment: &[usize], bins: usize) -> Result<Vec<CMat>> {
    if assignment.len() < ops.len() {
        return Err(Error::InvalidParameter(format!(
            "{} operators but only {} bin assignments",
            ops.len(),
            assignment.len()
        )));
    }
    let d = ops.first().map_or(0, |o| o.nrows());
    let mut out = vec![linalg::zeros(d, d); bins];
    for (op, &b) in ops.iter().zip(assignment) {
        if b == 0 || b > bins {
            return Err(Error::InvalidParameter(format!("bin {b} outside 1..={bins}")));
        }
        out[b - 1] += op;
    }
    Ok(out)
}

/// Λ̃_k = 1/(N₁N₂) Σ_μ Σ_{i,j ≥ 1} P(k | F^{(μ)}(i,j)) Γ_i^{(μ₁)} ⊗ Γ_j^{(μ₂)}, on
/// A^{⊗n} ⊗ B^{⊗n}. `binned_a[μ₁][i−1]` is Γ_i^{(μ₁)}; `decoders[μ₁][μ₂]` is F^{(μ)}.
pub fn overall_povm<K: Ord>(
    binned_a: &[Vec<CMat>],
    binned_b: &[Vec<CMat>],
    decoders: &[Vec<DecoderTable>],
    integrate: impl Fn(Decoded) -> Result<Vec<(K, f64)>>,
) -> Result<BTreeMap<K, CMat>> {
    if decoders.len() != binned_a.len() || decoders.iter().any(|r| r.len() != binned_b.len()) {
        return Err(Error::DimensionMismatch("one decoder per (μ₁, μ₂)".into()));
    }
    let norm = 1.0 / (binned_a.len() * binned_b.len()) as f64;
    let mut out: BTreeMap<K, CMat> = BTreeMap::new();
    for (ga, row) in binned_a.iter().zip(decoders) {
        for (gb, dec) in binned_b.iter().zip(row) {
            for (i, a) in ga.iter().enumerate() {
                for (j, b) in gb.iter().enumerate() {
                    let ab = linalg::kron(a, b);
                    for (k, p) in integrate(dec.decode(i + 1, j + 1))? {
                        let w = ab.scale(norm * p);
                        match out.get_mut(&k) {
                            Some(x) => *x += w,
                            None => {
                                out.insert(k, w);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Full-dimensional operators of one trial, on (A⊗B)^{⊗n}.
#[derive(Debug, Clone)]
pub struct DenseTrial {
    pub realization: Realization,
    /// Operators per decoded (uⁿ, vⁿ).
    pub pair_ops: BTreeMap<PairKey, CMat>,
    /// Operators per zⁿ.
    pub z_ops: BTreeMap<ZKey, CMat>,
    /// (1/N₁)Σ_μ ΣΓ^A ⊗ (1/N₂)Σ_μ ΣΓ^B.
    pub product_of_sums: CMat,
}

impl ProtocolSetup {
    pub fn dense_trial(&self, p: &ProtocolParams) -> Result<DenseTrial> {
        let real = self.realize(p)?;
        let (da, db) = self.decomposition.dims();
        let n = p.n;
        let bin = |side: &SideModel, cb: &SideCodebook, bins: &super::side::BinMap| {
            (0..cb.count())
                .map(|mu| {
                    let ops = build_approx_operators(side, cb, mu, p.eta)?;
                    bin_povm(&ops, &bins.assignment[mu], bins.bins)
                })
                .collect::<Result<Vec<_>>>()
        };
        let ga = bin(&self.a, &real.codebook_a, &real.bins_a)?;
        let gb = bin(&self.b, &real.codebook_b, &real.bins_b)?;
        let pair_native = overall_povm(&ga, &gb, &real.decoders, |d| Ok(vec![(self.pair_key(d), 1.0)]))?;
        let mut pair_ops = BTreeMap::new();
        let mut z_ops: BTreeMap<ZKey, CMat> = BTreeMap::new();
        for (k, op) in pair_native {
            let op = to_interleaved(&op, da, db, n)?;
            for (z, pz) in self.z_distribution(&k)? {
                let w = op.scale(pz);
                match z_ops.get_mut(&z) {
                    Some(x) => *x += w,
                    None => {
                        z_ops.insert(z, w);
                    }
                }
            }
            pair_ops.insert(k, op);
        }
        let avg = |g: &[Vec<CMat>]| {
            let d = g[0][0].nrows();
            let mut s = linalg::zeros(d, d);
            for row in g {
                for x in row {
                    s += x;
                }
            }
            s.unscale(g.len() as f64)
        };
        let product_of_sums = to_interleaved(&linalg::kron(&avg(&ga), &avg(&gb)), da, db, n)?;
        Ok(DenseTrial {
            realization: real,
            pair_ops,
            z_ops,
            product_of_sums,
        })
    }

    /// (M_AB)^{⊗n} with outcome labels z₁|z₂|…
    pub fn target_power(&self) -> Result<Povm> {
        let composed = compose_decomposition(&self.decomposition)?;
        let k = composed.len();
        let total = k.pow(self.n as u32);
        let mut labels = Vec::with_capacity(total);
        let mut ops = Vec::with_capacity(total);
        for idx in 0..total {
            let z = index_sequence(idx, k, self.n);
            labels.push(self.z_label(&Some(z.clone())));
            ops.push(linalg::kron_all(z.iter().map(|&x| &composed.operators()[x])));
        }
        Povm::new(labels, ops, composed.dim().pow(self.n as u32))
    }

    /// The simulated measurement over zⁿ as a labelled (sub-)POVM.
    pub fn dense_povm(&self, t: &DenseTrial) -> Result<Povm> {
        let d = self.rho_ab.dim().pow(self.n as u32);
        let labels = t.z_ops.keys().map(|k| self.z_label(k)).collect();
        Povm::unchecked(labels, t.z_ops.values().cloned().collect(), d)
    }

    /// Faithfulness terms of a dense trial against the target, from full matrices.
    pub fn dense_faithfulness(&self, t: &DenseTrial) -> Result<FaithfulnessTerms> {
        let rho_n = self.rho_ab.tensor_power(self.n)?;
        faithfulness_terms(&rho_n, &self.target_power()?, &self.dense_povm(t)?)
    }

    /// The ideal product measurement (Λ_{uⁿ} ⊗ Λ_{vⁿ}) per letter pair, on (A⊗B)^{⊗n}.
    pub fn target_pair_ops(&self) -> Result<BTreeMap<PairKey, CMat>> {
        let (ka, kb) = (self.a.kept.len(), self.b.kept.len());
        let total = pow_u128(ka * kb, self.n);
        check_dim_cap("ideal outcome enumeration", total)?;
        let single: Vec<CMat> = (0..ka * kb)
            .map(|x| {
                linalg::kron(
                    &self.decomposition.povm_a().operators()[self.a.kept[x / kb]],
                    &self.decomposition.povm_b().operators()[self.b.kept[x % kb]],
                )
            })
            .collect();
        let mut out = BTreeMap::new();
        for idx in 0..total as usize {
            let s = index_sequence(idx, ka * kb, self.n);
            let u = s.iter().map(|x| x / kb).collect();
            let v = s.iter().map(|x| x % kb).collect();
            out.insert(PairKey::Pair(u, v), linalg::kron_all(s.iter().map(|&x| &single[x])));
        }
        Ok(out)
    }

    /// Attaches reconstructions S_{u_i, v_i} (indexed by POVM outcome) to each
    /// decoded pair; the reserved key gets the maximally mixed state.
    pub fn reconstructed(
        &self,
        ops: &BTreeMap<PairKey, CMat>,
        recon: impl Fn(usize, usize) -> Result<DensityOperator>,
        out_dim: usize,
    ) -> Result<Vec<ReconstructedOutcome>> {
        ops.iter()
            .map(|(k, op)| {
                let states = match k {
                    PairKey::Pair(u, v) => u
                        .iter()
                        .zip(v)
                        .map(|(&a, &b)| recon(self.a.kept[a], self.b.kept[b]))
                        .collect::<Result<Vec<_>>>()?,
                    PairKey::Reserved => vec![DensityOperator::maximally_mixed(out_dim); self.n],
                };
                Ok(ReconstructedOutcome {
                    operator: op.clone(),
                    states,
                })
            })
            .collect()
    }
}
