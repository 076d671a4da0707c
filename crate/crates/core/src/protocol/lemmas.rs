//! Numerical checks of the covering, packing and binning steps in isolation,
//! and the distortion of a simulated measurement followed by reconstruction.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::decoder::{build_decoder, BinnedCodebook};
use super::params::{rate_count, ProtocolParams};
use super::side::{substream, BinMap, SideCodebook, Stream};
use crate::error::{Error, Result};
use crate::linalg::{self, check_dim_cap, pow_u128, CMat};
use crate::measurement::{faithfulness_distance, SeparableDecomposition};
use crate::povm::{Ensemble, Povm};
use crate::state::DensityOperator;
use crate::typicality::{jointly_typical, pruned_distribution, sequence_probability, typical_set};

/// Largest diagonal accumulated by the commuting fast path of the packing check.
const DIAGONAL_CAP: u128 = 1 << 24;

/// Faithfulness of the two one-sided approximations and of their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualCovering {
    pub f_a: f64,
    pub f_b: f64,
    pub f_joint: f64,
}

impl MutualCovering {
    /// F_joint ≤ F_A + F_B within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.f_joint <= self.f_a + self.f_b + tol
    }
}

/// Distances of M̃_A, M̃_B and M̃_A⊗M̃_B from M_A, M_B and M_A⊗M_B on ρ_AB.
pub fn mutual_covering_check(
    rho_ab: &DensityOperator,
    target_a: &Povm,
    target_b: &Povm,
    approx_a: &Povm,
    approx_b: &Povm,
) -> Result<MutualCovering> {
    let rho_a = rho_ab.reduce(&[0])?;
    let rho_b = rho_ab.reduce(&[1])?;
    Ok(MutualCovering {
        f_a: faithfulness_distance(&rho_a, target_a, approx_a)?,
        f_b: faithfulness_distance(&rho_b, target_b, approx_b)?,
        f_joint: faithfulness_distance(
            rho_ab,
            &target_a.tensor(target_b),
            &approx_a.tensor(approx_b),
        )?,
    })
}

/// Σ_y ‖√ρ_AB (Γ ⊗ Λ_y) √ρ_AB‖₁ and ‖√ρ_A Γ √ρ_A‖₁ for Hermitian Γ on A.
/// The first never exceeds the second.
pub fn separate_check(rho_ab: &DensityOperator, gamma: &CMat, povm_b: &Povm) -> Result<(f64, f64)> {
    let dims = rho_ab.dims();
    if dims.len() != 2 || gamma.nrows() != dims[0] || povm_b.dim() != dims[1] {
        return Err(Error::DimensionMismatch(format!(
            "Γ is {}×{}, B measurement on {}, state dims {:?}",
            gamma.nrows(),
            gamma.ncols(),
            povm_b.dim(),
            dims
        )));
    }
    let s = rho_ab.sqrt();
    let lhs = povm_b
        .operators()
        .iter()
        .map(|l| linalg::trace_norm_hermitian(&linalg::hermitize(&(&s * linalg::kron(gamma, l) * &s))))
        .sum();
    let sa = rho_ab.reduce(&[0])?.sqrt();
    let rhs = linalg::trace_norm_hermitian(&linalg::hermitize(&(&sa * gamma * &sa)));
    Ok((lhs, rhs))
}

/// Single-letter operators and P_UV = Tr{ρ_AB (Λ_u ⊗ Λ_v)} over full alphabets.
#[derive(Debug, Clone)]
pub struct PackingInstance {
    pub ops_a: Vec<CMat>,
    pub ops_b: Vec<CMat>,
    pub p_uv: Vec<Vec<f64>>,
}

impl PackingInstance {
    pub fn new(rho_ab: &DensityOperator, d: &SeparableDecomposition) -> Self {
        let a = d.povm_a().operators();
        let b = d.povm_b().operators();
        let p_uv = a
            .iter()
            .map(|x| {
                b.iter()
                    .map(|y| rho_ab.expectation(&linalg::kron(x, y)).max(0.0))
                    .collect()
            })
            .collect();
        Self {
            ops_a: a.to_vec(),
            ops_b: b.to_vec(),
            p_uv,
        }
    }

    pub fn p_u(&self) -> Vec<f64> {
        normalize(self.p_uv.iter().map(|r| r.iter().sum()).collect())
    }

    pub fn p_v(&self) -> Vec<f64> {
        let nv = self.p_uv.first().map_or(0, |r| r.len());
        normalize((0..nv).map(|v| self.p_uv.iter().map(|r| r[v]).sum()).collect())
    }

    fn flat(&self) -> Vec<f64> {
        normalize(self.p_uv.iter().flatten().copied().collect())
    }
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x /= s);
    }
    p
}

fn draw_iid(p: &[f64], n: usize, count: usize, seed: u64, index: u64) -> Result<Vec<Vec<usize>>> {
    let w = WeightedIndex::new(p).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let mut rng = substream(seed, Stream::Packing, index);
    Ok((0..count)
        .map(|_| (0..n).map(|_| w.sample(&mut rng)).collect())
        .collect())
}

fn with_multiplicity(words: Vec<Vec<usize>>) -> Vec<(Vec<usize>, usize)> {
    let mut m: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for w in words {
        *m.entry(w).or_default() += 1;
    }
    m.into_iter().collect()
}

fn is_diagonal(ops: &[CMat]) -> bool {
    ops.iter().all(|o| {
        (0..o.nrows()).all(|i| (0..o.ncols()).all(|j| i == j || o[(i, j)].norm() <= 1e-15))
    })
}

/// Diagonal of ⊗_i op_{s_i}.
fn diag_product(ops: &[CMat], s: &[usize]) -> Vec<f64> {
    let mut out = vec![1.0];
    for &a in s {
        let d: Vec<f64> = (0..ops[a].nrows()).map(|i| ops[a][(i, i)].re).collect();
        out = out.iter().flat_map(|x| d.iter().map(move |y| x * y)).collect();
    }
    out
}

/// ‖Σ_{l,k : (Uⁿ(l), Vⁿ(k)) jointly δ-typical} Λ_{Uⁿ(l)} ⊗ Λ_{Vⁿ(k)}‖_∞ for codewords
/// drawn i.i.d. from the marginals, 2^{nr₁} and 2^{nr₂} of them.
pub fn packing_norm_trial(
    inst: &PackingInstance,
    n: usize,
    r1: f64,
    r2: f64,
    delta: f64,
    seed: u64,
) -> Result<f64> {
    let l1 = rate_count(n, r1)?;
    let l2 = rate_count(n, r2)?;
    let us = with_multiplicity(draw_iid(&inst.p_u(), n, l1, seed, 0)?);
    let vs = with_multiplicity(draw_iid(&inst.p_v(), n, l2, seed, 1)?);
    let mut pairs = Vec::new();
    for (u, cu) in &us {
        for (v, cv) in &vs {
            if jointly_typical(u, v, &inst.p_uv, delta) {
                pairs.push((u, v, (cu * cv) as f64));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let da = pow_u128(inst.ops_a[0].nrows(), n);
    let db = pow_u128(inst.ops_b[0].nrows(), n);
    if is_diagonal(&inst.ops_a) && is_diagonal(&inst.ops_b) {
        if da * db > DIAGONAL_CAP {
            return Err(Error::CapExceeded {
                what: "packing diagonal",
                needed: da * db,
                cap: DIAGONAL_CAP,
            });
        }
        let (da, db) = (da as usize, db as usize);
        let mut m = vec![0.0; da * db];
        let mut xa_cache: BTreeMap<&Vec<usize>, Vec<f64>> = BTreeMap::new();
        for (u, v, w) in &pairs {
            let xa = xa_cache.entry(u).or_insert_with(|| diag_product(&inst.ops_a, u)).clone();
            let xb = diag_product(&inst.ops_b, v);
            for (i, a) in xa.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                let row = &mut m[i * db..(i + 1) * db];
                for (r, b) in row.iter_mut().zip(&xb) {
                    *r += w * a * b;
                }
            }
        }
        return Ok(m.into_iter().fold(0.0, f64::max));
    }
    check_dim_cap("packing operator", da * db)?;
    let (da, db) = (da as usize, db as usize);
    let mut acc = linalg::zeros(da * db, da * db);
    for (u, v, w) in &pairs {
        let a = linalg::kron_all(u.iter().map(|&x| &inst.ops_a[x]));
        let b = linalg::kron_all(v.iter().map(|&x| &inst.ops_b[x]));
        acc += linalg::kron(&a, &b).scale(*w);
    }
    Ok(linalg::operator_norm(&acc))
}

/// L₁L₂ Σ_{(uⁿ,vⁿ) ∈ T_δ(P_UV)} P_Uⁿ(uⁿ) P_Vⁿ(vⁿ): the union-bound estimate of
/// how often an independent pair looks jointly typical.
pub fn packing_union_proxy(inst: &PackingInstance, n: usize, r1: f64, r2: f64, delta: f64) -> Result<f64> {
    let l1 = rate_count(n, r1)? as f64;
    let l2 = rate_count(n, r2)? as f64;
    let nv = inst.p_uv[0].len();
    let (pu, pv) = (inst.p_u(), inst.p_v());
    let t = typical_set(&inst.flat(), n, delta)?;
    let mass: f64 = t
        .members()
        .iter()
        .map(|s| {
            let u: Vec<usize> = s.iter().map(|x| x / nv).collect();
            let v: Vec<usize> = s.iter().map(|x| x % nv).collect();
            sequence_probability(&u, &pu) * sequence_probability(&v, &pv)
        })
        .sum();
    Ok(l1 * l2 * mass)
}

/// Collisions and occupied cells summed over μ and seeds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CollisionCount {
    pub collisions: usize,
    pub occupied: usize,
}

impl CollisionCount {
    pub fn rate(&self) -> f64 {
        if self.occupied == 0 {
            0.0
        } else {
            self.collisions as f64 / self.occupied as f64
        }
    }
}

/// Classical binning experiment: codebooks from the pruned marginals, uniform
/// bins, and the joint-typicality decoder, for each seed in `seeds`.
pub fn binning_collision_rate(
    p_uv: &[Vec<f64>],
    params: &ProtocolParams,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<CollisionCount> {
    params.validate()?;
    let inst = PackingInstance {
        ops_a: Vec::new(),
        ops_b: Vec::new(),
        p_uv: p_uv.to_vec(),
    };
    let ta = pruned_distribution(&typical_set(&inst.p_u(), params.n, params.delta)?)?;
    let tb = pruned_distribution(&typical_set(&inst.p_v(), params.n, params.delta)?)?;
    let (l1, l2, k1, k2) = params.counts()?;
    let mut out = CollisionCount::default();
    for seed in seeds {
        let ca = SideCodebook::draw(&ta, l1, params.n1, seed, Stream::CodebookA);
        let cb = SideCodebook::draw(&tb, l2, params.n2, seed, Stream::CodebookB);
        let ba = BinMap::draw(ta.set().len(), k1, params.n1, seed, Stream::BinsA);
        let bb = BinMap::draw(tb.set().len(), k2, params.n2, seed, Stream::BinsB);
        for m1 in 0..params.n1 {
            for m2 in 0..params.n2 {
                let fa = |u: usize| ba.bin(m1, u);
                let fb = |v: usize| bb.bin(m2, v);
                let t = build_decoder(
                    &BinnedCodebook {
                        members: ta.set().members(),
                        codewords: &ca.codewords[m1],
                        bin_of: &fa,
                    },
                    &BinnedCodebook {
                        members: tb.set().members(),
                        codewords: &cb.codewords[m2],
                        bin_of: &fb,
                    },
                    p_uv,
                    params.delta,
                );
                out.collisions += t.collisions;
                out.occupied += t.occupied;
            }
        }
    }
    Ok(out)
}

/// ‖ρ̄^{⊗n} − (1−ε)/((1+η)L) Σ_l T_{Wⁿ(l)}‖₁ for L = 2^{n·rate} codewords drawn
/// from the pruned letter distribution of `ens`.
pub fn soft_covering_trial(
    ens: &Ensemble,
    n: usize,
    rate: f64,
    eta: f64,
    delta: f64,
    seed: u64,
) -> Result<f64> {
    check_dim_cap("soft covering", pow_u128(ens.dim(), n))?;
    let t = typical_set(ens.weights(), n, delta)?;
    let eps = t.atypical_mass();
    let pruned = pruned_distribution(&t)?;
    let l = rate_count(n, rate)?;
    let mut rng = substream(seed, Stream::Covering, 0);
    let words = with_multiplicity((0..l).map(|_| pruned.sample(&mut rng).to_vec()).collect());
    let avg = ens.average();
    let mut x = linalg::kron_all(std::iter::repeat_n(&avg, n));
    let c = (1.0 - eps) / ((1.0 + eta) * l as f64);
    for (w, m) in words {
        let tw = linalg::kron_all(w.iter().map(|&a| ens.states()[a].matrix()));
        x -= tw.scale(c * m as f64);
    }
    Ok(linalg::trace_norm_hermitian(&linalg::hermitize(&x)))
}

/// One outcome of a measure-and-reconstruct protocol: its operator on
/// (A⊗B)^{⊗n} and the reconstruction at each position.
#[derive(Debug, Clone)]
pub struct ReconstructedOutcome {
    pub operator: CMat,
    pub states: Vec<DensityOperator>,
}

/// (1/n) Σ_i Σ_o Tr{Δ ((√ρ^{⊗n} Λ̃_o √ρ^{⊗n})ᵀ reduced to Rᵢ ⊗ S_{o,i})}.
pub fn distortion_of_protocol(
    rho_ab: &DensityOperator,
    n: usize,
    outcomes: &[ReconstructedOutcome],
    delta_op: &CMat,
) -> Result<f64> {
    let d = rho_ab.dim();
    check_dim_cap("distortion evaluation", pow_u128(d, n))?;
    let s = linalg::kron_all(std::iter::repeat_n(&rho_ab.sqrt(), n));
    let dims = vec![d; n];
    let mut total = 0.0;
    for o in outcomes {
        if o.states.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} reconstructions for blocklength {n}",
                o.states.len()
            )));
        }
        let block = linalg::transpose(&(&s * &o.operator * &s));
        for (i, st) in o.states.iter().enumerate() {
            let r = linalg::partial_trace(&block, &dims, &[i])?;
            let joint = linalg::kron(&r, st.matrix());
            if joint.nrows() != delta_op.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "distortion observable is {}-dimensional, reference ⊗ output is {}",
                    delta_op.nrows(),
                    joint.nrows()
                )));
            }
            total += linalg::trace_of_product(delta_op, &joint).re;
        }
    }
    Ok(total / n as f64)
}
