//! Faithfulness of the simulated measurement, evaluated in the support frame of
//! ρ_AB^{⊗n}.
//!
//! With ρ_AB = F diag(p) F† of rank r, every block √ρ^{⊗n} X √ρ^{⊗n} lives on an
//! r^n-dimensional space, and is E†XE for E = (F diag(√p))^{⊗n} with rows
//! reordered to the A₁…AₙB₁…Bₙ layout of the simulated operators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::decoder::{build_decoder, BinnedCodebook, Decoded, DecoderTable};
use super::params::ProtocolParams;
use super::side::{BinMap, Sentinel, SideCodebook, SideModel, Stream};
use crate::error::{Error, Result};
use crate::linalg::{self, check_dim_cap, pow_u128, CMat, CVec};
use crate::measurement::SeparableDecomposition;
use crate::state::DensityOperator;
use crate::typicality::index_sequence;

/// Largest number of z-sequences one decoded pair may spread over.
const Z_SPREAD_CAP: usize = 1 << 16;
/// Largest support-frame embedding, in entries.
const FRAME_ENTRY_CAP: u128 = 1 << 22;

/// Output symbol of the simulated measurement before integration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairKey {
    /// Letter sequences (uⁿ, vⁿ) over the ensemble alphabets.
    Pair(Vec<usize>, Vec<usize>),
    /// Out-of-alphabet sentinel.
    Reserved,
}

/// Output symbol after integration: a z-sequence or the reserved sentinel.
pub type ZKey = Option<Vec<usize>>;

/// Permutation taking A₁…AₙB₁…Bₙ to (A₁B₁)…(AₙBₙ).
pub fn interleave_perm(n: usize) -> Vec<usize> {
    (0..n).flat_map(|i| [i, n + i]).collect()
}

/// Reorders an operator on A^{⊗n} ⊗ B^{⊗n} to (A⊗B)^{⊗n}.
pub fn to_interleaved(op: &CMat, da: usize, db: usize, n: usize) -> Result<CMat> {
    let dims: Vec<usize> = std::iter::repeat_n(da, n).chain(std::iter::repeat_n(db, n)).collect();
    linalg::permute_subsystems(op, &dims, &interleave_perm(n))
}

#[derive(Debug, Clone)]
struct Frame {
    rank: usize,
    /// (d_A^n d_B^n) × r^n.
    e: CMat,
    /// Single-letter blocks √p F†(Λ̄_u⊗Λ̄_v)F √p over ensemble letters.
    tau_uv: Vec<Vec<CMat>>,
    /// Single-letter blocks of the composed target, per z.
    tau_z: Vec<CMat>,
}

impl Frame {
    fn new(
        rho: &DensityOperator,
        d: &SeparableDecomposition,
        a: &SideModel,
        b: &SideModel,
        n: usize,
    ) -> Result<Self> {
        let (da, db) = d.dims();
        let eig = rho.eigh();
        let rank = eig.rank();
        let dn = pow_u128(da * db, n);
        let rn = pow_u128(rank, n);
        if dn.saturating_mul(rn) > FRAME_ENTRY_CAP {
            return Err(Error::CapExceeded {
                what: "support-frame embedding",
                needed: dn.saturating_mul(rn),
                cap: FRAME_ENTRY_CAP,
            });
        }
        let mut f1 = CMat::zeros(da * db, rank);
        for k in 0..rank {
            f1.set_column(k, &eig.vector(k).scale(eig.values[k].sqrt()));
        }
        let omega = linalg::kron_all(std::iter::repeat_n(&f1, n));
        let dims: Vec<usize> =
            std::iter::repeat_n(da, n).chain(std::iter::repeat_n(db, n)).collect();
        let map = linalg::permutation_map(&dims, &interleave_perm(n))?;
        let mut e = CMat::zeros(omega.nrows(), omega.ncols());
        for (i, &row) in map.iter().enumerate() {
            e.set_row(row, &omega.row(i));
        }
        let block = |op: &CMat| linalg::hermitize(&(f1.adjoint() * op * &f1));
        let tau_uv = a
            .kept
            .iter()
            .map(|&u| {
                b.kept
                    .iter()
                    .map(|&v| {
                        block(&linalg::kron(
                            &d.povm_a().operators()[u],
                            &d.povm_b().operators()[v],
                        ))
                    })
                    .collect()
            })
            .collect();
        let composed = crate::measurement::compose_decomposition(d)?;
        let tau_z = composed.operators().iter().map(block).collect();
        Ok(Self {
            rank,
            e,
            tau_uv,
            tau_z,
        })
    }

    fn dim(&self) -> usize {
        self.e.ncols()
    }

    /// E† x.
    fn image(&self, x: &CVec) -> CVec {
        self.e.ad_mul(x)
    }
}

fn kron_blocks<'a>(blocks: impl Iterator<Item = &'a CMat>) -> CMat {
    linalg::kron_all(blocks)
}

/// Adds c·Σ_k w_k w_k† to `acc`.
fn add_outer(acc: &mut CMat, ws: &[CVec], c: f64) {
    for w in ws {
        acc.ger(linalg::c64(c, 0.0), w, &w.conjugate(), linalg::c64(1.0, 0.0));
    }
}

/// Σ over keys of ‖T − K‖₁, the target mass outside the keys, and Σ Tr K.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub trace_term: f64,
    pub leakage: f64,
}

impl Distance {
    pub fn total(&self) -> f64 {
        self.trace_term + self.leakage
    }
}

fn distance<K: Ord>(
    ops: &BTreeMap<K, CMat>,
    target: impl Fn(&K) -> Option<CMat>,
    dim: usize,
) -> Distance {
    let mut trace_term = 0.0;
    let mut covered = 0.0;
    let mut mass = 0.0;
    for (k, op) in ops {
        mass += linalg::trace(op).re;
        match target(k) {
            Some(t) => {
                covered += linalg::trace(&t).re;
                trace_term += linalg::trace_norm_hermitian(&linalg::hermitize(&(t - op)));
            }
            None => trace_term += linalg::trace_norm_hermitian(&linalg::hermitize(op)),
        }
    }
    debug_assert!(ops.values().all(|o| o.nrows() == dim));
    Distance {
        trace_term: trace_term + (1.0 - covered).max(0.0),
        leakage: 1.0 - mass,
    }
}

/// Options of a faithfulness trial.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialOptions {
    /// Replace the simulated measurement by the target itself.
    pub bypass: bool,
    /// Also compute the covering (S₁) and binning (S₂) split.
    pub diagnostics: bool,
}

/// Sub-POVM check of one side for one μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubPovmCheck {
    pub side: char,
    pub mu: usize,
    pub valid: bool,
    pub excess: f64,
}

/// Outcome of one randomized protocol realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub params: ProtocolParams,
    pub codebook_sizes: (usize, usize),
    pub bin_counts: (usize, usize),
    pub sub_povm: Vec<SubPovmCheck>,
    pub subpovm_valid: bool,
    pub max_excess: f64,
    /// Faithfulness distance over zⁿ outcomes.
    pub faithfulness_g: f64,
    pub g_terms: Distance,
    /// Same distance before integration, over (uⁿ, vⁿ).
    pub g_uv: f64,
    pub g_uv_terms: Distance,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub collisions: usize,
    pub occupied_cells: usize,
    pub collision_rate: f64,
    pub bin_spread: ((usize, usize), (usize, usize)),
    pub epsilon: (f64, f64),
    /// max |Σ_z Λ̃_z − (ΣΓ^A)⊗(ΣΓ^B)| in the support frame.
    pub resummation_residual: f64,
}

/// Seed-independent data shared by all trials at one (ρ_AB, decomposition, n, δ).
#[derive(Debug, Clone)]
pub struct ProtocolSetup {
    pub n: usize,
    pub delta: f64,
    pub rho_ab: DensityOperator,
    pub decomposition: SeparableDecomposition,
    pub a: SideModel,
    pub b: SideModel,
    /// P_{UV} over the ensemble letters of the two sides.
    pub p_uv: Vec<Vec<f64>>,
    frame: Frame,
}

/// Random objects of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub codebook_a: SideCodebook,
    pub codebook_b: SideCodebook,
    pub bins_a: BinMap,
    pub bins_b: BinMap,
    /// decoders[μ₁][μ₂].
    pub decoders: Vec<Vec<DecoderTable>>,
}

impl ProtocolSetup {
    pub fn new(
        rho_ab: &DensityOperator,
        d: &SeparableDecomposition,
        n: usize,
        delta: f64,
    ) -> Result<Self> {
        let (da, db) = d.dims();
        if rho_ab.dims() != [da, db] {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?}, decomposition acts on [{da}, {db}]",
                rho_ab.dims()
            )));
        }
        check_dim_cap("bipartite blocklength", pow_u128(da * db, n))?;
        let rho_a = rho_ab.reduce(&[0])?;
        let rho_b = rho_ab.reduce(&[1])?;
        let a = SideModel::new(&rho_a, d.povm_a(), n, delta)?;
        let b = SideModel::new(&rho_b, d.povm_b(), n, delta)?;
        let p_uv = a
            .kept
            .iter()
            .map(|&u| {
                b.kept
                    .iter()
                    .map(|&v| {
                        let op =
                            linalg::kron(&d.povm_a().operators()[u], &d.povm_b().operators()[v]);
                        rho_ab.expectation(&op).max(0.0)
                    })
                    .collect()
            })
            .collect();
        let frame = Frame::new(rho_ab, d, &a, &b, n)?;
        Ok(Self {
            n,
            delta,
            rho_ab: rho_ab.clone(),
            decomposition: d.clone(),
            a,
            b,
            p_uv,
            frame,
        })
    }

    pub fn frame_rank(&self) -> usize {
        self.frame.rank
    }

    fn check_params(&self, p: &ProtocolParams) -> Result<()> {
        p.validate()?;
        if p.n != self.n || p.delta != self.delta {
            return Err(Error::InvalidParameter(format!(
                "setup built for n = {}, delta = {}; params ask for n = {}, delta = {}",
                self.n, self.delta, p.n, p.delta
            )));
        }
        Ok(())
    }

    /// Codebooks, bins and decoders for one seed.
    pub fn realize(&self, p: &ProtocolParams) -> Result<Realization> {
        self.check_params(p)?;
        let (l1, l2, k1, k2) = p.counts()?;
        let codebook_a = SideCodebook::draw(&self.a.pruned, l1, p.n1, p.seed, Stream::CodebookA);
        let codebook_b = SideCodebook::draw(&self.b.pruned, l2, p.n2, p.seed, Stream::CodebookB);
        let bins_a = BinMap::draw(self.a.members().len(), k1, p.n1, p.seed, Stream::BinsA);
        let bins_b = BinMap::draw(self.b.members().len(), k2, p.n2, p.seed, Stream::BinsB);
        let decoders = (0..p.n1)
            .map(|m1| {
                (0..p.n2)
                    .map(|m2| {
                        let fa = |u: usize| bins_a.bin(m1, u);
                        let fb = |v: usize| bins_b.bin(m2, v);
                        build_decoder(
                            &BinnedCodebook {
                                members: self.a.members(),
                                codewords: &codebook_a.codewords[m1],
                                bin_of: &fa,
                            },
                            &BinnedCodebook {
                                members: self.b.members(),
                                codewords: &codebook_b.codewords[m2],
                                bin_of: &fb,
                            },
                            &self.p_uv,
                            self.delta,
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(Realization {
            codebook_a,
            codebook_b,
            bins_a,
            bins_b,
            decoders,
        })
    }

    /// Key of a decoder output.
    pub fn pair_key(&self, d: Decoded) -> PairKey {
        match d {
            Decoded::Pair(u, v) => {
                PairKey::Pair(self.a.members()[u].clone(), self.b.members()[v].clone())
            }
            Decoded::Sentinel => match (&self.a.sentinel, &self.b.sentinel) {
                (Sentinel::Sequence(u), Sentinel::Sequence(v)) => {
                    PairKey::Pair(u.clone(), v.clone())
                }
                _ => PairKey::Reserved,
            },
        }
    }

    /// P^n(zⁿ | uⁿ, vⁿ) over its support; the reserved key maps to the reserved z.
    pub fn z_distribution(&self, key: &PairKey) -> Result<Vec<(ZKey, f64)>> {
        let (u, v) = match key {
            PairKey::Pair(u, v) => (u, v),
            PairKey::Reserved => return Ok(vec![(None, 1.0)]),
        };
        let ch = self.decomposition.channel();
        let rows: Vec<Vec<(usize, f64)>> = u
            .iter()
            .zip(v)
            .map(|(&a, &b)| {
                ch.row(self.a.kept[a], self.b.kept[b])
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(z, p)| (z, *p))
                    .collect()
            })
            .collect();
        let total: usize = rows.iter().map(|r| r.len()).product();
        if total > Z_SPREAD_CAP {
            return Err(Error::CapExceeded {
                what: "integration output spread",
                needed: total as u128,
                cap: Z_SPREAD_CAP as u128,
            });
        }
        let radix: Vec<usize> = rows.iter().map(|r| r.len()).collect();
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut z = vec![0; rows.len()];
            let mut p = 1.0;
            for i in (0..rows.len()).rev() {
                let (zi, pi) = rows[i][idx % radix[i]];
                idx /= radix[i];
                z[i] = zi;
                p *= pi;
            }
            out.push((Some(z), p));
        }
        Ok(out)
    }

    fn target_uv(&self, k: &PairKey) -> Option<CMat> {
        match k {
            PairKey::Pair(u, v) => Some(kron_blocks(
                u.iter().zip(v).map(|(&a, &b)| &self.frame.tau_uv[a][b]),
            )),
            PairKey::Reserved => None,
        }
    }

    fn target_z(&self, k: &ZKey) -> Option<CMat> {
        k.as_ref()
            .map(|z| kron_blocks(z.iter().map(|&x| &self.frame.tau_z[x])))
    }

    /// Labels of a z key, joined by '|'.
    pub fn z_label(&self, k: &ZKey) -> String {
        match k {
            Some(z) => z
                .iter()
                .map(|&x| self.decomposition.channel().z_alphabet()[x].as_str())
                .collect::<Vec<_>>()
                .join("|"),
            None => SENTINEL_LABEL.to_string(),
        }
    }

    /// Frame images E†(f⊗g) of the rank-one factors of base_u ⊗ base_v.
    fn pair_vectors(&self, u: usize, v: usize) -> Vec<CVec> {
        let mut out = Vec::new();
        for f in &self.a.factors[u] {
            for g in &self.b.factors[v] {
                out.push(self.frame.image(&linalg::kron_vec(f, g)));
            }
        }
        out
    }

    fn integrate(&self, uv: &BTreeMap<PairKey, CMat>) -> Result<BTreeMap<ZKey, CMat>> {
        let mut z: BTreeMap<ZKey, CMat> = BTreeMap::new();
        for (k, op) in uv {
            for (zk, p) in self.z_distribution(k)? {
                let dim = self.frame.dim();
                *z.entry(zk).or_insert_with(|| linalg::zeros(dim, dim)) += op.scale(p);
            }
        }
        Ok(z)
    }

    pub fn trial(&self, p: &ProtocolParams) -> Result<TrialReport> {
        self.trial_with(p, TrialOptions::default())
    }

    pub fn trial_with(&self, p: &ProtocolParams, opts: TrialOptions) -> Result<TrialReport> {
        let real = self.realize(p)?;
        let (l1, l2, k1, k2) = p.counts()?;
        let dim = self.frame.dim();
        let unit_a = self.a.gamma_unit(l1, p.eta);
        let unit_b = self.b.gamma_unit(l2, p.eta);

        let mut sub_povm = Vec::new();
        let mut sum_a = CMat::zeros(self.a.rho.dim().pow(p.n as u32), self.a.rho.dim().pow(p.n as u32));
        let mut sum_b = CMat::zeros(self.b.rho.dim().pow(p.n as u32), self.b.rho.dim().pow(p.n as u32));
        let mult_a: Vec<_> = (0..p.n1).map(|m| real.codebook_a.multiplicities(m)).collect();
        let mult_b: Vec<_> = (0..p.n2).map(|m| real.codebook_b.multiplicities(m)).collect();
        for (side, mults, unit, model, acc, scale) in [
            ('A', &mult_a, unit_a, &self.a, &mut sum_a, p.n1),
            ('B', &mult_b, unit_b, &self.b, &mut sum_b, p.n2),
        ] {
            for (mu, list) in mults.iter().enumerate() {
                let d = model.rho.dim().pow(p.n as u32);
                let mut s = linalg::zeros(d, d);
                for &(m, c) in list {
                    s += model.base_ops[m].scale(unit * c as f64);
                }
                let (valid, excess) = super::check_sub_povm_sum(&s);
                sub_povm.push(SubPovmCheck {
                    side,
                    mu,
                    valid,
                    excess,
                });
                *acc += s.unscale(scale as f64);
            }
        }

        let norm = 1.0 / (p.n1 * p.n2) as f64;
        let mut k_uv: BTreeMap<PairKey, CMat> = BTreeMap::new();
        let mut unbinned: BTreeMap<PairKey, CMat> = BTreeMap::new();
        let mut cache: BTreeMap<(usize, usize), Vec<CVec>> = BTreeMap::new();
        let (mut collisions, mut occupied) = (0, 0);
        if opts.bypass {
            for (k, op) in self.bypass_ops()? {
                k_uv.insert(k, op);
            }
        } else {
            for (m1, ma) in mult_a.iter().enumerate() {
                for (m2, mb) in mult_b.iter().enumerate() {
                    let dec = &real.decoders[m1][m2];
                    collisions += dec.collisions;
                    occupied += dec.occupied;
                    for &(u, cu) in ma {
                        let i = real.bins_a.bin(m1, u);
                        for &(v, cv) in mb {
                            let j = real.bins_b.bin(m2, v);
                            let ws = cache.entry((u, v)).or_insert_with(|| self.pair_vectors(u, v));
                            if ws.is_empty() {
                                continue;
                            }
                            let c = norm * unit_a * cu as f64 * unit_b * cv as f64;
                            let key = self.pair_key(dec.decode(i, j));
                            add_outer(
                                k_uv.entry(key).or_insert_with(|| linalg::zeros(dim, dim)),
                                ws,
                                c,
                            );
                            if opts.diagnostics {
                                let key = self.pair_key(Decoded::Pair(u, v));
                                add_outer(
                                    unbinned.entry(key).or_insert_with(|| linalg::zeros(dim, dim)),
                                    ws,
                                    c,
                                );
                            }
                        }
                    }
                }
            }
        }

        let resummation_residual = if opts.bypass {
            0.0
        } else {
            let mut total = linalg::zeros(dim, dim);
            for op in k_uv.values() {
                total += op;
            }
            linalg::max_abs_diff(&total, &self.product_image(&sum_a, &sum_b))
        };

        let g_uv = distance(&k_uv, |k| self.target_uv(k), dim);
        let k_z = self.integrate(&k_uv)?;
        let g_terms = distance(&k_z, |k| self.target_z(k), dim);

        let (s1, s2) = if opts.diagnostics && !opts.bypass {
            let s1 = distance(&unbinned, |k| self.target_uv(k), dim).trace_term;
            let mut s2 = 0.0;
            let keys: std::collections::BTreeSet<&PairKey> =
                unbinned.keys().chain(k_uv.keys()).collect();
            for k in keys {
                let zero = linalg::zeros(dim, dim);
                let a = unbinned.get(k).unwrap_or(&zero);
                let b = k_uv.get(k).unwrap_or(&zero);
                s2 += linalg::trace_norm_hermitian(&linalg::hermitize(&(a - b)));
            }
            (Some(s1), Some(s2))
        } else {
            (None, None)
        };

        let valid = sub_povm.iter().all(|c| c.valid);
        let max_excess = sub_povm.iter().map(|c| c.excess).fold(0.0, f64::max);
        Ok(TrialReport {
            params: p.clone(),
            codebook_sizes: (l1, l2),
            bin_counts: (k1, k2),
            sub_povm,
            subpovm_valid: valid,
            max_excess,
            faithfulness_g: g_terms.total(),
            g_terms,
            g_uv: g_uv.total(),
            g_uv_terms: g_uv,
            s1,
            s2,
            collisions,
            occupied_cells: occupied,
            collision_rate: if occupied == 0 {
                0.0
            } else {
                collisions as f64 / occupied as f64
            },
            bin_spread: (real.bins_a.spread(), real.bins_b.spread()),
            epsilon: (self.a.epsilon(), self.b.epsilon()),
            resummation_residual,
        })
    }

    /// E†(X_A ⊗ X_B)E through the eigen-factors of the two sides.
    fn product_image(&self, xa: &CMat, xb: &CMat) -> CMat {
        let fa = factorize(xa);
        let fb = factorize(xb);
        let dim = self.frame.dim();
        let mut out = linalg::zeros(dim, dim);
        for (sa, a) in &fa {
            for (sb, b) in &fb {
                let w = self.frame.image(&linalg::kron_vec(a, b));
                out.ger(linalg::c64(sa * sb, 0.0), &w, &w.conjugate(), linalg::c64(1.0, 0.0));
            }
        }
        out
    }

    /// Target blocks for every (uⁿ, vⁿ) with nonzero probability.
    fn bypass_ops(&self) -> Result<Vec<(PairKey, CMat)>> {
        let ka = self.a.kept.len();
        let kb = self.b.kept.len();
        let total = pow_u128(ka * kb, self.n);
        if total > Z_SPREAD_CAP as u128 {
            return Err(Error::CapExceeded {
                what: "bypass outcome enumeration",
                needed: total,
                cap: Z_SPREAD_CAP as u128,
            });
        }
        let mut out = Vec::new();
        for idx in 0..total as usize {
            let s = index_sequence(idx, ka * kb, self.n);
            let u: Vec<usize> = s.iter().map(|x| x / kb).collect();
            let v: Vec<usize> = s.iter().map(|x| x % kb).collect();
            let key = PairKey::Pair(u, v);
            let t = self.target_uv(&key).expect("pair key");
            if linalg::trace(&t).re > 0.0 {
                out.push((key, t));
            }
        }
        Ok(out)
    }
}

pub const SENTINEL_LABEL: &str = "sentinel";

/// Eigenpairs (λ, v) of a Hermitian matrix with λ ≠ 0 above the numerical floor.
fn factorize(x: &CMat) -> Vec<(f64, CVec)> {
    let e = linalg::eigh(x);
    let floor = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max) * linalg::EIG_CUTOFF;
    (0..e.values.len())
        .filter(|&k| e.values[k].abs() > floor)
        .map(|k| (e.values[k], e.vector(k)))
        .collect()
}

/// One trial with a fresh setup.
pub fn faithfulness_trial(
    params: &ProtocolParams,
    rho_ab: &DensityOperator,
    d: &SeparableDecomposition,
) -> Result<TrialReport> {
    ProtocolSetup::new(rho_ab, d, params.n, params.delta)?.trial(params)
}
