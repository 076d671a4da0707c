//! Classical–quantum states produced by measuring parts of a purification,
//! separable decompositions of joint measurements, and the faithfulness metric.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::entropy::spectral_entropy;
use crate::error::{Error, Result};
use crate::json::PovmJson;
use crate::linalg::{self, contract_subsystem, partial_trace, CMat, DEFAULT_TOL, EIG_CUTOFF};
use crate::povm::{check_probability_vector, Ensemble, Povm};
use crate::state::{purify, DensityOperator, PureBipartiteState};

/// Classical channel P(z|u,v), one row per (u,v) with u major.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    z_alphabet: Vec<String>,
    rows: Vec<Vec<f64>>,
    nu: usize,
    nv: usize,
}

impl Channel {
    pub fn new(z_alphabet: Vec<String>, nu: usize, nv: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != nu * nv {
            return Err(Error::InvalidDistribution(format!(
                "channel has {} rows, expected {}",
                rows.len(),
                nu * nv
            )));
        }
        for r in &rows {
            if r.len() != z_alphabet.len() {
                return Err(Error::InvalidDistribution("channel row length".into()));
            }
            check_probability_vector(r, DEFAULT_TOL)?;
        }
        Ok(Self {
            z_alphabet,
            rows,
            nu,
            nv,
        })
    }

    /// Channel realizing a function g(u,v) ∈ [0, |Z|).
    pub fn deterministic(
        z_alphabet: Vec<String>,
        nu: usize,
        nv: usize,
        g: impl Fn(usize, usize) -> usize,
    ) -> Result<Self> {
        let nz = z_alphabet.len();
        let mut rows = Vec::with_capacity(nu * nv);
        for u in 0..nu {
            for v in 0..nv {
                let z = g(u, v);
                if z >= nz {
                    return Err(Error::InvalidDistribution(format!("g({u},{v}) = {z} out of range")));
                }
                let mut r = vec![0.0; nz];
                r[z] = 1.0;
                rows.push(r);
            }
        }
        Self::new(z_alphabet, nu, nv, rows)
    }

    pub fn z_alphabet(&self) -> &[String] {
        &self.z_alphabet
    }

    pub fn nz(&self) -> usize {
        self.z_alphabet.len()
    }

    pub fn row(&self, u: usize, v: usize) -> &[f64] {
        &self.rows[u * self.nv + v]
    }

    pub fn prob(&self, z: usize, u: usize, v: usize) -> f64 {
        self.rows[u * self.nv + v][z]
    }

    /// True when every row is a unit vector.
    pub fn is_deterministic(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().filter(|p| **p > 0.0).count() == 1 && r.iter().any(|p| *p == 1.0))
    }

    /// g(u,v) for a deterministic channel.
    pub fn function_value(&self, u: usize, v: usize) -> Option<usize> {
        let r = self.row(u, v);
        r.iter().position(|p| *p == 1.0)
    }
}

/// Marginal POVMs on A and B with a classical integration channel.
#[derive(Debug, Clone)]
pub struct SeparableDecomposition {
    povm_a: Povm,
    povm_b: Povm,
    channel: Channel,
}

impl SeparableDecomposition {
    pub fn new(povm_a: Povm, povm_b: Povm, channel: Channel) -> Result<Self> {
        if !povm_a.is_complete() || !povm_b.is_complete() {
            return Err(Error::InvalidPovm("decomposition needs complete marginal POVMs".into()));
        }
        if channel.nu != povm_a.len() || channel.nv != povm_b.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel is indexed by {}x{} pairs, POVMs have {}x{} outcomes",
                channel.nu,
                channel.nv,
                povm_a.len(),
                povm_b.len()
            )));
        }
        Ok(Self {
            povm_a,
            povm_b,
            channel,
        })
    }

    /// Z = (U,V) with labels "(u,v)".
    pub fn identity_integration(povm_a: Povm, povm_b: Povm) -> Self {
        let (nu, nv) = (povm_a.len(), povm_b.len());
        let mut z = Vec::with_capacity(nu * nv);
        for a in povm_a.outcomes() {
            for b in povm_b.outcomes() {
                z.push(format!("({a},{b})"));
            }
        }
        let channel = Channel::deterministic(z, nu, nv, |u, v| u * nv + v).expect("valid map");
        Self::new(povm_a, povm_b, channel).expect("complete marginals")
    }

    pub fn povm_a(&self) -> &Povm {
        &self.povm_a
    }

    pub fn povm_b(&self) -> &Povm {
        &self.povm_b
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn is_deterministic(&self) -> bool {
        self.channel.is_deterministic()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.povm_a.dim(), self.povm_b.dim())
    }

    /// The state must live on A⊗B with the decomposition's local dimensions.
    pub fn check_state(&self, rho_ab: &DensityOperator) -> Result<()> {
        let (da, db) = self.dims();
        if rho_ab.dims() != [da, db] {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?}, decomposition expects [{da}, {db}]",
                rho_ab.dims()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChannelJson {
    z_alphabet: Vec<String>,
    rows: BTreeMap<String, Vec<f64>>,
}

/// JSON form: `{"povm_A":..,"povm_B":..,"channel":{"z_alphabet":[..],"rows":{"(u,v)":[..]}},"deterministic":bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionJson {
    #[serde(rename = "povm_A")]
    povm_a: PovmJson,
    #[serde(rename = "povm_B")]
    povm_b: PovmJson,
    channel: ChannelJson,
    deterministic: bool,
}

impl DecompositionJson {
    pub fn from_decomposition(d: &SeparableDecomposition) -> Self {
        let mut rows = BTreeMap::new();
        for (u, a) in d.povm_a.outcomes().iter().enumerate() {
            for (v, b) in d.povm_b.outcomes().iter().enumerate() {
                rows.insert(format!("({a},{b})"), d.channel.row(u, v).to_vec());
            }
        }
        Self {
            povm_a: PovmJson::from_povm(&d.povm_a),
            povm_b: PovmJson::from_povm(&d.povm_b),
            channel: ChannelJson {
                z_alphabet: d.channel.z_alphabet.clone(),
                rows,
            },
            deterministic: d.is_deterministic(),
        }
    }

    pub fn to_decomposition(&self) -> Result<SeparableDecomposition> {
        let a = self.povm_a.to_povm()?;
        let b = self.povm_b.to_povm()?;
        let mut rows = Vec::with_capacity(a.len() * b.len());
        for x in a.outcomes() {
            for y in b.outcomes() {
                let key = format!("({x},{y})");
                let r = self
                    .channel
                    .rows
                    .get(&key)
                    .ok_or_else(|| Error::Parse(format!("channel row {key} missing")))?;
                rows.push(r.clone());
            }
        }
        if self.channel.rows.len() != rows.len() {
            return Err(Error::Parse("channel has rows for unknown outcome pairs".into()));
        }
        let ch = Channel::new(self.channel.z_alphabet.clone(), a.len(), b.len(), rows)?;
        if ch.is_deterministic() != self.deterministic {
            return Err(Error::InvalidDistribution(
                "deterministic flag disagrees with the channel rows".into(),
            ));
        }
        SeparableDecomposition::new(a, b, ch)
    }
}

/// Block-diagonal classical–quantum state.
///
/// Each block is indexed by a tuple of classical values (one per classical
/// register, in order) and acts on the tensor product of the quantum registers.
#[derive(Debug, Clone)]
pub struct CqState {
    classical: Vec<(String, usize)>,
    quantum: Vec<(String, usize)>,
    blocks: BTreeMap<Vec<usize>, CMat>,
}

impl CqState {
    /// A purely quantum state with named registers.
    pub fn from_pure(psi: &PureBipartiteState, names: &[&str]) -> Result<Self> {
        let dims = psi.register_dims();
        if names.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} registers",
                names.len(),
                dims.len()
            )));
        }
        let mut blocks = BTreeMap::new();
        blocks.insert(vec![], psi.projector());
        Ok(Self {
            classical: vec![],
            quantum: names.iter().map(|s| s.to_string()).zip(dims).collect(),
            blocks,
        })
    }

    pub fn from_state(rho: &DensityOperator, names: &[&str]) -> Result<Self> {
        if names.len() != rho.dims().len() {
            return Err(Error::DimensionMismatch("register name count".into()));
        }
        let mut blocks = BTreeMap::new();
        blocks.insert(vec![], rho.matrix().clone());
        Ok(Self {
            classical: vec![],
            quantum: names.iter().map(|s| s.to_string()).zip(rho.dims().iter().copied()).collect(),
            blocks,
        })
    }

    pub fn classical_registers(&self) -> &[(String, usize)] {
        &self.classical
    }

    pub fn quantum_registers(&self) -> &[(String, usize)] {
        &self.quantum
    }

    pub fn blocks(&self) -> &BTreeMap<Vec<usize>, CMat> {
        &self.blocks
    }

    pub fn quantum_dims(&self) -> Vec<usize> {
        self.quantum.iter().map(|q| q.1).collect()
    }

    fn quantum_index(&self, name: &str) -> Option<usize> {
        self.quantum.iter().position(|q| q.0 == name)
    }

    fn classical_index(&self, name: &str) -> Option<usize> {
        self.classical.iter().position(|c| c.0 == name)
    }

    fn has_name(&self, name: &str) -> bool {
        self.quantum_index(name).is_some() || self.classical_index(name).is_some()
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.values().map(|b| b.trace().re).sum()
    }

    /// Measures quantum register `register` with `m`, recording the outcome index
    /// in a new classical register `outcome_name`. The register is consumed.
    pub fn measure(&self, register: &str, m: &Povm, outcome_name: &str) -> Result<Self> {
        let k = self
            .quantum_index(register)
            .ok_or_else(|| Error::UnknownLabel(register.into()))?;
        if self.has_name(outcome_name) {
            return Err(Error::InvalidParameter(format!("register `{outcome_name}` exists")));
        }
        if m.dim() != self.quantum[k].1 {
            return Err(Error::DimensionMismatch(format!(
                "povm dimension {} on register `{register}` of dimension {}",
                m.dim(),
                self.quantum[k].1
            )));
        }
        let dims = self.quantum_dims();
        let mut blocks = BTreeMap::new();
        for (label, x) in &self.blocks {
            for (i, op) in m.operators().iter().enumerate() {
                let y = contract_subsystem(x, &dims, k, op)?;
                let mut l = label.clone();
                l.push(i);
                blocks.insert(l, y);
            }
        }
        let mut classical = self.classical.clone();
        classical.push((outcome_name.to_string(), m.len()));
        let mut quantum = self.quantum.clone();
        quantum.remove(k);
        Ok(Self {
            classical,
            quantum,
            blocks,
        })
    }

    /// Appends a classical register drawn from `channel(inputs)`; `channel` maps the
    /// values of the listed classical registers to a distribution over `size` symbols.
    pub fn attach_channel(
        &self,
        inputs: &[&str],
        size: usize,
        name: &str,
        channel: impl Fn(&[usize]) -> Vec<f64>,
    ) -> Result<Self> {
        let idx = inputs
            .iter()
            .map(|n| self.classical_index(n).ok_or_else(|| Error::UnknownLabel(n.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if self.has_name(name) {
            return Err(Error::InvalidParameter(format!("register `{name}` exists")));
        }
        let mut blocks = BTreeMap::new();
        for (label, x) in &self.blocks {
            let args: Vec<usize> = idx.iter().map(|&i| label[i]).collect();
            let p = channel(&args);
            if p.len() != size {
                return Err(Error::InvalidDistribution("channel output length".into()));
            }
            for (z, pz) in p.iter().enumerate() {
                if *pz > 0.0 {
                    let mut l = label.clone();
                    l.push(z);
                    blocks.insert(l, x.scale(*pz));
                }
            }
        }
        let mut classical = self.classical.clone();
        classical.push((name.to_string(), size));
        Ok(Self {
            classical,
            quantum: self.quantum.clone(),
            blocks,
        })
    }

    /// Marginal on the named registers, as (classical-label → block) with the
    /// block living on the kept quantum registers in their stored order.
    pub fn marginal(&self, names: &[&str]) -> Result<BTreeMap<Vec<usize>, CMat>> {
        let mut cls = Vec::new();
        let mut qs = Vec::new();
        for n in names {
            if let Some(i) = self.classical_index(n) {
                cls.push(i);
            } else if let Some(i) = self.quantum_index(n) {
                qs.push(i);
            } else {
                return Err(Error::UnknownLabel(n.to_string()));
            }
        }
        cls.sort_unstable();
        cls.dedup();
        qs.sort_unstable();
        qs.dedup();
        let dims = self.quantum_dims();
        let mut grouped: BTreeMap<Vec<usize>, CMat> = BTreeMap::new();
        for (label, x) in &self.blocks {
            let key: Vec<usize> = cls.iter().map(|&i| label[i]).collect();
            let reduced = if qs.len() == dims.len() {
                x.clone()
            } else {
                partial_trace(x, &dims, &qs)?
            };
            match grouped.get_mut(&key) {
                Some(acc) => *acc += reduced,
                None => {
                    grouped.insert(key, reduced);
                }
            }
        }
        Ok(grouped)
    }

    /// Entropy of the named registers (classical and quantum mixed freely).
    pub fn entropy(&self, names: &[&str]) -> Result<f64> {
        let m = self.marginal(names)?;
        let mut spectrum = Vec::new();
        for b in m.values() {
            spectrum.extend(linalg::eigvalsh(b));
        }
        Ok(spectral_entropy(&spectrum))
    }

    /// I(X;Y) = S(X) + S(Y) − S(XY).
    pub fn mutual_information(&self, x: &[&str], y: &[&str]) -> Result<f64> {
        let xy: Vec<&str> = x.iter().chain(y).copied().collect();
        Ok(self.entropy(x)? + self.entropy(y)? - self.entropy(&xy)?)
    }

    /// S(X|Y) = S(XY) − S(Y).
    pub fn conditional_entropy(&self, x: &[&str], y: &[&str]) -> Result<f64> {
        let xy: Vec<&str> = x.iter().chain(y).copied().collect();
        Ok(self.entropy(&xy)? - self.entropy(y)?)
    }

    /// Probability table of the named classical registers.
    pub fn classical_distribution(&self, names: &[&str]) -> Result<BTreeMap<Vec<usize>, f64>> {
        if names.iter().any(|n| self.classical_index(n).is_none()) {
            return Err(Error::InvalidParameter("not all registers are classical".into()));
        }
        Ok(self
            .marginal(names)?
            .into_iter()
            .map(|(k, b)| (k, b.trace().re))
            .collect())
    }
}

/// Measures subsystem `measured` of the system part of `psi` (reference is "R",
/// system subsystems are "A", "B", ..., the outcome register is "X").
pub fn apply_measurement(psi: &PureBipartiteState, m: &Povm, measured: usize) -> Result<CqState> {
    let n = psi.system_dims().len();
    if measured >= n {
        return Err(Error::DimensionMismatch(format!("no system subsystem {measured}")));
    }
    let names: Vec<String> = std::iter::once("R".to_string())
        .chain((0..n).map(|i| ((b'A' + i as u8) as char).to_string()))
        .collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    CqState::from_pure(psi, &refs)?.measure(refs[measured + 1], m, "X")
}

/// Canonical ensemble {λ_u, √ρΛ_u√ρ/λ_u} with the outcomes that were dropped
/// for having λ_u below the cutoff.
#[derive(Debug, Clone)]
pub struct CanonicalEnsemble {
    pub ensemble: Ensemble,
    /// POVM outcome index of each ensemble member.
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

pub fn canonical_ensemble(rho: &DensityOperator, m: &Povm) -> Result<CanonicalEnsemble> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch("povm and state dimensions".into()));
    }
    let s = rho.sqrt();
    let mut weights = Vec::new();
    let mut states = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, op) in m.operators().iter().enumerate() {
        let x = &s * op * &s;
        let lam = x.trace().re;
        if lam < EIG_CUTOFF {
            dropped.push(i);
            continue;
        }
        weights.push(lam);
        states.push(DensityOperator::new(x.unscale(lam), rho.dims().to_vec())?);
        kept.push(i);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(CanonicalEnsemble {
        ensemble: Ensemble::new(weights, states)?,
        kept,
        dropped,
    })
}

/// σ₁ on (R,U,B), σ₂ on (R,A,V) and σ₃ on (R,U,V).
#[derive(Debug, Clone)]
pub struct AuxiliaryStates {
    pub sigma1: CqState,
    pub sigma2: CqState,
    pub sigma3: CqState,
}

/// Auxiliary states from the canonical purification of `rho_ab`.
pub fn auxiliary_states(
    rho_ab: &DensityOperator,
    d: &SeparableDecomposition,
) -> Result<AuxiliaryStates> {
    d.check_state(rho_ab)?;
    let psi = purify(rho_ab)?;
    let base = CqState::from_pure(&psi, &["R", "A", "B"])?;
    let sigma1 = base.measure("A", d.povm_a(), "U")?;
    let sigma2 = base.measure("B", d.povm_b(), "V")?;
    let sigma3 = sigma1.measure("B", d.povm_b(), "V")?;
    Ok(AuxiliaryStates {
        sigma1,
        sigma2,
        sigma3,
    })
}

/// σ₃ extended by the integration output Z.
pub fn stochastic_sigma3(rho_ab: &DensityOperator, d: &SeparableDecomposition) -> Result<CqState> {
    let aux = auxiliary_states(rho_ab, d)?;
    sigma3_with_channel(&aux.sigma3, d.channel())
}

pub(crate) fn sigma3_with_channel(sigma3: &CqState, ch: &Channel) -> Result<CqState> {
    sigma3.attach_channel(&["U", "V"], ch.nz(), "Z", |uv| ch.row(uv[0], uv[1]).to_vec())
}

/// Λ_z = Σ_{u,v} P(z|u,v) Λ_u ⊗ Λ_v.
pub fn compose_decomposition(d: &SeparableDecomposition) -> Result<Povm> {
    let (da, db) = d.dims();
    let mut ops = vec![linalg::zeros(da * db, da * db); d.channel().nz()];
    for (u, a) in d.povm_a().operators().iter().enumerate() {
        for (v, b) in d.povm_b().operators().iter().enumerate() {
            let ab = linalg::kron(a, b);
            for (z, p) in d.channel().row(u, v).iter().enumerate() {
                if *p != 0.0 {
                    ops[z] += ab.scale(*p);
                }
            }
        }
    }
    Povm::new(d.channel().z_alphabet().to_vec(), ops, da * db)
}

/// The two terms of the faithfulness distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaithfulnessTerms {
    /// Σ_x ‖√ρ(Λ_x − Λ̃_x)√ρ‖₁ over the union of outcome labels.
    pub trace_term: f64,
    /// Tr{(I − ΣΛ̃_x)ρ}.
    pub leakage: f64,
}

impl FaithfulnessTerms {
    pub fn total(&self) -> f64 {
        self.trace_term + self.leakage
    }
}

fn union_labels<'a>(m: &'a Povm, mt: &'a Povm) -> Vec<&'a str> {
    let mut labels: Vec<&str> = m.outcomes().iter().map(|s| s.as_str()).collect();
    for l in mt.outcomes() {
        if m.index_of(l).is_none() {
            labels.push(l);
        }
    }
    labels
}

fn difference(m: &Povm, mt: &Povm, label: &str) -> CMat {
    let d = m.dim();
    let a = m.operator(label).cloned().unwrap_or_else(|| linalg::zeros(d, d));
    match mt.operator(label) {
        Some(b) => a - b,
        None => a,
    }
}

fn check_pair(rho: &DensityOperator, m: &Povm, mt: &Povm) -> Result<()> {
    if m.dim() != rho.dim() || mt.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {}, measurements act on {} and {}",
            rho.dim(),
            m.dim(),
            mt.dim()
        )));
    }
    Ok(())
}

pub fn faithfulness_terms(rho: &DensityOperator, m: &Povm, mt: &Povm) -> Result<FaithfulnessTerms> {
    check_pair(rho, m, mt)?;
    let s = rho.sqrt();
    let mut trace_term = 0.0;
    for l in union_labels(m, mt) {
        let x = &s * difference(m, mt, l) * &s;
        trace_term += linalg::trace_norm_hermitian(&x);
    }
    let leakage = 1.0 - rho.expectation(&mt.total());
    Ok(FaithfulnessTerms {
        trace_term,
        leakage,
    })
}

/// Σ_x ‖√ρ(Λ_x − Λ̃_x)√ρ‖₁ + Tr{(I − ΣΛ̃_x)ρ}; labels absent from one side count as zero operators.
pub fn faithfulness_distance(rho: &DensityOperator, m: &Povm, mtilde: &Povm) -> Result<f64> {
    Ok(faithfulness_terms(rho, m, mtilde)?.total())
}

/// Both sides of the purification identity:
/// ‖(id⊗M)(Ψ) − (id⊗M̃)(Ψ)‖₁ and Σ_x ‖√ρ(Λ_x − Λ̃_x)√ρ‖₁.
///
/// The left side is evaluated on the reference blocks of the measured
/// purification; the right side directly from √ρ.
pub fn verify_purification_identity(
    rho: &DensityOperator,
    m: &Povm,
    mtilde: &Povm,
) -> Result<(f64, f64)> {
    check_pair(rho, m, mtilde)?;
    let psi = purify(rho)?;
    let d = rho.dim();
    let proj = psi.projector();
    let dims = [d, d];
    let mut lhs = 0.0;
    for l in union_labels(m, mtilde) {
        let x = difference(m, mtilde, l);
        let block = partial_trace(&(linalg::embed(&x, &dims, 1)? * &proj), &dims, &[0])?;
        lhs += linalg::trace_norm(&block);
    }
    let rhs = faithfulness_terms(rho, m, mtilde)?.trace_term;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, c64, from_real_rows, identity, real_diag, CVec};
    use crate::povm::complete_sub_povm;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn measuring_maximally_mixed_state() {
        let psi = purify(&DensityOperator::maximally_mixed(2)).unwrap();
        let cq = apply_measurement(&psi, &Povm::computational(2), 0).unwrap();
        assert_eq!(cq.blocks().len(), 2);
        for b in cq.blocks().values() {
            assert!((b.trace().re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_measurement_leaves_reference() {
        let rho = DensityOperator::from_matrix(real_diag(&[0.7, 0.3])).unwrap();
        let psi = purify(&rho).unwrap();
        let cq = apply_measurement(&psi, &Povm::trivial(2), 0).unwrap();
        assert_eq!(cq.blocks().len(), 1);
        let r = cq.blocks().values().next().unwrap();
        assert!(approx_eq(r, &rho.matrix().transpose(), 1e-12));
    }

    #[test]
    fn canonical_ensemble_of_trivial_povm() {
        let rho = DensityOperator::from_matrix(from_real_rows(&[&[0.6, 0.2], &[0.2, 0.4]])).unwrap();
        let ce = canonical_ensemble(&rho, &Povm::trivial(2)).unwrap();
        assert_eq!(ce.ensemble.weights(), &[1.0]);
        assert!(approx_eq(ce.ensemble.states()[0].matrix(), rho.matrix(), 1e-12));
    }

    #[test]
    fn canonical_ensemble_drops_null_outcomes() {
        let rho = DensityOperator::from_matrix(real_diag(&[1.0, 0.0])).unwrap();
        let ce = canonical_ensemble(&rho, &Povm::computational(2)).unwrap();
        assert_eq!(ce.kept, vec![0]);
        assert_eq!(ce.dropped, vec![1]);
    }

    #[test]
    fn compose_with_constant_output_is_identity() {
        let ch = Channel::deterministic(labels(&["z"]), 2, 2, |_, _| 0).unwrap();
        let d = SeparableDecomposition::new(Povm::computational(2), Povm::computational(2), ch)
            .unwrap();
        let m = compose_decomposition(&d).unwrap();
        assert_eq!(m.len(), 1);
        assert!(approx_eq(&m.operators()[0], &identity(4), 1e-12));
    }

    #[test]
    fn compose_identity_integration() {
        let a = Povm::computational(2);
        let d = SeparableDecomposition::identity_integration(a.clone(), a.clone());
        let m = compose_decomposition(&d).unwrap();
        let t = a.tensor(&a);
        assert_eq!(m.outcomes(), t.outcomes());
        for (x, y) in m.operators().iter().zip(t.operators()) {
            assert!(approx_eq(x, y, 1e-12));
        }
    }

    #[test]
    fn faithfulness_of_identical_and_empty() {
        let rho = DensityOperator::from_matrix(real_diag(&[0.3, 0.7])).unwrap();
        let m = Povm::computational(2);
        assert!(faithfulness_distance(&rho, &m, &m).unwrap().abs() < 1e-12);
        let empty = Povm::new_sub(vec![], vec![], 2).unwrap();
        let t = faithfulness_terms(&rho, &m, &empty).unwrap();
        assert!((t.leakage - 1.0).abs() < 1e-12);
        assert!((t.trace_term - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_against_half_identity_with_completion() {
        let rho = DensityOperator::from_matrix(from_real_rows(&[&[0.5, 0.1], &[0.1, 0.5]])).unwrap();
        let m = Povm::new(labels(&["x"]), vec![identity(2)], 2).unwrap();
        let half = Povm::new_sub(labels(&["x"]), vec![identity(2).scale(0.5)], 2).unwrap();
        let mt = complete_sub_povm(&half).unwrap();
        let (l, r) = verify_purification_identity(&rho, &m, &mt).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        let (l, r) = verify_purification_identity(&rho, &m, &m).unwrap();
        assert!(l.abs() < 1e-12 && r.abs() < 1e-12);
    }

    #[test]
    fn decomposition_json_round_trip() {
        let a = Povm::computational(2);
        let d = SeparableDecomposition::identity_integration(a.clone(), a);
        let j = serde_json::to_string(&DecompositionJson::from_decomposition(&d)).unwrap();
        assert!(j.contains("\"povm_A\""));
        let back: DecompositionJson = serde_json::from_str(&j).unwrap();
        let d2 = back.to_decomposition().unwrap();
        assert!(d2.is_deterministic());
        assert_eq!(d2.channel(), d.channel());
    }

    #[test]
    fn inconsistent_deterministic_flag_is_rejected() {
        let a = Povm::computational(2);
        let ch = Channel::new(labels(&["p", "q"]), 2, 2, vec![vec![0.5, 0.5]; 4]).unwrap();
        let d = SeparableDecomposition::new(a.clone(), a, ch).unwrap();
        let mut j = DecompositionJson::from_decomposition(&d);
        j.deterministic = true;
        assert!(j.to_decomposition().is_err());
    }

    #[test]
    fn sigma1_reference_marginal() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVec::from_vec(vec![c64(h, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(h, 0.0)]);
        let rho = DensityOperator::pure(&v, vec![2, 2]).unwrap();
        let d = SeparableDecomposition::identity_integration(
            Povm::computational(2),
            Povm::computational(2),
        );
        let aux = auxiliary_states(&rho, &d).unwrap();
        let r = aux.sigma1.marginal(&["R"]).unwrap();
        let r = r.values().next().unwrap();
        assert!(approx_eq(r, &rho.matrix().transpose(), 1e-12));
        assert!((aux.sigma3.mutual_information(&["U"], &["V"]).unwrap() - 1.0).abs() < 1e-12);
    }
}
