//! Strongly typical sequences, pruned distributions, and the typical,
//! conditionally typical and cutoff projectors built from them.
//!
//! Letters of equal probability are pooled into one class, and a sequence xⁿ is
//! δ-typical when every class c satisfies |N(c|xⁿ)/n − p(c)| ≤ δ·p(c); letters
//! with p(a) = 0 may not occur. Without ties this is ordinary strong typicality.
//! Quantum projectors apply the same rule to eigenvalue strings, so degenerate
//! spectra such as I/d give the identity and a uniform source makes every
//! sequence typical.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, check_dim_cap, pow_u128, CMat, CVec, Eigh, EIG_CUTOFF};
use crate::povm::{check_probability_vector, Ensemble};
use crate::state::DensityOperator;

/// Largest number of sequences enumerated by [`typical_set`].
pub const ENUMERATION_CAP: u128 = 1 << 20;

/// Eigenvalues closer than this are treated as one spectral class.
pub const DEGENERACY_TOL: f64 = 1e-9;

pub fn letter_counts(seq: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &a in seq {
        c[a] += 1;
    }
    c
}

/// Frequency typicality of a count vector for a sequence of length `n`.
pub fn counts_typical(counts: &[usize], p: &[f64], n: usize, delta: f64) -> bool {
    counts.iter().zip(p).all(|(&c, &pa)| {
        if pa <= 0.0 {
            c == 0
        } else {
            (c as f64 / n as f64 - pa).abs() <= delta * pa + 1e-12
        }
    })
}

pub fn is_typical(seq: &[usize], p: &[f64], delta: f64) -> bool {
    if seq.iter().any(|&a| a >= p.len()) {
        return false;
    }
    SpectralClasses::new(p).string_typical(seq, delta)
}

/// Joint typicality of (uⁿ, vⁿ) under `p_uv[u][v]`.
pub fn jointly_typical(u: &[usize], v: &[usize], p_uv: &[Vec<f64>], delta: f64) -> bool {
    if u.len() != v.len() || p_uv.is_empty() {
        return false;
    }
    let nv = p_uv[0].len();
    let flat: Vec<f64> = p_uv.iter().flatten().copied().collect();
    let pair: Vec<usize> = u.iter().zip(v).map(|(a, b)| a * nv + b).collect();
    is_typical(&pair, &flat, delta)
}

/// Product probability ∏ p(xᵢ).
pub fn sequence_probability(seq: &[usize], p: &[f64]) -> f64 {
    seq.iter().map(|&a| p[a]).product()
}

/// Mixed-radix index with the first letter most significant (the Kronecker order).
pub fn sequence_index(seq: &[usize], k: usize) -> usize {
    seq.iter().fold(0, |acc, &a| acc * k + a)
}

pub fn index_sequence(mut idx: usize, k: usize, n: usize) -> Vec<usize> {
    let mut s = vec![0; n];
    for i in (0..n).rev() {
        s[i] = idx % k;
        idx /= k;
    }
    s
}

fn check_enumeration(k: usize, n: usize) -> Result<usize> {
    let total = pow_u128(k, n);
    if total > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            what: "sequence enumeration",
            needed: total,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(total as usize)
}

fn check_params(n: usize, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// All δ-typical sequences of length n, in lexicographic order.
#[derive(Debug, Clone)]
pub struct TypicalSet {
    distribution: Vec<f64>,
    n: usize,
    delta: f64,
    members: Vec<Vec<usize>>,
    probabilities: Vec<f64>,
    mass: f64,
}

impl TypicalSet {
    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Product probabilities of the members, in member order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// 1 − ε.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// ε, the product mass outside the set.
    pub fn atypical_mass(&self) -> f64 {
        (1.0 - self.mass).max(0.0)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, seq: &[usize]) -> bool {
        seq.len() == self.n && is_typical(seq, &self.distribution, self.delta)
    }
}

pub fn typical_set(p: &[f64], n: usize, delta: f64) -> Result<TypicalSet> {
    check_params(n, delta)?;
    check_probability_vector(p, linalg::DEFAULT_TOL)?;
    let k = p.len();
    let total = check_enumeration(k, n)?;
    let cls = SpectralClasses::new(p);
    let mut members = Vec::new();
    let mut probabilities = Vec::new();
    for idx in 0..total {
        let s = index_sequence(idx, k, n);
        if cls.string_typical(&s, delta) {
            probabilities.push(sequence_probability(&s, p));
            members.push(s);
        }
    }
    let mass = probabilities.iter().sum();
    Ok(TypicalSet {
        distribution: p.to_vec(),
        n,
        delta,
        members,
        probabilities,
        mass,
    })
}

/// Lexicographically smallest sequence outside the typical set, if any.
pub fn smallest_atypical(p: &[f64], n: usize, delta: f64) -> Result<Option<Vec<usize>>> {
    let total = check_enumeration(p.len(), n)?;
    let cls = SpectralClasses::new(p);
    Ok((0..total)
        .map(|i| index_sequence(i, p.len(), n))
        .find(|s| !cls.string_typical(s, delta)))
}

/// Product distribution restricted to a typical set and renormalized.
#[derive(Debug, Clone)]
pub struct PrunedDistribution {
    set: TypicalSet,
    probabilities: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl PrunedDistribution {
    pub fn set(&self) -> &TypicalSet {
        &self.set
    }

    /// λ_{xⁿ}/(1−ε) for each member, in member order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability_of(&self, seq: &[usize]) -> f64 {
        if self.set.contains(seq) {
            sequence_probability(seq, &self.set.distribution) / self.set.mass
        } else {
            0.0
        }
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[usize] {
        &self.set.members[self.sample_index(rng)]
    }
}

pub fn pruned_distribution(t: &TypicalSet) -> Result<PrunedDistribution> {
    if t.is_empty() || !(t.mass > 0.0) {
        return Err(Error::EmptyTypicalSet);
    }
    let probabilities: Vec<f64> = t.probabilities.iter().map(|p| p / t.mass).collect();
    let sampler = WeightedIndex::new(&probabilities)
        .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    Ok(PrunedDistribution {
        set: t.clone(),
        probabilities,
        sampler,
    })
}

/// Eigenvalues pooled into classes of (numerically) equal value.
#[derive(Debug, Clone)]
pub struct SpectralClasses {
    /// Class of each eigenvector, in the order of the decomposition.
    pub class_of: Vec<usize>,
    /// Total eigenvalue weight of each class.
    pub weights: Vec<f64>,
}

impl SpectralClasses {
    pub fn new(values: &[f64]) -> Self {
        let floor = EIG_CUTOFF * values.iter().cloned().fold(0.0, f64::max);
        let mut reps: Vec<f64> = Vec::new();
        let mut weights = Vec::new();
        let mut class_of = Vec::with_capacity(values.len());
        for &v in values {
            let v = if v > floor { v } else { 0.0 };
            match reps.iter().position(|r| (r - v).abs() <= DEGENERACY_TOL) {
                Some(c) => {
                    weights[c] += v;
                    class_of.push(c);
                }
                None => {
                    reps.push(v);
                    weights.push(v);
                    class_of.push(reps.len() - 1);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            for w in &mut weights {
                *w /= total;
            }
        }
        Self { class_of, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Class-count typicality of an index string.
    pub fn string_typical(&self, s: &[usize], delta: f64) -> bool {
        let mut counts = vec![0; self.len()];
        for &i in s {
            counts[self.class_of[i]] += 1;
        }
        counts_typical(&counts, &self.weights, s.len(), delta)
    }
}

/// Typical eigen-index strings of ρ^{⊗n}, as a mask over the d^n product basis.
pub fn typical_mask(values: &[f64], n: usize, delta: f64) -> Result<Vec<bool>> {
    check_params(n, delta)?;
    let d = values.len();
    check_dim_cap("typical projector", pow_u128(d, n))?;
    let cls = SpectralClasses::new(values);
    Ok((0..d.pow(n as u32))
        .map(|i| cls.string_typical(&index_sequence(i, d, n), delta))
        .collect())
}

/// Σ_s |e_s⟩⟨e_s| over the selected columns of a basis matrix.
fn projector_from_columns(basis: &CMat, keep: &[bool]) -> CMat {
    let cols: Vec<usize> = (0..keep.len()).filter(|&i| keep[i]).collect();
    let mut w = CMat::zeros(basis.nrows(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        w.set_column(j, &basis.column(c));
    }
    &w * w.adjoint()
}

/// Projector onto the typical eigen-strings of ρ^{⊗n}.
pub fn typical_projector(rho: &DensityOperator, n: usize, delta: f64) -> Result<CMat> {
    let e = rho.eigh();
    let mask = typical_mask(&e.values, n, delta)?;
    let basis = linalg::kron_all(std::iter::repeat_n(&e.vectors, n));
    Ok(projector_from_columns(&basis, &mask))
}

/// Per-letter eigendecompositions and spectral classes of an ensemble.
#[derive(Debug, Clone)]
pub struct LetterSpectra {
    pub eigen: Vec<Eigh>,
    pub classes: Vec<SpectralClasses>,
}

impl LetterSpectra {
    pub fn new(ens: &Ensemble) -> Self {
        let eigen: Vec<Eigh> = ens.states().iter().map(|s| s.eigh()).collect();
        let classes = eigen.iter().map(|e| SpectralClasses::new(&e.values)).collect();
        Self { eigen, classes }
    }

    /// Conditional typicality of an eigen-index string given the letter sequence:
    /// for each letter a and class c, |N(a,c) − N(a)q_a(c)| ≤ δN(a)q_a(c).
    pub fn conditionally_typical(&self, seq: &[usize], s: &[usize], delta: f64) -> bool {
        let mut by_letter: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&a, &i) in seq.iter().zip(s) {
            by_letter.entry(a).or_default().push(i);
        }
        by_letter
            .iter()
            .all(|(&a, idx)| self.classes[a].string_typical(idx, delta))
    }
}

fn check_sequence(ens: &Ensemble, seq: &[usize]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidParameter("empty sequence".into()));
    }
    if let Some(a) = seq.iter().find(|&&a| a >= ens.len()) {
        return Err(Error::UnknownLabel(format!("letter {a} outside the ensemble")));
    }
    check_dim_cap("conditional typical projector", pow_u128(ens.dim(), seq.len()))
}

/// ⊗ᵢ ρ̂_{xᵢ}.
pub fn sequence_state(ens: &Ensemble, seq: &[usize]) -> Result<CMat> {
    check_sequence(ens, seq)?;
    Ok(linalg::kron_all(seq.iter().map(|&a| ens.states()[a].matrix())))
}

/// Projector onto the conditionally typical eigen-strings of ρ̂_{xⁿ}.
pub fn conditional_typical_projector(ens: &Ensemble, seq: &[usize], delta: f64) -> Result<CMat> {
    check_params(seq.len(), delta)?;
    check_sequence(ens, seq)?;
    conditional_projector_with(&LetterSpectra::new(ens), ens.dim(), seq, delta)
}

fn conditional_projector_with(
    spectra: &LetterSpectra,
    d: usize,
    seq: &[usize],
    delta: f64,
) -> Result<CMat> {
    let n = seq.len();
    let basis = linalg::kron_all(seq.iter().map(|&a| &spectra.eigen[a].vectors));
    let keep: Vec<bool> = (0..d.pow(n as u32))
        .map(|i| spectra.conditionally_typical(seq, &index_sequence(i, d, n), delta))
        .collect();
    Ok(projector_from_columns(&basis, &keep))
}

/// Spectral projector onto eigenvalues strictly above `threshold` (and above
/// the relative numerical floor).
pub fn cutoff_projector(op: &CMat, threshold: f64) -> CMat {
    let e = linalg::eigh(op);
    let floor = e.floor().max(threshold);
    let keep: Vec<bool> = e.values.iter().map(|&v| v > floor).collect();
    projector_from_columns(&e.vectors, &keep)
}

/// Λ′ and Λ for one sequence.
#[derive(Debug, Clone)]
pub struct LambdaPair {
    pub lambda_prime: CMat,
    pub lambda: CMat,
}

/// Projectors and approximating operators for one side of the protocol.
#[derive(Debug, Clone)]
pub struct ProjectorBundle {
    pub n: usize,
    pub delta: f64,
    pub delta1: f64,
    /// Mass of the letter distribution outside its typical set.
    pub epsilon: f64,
    pub typical: TypicalSet,
    pub pi_rho: CMat,
    pub pi_hat: CMat,
    /// ε·2^{−n(S(ρ)+δ₁)}.
    pub threshold: f64,
    /// σ′ = Σ_{xⁿ typical} λ_{xⁿ}/(1−ε) Λ′_{xⁿ}.
    pub sigma_prime: CMat,
    /// Λ′, Λ for each member of `typical`, in member order.
    pub lambdas: Vec<LambdaPair>,
}

impl ProjectorBundle {
    /// Builds every projector with δ₁ = δ.
    pub fn new(rho: &DensityOperator, ens: &Ensemble, n: usize, delta: f64) -> Result<Self> {
        Self::with_delta1(rho, ens, n, delta, delta)
    }

    pub fn with_delta1(
        rho: &DensityOperator,
        ens: &Ensemble,
        n: usize,
        delta: f64,
        delta1: f64,
    ) -> Result<Self> {
        if rho.dim() != ens.dim() {
            return Err(Error::DimensionMismatch("ensemble and state dimensions".into()));
        }
        check_params(n, delta)?;
        check_dim_cap("projector bundle", pow_u128(rho.dim(), n))?;
        let typical = typical_set(ens.weights(), n, delta)?;
        let epsilon = typical.atypical_mass();
        let pi_rho = typical_projector(rho, n, delta)?;
        let spectra = LetterSpectra::new(ens);
        let dn = rho.dim().pow(n as u32);
        let mut primes = Vec::with_capacity(typical.len());
        let mut sigma_prime = linalg::zeros(dn, dn);
        for (seq, lam) in typical.members().iter().zip(typical.probabilities()) {
            let pi_u = conditional_projector_with(&spectra, rho.dim(), seq, delta)?;
            let rho_u = linalg::kron_all(seq.iter().map(|&a| ens.states()[a].matrix()));
            let lp = linalg::hermitize(&(&pi_rho * &pi_u * rho_u * &pi_u * &pi_rho));
            sigma_prime += lp.scale(lam / typical.mass());
            primes.push(lp);
        }
        let threshold =
            epsilon * 2f64.powf(-(n as f64) * (von_neumann_entropy(rho) + delta1));
        let pi_hat = cutoff_projector(&sigma_prime, threshold);
        let lambdas = primes
            .into_iter()
            .map(|lp| LambdaPair {
                lambda: linalg::hermitize(&(&pi_hat * &lp * &pi_hat)),
                lambda_prime: lp,
            })
            .collect();
        Ok(Self {
            n,
            delta,
            delta1,
            epsilon,
            typical,
            pi_rho,
            pi_hat,
            threshold,
            sigma_prime,
            lambdas,
        })
    }

    pub fn position(&self, seq: &[usize]) -> Option<usize> {
        self.typical.members().binary_search_by(|m| m.as_slice().cmp(seq)).ok()
    }

    /// (Λ′, Λ) for a typical sequence.
    pub fn lambda_operators(&self, seq: &[usize]) -> Option<&LambdaPair> {
        self.position(seq).map(|i| &self.lambdas[i])
    }
}

/// Λ′ = Π_ρ Π_x ρ̂_x Π_x Π_ρ and Λ = Π̂ Λ′ Π̂ for any sequence, given the bundle's
/// Π_ρ and Π̂.
pub fn lambda_operators(
    ens: &Ensemble,
    seq: &[usize],
    bundle: &ProjectorBundle,
) -> Result<LambdaPair> {
    let pi_u = conditional_typical_projector(ens, seq, bundle.delta)?;
    let rho_u = sequence_state(ens, seq)?;
    if rho_u.nrows() != bundle.pi_rho.nrows() {
        return Err(Error::DimensionMismatch("sequence length differs from the bundle's".into()));
    }
    let lp = linalg::hermitize(&(&bundle.pi_rho * &pi_u * rho_u * &pi_u * &bundle.pi_rho));
    let l = linalg::hermitize(&(&bundle.pi_hat * &lp * &bundle.pi_hat));
    Ok(LambdaPair {
        lambda_prime: lp,
        lambda: l,
    })
}

/// Basis vector |s⟩ of a product basis for a string of per-position bases.
pub fn product_vector(bases: &[&CMat], s: &[usize]) -> CVec {
    let mut v = bases[0].column(s[0]).into_owned();
    for (b, &i) in bases.iter().zip(s).skip(1) {
        v = linalg::kron_vec(&v, &b.column(i).into_owned());
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, identity, real_diag};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn uniform_binary_is_all_typical() {
        for n in 1..8 {
            for delta in [1e-3, 0.1, 1.0] {
                let t = typical_set(&[0.5, 0.5], n, delta).unwrap();
                assert_eq!(t.len(), 1 << n);
                assert!((t.mass() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn point_mass_gives_constant_sequence() {
        let t = typical_set(&[0.0, 1.0, 0.0], 5, 0.1).unwrap();
        assert_eq!(t.members(), &[vec![1; 5]]);
        assert!((t.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skewed_binary_mass_matches_binomial_sum() {
        let (n, delta) = (10, 0.1);
        let t = typical_set(&[0.9, 0.1], n, delta).unwrap();
        // N(1) = 1 is the only count with |k/10 − 0.1| ≤ 0.01
        let oracle = binomial(10, 1) * 0.1 * 0.9f64.powi(9);
        assert!((t.mass() - oracle).abs() < 1e-12);
        assert_eq!(t.len(), 10);
    }

    #[test]
    fn enumeration_cap() {
        let err = typical_set(&[0.25; 4], 11, 0.1).unwrap_err();
        assert!(err.is_cap());
    }

    #[test]
    fn pruned_distribution_cases() {
        let t = typical_set(&[0.5, 0.5], 3, 1.0).unwrap();
        let pd = pruned_distribution(&t).unwrap();
        for (s, p) in t.members().iter().zip(pd.probabilities()) {
            assert!((p - sequence_probability(s, &[0.5, 0.5])).abs() < 1e-15);
        }
        let single = typical_set(&[1.0, 0.0], 3, 0.1).unwrap();
        let pd = pruned_distribution(&single).unwrap();
        assert_eq!(pd.probabilities(), &[1.0]);
        let empty = typical_set(&[0.6, 0.4], 3, 0.01).unwrap();
        assert!(matches!(pruned_distribution(&empty), Err(Error::EmptyTypicalSet)));
    }

    #[test]
    fn pruned_sampling_frequencies() {
        let t = typical_set(&[0.9, 0.1], 10, 0.1).unwrap();
        let pd = pruned_distribution(&t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut hist = vec![0usize; t.len()];
        for _ in 0..draws {
            hist[pd.sample_index(&mut rng)] += 1;
        }
        for (h, p) in hist.iter().zip(pd.probabilities()) {
            let mean = p * draws as f64;
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((*h as f64 - mean).abs() <= 3.0 * sd + 1.0);
        }
    }

    #[test]
    fn typical_projector_cases() {
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(approx_eq(&typical_projector(&mixed, 3, 0.05).unwrap(), &identity(8), 1e-12));

        let pure = DensityOperator::from_matrix(real_diag(&[0.0, 1.0])).unwrap();
        let p = typical_projector(&pure, 3, 0.1).unwrap();
        assert!(approx_eq(&p, pure.tensor_power(3).unwrap().matrix(), 1e-12));

        let rho = DensityOperator::from_matrix(real_diag(&[0.8, 0.2])).unwrap();
        for (delta, expect) in [(0.1, 0), (0.2, 6), (1.0, 22)] {
            let p = typical_projector(&rho, 6, delta).unwrap();
            let oracle = (0..64u32)
                .filter(|i| {
                    let ones = i.count_ones() as f64;
                    ((6.0 - ones) / 6.0 - 0.8).abs() <= delta * 0.8 + 1e-12
                        && (ones / 6.0 - 0.2).abs() <= delta * 0.2 + 1e-12
                })
                .count();
            assert_eq!(oracle, expect);
            assert!((p.trace().re - oracle as f64).abs() < 1e-9);
            assert!(approx_eq(&(&p * &p), &p, 1e-9));
        }
    }

    fn qubit_ensemble(pure: bool) -> Ensemble {
        let states = if pure {
            vec![
                DensityOperator::from_matrix(real_diag(&[1.0, 0.0])).unwrap(),
                DensityOperator::from_matrix(linalg::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]))
                    .unwrap(),
            ]
        } else {
            vec![
                DensityOperator::from_matrix(real_diag(&[0.75, 0.25])).unwrap(),
                DensityOperator::from_matrix(linalg::from_real_rows(&[&[0.5, 0.2], &[0.2, 0.5]]))
                    .unwrap(),
            ]
        };
        Ensemble::new(vec![0.6, 0.4], states).unwrap()
    }

    #[test]
    fn conditional_projector_pure_and_flat() {
        let ens = qubit_ensemble(true);
        let seq = [0, 1, 1];
        let p = conditional_typical_projector(&ens, &seq, 0.1).unwrap();
        assert!(approx_eq(&p, &sequence_state(&ens, &seq).unwrap(), 1e-12));

        let flat = Ensemble::new(vec![1.0], vec![DensityOperator::maximally_mixed(2)]).unwrap();
        let p = conditional_typical_projector(&flat, &[0, 0, 0], 0.01).unwrap();
        assert!(approx_eq(&p, &identity(8), 1e-12));
    }

    #[test]
    fn conditional_projector_mass_matches_eigen_strings() {
        let ens = qubit_ensemble(false);
        let seq = [0, 1, 0, 0, 1];
        let delta = 0.5;
        let p = conditional_typical_projector(&ens, &seq, delta).unwrap();
        let rho = sequence_state(&ens, &seq).unwrap();
        let got = linalg::trace_of_product(&p, &rho).re;
        // classical oracle: eigenvalue strings of each letter, counted per letter block
        let spectra: Vec<Vec<f64>> = ens.states().iter().map(|s| s.eigh().values).collect();
        let mut want = 0.0;
        for i in 0..32usize {
            let s = index_sequence(i, 2, 5);
            let mut ok = true;
            for a in 0..2 {
                let pos: Vec<usize> = (0..5).filter(|&k| seq[k] == a).collect();
                let ones = pos.iter().filter(|&&k| s[k] == 1).count() as f64;
                let na = pos.len() as f64;
                let q = &spectra[a];
                ok &= (na - ones - na * q[0]).abs() <= delta * na * q[0] + 1e-12;
                ok &= (ones - na * q[1]).abs() <= delta * na * q[1] + 1e-12;
            }
            if ok {
                want += (0..5).map(|k| spectra[seq[k]][s[k]]).product::<f64>();
            }
        }
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn cutoff_projector_cases() {
        let m = real_diag(&[0.5, 0.3, 0.2, 0.0]);
        assert!(approx_eq(&cutoff_projector(&m, 0.0), &real_diag(&[1.0, 1.0, 1.0, 0.0]), 1e-12));
        assert!(approx_eq(&cutoff_projector(&m, 0.6), &linalg::zeros(4, 4), 1e-12));
        assert!(approx_eq(&cutoff_projector(&m, 0.25), &real_diag(&[1.0, 1.0, 0.0, 0.0]), 1e-12));
    }

    #[test]
    fn bundle_operator_ordering() {
        let ens = qubit_ensemble(false);
        let rho = DensityOperator::from_matrix(ens.average()).unwrap();
        let b = ProjectorBundle::new(&rho, &ens, 4, 0.3).unwrap();
        assert!(!b.lambdas.is_empty());
        for (seq, pair) in b.typical.members().iter().zip(&b.lambdas) {
            let rho_u = sequence_state(&ens, seq).unwrap();
            assert!(linalg::is_psd(&pair.lambda, 1e-9));
            let (tl, tp) = (linalg::trace(&pair.lambda).re, linalg::trace(&pair.lambda_prime).re);
            assert!(tl <= tp + 1e-12 && tp <= linalg::trace(&rho_u).re + 1e-12);
        }
        let direct = lambda_operators(&ens, &b.typical.members()[0], &b).unwrap();
        assert!(approx_eq(&direct.lambda, &b.lambdas[0].lambda, 1e-12));
        for p in [&b.pi_rho, &b.pi_hat] {
            assert!(approx_eq(&(p * p), p, 1e-9));
            assert!(linalg::hermiticity_residual(p) < 1e-12);
        }
    }

    #[test]
    fn trivial_projectors_leave_sequence_state() {
        // flat ensemble: every projector is the identity
        let ens = Ensemble::new(vec![1.0], vec![DensityOperator::maximally_mixed(2)]).unwrap();
        let rho = DensityOperator::maximally_mixed(2);
        let b = ProjectorBundle::new(&rho, &ens, 3, 0.05).unwrap();
        let rho_u = sequence_state(&ens, &[0, 0, 0]).unwrap();
        assert!(approx_eq(&b.lambdas[0].lambda, &rho_u, 1e-12));
    }
}
