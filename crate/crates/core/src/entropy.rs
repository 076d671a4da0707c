//! Entropic functionals, all in bits.

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, partial_trace, CMat, EIG_CUTOFF};
use crate::povm::Ensemble;
use crate::state::DensityOperator;

/// −Σ p log₂ p over the strictly positive entries.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|x| **x > 0.0)
        .map(|x| -x * x.log2())
        .sum()
}

/// −Σ λ log₂ λ over the eigenvalues of a PSD matrix that lie above the cutoff.
/// The matrix need not be normalized.
pub fn entropy_of_matrix(m: &CMat) -> f64 {
    spectral_entropy(&eigvalsh(m))
}

/// −Σ λ log₂ λ over a spectrum, ignoring values at or below the relative cutoff.
pub fn spectral_entropy(values: &[f64]) -> f64 {
    let top = values.iter().fold(0.0_f64, |m, v| m.max(*v));
    let floor = EIG_CUTOFF * top;
    values
        .iter()
        .filter(|l| **l > floor)
        .map(|l| -l * l.log2())
        .sum()
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_matrix(rho.matrix())
}

/// I(A;B) = S(A) + S(B) − S(AB) for the subsystem groups `a` and `b`.
/// Subsystems in neither group are traced out.
pub fn quantum_mutual_information(rho: &DensityOperator, a: &[usize], b: &[usize]) -> Result<f64> {
    let n = rho.dims().len();
    if a.iter().chain(b).any(|k| *k >= n) {
        return Err(Error::DimensionMismatch(format!(
            "cut {a:?}|{b:?} out of range for {n} subsystems"
        )));
    }
    if a.iter().any(|k| b.contains(k)) {
        return Err(Error::DimensionMismatch("cut groups overlap".into()));
    }
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    let s = |keep: &[usize]| -> Result<f64> {
        Ok(entropy_of_matrix(&partial_trace(rho.matrix(), rho.dims(), keep)?))
    };
    Ok(s(a)? + s(b)? - s(&ab)?)
}

/// χ = S(Σ p_i ρ_i) − Σ p_i S(ρ_i).
pub fn holevo_information(ens: &Ensemble) -> f64 {
    let avg = entropy_of_matrix(&ens.average());
    let mixed: f64 = ens
        .weights()
        .iter()
        .zip(ens.states())
        .map(|(p, s)| p * von_neumann_entropy(s))
        .sum();
    (avg - mixed).max(0.0)
}

/// Binary entropy h(p).
pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_ket, c64, outer, real_diag, CVec};

    fn bell() -> DensityOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVec::from_vec(vec![c64(h, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(h, 0.0)]);
        DensityOperator::pure(&v, vec![2, 2]).unwrap()
    }

    #[test]
    fn simple_entropies() {
        let pure = DensityOperator::pure(&basis_ket(3, 1), vec![3]).unwrap();
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(2)) - 1.0).abs() < 1e-12);
        let r = DensityOperator::from_matrix(real_diag(&[0.5, 0.25, 0.25])).unwrap();
        assert!((von_neumann_entropy(&r) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_cases() {
        let prod = DensityOperator::maximally_mixed(2).tensor(&DensityOperator::maximally_mixed(2));
        assert!(quantum_mutual_information(&prod, &[0], &[1]).unwrap().abs() < 1e-12);
        assert!((quantum_mutual_information(&bell(), &[0], &[1]).unwrap() - 2.0).abs() < 1e-12);
        let cc = DensityOperator::new(real_diag(&[0.5, 0.0, 0.0, 0.5]), vec![2, 2]).unwrap();
        assert!((quantum_mutual_information(&cc, &[0], &[1]).unwrap() - 1.0).abs() < 1e-12);
        assert!(quantum_mutual_information(&cc, &[0], &[2]).is_err());
    }

    #[test]
    fn holevo_cases() {
        let z0 = DensityOperator::pure(&basis_ket(2, 0), vec![2]).unwrap();
        let z1 = DensityOperator::pure(&basis_ket(2, 1), vec![2]).unwrap();
        let e = Ensemble::new(vec![0.5, 0.5], vec![z0.clone(), z1]).unwrap();
        assert!((holevo_information(&e) - 1.0).abs() < 1e-12);
        let single = Ensemble::new(vec![1.0], vec![z0.clone()]).unwrap();
        assert!(holevo_information(&single).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = CVec::from_vec(vec![c64(h, 0.0), c64(h, 0.0)]);
        let p = DensityOperator::from_matrix(outer(&plus)).unwrap();
        let e = Ensemble::new(vec![0.5, 0.5], vec![z0, p]).unwrap();
        // average state has eigenvalues 1/2 ± √2/4
        let want = binary_entropy(0.5 + 2f64.sqrt() / 4.0);
        assert!((holevo_information(&e) - want).abs() < 1e-12);
    }
}
