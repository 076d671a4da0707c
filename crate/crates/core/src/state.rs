//! Density operators and purifications.

use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, check_dim_cap, eigh, hermiticity_residual, kron, partial_trace, pow_u128, CMat,
    CVec, Eigh, DEFAULT_TOL,
};

/// Unit-trace PSD operator with subsystem dimension labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
    dims: Vec<usize>,
}

impl DensityOperator {
    pub fn new(matrix: CMat, dims: Vec<usize>) -> Result<Self> {
        Self::with_tol(matrix, dims, DEFAULT_TOL)
    }

    /// Validates Hermiticity, positivity and unit trace at `tol`, then symmetrizes.
    pub fn with_tol(matrix: CMat, dims: Vec<usize>, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("density operator must be square".into()));
        }
        let side: usize = dims.iter().product();
        if side != matrix.nrows() || dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not match side length {}",
                matrix.nrows()
            )));
        }
        let r = hermiticity_residual(&matrix);
        if r > tol {
            return Err(Error::NotHermitian(r));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::BadTrace(tr.re));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < -tol {
            return Err(Error::NotPsd(min));
        }
        Ok(Self {
            matrix: linalg::hermitize(&matrix),
            dims,
        })
    }

    /// Single-subsystem state.
    pub fn from_matrix(matrix: CMat) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d])
    }

    /// |v⟩⟨v| for a normalized vector.
    pub fn pure(v: &CVec, dims: Vec<usize>) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::BadTrace(n * n));
        }
        Self::new(linalg::outer(v), dims)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: linalg::identity(d).scale(1.0 / d as f64),
            dims: vec![d],
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix with new subsystem labels.
    pub fn relabel(&self, dims: Vec<usize>) -> Result<Self> {
        Self::new(self.matrix.clone(), dims)
    }

    /// Reduced state on the listed subsystems.
    pub fn reduce(&self, keep: &[usize]) -> Result<Self> {
        let m = partial_trace(&self.matrix, &self.dims, keep)?;
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let dims = kept.iter().map(|&k| self.dims[k]).collect();
        Ok(Self {
            matrix: linalg::hermitize(&m),
            dims,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: kron(&self.matrix, &other.matrix),
            dims,
        }
    }

    /// ρ^{⊗n}, subject to the operator size cap.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        check_dim_cap("tensor power dimension", pow_u128(self.dim(), n))?;
        let mut acc = Self {
            matrix: linalg::identity(1),
            dims: vec![],
        };
        for _ in 0..n {
            acc = acc.tensor(self);
        }
        Ok(acc)
    }

    pub fn eigh(&self) -> Eigh {
        eigh(&self.matrix)
    }

    pub fn sqrt(&self) -> CMat {
        linalg::sqrt_psd(&self.matrix)
    }

    pub fn expectation(&self, op: &CMat) -> f64 {
        linalg::trace_of_product(&self.matrix, op).re
    }
}

/// Pure state on reference ⊗ system, with the system's own subsystem labels.
#[derive(Debug, Clone)]
pub struct PureBipartiteState {
    vector: CVec,
    reference_dim: usize,
    system_dims: Vec<usize>,
}

impl PureBipartiteState {
    pub fn new(vector: CVec, reference_dim: usize, system_dims: Vec<usize>) -> Result<Self> {
        let sys: usize = system_dims.iter().product();
        if vector.len() != reference_dim * sys {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} is not {reference_dim}·{sys}",
                vector.len()
            )));
        }
        let n = vector.norm();
        if (n - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::BadTrace(n * n));
        }
        Ok(Self {
            vector,
            reference_dim,
            system_dims,
        })
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    /// (reference dimension, system dimension).
    pub fn dims(&self) -> (usize, usize) {
        (self.reference_dim, self.system_dims.iter().product())
    }

    pub fn system_dims(&self) -> &[usize] {
        &self.system_dims
    }

    /// Reference first, then the system subsystems.
    pub fn register_dims(&self) -> Vec<usize> {
        let mut d = vec![self.reference_dim];
        d.extend_from_slice(&self.system_dims);
        d
    }

    pub fn projector(&self) -> CMat {
        linalg::outer(&self.vector)
    }

    pub fn reduced_system(&self) -> Result<DensityOperator> {
        let keep: Vec<usize> = (1..=self.system_dims.len()).collect();
        let m = partial_trace(&self.projector(), &self.register_dims(), &keep)?;
        DensityOperator::new(m, self.system_dims.clone())
    }

    pub fn reduced_reference(&self) -> Result<DensityOperator> {
        let m = partial_trace(&self.projector(), &self.register_dims(), &[0])?;
        DensityOperator::new(m, vec![self.reference_dim])
    }
}

/// Canonical purification Σ_j |j⟩_R ⊗ √ρ|j⟩ with a reference as large as the system.
///
/// The reference marginal of this purification is ρᵀ.
pub fn purify(rho: &DensityOperator) -> Result<PureBipartiteState> {
    let min = rho.eigh().values.last().copied().unwrap_or(0.0);
    if min < -DEFAULT_TOL {
        return Err(Error::NotPsd(min));
    }
    let s = rho.sqrt();
    let d = rho.dim();
    let mut v = CVec::zeros(d * d);
    for j in 0..d {
        for a in 0..d {
            v[j * d + a] = s[(a, j)];
        }
    }
    let n = v.norm();
    if n > 0.0 {
        v.scale_mut(1.0 / n);
    } else {
        v[0] = c64(1.0, 0.0);
    }
    PureBipartiteState::new(v, d, rho.dims().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::von_neumann_entropy;
    use crate::linalg::{approx_eq, basis_ket, real_diag};

    #[test]
    fn rejects_invalid_states() {
        assert!(matches!(
            DensityOperator::from_matrix(real_diag(&[0.7, 0.7])),
            Err(Error::BadTrace(_))
        ));
        assert!(matches!(
            DensityOperator::from_matrix(real_diag(&[1.5, -0.5])),
            Err(Error::NotPsd(_))
        ));
        assert!(DensityOperator::new(real_diag(&[0.5, 0.5]), vec![3]).is_err());
    }

    #[test]
    fn purify_pure_state_is_product() {
        let rho = DensityOperator::pure(&basis_ket(2, 0), vec![2]).unwrap();
        let psi = purify(&rho).unwrap();
        let r = psi.reduced_reference().unwrap();
        assert!(von_neumann_entropy(&r).abs() < 1e-12);
        assert!((psi.vector()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purify_maximally_mixed_gives_bell_vector() {
        let psi = purify(&DensityOperator::maximally_mixed(2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [h, 0.0, 0.0, h];
        for (x, w) in psi.vector().iter().zip(want) {
            assert!((x.re - w).abs() < 1e-12 && x.im.abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_system_round_trip() {
        let rho = DensityOperator::from_matrix(real_diag(&[0.6, 0.3, 0.1])).unwrap();
        let psi = purify(&rho).unwrap();
        assert_eq!(psi.dims(), (3, 3));
        assert!(approx_eq(psi.reduced_system().unwrap().matrix(), rho.matrix(), 1e-12));
    }

    #[test]
    fn tensor_power_respects_cap() {
        let rho = DensityOperator::maximally_mixed(2);
        assert_eq!(rho.tensor_power(3).unwrap().dims(), &[2, 2, 2]);
        assert!(rho.tensor_power(13).unwrap_err().is_cap());
    }
}
