//! Dense complex matrices and the handful of spectral routines the rest of
//! the crate is built on.
//!
//! Every eigendecomposition goes through [`eigh`], which symmetrizes its input
//! first. Eigenvalues are returned in descending order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default absolute tolerance for validity checks.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Eigenvalues below this fraction of the largest one count as zero.
pub const EIG_CUTOFF: f64 = 1e-12;
/// Largest operator side length any routine will build.
pub const DIM_CAP: usize = 4096;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn real_diag(values: &[f64]) -> CMat {
    let d = values.len();
    let mut m = CMat::zeros(d, d);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c64(*v, 0.0);
    }
    m
}

/// Builds a matrix from real entries given row by row.
pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    CMat::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn basis_ket(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = c64(1.0, 0.0);
    v
}

/// The rank-one operator |v⟩⟨v|.
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entrywise modulus of `a − a†`.
pub fn hermiticity_residual(a: &CMat) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            r = r.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    r
}

/// Entrywise comparison with an absolute tolerance.
pub fn approx_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of a list, left to right. The empty product is the 1×1 identity.
pub fn kron_all<'a, I>(factors: I) -> CMat
where
    I: IntoIterator<Item = &'a CMat>,
{
    let mut acc = identity(1);
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

pub fn trace(a: &CMat) -> C64 {
    a.trace()
}

/// Tr(a·b) without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = c64(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn transpose(a: &CMat) -> CMat {
    a.transpose()
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    /// Zero threshold used for support and pseudo-inverse decisions.
    pub fn floor(&self) -> f64 {
        let top = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        EIG_CUTOFF * top.max(f64::MIN_POSITIVE)
    }

    pub fn rank(&self) -> usize {
        let f = self.floor();
        self.values.iter().filter(|v| **v > f).count()
    }

    pub fn vector(&self, k: usize) -> CVec {
        self.vectors.column(k).into_owned()
    }

    /// V·diag(f(λ))·V†.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let d = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, lam) in self.values.iter().enumerate() {
            let s = f(*lam);
            for i in 0..d {
                scaled[(i, k)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Hermitian part scaled to unit max entry, with entries far below the scale set
/// to zero. nalgebra's eigensolver can return NaN on matrices carrying entries
/// near the subnormal range.
fn conditioned(a: &CMat) -> (CMat, f64) {
    let h = hermitize(a);
    let scale = h.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    if scale == 0.0 || !scale.is_finite() {
        return (h, 1.0);
    }
    let h = h.map(|c| {
        let c = c / scale;
        if c.norm() < 1e-40 {
            c64(0.0, 0.0)
        } else {
            c
        }
    });
    (h, scale)
}

pub fn eigh(a: &CMat) -> Eigh {
    let n = a.nrows();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: zeros(0, 0),
        };
    }
    let (h, scale) = conditioned(a);
    let se = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let values = order.iter().map(|&i| se.eigenvalues[i] * scale).collect();
    let vectors = CMat::from_fn(n, n, |r, k| se.eigenvectors[(r, order[k])]);
    Eigh { values, vectors }
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 {
        return vec![];
    }
    let (h, scale) = conditioned(a);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().map(|x| x * scale).collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).last().copied().unwrap_or(0.0)
}

pub fn is_psd(a: &CMat, tol: f64) -> bool {
    a.is_square() && hermiticity_residual(a) <= tol && min_eigenvalue(a) >= -tol
}

fn check_hermitian(a: &CMat, tol: f64) -> Result<()> {
    let r = hermiticity_residual(a);
    if r > tol {
        return Err(Error::NotHermitian(r));
    }
    Ok(())
}

/// Square root and support-restricted inverse square root of a PSD matrix.
///
/// Eigenvalues at or below `cutoff·λ_max` are treated as zero in the inverse.
pub fn matrix_sqrt_and_pinv_sqrt(a: &CMat, cutoff: f64) -> Result<(CMat, CMat)> {
    check_hermitian(a, DEFAULT_TOL.max(1e-12 * a.norm()))?;
    let e = eigh(a);
    if let Some(min) = e.values.last() {
        if *min < -DEFAULT_TOL {
            return Err(Error::NotPsd(*min));
        }
    }
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = cutoff * top;
    let sqrt = e.map(|l| if l > 0.0 { l.sqrt() } else { 0.0 });
    let pinv = e.map(|l| if l > floor && l > 0.0 { 1.0 / l.sqrt() } else { 0.0 });
    Ok((sqrt, pinv))
}

/// Square root of a PSD matrix, negative rounding noise clipped to zero.
pub fn sqrt_psd(a: &CMat) -> CMat {
    eigh(a).map(|l| if l > 0.0 { l.sqrt() } else { 0.0 })
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    if a.is_square() && hermiticity_residual(a) <= 1e-13 * (1.0 + a.norm()) {
        return trace_norm_hermitian(a);
    }
    a.clone().singular_values().iter().sum()
}

/// Trace norm of a matrix known to be Hermitian.
pub fn trace_norm_hermitian(a: &CMat) -> f64 {
    eigvalsh(a).iter().map(|l| l.abs()).sum()
}

/// Largest singular value.
pub fn operator_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    if a.is_square() && hermiticity_residual(a) <= 1e-13 * (1.0 + a.norm()) {
        let v = eigvalsh(a);
        return v[0].abs().max(v[v.len() - 1].abs());
    }
    a.clone().singular_values().max()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Offsets into the full index for every multi-index over the chosen subsystems.
fn offsets(dims: &[usize], subsystems: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &k in subsystems {
        let mut next = Vec::with_capacity(out.len() * dims[k]);
        for base in &out {
            for x in 0..dims[k] {
                next.push(base + x * st[k]);
            }
        }
        out = next;
    }
    out
}

fn check_dims(side: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != side {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} multiply to {prod}, operator side is {side}"
        )));
    }
    Ok(())
}

/// Reduced operator on the subsystems listed in `keep`, in their original order.
pub fn partial_trace(op: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    if !op.is_square() {
        return Err(Error::DimensionMismatch("partial trace of a non-square matrix".into()));
    }
    check_dims(op.nrows(), dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} out of range for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let ko = offsets(dims, &kept);
    let to = offsets(dims, &traced);
    let m = ko.len();
    let mut out = CMat::zeros(m, m);
    for (i, oi) in ko.iter().enumerate() {
        for (j, oj) in ko.iter().enumerate() {
            let mut s = c64(0.0, 0.0);
            for t in &to {
                s += op[(oi + t, oj + t)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Tr_k{(I ⊗ op_k ⊗ I)·x}: applies `op` to subsystem `k` and traces that subsystem out.
pub fn contract_subsystem(x: &CMat, dims: &[usize], k: usize, op: &CMat) -> Result<CMat> {
    check_dims(x.nrows(), dims)?;
    if k >= dims.len() || op.nrows() != dims[k] || op.ncols() != dims[k] {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {} does not fit slot {k} of {dims:?}",
            op.nrows()
        )));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|&i| i != k).collect();
    let ro = offsets(dims, &rest);
    let sk = strides(dims)[k];
    let d = dims[k];
    let m = ro.len();
    let mut out = CMat::zeros(m, m);
    for (i, oi) in ro.iter().enumerate() {
        for (j, oj) in ro.iter().enumerate() {
            let mut s = c64(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    let w = op[(b, a)];
                    if w != c64(0.0, 0.0) {
                        s += w * x[(oi + a * sk, oj + b * sk)];
                    }
                }
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Index map for reordering subsystems: new subsystem `j` is old subsystem `perm[j]`.
/// Entry `i` of the result is the old flat index of new flat index `i`.
pub fn permutation_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let mut seen = perm.to_vec();
    seen.sort_unstable();
    if seen != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::DimensionMismatch(format!(
            "{perm:?} is not a permutation of {} subsystems",
            dims.len()
        )));
    }
    Ok(offsets(dims, perm))
}

pub fn permute_subsystems(op: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat> {
    check_dims(op.nrows(), dims)?;
    let map = permutation_map(dims, perm)?;
    let n = map.len();
    Ok(CMat::from_fn(n, n, |i, j| op[(map[i], map[j])]))
}

pub fn permute_vector(v: &CVec, dims: &[usize], perm: &[usize]) -> Result<CVec> {
    check_dims(v.len(), dims)?;
    let map = permutation_map(dims, perm)?;
    Ok(CVec::from_fn(map.len(), |i, _| v[map[i]]))
}

/// Places `op` on subsystem `at` of a register with the given dims, identity elsewhere.
pub fn embed(op: &CMat, dims: &[usize], at: usize) -> Result<CMat> {
    if at >= dims.len() || op.nrows() != dims[at] {
        return Err(Error::DimensionMismatch(format!(
            "cannot place a {}-dim operator on slot {at} of {dims:?}",
            op.nrows()
        )));
    }
    let left: usize = dims[..at].iter().product();
    let right: usize = dims[at + 1..].iter().product();
    Ok(kron_all([&identity(left), op, &identity(right)]))
}

/// Guards the operator side length against [`DIM_CAP`].
pub fn check_dim_cap(what: &'static str, dim: u128) -> Result<()> {
    if dim > DIM_CAP as u128 {
        return Err(Error::CapExceeded {
            what,
            needed: dim,
            cap: DIM_CAP as u128,
        });
    }
    Ok(())
}

/// `base^exp` in u128, saturating.
pub fn pow_u128(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMat {
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn kron_of_identities() {
        assert!(approx_eq(&kron(&identity(2), &identity(2)), &identity(4), 0.0));
    }

    #[test]
    fn kron_of_basis_projectors() {
        let got = kron(&real_diag(&[1.0, 0.0]), &real_diag(&[0.0, 1.0]));
        assert!(approx_eq(&got, &real_diag(&[0.0, 1.0, 0.0, 0.0]), 0.0));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let (s, p) = matrix_sqrt_and_pinv_sqrt(&real_diag(&[4.0, 1.0]), EIG_CUTOFF).unwrap();
        assert!(approx_eq(&s, &real_diag(&[2.0, 1.0]), 1e-12));
        assert!(approx_eq(&p, &real_diag(&[0.5, 1.0]), 1e-12));
    }

    #[test]
    fn pinv_sqrt_keeps_support() {
        let (_, p) = matrix_sqrt_and_pinv_sqrt(&real_diag(&[1.0, 0.0]), EIG_CUTOFF).unwrap();
        assert!(approx_eq(&p, &real_diag(&[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn sqrt_rejects_non_hermitian() {
        let a = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(
            matrix_sqrt_and_pinv_sqrt(&a, EIG_CUTOFF),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn norms_of_small_diagonals() {
        assert!((trace_norm(&real_diag(&[1.0, -1.0])) - 2.0).abs() < 1e-12);
        assert!((operator_norm(&real_diag(&[3.0, -5.0])) - 5.0).abs() < 1e-12);
        assert!((operator_norm(&identity(5)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_of_non_hermitian() {
        // singular values of [[0,2],[0,0]] are 2 and 0
        let a = from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((trace_norm(&a) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_is_descending() {
        let e = eigh(&real_diag(&[0.2, 0.5, 0.3]));
        assert_eq!(e.values, vec![0.5, 0.3, 0.2]);
        assert!(approx_eq(&e.map(|l| l), &real_diag(&[0.2, 0.5, 0.3]), 1e-12));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = real_diag(&[0.7, 0.3]);
        let b = from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let ab = kron(&a, &b);
        assert!(approx_eq(&partial_trace(&ab, &[2, 2], &[0]).unwrap(), &a, 1e-12));
        assert!(approx_eq(&partial_trace(&ab, &[2, 2], &[1]).unwrap(), &b, 1e-12));
        let full = partial_trace(&ab, &[2, 2], &[]).unwrap();
        assert!((full[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        assert!(partial_trace(&identity(4), &[2, 3], &[0]).is_err());
        assert!(partial_trace(&identity(4), &[2, 2], &[2]).is_err());
    }

    #[test]
    fn contraction_matches_embed_then_trace() {
        let x = kron_all([&real_diag(&[0.1, 0.2]), &pauli_x(), &real_diag(&[1.0, 2.0, 3.0])]);
        let op = from_real_rows(&[&[0.3, 0.1], &[0.1, 0.7]]);
        let dims = [2, 2, 3];
        let direct = partial_trace(&(embed(&op, &dims, 1).unwrap() * &x), &dims, &[0, 2]).unwrap();
        let got = contract_subsystem(&x, &dims, 1, &op).unwrap();
        assert!(approx_eq(&got, &direct, 1e-12));
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = real_diag(&[1.0, 2.0]);
        let b = pauli_x();
        let swapped = permute_subsystems(&kron(&a, &b), &[2, 2], &[1, 0]).unwrap();
        assert!(approx_eq(&swapped, &kron(&b, &a), 0.0));
    }

    #[test]
    fn embed_middle_slot() {
        let x = pauli_x();
        let got = embed(&x, &[2, 2, 3], 1).unwrap();
        let want = kron_all([&identity(2), &x, &identity(3)]);
        assert!(approx_eq(&got, &want, 0.0));
    }
}
