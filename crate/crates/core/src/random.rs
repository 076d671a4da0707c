//! Random states, POVMs and unitaries for tests, benches and fixtures.
//!
//! All samplers take the RNG explicitly.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, c64, CMat, CVec};
use crate::povm::Povm;
use crate::state::DensityOperator;

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im)
    })
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let qr = ginibre(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for k in 0..d {
        let x = r[(k, k)];
        let phase = if x.norm() > 0.0 { x / x.norm() } else { c64(1.0, 0.0) };
        for i in 0..d {
            u[(i, k)] *= phase;
        }
    }
    u
}

pub fn random_pure_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVec {
    let g = ginibre(rng, d, 1);
    let v: CVec = g.column(0).into_owned();
    let n = v.norm();
    v / c64(n, 0.0)
}

/// Random density operator of the given rank (rank = d gives a full-rank state).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> DensityOperator {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let t = m.trace().re;
    DensityOperator::from_matrix(m.scale(1.0 / t)).expect("wishart sample is a state")
}

pub fn random_density_dims<R: Rng + ?Sized>(
    rng: &mut R,
    dims: &[usize],
    rank: usize,
) -> DensityOperator {
    let d: usize = dims.iter().product();
    random_density(rng, d, rank)
        .relabel(dims.to_vec())
        .expect("dims multiply to d")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    linalg::hermitize(&ginibre(rng, d, d))
}

/// Random k-outcome POVM: S^{-1/2} G_i S^{-1/2} with G_i Wishart and S their sum.
/// The last outcome absorbs the kernel of S when the draws do not span.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> Povm {
    let gs: Vec<CMat> = (0..k)
        .map(|_| {
            let cols = 1 + rng.random_range(0..d);
            let g = ginibre(rng, d, cols);
            &g * g.adjoint()
        })
        .collect();
    let mut s = linalg::zeros(d, d);
    for g in &gs {
        s += g;
    }
    let (_, p) = linalg::matrix_sqrt_and_pinv_sqrt(&s, linalg::EIG_CUTOFF).expect("psd sum");
    let mut ops: Vec<CMat> = gs.iter().map(|g| linalg::hermitize(&(&p * g * &p))).collect();
    // Too few Wishart columns leave S singular; the last outcome takes the kernel.
    let support = &p * &s * &p;
    if let Some(last) = ops.last_mut() {
        *last += linalg::hermitize(&(linalg::identity(d) - support));
    }
    Povm::new((0..k).map(|i| i.to_string()).collect(), ops, d).expect("normalized family")
}

/// Random rank-one projective measurement in a Haar-random basis.
pub fn random_projective<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Povm {
    let u = random_unitary(rng, d);
    let ops = (0..d)
        .map(|i| linalg::outer(&u.column(i).into_owned()))
        .collect();
    Povm::new((0..d).map(|i| i.to_string()).collect(), ops, d).expect("orthonormal basis")
}

/// (1−ε)M + εN for a random POVM N with the same outcomes.
pub fn perturbed_povm<R: Rng + ?Sized>(rng: &mut R, m: &Povm, eps: f64) -> Povm {
    let noise = random_povm(rng, m.dim(), m.len());
    let ops = m
        .operators()
        .iter()
        .zip(noise.operators())
        .map(|(a, b)| a.scale(1.0 - eps) + b.scale(eps))
        .collect();
    Povm::new(m.outcomes().to_vec(), ops, m.dim()).expect("convex mix of povms")
}

/// Uniform point of the probability simplex.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 4);
        assert!(linalg::approx_eq(&(&u * u.adjoint()), &linalg::identity(4), 1e-12));
    }

    #[test]
    fn povm_sums_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_povm(&mut rng, 3, 5);
        assert!(linalg::approx_eq(&m.total(), &linalg::identity(3), 1e-10));
        let rho = random_density(&mut rng, 3, 2);
        assert_eq!(rho.eigh().rank(), 2);
    }

    #[test]
    fn few_outcomes_in_high_dimension_still_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_povm(&mut rng, 4, 2);
            assert!(linalg::approx_eq(&m.total(), &linalg::identity(4), 1e-10));
        }
    }
}
