use faithsim::entropy::{binary_entropy, holevo_information, quantum_mutual_information};
use faithsim::linalg::{self, from_real_rows, real_diag, CMat};
use faithsim::random::{ginibre, random_density, random_hermitian, random_povm};
use faithsim::{complete_sub_povm, purify, von_neumann_entropy, DensityOperator, Ensemble, Povm};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ket_plus() -> CMat {
    from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])
}

#[test]
fn kron_mixed_product_rule() {
    let mut r = rng(1);
    for _ in 0..20 {
        let (x, y, a, b) = (ginibre(&mut r, 2, 2), ginibre(&mut r, 2, 2), ginibre(&mut r, 2, 2), ginibre(&mut r, 2, 2));
        let lhs = linalg::kron(&x, &y) * linalg::kron(&a, &b);
        let rhs = linalg::kron(&(&x * &a), &(&y * &b));
        assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-12);
    }
}

#[test]
fn partial_trace_of_bell_state_is_maximally_mixed() {
    let bell = faithsim::fixtures::schmidt_state(std::f64::consts::FRAC_PI_4);
    let a = linalg::partial_trace(bell.matrix(), &[2, 2], &[0]).unwrap();
    assert!(linalg::approx_eq(&a, &linalg::identity(2).scale(0.5), 1e-12));
}

#[test]
fn partial_trace_preserves_trace() {
    let mut r = rng(2);
    for _ in 0..20 {
        let rho = random_density(&mut r, 4, 4);
        for keep in [[0usize], [1]] {
            let x = linalg::partial_trace(rho.matrix(), &[2, 2], &keep).unwrap();
            assert!((linalg::trace(&x) - linalg::trace(rho.matrix())).norm() < 1e-12);
        }
    }
}

#[test]
fn purification_round_trip_rank_two() {
    let mut r = rng(3);
    for _ in 0..10 {
        let rho = random_density(&mut r, 3, 2);
        let psi = purify(&rho).unwrap();
        let back = psi.reduced_system().unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), rho.matrix()) < 1e-10);
    }
}

#[test]
fn purifications_of_pure_and_flat_states() {
    let zero = DensityOperator::new(real_diag(&[1.0, 0.0]), vec![2]).unwrap();
    let psi = purify(&zero).unwrap();
    assert!(von_neumann_entropy(&psi.reduced_reference().unwrap()).abs() < 1e-12);
    let flat = purify(&DensityOperator::maximally_mixed(2)).unwrap();
    let r = flat.reduced_reference().unwrap();
    assert!((von_neumann_entropy(&r) - 1.0).abs() < 1e-12);
}

#[test]
fn square_root_squares_back() {
    let mut r = rng(4);
    for _ in 0..20 {
        let rho = random_density(&mut r, 4, 3);
        let (s, _) = linalg::matrix_sqrt_and_pinv_sqrt(rho.matrix(), linalg::EIG_CUTOFF).unwrap();
        assert!(linalg::max_abs_diff(&(&s * &s), rho.matrix()) < 1e-10);
    }
}

#[test]
fn trace_norm_of_states_and_holder_bound() {
    let mut r = rng(5);
    for _ in 0..20 {
        let rho = random_density(&mut r, 3, 3);
        assert!((linalg::trace_norm(rho.matrix()) - 1.0).abs() < 1e-10);
        let a = ginibre(&mut r, 3, 3);
        let b = ginibre(&mut r, 3, 3);
        assert!(linalg::trace_norm(&(&b * &a)) <= linalg::operator_norm(&b) * linalg::trace_norm(&a) + 1e-10);
    }
}

#[test]
fn operator_norm_is_multiplicative_under_kron() {
    let mut r = rng(6);
    for _ in 0..20 {
        let a = random_hermitian(&mut r, 2);
        let b = random_hermitian(&mut r, 3);
        let lhs = linalg::operator_norm(&linalg::kron(&a, &b));
        assert!((lhs - linalg::operator_norm(&a) * linalg::operator_norm(&b)).abs() < 1e-10);
    }
}

#[test]
fn entropy_values() {
    let rho = DensityOperator::new(real_diag(&[0.5, 0.25, 0.25]), vec![3]).unwrap();
    assert!((von_neumann_entropy(&rho) - 1.5).abs() < 1e-12);
    let cc = DensityOperator::new(real_diag(&[0.5, 0.0, 0.0, 0.5]), vec![2, 2]).unwrap();
    assert!((quantum_mutual_information(&cc, &[0], &[1]).unwrap() - 1.0).abs() < 1e-12);
    let bell = faithsim::fixtures::schmidt_state(std::f64::consts::FRAC_PI_4);
    assert!((quantum_mutual_information(&bell, &[0], &[1]).unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn holevo_of_zero_and_plus() {
    let zero = DensityOperator::new(real_diag(&[1.0, 0.0]), vec![2]).unwrap();
    let plus = DensityOperator::new(ket_plus(), vec![2]).unwrap();
    let ens = Ensemble::new(vec![0.5, 0.5], vec![zero, plus]).unwrap();
    let want = binary_entropy((1.0 + 1.0 / 2f64.sqrt()) / 2.0);
    assert!((holevo_information(&ens) - want).abs() < 1e-12);
}

#[test]
fn completing_a_trial_sub_povm() {
    use faithsim::protocol::{build_approx_operators, ProtocolParams, ProtocolSetup};
    let f = faithsim::fixtures::fixture("example1").unwrap();
    let s = ProtocolSetup::new(&f.rho_ab, &f.decomposition, 2, 0.5).unwrap();
    let p = ProtocolParams { n: 2, rt1: 2.0, rt2: 2.0, r1: 1.0, r2: 1.0, n1: 1, n2: 1, eta: 0.1, delta: 0.5, seed: 9 };
    let real = s.realize(&p).unwrap();
    let ops = build_approx_operators(&s.a, &real.codebook_a, 0, p.eta).unwrap();
    // Scale into a sub-POVM whatever the draw, then complete.
    let total = ops.iter().fold(linalg::zeros(4, 4), |acc, o| acc + o);
    let scale = linalg::max_eigenvalue(&total).max(1.0);
    let labels = (0..ops.len()).map(|i| i.to_string()).collect();
    let sub = Povm::new_sub(labels, ops.iter().map(|o| o.unscale(scale)).collect(), 4).unwrap();
    let full = complete_sub_povm(&sub).unwrap();
    assert!(linalg::max_abs_diff(&full.total(), &linalg::identity(4)) < 1e-9);
}

#[test]
fn canonical_ensemble_resums_to_state() {
    let mut r = rng(7);
    for _ in 0..20 {
        let rho = random_density(&mut r, 2, 2);
        let m = random_povm(&mut r, 2, 3);
        let ce = faithsim::canonical_ensemble(&rho, &m).unwrap();
        assert!(linalg::max_abs_diff(&ce.ensemble.average(), rho.matrix()) < 1e-10);
    }
}

fn arb_density(d: usize) -> impl Strategy<Value = DensityOperator> {
    any::<u64>().prop_map(move |s| random_density(&mut rng(s), d, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_traces_commute_with_kron(a in arb_density(2), b in arb_density(3)) {
        let ab = a.tensor(&b);
        let ra = linalg::partial_trace(ab.matrix(), &[2, 3], &[0]).unwrap();
        let rb = linalg::partial_trace(ab.matrix(), &[2, 3], &[1]).unwrap();
        prop_assert!(linalg::max_abs_diff(&ra, a.matrix()) < 1e-12);
        prop_assert!(linalg::max_abs_diff(&rb, b.matrix()) < 1e-12);
    }

    #[test]
    fn entropy_is_bounded_by_log_dimension(rho in arb_density(3)) {
        let s = von_neumann_entropy(&rho);
        prop_assert!(s >= -1e-12 && s <= 3f64.log2() + 1e-12);
    }

    #[test]
    fn mutual_information_lies_between_zero_and_two(seed in any::<u64>()) {
        let rho = random_density(&mut rng(seed), 4, 2).relabel(vec![2, 2]).unwrap();
        let i = quantum_mutual_information(&rho, &[0], &[1]).unwrap();
        prop_assert!(i >= -1e-10 && i <= 2.0 + 1e-10);
    }

    #[test]
    fn trace_norm_triangle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, 3);
        let b = random_hermitian(&mut r, 3);
        prop_assert!(linalg::trace_norm(&(&a + &b)) <= linalg::trace_norm(&a) + linalg::trace_norm(&b) + 1e-10);
    }

    #[test]
    fn completion_sums_to_identity(seed in any::<u64>(), w in 0.05f64..1.0) {
        let m = random_povm(&mut rng(seed), 2, 3);
        let sub = Povm::new_sub(
            m.outcomes().to_vec(),
            m.operators().iter().map(|o| o.scale(w)).collect(),
            2,
        ).unwrap();
        let full = complete_sub_povm(&sub).unwrap();
        prop_assert!(linalg::max_abs_diff(&full.total(), &linalg::identity(2)) < 1e-10);
    }
}
