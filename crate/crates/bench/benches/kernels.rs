use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use faithsim::experiment::Problem;
use faithsim::protocol::{packing_norm_trial, rate_count, PackingInstance, ProtocolParams, ProtocolSetup};
use faithsim::region::{fm_check, rational};
use faithsim::typicality::ProjectorBundle;
use faithsim::{canonical_ensemble, fixtures};

fn regions(c: &mut Criterion) {
    let p = Problem::fixture("example1").unwrap();
    c.bench_function("deterministic region, example1", |b| b.iter(|| black_box(p.region().unwrap())));
    let q = [rational(1, 1), rational(1, 1), rational(1, 2), rational(2, 1), rational(2, 1)];
    c.bench_function("fourier-motzkin projection", |b| b.iter(|| black_box(fm_check(q.clone()).unwrap())));
}

fn typicality(c: &mut Criterion) {
    let f = fixtures::qubit_inside();
    let rho_a = f.rho_ab.reduce(&[0]).unwrap();
    let ens = canonical_ensemble(&rho_a, f.decomposition.povm_a()).unwrap().ensemble;
    c.bench_function("projector bundle, qubit n=6", |b| {
        b.iter(|| black_box(ProjectorBundle::new(&rho_a, &ens, 6, 6.0).unwrap()))
    });
}

fn protocol(c: &mut Criterion) {
    let f = fixtures::qubit_inside();
    let n = 4;
    let setup = ProtocolSetup::new(&f.rho_ab, &f.decomposition, n, 6.0).unwrap();
    let nc = rate_count(n, 0.5).unwrap();
    let mut seed = 0;
    c.bench_function("faithfulness trial, qubit n=4", |b| {
        b.iter(|| {
            seed += 1;
            let p = ProtocolParams {
                n,
                rt1: 1.2,
                rt2: 1.2,
                r1: 1.0,
                r2: 1.0,
                n1: nc,
                n2: nc,
                eta: 0.1,
                delta: 6.0,
                seed,
            };
            black_box(setup.trial(&p).unwrap())
        })
    });

    let bc = fixtures::binary_correlated();
    let inst = PackingInstance::new(&bc.rho_ab, &bc.decomposition);
    c.bench_function("packing norm, n=8", |b| {
        b.iter(|| black_box(packing_norm_trial(&inst, 8, 0.75, 0.75, 0.1, 3).unwrap()))
    });
}

criterion_group!(benches, regions, typicality, protocol);
criterion_main!(benches);
