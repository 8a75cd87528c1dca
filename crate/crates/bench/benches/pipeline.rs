use criterion::{criterion_group, criterion_main, Criterion};
use lfwave_bench::fixture;
use lfwave_core::{
    forward_fourier, gram_matrix, h0_enumerate, hermitian_eigenvalues, inverse_fourier,
    scaling_hat, scaling_hat_paths, verify_all,
};

fn scaling(c: &mut Criterion) {
    for (p, s, n) in [(2, 1, 2), (2, 1, 3), (3, 1, 2), (2, 2, 2)] {
        let (tree, system) = fixture(p, s, n);
        let mask = system.family().mask();
        let h = system.family().height();
        c.bench_function(&format!("scaling_hat/{p},{s},{n}"), |b| {
            b.iter(|| scaling_hat(mask, h))
        });
        c.bench_function(&format!("scaling_hat_paths/{p},{s},{n}"), |b| {
            b.iter(|| scaling_hat_paths(&tree, mask).unwrap())
        });
    }
}

fn fourier(c: &mut Criterion) {
    let (_, system) = fixture(2, 2, 2);
    let phi_hat = system.family().phi_hat();
    let phi = inverse_fourier(phi_hat).unwrap();
    c.bench_function("inverse_fourier/2,2,2", |b| {
        b.iter(|| inverse_fourier(phi_hat).unwrap())
    });
    c.bench_function("forward_fourier/2,2,2", |b| {
        b.iter(|| forward_fourier(&phi).unwrap())
    });
}

fn gram(c: &mut Criterion) {
    let (_, system) = fixture(2, 1, 3);
    let shifts = h0_enumerate(system.family().params(), 4).unwrap();
    let phi_hat = system.family().phi_hat();
    c.bench_function("gram/2,1,3/depth4", |b| {
        b.iter(|| hermitian_eigenvalues(&gram_matrix(phi_hat, &shifts).unwrap()))
    });
}

fn verify(c: &mut Criterion) {
    let (_, system) = fixture(2, 1, 2);
    c.bench_function("verify_all/2,1,2", |b| {
        b.iter(|| verify_all(&system, 3, -1..=1, 1e-9).unwrap())
    });
}

criterion_group!(benches, scaling, fourier, gram, verify);
criterion_main!(benches);
