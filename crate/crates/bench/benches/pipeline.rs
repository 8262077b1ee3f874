//! Pipeline benchmarks: problem assembly, the dense SVD oracle, Golub-Kahan
//! factorization with and without reorthogonalization, the two rank-k
//! accuracy paths, and the LSQR history.
//!
//! The interesting ratios are reorth-on vs reorth-off (CGS2 doubles the
//! per-step matvec count and adds the projection sweeps) and trailing-block
//! vs dense gamma_k (bisection on a tridiagonal Gram matrix vs a dense SVD
//! of the deflated operator).

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use krl_bench::{power_problem, terminated_fixture};
use krl_core::{compute_svd, gamma_dense, gamma_trailing, run_bidiag, run_lsqr};

fn bench_assembly(c: &mut Criterion) {
    c.bench_function("assemble_power_n200", |bch| {
        bch.iter(|| black_box(power_problem(200, 1.0)))
    });
}

fn bench_svd_oracle(c: &mut Criterion) {
    let p = power_problem(200, 1.0);
    c.bench_function("svd_oracle_n200", |bch| {
        bch.iter(|| black_box(compute_svd(&p.a).expect("svd")))
    });
}

fn bench_bidiag(c: &mut Criterion) {
    let p = power_problem(200, 1.0);
    let mut g = c.benchmark_group("bidiag_n200_k40");
    g.bench_function("reorth_on", |bch| {
        bch.iter(|| black_box(run_bidiag(&p.a, &p.b, 40, true).expect("bidiag")))
    });
    g.bench_function("reorth_off", |bch| {
        bch.iter(|| black_box(run_bidiag(&p.a, &p.b, 40, false).expect("bidiag")))
    });
    g.finish();
}

fn bench_gamma_paths(c: &mut Criterion) {
    let (_, aprime, state) = terminated_fixture(40);
    let k = 10usize;
    let mut g = c.benchmark_group("gamma_k10_s40");
    g.bench_function("trailing_block", |bch| {
        bch.iter(|| black_box(gamma_trailing(&state, k).expect("gamma")))
    });
    g.bench_function("dense_deflated", |bch| {
        bch.iter(|| black_box(gamma_dense(&aprime, &state, k).expect("gamma")))
    });
    g.finish();
}

fn bench_lsqr(c: &mut Criterion) {
    let p = power_problem(200, 1.0);
    let state = run_bidiag(&p.a, &p.b, 40, true).expect("bidiag");
    let e_norm = p.e.dot(&p.e).sqrt();
    c.bench_function("lsqr_history_n200_k40", |bch| {
        bch.iter(|| {
            black_box(
                run_lsqr(&state, &p.b, Some(&p.x_true), Some(e_norm), 1.01).expect("lsqr"),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_assembly,
    bench_svd_oracle,
    bench_bidiag,
    bench_gamma_paths,
    bench_lsqr
);
criterion_main!(benches);
