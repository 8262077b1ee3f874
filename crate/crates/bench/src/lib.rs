//! Fixture builders shared by the pipeline benchmarks.
//!
//! Sizes are kept small enough that a full criterion run stays in the
//! seconds range; the point is relative cost (reorthogonalization overhead,
//! trailing-block vs dense rank-k estimates), not absolute throughput.

use krl_core::{
    assemble_problem, assemble_with_factors, compute_svd, group_distinct, reorganize,
    run_bidiag, BidiagState, ProblemSpec, ReorganizedSVD, SpectrumKind, SpectrumSpec,
    TestProblem, XTrueKind, GROUP_TOL,
};
use ndarray::Array2;

/// Square power-decay problem sigma_i = i^-alpha with 1e-3 relative noise.
pub fn power_problem(n: usize, alpha: f64) -> TestProblem {
    let spec = ProblemSpec::square(n, SpectrumKind::Power { zeta: 1.0, alpha }, 1e-3, 11);
    assemble_problem(&spec).expect("assemble power problem")
}

/// Severe-decay problem with every singular value triple and diagonal
/// factors, so the bidiagonalization terminates structurally at the number
/// of distinct values. Returns the reorganized oracle, the distinct-spectrum
/// operator A' it induces, and the terminated factorization of A'.
pub fn terminated_fixture(distinct: usize) -> (ReorganizedSVD, Array2<f64>, BidiagState) {
    let n = 3 * distinct;
    let spec = ProblemSpec {
        m: n,
        n,
        spectrum: SpectrumSpec {
            kind: SpectrumKind::Severe { zeta: 1.0, rho: 1.2 },
            n,
            multiplicities: Some(vec![3; distinct]),
        },
        noise_level: 0.0,
        seed: 5,
        x_true: XTrueKind::Ones,
    };
    let eye = Array2::<f64>::eye(n);
    let p = assemble_with_factors(&spec, Some((eye.clone(), eye))).expect("assemble");
    let svd = compute_svd(&p.a).expect("svd oracle");
    let groups = group_distinct(&svd.sigma, GROUP_TOL);
    let reorg = reorganize(&svd, &p.b, &groups).expect("reorganize");
    let aprime = reorg.assemble_aprime();
    let state = run_bidiag(&aprime, &p.b, n, true).expect("bidiagonalize");
    assert!(state.terminated_at.is_some(), "fixture must terminate");
    (reorg, aprime, state)
}
