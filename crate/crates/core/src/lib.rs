//! Core library: problem generation, dense SVD oracles, Golub-Kahan
//! bidiagonalization, LSQR/CGLS solvers, and rank-k diagnostics.

pub mod bidiag;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod lsqr;
pub mod oracle;
pub mod problem;

pub use bidiag::{run_bidiag, BidiagState, Breakdown, BreakdownKind, BREAKDOWN_TOL};
pub use diagnostics::{
    bounds_report, build_ck, classify_gamma, delta_k, gamma_dense, gamma_trailing,
    lagrange_values, max_count_allowed, rayleigh_check, ritz_report, sin_theta_direct,
    subspace_report, xi_k, BoundsReport, CkMember, DeltaK, RankKReport, SubspaceReport,
    DELTA_K_CAP, STRICT_GUARD,
};
pub use error::{Error, Result};
pub use lsqr::{filter_factors, run_cgls, run_lsqr, FilterFactors, LsqrRun};
pub use oracle::{
    compute_svd, reorganize, tikhonov_oracle_lambda, tikhonov_solution, transition_points,
    tsvd_solution, CompactSVD, PicardReport, ReorganizedSVD,
};
pub use problem::{
    assemble_problem, assemble_with_factors, group_distinct, make_spectrum, ProblemSpec,
    SigmaGroup, SpectrumKind, SpectrumSpec, TestProblem, XTrueKind, GROUP_TOL,
};
