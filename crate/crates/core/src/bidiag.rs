//! Golub-Kahan bidiagonalization driven by the right-hand side.
//!
//! Starting from p_1 = b/β_1, each step computes
//!
//!   α_j q_j = Aᵀp_j − β_j q_{j−1},     β_{j+1} p_{j+1} = A q_j − α_j p_j,
//!
//! so that A Q_k = P_{k+1} B_k with B_k the (k+1)×k lower bidiagonal matrix
//! carrying α_1..α_k on the diagonal and β_2..β_{k+1} below it. The columns
//! of Q_k span the Krylov subspace K_k(AᵀA, Aᵀb); all LSQR iterates and all
//! rank-k diagnostics live in these bases.
//!
//! With full reorthogonalization (classical Gram-Schmidt applied twice) the
//! recursion terminates in exact arithmetic after s steps, where s is the
//! number of distinct singular values with a nonzero projection of b: for
//! square problems β_{s+1} vanishes, for strictly overdetermined ones the
//! next α does. Termination is detected against a relative floor and the
//! offending value is kept for the diagnostics that need it.

use ndarray::{s, Array1, Array2, ArrayView2};
use ndarray_linalg::Norm;

use crate::error::{Error, Result};

/// Relative breakdown floor: a new α or β below `BREAKDOWN_TOL · α_1`
/// terminates the recursion (α_1 approximates σ_1 from the first step).
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Which coefficient fell below the breakdown floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    /// α_{k+1} ≈ 0: remaining right space is invisible (m > n case).
    Alpha,
    /// β_{k+1} ≈ 0: Krylov space exhausted (square case).
    Beta,
}

/// Termination record: `step` is the number of fully accepted steps k; the
/// tiny coefficient that triggered the stop is `value`.
#[derive(Debug, Clone, Copy)]
pub struct Breakdown {
    pub step: usize,
    pub kind: BreakdownKind,
    pub value: f64,
}

/// State after k accepted bidiagonalization steps.
#[derive(Debug, Clone)]
pub struct BidiagState {
    /// Left Lanczos vectors, m×(k+1); m×k when a β-breakdown stopped the
    /// recursion before p_{k+1} could be formed.
    pub p: Array2<f64>,
    /// Right Lanczos vectors, n×k.
    pub q: Array2<f64>,
    /// α_1..α_k.
    pub alphas: Vec<f64>,
    /// β_1..β_{k+1} with β_1 = ‖b‖; the last entry is missing when an
    /// α-breakdown stopped the recursion before β_{k+1} was computed,
    /// and is the tiny terminal value on a β-breakdown.
    pub betas: Vec<f64>,
    pub terminated_at: Option<Breakdown>,
    pub reorth: bool,
}

impl BidiagState {
    /// Number of accepted steps.
    pub fn k_done(&self) -> usize {
        self.alphas.len()
    }

    /// The projected matrix B_k, (k+1)×k lower bidiagonal.
    pub fn form_bk(&self, k: usize) -> Result<Array2<f64>> {
        if k == 0 || k > self.k_done() {
            return Err(Error::invalid(format!("k = {k} outside 1..={}", self.k_done())));
        }
        if self.betas.len() < k + 1 {
            return Err(Error::invalid("beta_{k+1} unavailable (alpha-breakdown state)"));
        }
        let mut b = Array2::zeros((k + 1, k));
        for i in 0..k {
            b[(i, i)] = self.alphas[i];
            b[(i + 1, i)] = self.betas[i + 1];
        }
        Ok(b)
    }

    /// View of the first k+1 left vectors.
    pub fn p_k1(&self, k: usize) -> ArrayView2<'_, f64> {
        self.p.slice(s![.., ..k + 1])
    }

    /// View of the first k right vectors.
    pub fn q_k(&self, k: usize) -> ArrayView2<'_, f64> {
        self.q.slice(s![.., ..k])
    }
}

/// Twice-applied classical Gram-Schmidt against the first `cols` columns
/// of `basis`.
fn reorthogonalize(r: &mut Array1<f64>, basis: &Array2<f64>, cols: usize) {
    if cols == 0 {
        return;
    }
    let q = basis.slice(s![.., ..cols]);
    for _ in 0..2 {
        let proj = q.t().dot(r);
        *r -= &q.dot(&proj);
    }
}

/// Run at most `kmax` bidiagonalization steps on (A, b).
pub fn run_bidiag(a: &Array2<f64>, b: &Array1<f64>, kmax: usize, reorth: bool) -> Result<BidiagState> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(Error::invalid("b length must equal row count of A"));
    }
    if kmax == 0 {
        return Err(Error::invalid("kmax must be positive"));
    }
    if kmax > n {
        return Err(Error::invalid(format!("kmax = {kmax} exceeds column count {n}")));
    }
    let beta1 = b.norm_l2();
    if beta1 == 0.0 {
        return Err(Error::invalid("b must be nonzero"));
    }

    let mut p = Array2::zeros((m, kmax + 1));
    let mut q = Array2::zeros((n, kmax));
    let mut alphas = Vec::with_capacity(kmax);
    let mut betas = Vec::with_capacity(kmax + 1);
    betas.push(beta1);
    p.column_mut(0).assign(&(b / beta1));
    let mut terminated = None;

    for j in 0..kmax {
        // alpha_{j+1} q_{j+1} = A^T p_{j+1} - beta_{j+1} q_j  (0-based views)
        let mut r = a.t().dot(&p.column(j));
        if j > 0 {
            r.scaled_add(-betas[j], &q.column(j - 1));
        }
        if reorth {
            reorthogonalize(&mut r, &q, j);
        }
        let alpha = r.norm_l2();
        let floor = BREAKDOWN_TOL * if alphas.is_empty() { alpha } else { alphas[0] };
        if alpha <= floor || alpha == 0.0 {
            terminated = Some(Breakdown { step: j, kind: BreakdownKind::Alpha, value: alpha });
            break;
        }
        alphas.push(alpha);
        q.column_mut(j).assign(&(&r / alpha));

        let mut z = a.dot(&q.column(j));
        z.scaled_add(-alpha, &p.column(j));
        if reorth {
            reorthogonalize(&mut z, &p, j + 1);
        }
        let beta = z.norm_l2();
        betas.push(beta);
        if beta <= BREAKDOWN_TOL * alphas[0] {
            terminated = Some(Breakdown { step: j + 1, kind: BreakdownKind::Beta, value: beta });
            break;
        }
        p.column_mut(j + 1).assign(&(&z / beta));
    }

    let k = alphas.len();
    let p_cols = match terminated {
        Some(Breakdown { kind: BreakdownKind::Beta, .. }) => k,
        _ => k + 1,
    };
    Ok(BidiagState {
        p: p.slice(s![.., ..p_cols]).to_owned(),
        q: q.slice(s![.., ..k]).to_owned(),
        alphas,
        betas,
        terminated_at: terminated,
        reorth,
    })
}
