//! LSQR iterates from the bidiagonal factorization, CGLS cross-validation,
//! and the spectral filter factors of the iterates.
//!
//! The k-th LSQR iterate is x_k = Q_k y_k with
//!
//!   y_k = argmin_y ‖B_k y − β_1 e_1‖,
//!
//! a small (k+1)×k least-squares problem solved here by Givens QR. Because
//! P_{k+1} has orthonormal columns, the small residual norm equals
//! ‖A x_k − b‖, so the whole error/residual history follows from the
//! projected data alone. Each iterate is also a filtered SVD expansion
//!
//!   x_k = Σ_i f_i^{(k)} (u_iᵀb/σ_i) v_i,
//!   f_i^{(k)} = 1 − Π_j (θ_j^{(k)2} − σ_i²)/θ_j^{(k)2},
//!
//! with θ_j^{(k)} the Ritz values at step k; the reconstruction identity is
//! what ties the solver view and the SVD view of the regularization
//! together.

use ndarray::{Array1, Array2};
use ndarray_linalg::Norm;

use crate::bidiag::BidiagState;
use crate::error::{Error, Result};

/// Per-step LSQR history plus the two stopping indices.
#[derive(Debug, Clone)]
pub struct LsqrRun {
    /// Iterates x_1..x_K.
    pub xs: Vec<Array1<f64>>,
    /// ‖A x_k − b‖ via the projected residual.
    pub res_norms: Vec<f64>,
    /// ‖x_k‖.
    pub sol_norms: Vec<f64>,
    /// ‖x_k − x_true‖ when the exact solution is known.
    pub err_norms: Option<Vec<f64>>,
    /// Oracle semi-convergence index: argmin of the error (ties → smallest).
    pub k_star: Option<usize>,
    /// Discrepancy-principle stop: first k with res ≤ τ‖e‖.
    pub k_dp: Option<usize>,
    pub tau: f64,
}

/// Filter factors of the LSQR iterate at step k.
#[derive(Debug, Clone)]
pub struct FilterFactors {
    pub k: usize,
    /// f_i^{(k)} for every distinct singular value, length s.
    pub f: Array1<f64>,
    /// Ritz values θ_1..θ_k.
    pub theta: Array1<f64>,
}

/// Minimum-norm least-squares solve of ‖B_k y − β_1 e_1‖ by Givens QR of
/// the lower-bidiagonal B_k; returns (y, residual norm).
fn solve_projected(alphas: &[f64], betas: &[f64], beta1: f64, k: usize) -> (Array1<f64>, f64) {
    // rho: diagonal of R, tau_sup: superdiagonal, g: rotated rhs
    let mut rho = vec![0.0; k];
    let mut tau_sup = vec![0.0; k];
    let mut g = vec![0.0; k];
    let mut rhobar = alphas[0];
    let mut phibar = beta1;
    for j in 0..k {
        let beta_next = betas[j + 1];
        let r = (rhobar * rhobar + beta_next * beta_next).sqrt();
        let c = rhobar / r;
        let s = beta_next / r;
        rho[j] = r;
        g[j] = c * phibar;
        phibar *= -s;
        if j + 1 < k {
            let alpha_next = alphas[j + 1];
            tau_sup[j] = s * alpha_next;
            rhobar = c * alpha_next;
        }
    }
    // back substitution on the upper-bidiagonal R
    let mut y = Array1::zeros(k);
    for j in (0..k).rev() {
        let upper = if j + 1 < k { tau_sup[j] * y[j + 1] } else { 0.0 };
        y[j] = (g[j] - upper) / rho[j];
    }
    (y, phibar.abs())
}

/// LSQR history over every accepted step of `state`.
///
/// `e_norm` enables the discrepancy-principle index; `x_true` enables the
/// error history and k_star. Residual norms come from the projected system,
/// exact up to the orthonormality of P_{k+1}.
pub fn run_lsqr(
    state: &BidiagState,
    b: &Array1<f64>,
    x_true: Option<&Array1<f64>>,
    e_norm: Option<f64>,
    tau: f64,
) -> Result<LsqrRun> {
    if tau < 1.0 {
        return Err(Error::invalid("tau must be >= 1"));
    }
    let kmax = state.k_done();
    if kmax == 0 {
        return Err(Error::invalid("bidiagonalization has no accepted steps"));
    }
    let beta1 = state.betas[0];
    if (b.norm_l2() - beta1).abs() > 1e-8 * beta1 {
        return Err(Error::invalid("b does not match the right-hand side of the factorization"));
    }
    if let Some(xt) = x_true {
        if xt.len() != state.q.nrows() {
            return Err(Error::invalid("x_true length mismatch"));
        }
    }

    let mut xs = Vec::with_capacity(kmax);
    let mut res_norms = Vec::with_capacity(kmax);
    let mut sol_norms = Vec::with_capacity(kmax);
    let mut err_norms = x_true.map(|_| Vec::with_capacity(kmax));
    for k in 1..=kmax {
        let (y, res) = solve_projected(&state.alphas, &state.betas, beta1, k);
        let x = state.q_k(k).dot(&y);
        res_norms.push(res);
        sol_norms.push(x.norm_l2());
        if let (Some(errs), Some(xt)) = (err_norms.as_mut(), x_true) {
            errs.push((&x - xt).norm_l2());
        }
        xs.push(x);
    }

    let k_star = err_norms.as_ref().map(|errs| {
        let min = errs.iter().cloned().fold(f64::INFINITY, f64::min);
        // noise-free runs flatten out at the rounding floor, where strict
        // argmin picks an arbitrary jitter minimum; the last index within an
        // absolute floor of the minimum keeps the noisy argmin unchanged
        let floor = 1e-12 * x_true.map(|xt| xt.norm_l2()).unwrap_or(0.0);
        let mut best = 0usize;
        for (i, &e) in errs.iter().enumerate() {
            if e <= min + floor {
                best = i + 1;
            }
        }
        best
    });
    let k_dp = e_norm.and_then(|en| {
        res_norms.iter().position(|&r| r <= tau * en).map(|i| i + 1)
    });

    Ok(LsqrRun { xs, res_norms, sol_norms, err_norms, k_star, k_dp, tau })
}

/// Standard CGLS (conjugate gradients on the normal equations, zero start);
/// returns the iterates x_1..x_kmax. Equal to LSQR in exact arithmetic.
pub fn run_cgls(a: &Array2<f64>, b: &Array1<f64>, kmax: usize) -> Result<Vec<Array1<f64>>> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(Error::invalid("b length must equal row count of A"));
    }
    if kmax == 0 || kmax > n {
        return Err(Error::invalid("kmax must lie in 1..=n"));
    }
    let mut x = Array1::<f64>::zeros(n);
    let mut r = b.clone();
    let mut s = a.t().dot(&r);
    let mut p = s.clone();
    let mut gamma = s.dot(&s);
    let mut xs = Vec::with_capacity(kmax);
    for _ in 0..kmax {
        let q = a.dot(&p);
        let delta = q.dot(&q);
        if delta == 0.0 || gamma == 0.0 {
            break;
        }
        let eta = gamma / delta;
        x.scaled_add(eta, &p);
        r.scaled_add(-eta, &q);
        s = a.t().dot(&r);
        let gamma_new = s.dot(&s);
        p = &s + &(&p * (gamma_new / gamma));
        gamma = gamma_new;
        xs.push(x.clone());
    }
    Ok(xs)
}

/// Filter factors at step k from the Ritz values and the distinct singular
/// values. Per the reconstruction identity, x_k = Σ f_i (u_iᵀb/σ_i) v_i.
pub fn filter_factors(theta: &Array1<f64>, sigma_distinct: &Array1<f64>) -> Result<FilterFactors> {
    let k = theta.len();
    if k == 0 {
        return Err(Error::invalid("need at least one Ritz value"));
    }
    if theta.iter().any(|&t| t <= 0.0) {
        return Err(Error::invalid("Ritz values must be positive"));
    }
    for i in 0..k {
        for j in i + 1..k {
            if theta[i] == theta[j] {
                return Err(Error::invalid("Ritz values must be distinct"));
            }
        }
    }
    let s = sigma_distinct.len();
    let mut f = Array1::zeros(s);
    for i in 0..s {
        let si2 = sigma_distinct[i] * sigma_distinct[i];
        // accumulate factors smallest-magnitude-numerator first so a
        // near-cancellation is applied before the product can drift
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let da = (theta[a] * theta[a] - si2).abs();
            let db = (theta[b] * theta[b] - si2).abs();
            da.partial_cmp(&db).unwrap()
        });
        let mut prod = 1.0;
        for &j in &order {
            let tj2 = theta[j] * theta[j];
            prod *= (tj2 - si2) / tj2;
        }
        f[i] = 1.0 - prod;
    }
    Ok(FilterFactors { k, f, theta: theta.clone() })
}
