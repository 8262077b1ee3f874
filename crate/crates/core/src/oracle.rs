//! Dense SVD ground truth and the reorganized decomposition A′.
//!
//! For a matrix with multiple singular values the SVD is not unique; the
//! reorganized form picks, inside every multiplicity group, the one left
//! vector that carries the group's entire projection of b:
//!
//!   u_i = Û_i Û_iᵀ b / ‖Û_iᵀ b‖,   v_i = Aᵀ u_i / σ_i,
//!
//! so b has a nonzero component along exactly one direction per distinct
//! value. A′ = Σ σ_i u_i v_iᵀ then has simple nonzero singular values and
//! generates the same Krylov subspaces as A. TSVD and Tikhonov reference
//! solutions, the Picard-plot quantities, and the transition indices k0
//! are all computed from this form.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{JobSvd, Norm, SVDDC};

use crate::error::{Error, Result};
use crate::problem::SigmaGroup;

/// Compact (thin) SVD of an m×n matrix, m ≥ n.
#[derive(Debug, Clone)]
pub struct CompactSVD {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v: Array2<f64>,
}

/// The reorganized decomposition: one (u_i, v_i) pair per distinct singular
/// value, plus orthonormal complements of the retained directions inside
/// range(U) and R^n respectively.
#[derive(Debug, Clone)]
pub struct ReorganizedSVD {
    /// Number of retained distinct singular values.
    pub s: usize,
    pub sigma_distinct: Array1<f64>,
    /// m×s left vectors u_i.
    pub us: Array2<f64>,
    /// n×s right vectors v_i.
    pub vs: Array2<f64>,
    /// m×(n−s) complement of span{u_i} within range(U); orthogonal to b by
    /// construction. The m−n directions outside range(U) are not included.
    pub u_perp_basis: Array2<f64>,
    /// n×(n−s) complement of span{v_i} in R^n.
    pub v_perp_basis: Array2<f64>,
    /// Groups with ‖Û_iᵀb‖ = 0 that had to be dropped (b blind to them);
    /// their indices refer to the input group list.
    pub dropped_groups: Vec<usize>,
}

/// Picard-condition diagnostics and the two transition indices.
#[derive(Debug, Clone)]
pub struct PicardReport {
    /// |u_iᵀ b| for i = 1..s.
    pub abs_utb: Array1<f64>,
    /// |u_iᵀ b_true|, when the noise-free right-hand side is known.
    pub abs_utb_true: Option<Array1<f64>>,
    /// |u_iᵀ b| / σ_i.
    pub ratios: Array1<f64>,
    /// Fitted exponent β from log|u_iᵀb_true| ≈ (1+β)·log σ_i + const.
    pub beta_fit: Option<f64>,
    /// Noise floor estimate η̂.
    pub eta_hat: f64,
    /// argmin_k ‖x_k^{tsvd} − x_true‖ (ties toward smaller k); oracle mode.
    pub k0_oracle: Option<usize>,
    /// Largest k with |u_kᵀ b| > ν·η̂; 0 when no coefficient clears the floor.
    pub k0_picard: usize,
    /// True when k0_picard = 0 (all-noise problem).
    pub degenerate: bool,
}

/// Dense compact SVD with singular values sorted nonincreasing.
pub fn compute_svd(a: &Array2<f64>) -> Result<CompactSVD> {
    let (m, n) = a.dim();
    if m < n {
        return Err(Error::invalid("compute_svd expects m >= n"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let (u, sigma, vt) = a.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| Error::inconsistent("svd did not return U"))?;
    let vt = vt.ok_or_else(|| Error::inconsistent("svd did not return V^T"))?;
    Ok(CompactSVD { u, sigma, v: vt.t().to_owned() })
}

/// Columns of an orthonormal basis for the complement of a unit vector `w`
/// in R^c, read off a Householder reflection that maps e_1 to w.
fn householder_complement(w: &Array1<f64>) -> Array2<f64> {
    let c = w.len();
    let mut h = w.clone();
    h[0] -= 1.0;
    let hn2 = h.dot(&h);
    let mut out = Array2::zeros((c, c - 1));
    if hn2 <= f64::EPSILON * f64::EPSILON {
        // w = e_1 already; complement is the remaining canonical vectors
        for j in 1..c {
            out[(j, j - 1)] = 1.0;
        }
        return out;
    }
    for j in 1..c {
        for i in 0..c {
            let e = if i == j { 1.0 } else { 0.0 };
            out[(i, j - 1)] = e - 2.0 * h[i] * h[j] / hn2;
        }
    }
    out
}

/// Build the reorganized decomposition from a compact SVD, the right-hand
/// side, and the multiplicity grouping of the singular values.
pub fn reorganize(
    svd: &CompactSVD,
    b: &Array1<f64>,
    groups: &[SigmaGroup],
) -> Result<ReorganizedSVD> {
    let (m, n) = svd.u.dim();
    if b.len() != m {
        return Err(Error::invalid("b length must equal row count"));
    }
    let total: usize = groups.iter().map(|g| g.multiplicity).sum();
    if total != n {
        return Err(Error::invalid("group multiplicities must sum to n"));
    }

    let mut sigma_distinct = Vec::new();
    let mut us_cols: Vec<Array1<f64>> = Vec::new();
    let mut vs_cols: Vec<Array1<f64>> = Vec::new();
    let mut uperp_cols: Vec<Array1<f64>> = Vec::new();
    let mut vperp_cols: Vec<Array1<f64>> = Vec::new();
    let mut dropped = Vec::new();

    for (gi, g) in groups.iter().enumerate() {
        let cols = g.start..g.start + g.multiplicity;
        let uhat = svd.u.slice(s![.., cols.clone()]);
        let vhat = svd.v.slice(s![.., cols]);
        let w = uhat.t().dot(b);
        let nw = w.norm_l2();
        if nw == 0.0 {
            // b is blind to this whole group: every direction joins the
            // complement and the effective s shrinks
            dropped.push(gi);
            for j in 0..g.multiplicity {
                uperp_cols.push(uhat.column(j).to_owned());
                vperp_cols.push(vhat.column(j).to_owned());
            }
            continue;
        }
        let wn = &w / nw;
        sigma_distinct.push(g.value);
        us_cols.push(uhat.dot(&wn));
        vs_cols.push(vhat.dot(&wn));
        if g.multiplicity > 1 {
            let comp = householder_complement(&wn);
            for j in 0..g.multiplicity - 1 {
                uperp_cols.push(uhat.dot(&comp.column(j)));
                vperp_cols.push(vhat.dot(&comp.column(j)));
            }
        }
    }

    let s_eff = sigma_distinct.len();
    let stack = |cols: &[Array1<f64>], rows: usize| {
        let mut out = Array2::zeros((rows, cols.len()));
        for (j, c) in cols.iter().enumerate() {
            out.column_mut(j).assign(c);
        }
        out
    };
    Ok(ReorganizedSVD {
        s: s_eff,
        sigma_distinct: Array1::from(sigma_distinct),
        us: stack(&us_cols, m),
        vs: stack(&vs_cols, n),
        u_perp_basis: stack(&uperp_cols, m),
        v_perp_basis: stack(&vperp_cols, n),
        dropped_groups: dropped,
    })
}

impl ReorganizedSVD {
    /// Assemble A′ = Us · diag(σ) · Vsᵀ densely.
    pub fn assemble_aprime(&self) -> Array2<f64> {
        let scaled = &self.us * &self.sigma_distinct;
        scaled.dot(&self.vs.t())
    }

    /// Coefficients u_iᵀ b, i = 1..s.
    pub fn coefficients(&self, b: &Array1<f64>) -> Array1<f64> {
        self.us.t().dot(b)
    }
}

/// Truncated SVD solution x_k = Σ_{i≤k} (u_iᵀb/σ_i) v_i.
pub fn tsvd_solution(reorg: &ReorganizedSVD, b: &Array1<f64>, k: usize) -> Result<Array1<f64>> {
    if k == 0 || k > reorg.s {
        return Err(Error::invalid(format!("k = {k} out of range 1..={}", reorg.s)));
    }
    let coef = reorg.coefficients(b);
    let mut x = Array1::zeros(reorg.vs.nrows());
    for i in 0..k {
        let c = coef[i] / reorg.sigma_distinct[i];
        x.scaled_add(c, &reorg.vs.column(i));
    }
    Ok(x)
}

/// Tikhonov-filtered solution with factors f_i = σ_i²/(σ_i²+λ²).
pub fn tikhonov_solution(
    reorg: &ReorganizedSVD,
    b: &Array1<f64>,
    lambda: f64,
) -> Result<Array1<f64>> {
    if lambda <= 0.0 {
        return Err(Error::invalid("lambda must be positive"));
    }
    let coef = reorg.coefficients(b);
    let mut x = Array1::zeros(reorg.vs.nrows());
    for i in 0..reorg.s {
        let sig = reorg.sigma_distinct[i];
        let f = sig * sig / (sig * sig + lambda * lambda);
        x.scaled_add(f * coef[i] / sig, &reorg.vs.column(i));
    }
    Ok(x)
}

/// Picard diagnostics plus the transition indices k0.
///
/// `nu` is the noise-floor multiplier for k0_picard (default 2 in the CLI).
/// η̂ = ‖e‖/√m when the noise vector is known, otherwise the median of
/// |u_iᵀb| over the trailing ⌈s/4⌉ indices.
pub fn transition_points(
    reorg: &ReorganizedSVD,
    b: &Array1<f64>,
    b_true: Option<&Array1<f64>>,
    e: Option<&Array1<f64>>,
    x_true: Option<&Array1<f64>>,
    nu: f64,
) -> PicardReport {
    let s_eff = reorg.s;
    let abs_utb = reorg.coefficients(b).mapv(f64::abs);
    let ratios = &abs_utb / &reorg.sigma_distinct;
    let abs_utb_true = b_true.map(|bt| reorg.coefficients(bt).mapv(f64::abs));

    // slope fit of log|u^T b_true| against log sigma (with intercept);
    // the model coefficient is 1 + beta
    let beta_fit = abs_utb_true.as_ref().and_then(|c| {
        let pts: Vec<(f64, f64)> = c
            .iter()
            .zip(reorg.sigma_distinct.iter())
            .filter(|(ci, _)| **ci > 0.0)
            .map(|(ci, si)| (si.ln(), ci.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom == 0.0 {
            return None;
        }
        Some((n * sxy - sx * sy) / denom - 1.0)
    });

    let eta_hat = match e {
        Some(e) => e.norm_l2() / (b.len() as f64).sqrt(),
        None => {
            let tail = s_eff.div_ceil(4);
            let mut vals: Vec<f64> = abs_utb.iter().skip(s_eff - tail).copied().collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if vals.is_empty() {
                0.0
            } else if vals.len() % 2 == 1 {
                vals[vals.len() / 2]
            } else {
                0.5 * (vals[vals.len() / 2 - 1] + vals[vals.len() / 2])
            }
        }
    };

    // oracle transition: exhaustive TSVD error sweep using a running sum
    let k0_oracle = x_true.map(|xt| {
        let coef = reorg.coefficients(b);
        let mut x = Array1::<f64>::zeros(reorg.vs.nrows());
        let mut best = (f64::INFINITY, 0usize);
        for k in 1..=s_eff {
            x.scaled_add(coef[k - 1] / reorg.sigma_distinct[k - 1], &reorg.vs.column(k - 1));
            let err = (&x - xt).norm_l2();
            if err < best.0 {
                best = (err, k);
            }
        }
        best.1
    });

    let k0_picard = (1..=s_eff)
        .rev()
        .find(|&k| abs_utb[k - 1] > nu * eta_hat)
        .unwrap_or(0);

    PicardReport {
        abs_utb,
        abs_utb_true,
        ratios,
        beta_fit,
        eta_hat,
        k0_oracle,
        k0_picard,
        degenerate: k0_picard == 0,
    }
}

/// Oracle search for the best Tikhonov parameter: golden-section minimize
/// ‖x_λ − x_true‖ over λ ∈ [σ_s, σ_1]. Returns (λ_opt, error at λ_opt).
pub fn tikhonov_oracle_lambda(
    reorg: &ReorganizedSVD,
    b: &Array1<f64>,
    x_true: &Array1<f64>,
) -> Result<(f64, f64)> {
    let mut lo = reorg.sigma_distinct[reorg.s - 1];
    let mut hi = reorg.sigma_distinct[0];
    let err = |lam: f64| -> Result<f64> {
        Ok((&tikhonov_solution(reorg, b, lam)? - x_true).norm_l2())
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = err(x1)?;
    let mut f2 = err(x2)?;
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = err(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = err(x2)?;
        }
    }
    let lam = 0.5 * (lo + hi);
    Ok((lam, err(lam)?))
}
