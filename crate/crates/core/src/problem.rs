//! Synthetic discrete ill-posed test problems with prescribed spectra.
//!
//! A problem is built as A = U·diag(σ)·Vᵀ where U, V are seeded random
//! orthonormal factors and σ follows one of three decay models:
//!
//! * severe:  σ_k = ζ·ρ^{-k}, ρ > 1 (exponential decay)
//! * power:   σ_k = ζ·k^{-α}, α > 0 (algebraic decay)
//! * explicit list
//!
//! Each distinct value may carry a multiplicity, so spectra with multiple
//! singular values are first-class. The right-hand side is b = A·x_true + e
//! with Gaussian white noise e rescaled so that ‖e‖/‖b_true‖ equals the
//! requested relative level exactly.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Norm, QR};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when regrouping computed singular values into
/// multiplicity groups.
pub const GROUP_TOL: f64 = 1e-12;

/// Spectrum decay model over the distinct singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    Severe { zeta: f64, rho: f64 },
    Power { zeta: f64, alpha: f64 },
    Explicit { values: Vec<f64> },
}

/// Prescribed singular spectrum: decay model, total dimension, and an
/// optional multiplicity per distinct value (defaults to all ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    #[serde(flatten)]
    pub kind: SpectrumKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<Vec<usize>>,
}

impl SpectrumSpec {
    pub fn simple(kind: SpectrumKind, n: usize) -> Self {
        SpectrumSpec { kind, n, multiplicities: None }
    }

    /// Number of distinct singular values.
    pub fn distinct_count(&self) -> usize {
        self.multiplicities.as_ref().map_or(self.n, |m| m.len())
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("spectrum dimension n must be positive"));
        }
        match &self.kind {
            SpectrumKind::Severe { zeta, rho } => {
                if *zeta <= 0.0 {
                    return Err(Error::invalid("severe spectrum requires zeta > 0"));
                }
                if *rho <= 1.0 {
                    return Err(Error::invalid("severe spectrum requires rho > 1"));
                }
            }
            SpectrumKind::Power { zeta, alpha } => {
                if *zeta <= 0.0 {
                    return Err(Error::invalid("power spectrum requires zeta > 0"));
                }
                if *alpha <= 0.0 {
                    return Err(Error::invalid("power spectrum requires alpha > 0"));
                }
            }
            SpectrumKind::Explicit { values } => {
                if values.iter().any(|&v| v <= 0.0) {
                    return Err(Error::invalid("explicit spectrum values must be positive"));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::invalid("explicit spectrum must be nonincreasing"));
                }
            }
        }
        if let Some(mults) = &self.multiplicities {
            if mults.iter().any(|&c| c == 0) {
                return Err(Error::invalid("multiplicities must be positive"));
            }
            if mults.iter().sum::<usize>() != self.n {
                return Err(Error::invalid(format!(
                    "multiplicities sum to {}, expected n = {}",
                    mults.iter().sum::<usize>(),
                    self.n
                )));
            }
            if let SpectrumKind::Explicit { values } = &self.kind {
                if values.len() != mults.len() {
                    return Err(Error::invalid(
                        "explicit spectrum length must match multiplicity count",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Exact solution selector for the right-hand side construction.
///
/// `Picard { beta }` sets x_true = V·(σ_1^β, …, σ_n^β)ᵀ, so the exact
/// data coefficients decay as u_iᵀb_true = σ_i^{1+β}; β > 0 satisfies the
/// discrete Picard condition with a clean power law, which makes the
/// fitted decay exponent and the transition index well defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "x_true", rename_all = "snake_case")]
pub enum XTrueKind {
    Ones,
    Picard { beta: f64 },
    Custom { values: Vec<f64> },
}

/// Full problem specification; a `TestProblem` is a pure function of this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub m: usize,
    pub n: usize,
    pub spectrum: SpectrumSpec,
    /// Relative noise level ε = ‖e‖/‖b_true‖.
    pub noise_level: f64,
    pub seed: u64,
    pub x_true: XTrueKind,
}

impl ProblemSpec {
    pub fn square(n: usize, kind: SpectrumKind, noise_level: f64, seed: u64) -> Self {
        ProblemSpec {
            m: n,
            n,
            spectrum: SpectrumSpec::simple(kind, n),
            noise_level,
            seed,
            x_true: XTrueKind::Ones,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m < self.n {
            return Err(Error::invalid("m >= n required"));
        }
        if self.spectrum.n != self.n {
            return Err(Error::invalid("spectrum dimension must equal n"));
        }
        if !(0.0..1.0).contains(&self.noise_level) {
            return Err(Error::invalid("noise level must lie in [0, 1)"));
        }
        match &self.x_true {
            XTrueKind::Custom { values } if values.len() != self.n => {
                return Err(Error::invalid("custom x_true length must equal n"));
            }
            XTrueKind::Picard { beta } if !beta.is_finite() => {
                return Err(Error::invalid("picard exponent must be finite"));
            }
            _ => {}
        }
        self.spectrum.validate()
    }
}

/// Assembled dense test problem with its exact factors kept for oracles.
#[derive(Debug, Clone)]
pub struct TestProblem {
    pub a: Array2<f64>,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub sigma: Array1<f64>,
    pub x_true: Array1<f64>,
    pub b_true: Array1<f64>,
    pub e: Array1<f64>,
    pub b: Array1<f64>,
    pub spec: ProblemSpec,
}

/// Expand a spectrum spec into the length-n nonincreasing singular value
/// vector, multiplicities applied.
pub fn make_spectrum(spec: &SpectrumSpec) -> Result<Array1<f64>> {
    spec.validate()?;
    let s = spec.distinct_count();
    let distinct: Vec<f64> = match &spec.kind {
        SpectrumKind::Severe { zeta, rho } => {
            (1..=s).map(|k| zeta * rho.powi(-(k as i32))).collect()
        }
        SpectrumKind::Power { zeta, alpha } => {
            (1..=s).map(|k| zeta * (k as f64).powf(-alpha)).collect()
        }
        SpectrumKind::Explicit { values } => {
            if spec.multiplicities.is_none() && values.len() != spec.n {
                return Err(Error::invalid("explicit spectrum length must equal n"));
            }
            values.clone()
        }
    };
    let mut sigma = Vec::with_capacity(spec.n);
    match &spec.multiplicities {
        Some(mults) => {
            for (val, &count) in distinct.iter().zip(mults) {
                sigma.extend(std::iter::repeat(*val).take(count));
            }
        }
        None => sigma = distinct,
    }
    Ok(Array1::from(sigma))
}

/// One multiplicity group of a nonincreasing spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaGroup {
    pub value: f64,
    pub multiplicity: usize,
    /// Index range [start, start + multiplicity) into the full sigma vector.
    pub start: usize,
}

/// Merge adjacent singular values that agree to `rel_tol` (relative) into
/// multiplicity groups. With `rel_tol = 0` only exact duplicates merge.
pub fn group_distinct(sigma: &Array1<f64>, rel_tol: f64) -> Vec<SigmaGroup> {
    let mut groups: Vec<SigmaGroup> = Vec::new();
    for (i, &val) in sigma.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (g.value - val).abs() <= rel_tol * g.value.abs().max(val.abs()) => {
                g.multiplicity += 1;
            }
            _ => groups.push(SigmaGroup { value: val, multiplicity: 1, start: i }),
        }
    }
    groups
}

/// Random matrix with orthonormal columns: QR of a standard-normal draw,
/// columns sign-normalized so the R diagonal is positive (makes the factor
/// a deterministic function of the Gaussian sample).
fn random_orthonormal(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Result<Array2<f64>> {
    let g = Array2::from_shape_fn((m, n), |_| StandardNormal.sample(rng));
    let (q, r) = g.qr()?;
    let mut q = q;
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).mapv_inplace(|x: f64| -x);
        }
    }
    Ok(q)
}

/// Build the full test problem from its spec. Deterministic: the same spec
/// (seed included) yields bitwise-identical output.
pub fn assemble_problem(spec: &ProblemSpec) -> Result<TestProblem> {
    assemble_with_factors(spec, None)
}

/// Testing hook: assemble with explicitly supplied orthonormal factors
/// (e.g. U = V = I for hand-checkable diagonal problems). The random number
/// stream is consumed in the same order either way, so the noise draw for a
/// given seed does not depend on whether factors were supplied.
pub fn assemble_with_factors(
    spec: &ProblemSpec,
    factors: Option<(Array2<f64>, Array2<f64>)>,
) -> Result<TestProblem> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let sigma = make_spectrum(&spec.spectrum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let (u, v) = match factors {
        Some((u, v)) => {
            if u.dim() != (m, n) || v.dim() != (n, n) {
                return Err(Error::invalid("supplied factors have wrong dimensions"));
            }
            // burn the draws the random factors would have consumed
            for _ in 0..(m * n + n * n) {
                let _: f64 = StandardNormal.sample(&mut rng);
            }
            (u, v)
        }
        None => {
            let u = random_orthonormal(&mut rng, m, n)?;
            let v = random_orthonormal(&mut rng, n, n)?;
            (u, v)
        }
    };

    // A = U diag(sigma) V^T without materializing the diagonal
    let us = &u * &sigma; // scales column j by sigma_j
    let a = us.dot(&v.t());

    let x_true = match &spec.x_true {
        XTrueKind::Ones => Array1::ones(n),
        XTrueKind::Picard { beta } => v.dot(&sigma.mapv(|s| s.powf(*beta))),
        XTrueKind::Custom { values } => Array1::from(values.clone()),
    };
    let b_true = a.dot(&x_true);
    let bt_norm = b_true.norm_l2();
    if spec.noise_level > 0.0 && bt_norm == 0.0 {
        return Err(Error::invalid(
            "b_true is zero: relative noise level undefined",
        ));
    }

    let mut e = Array1::from_shape_fn(m, |_| StandardNormal.sample(&mut rng));
    if spec.noise_level > 0.0 {
        let scale = spec.noise_level * bt_norm / e.norm_l2();
        e.mapv_inplace(|x| x * scale);
    } else {
        e.fill(0.0);
    }
    let b = &b_true + &e;

    Ok(TestProblem { a, u, v, sigma, x_true, b_true, e, b, spec: spec.clone() })
}
