//! On-disk formats: MatrixMarket array files, plain-text vectors, problem
//! directories with a JSON spec echo, and the CSV tables consumed by the
//! figure scripts.
//!
//! Every floating-point value is printed with 17 significant digits so a
//! write/read round trip reproduces the double exactly. CSV bodies are
//! deterministic functions of the data; anything environment-dependent
//! (timestamps, hostnames) belongs in `#`-prefixed metadata lines above
//! the header row.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::bidiag::BidiagState;
use crate::diagnostics::RankKReport;
use crate::error::{Error, Result};
use crate::lsqr::LsqrRun;
use crate::problem::{ProblemSpec, TestProblem};

/// 17 significant digits: the shortest representation that round-trips
/// every f64.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a dense matrix in MatrixMarket array format (real, general).
pub fn write_matrix_market(path: &Path, a: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    // array format is column-major
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{}", fmt(a[(i, j)]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a MatrixMarket array file written by `write_matrix_market` (or any
/// conforming real/general array file).
pub fn read_matrix_market(path: &Path) -> Result<Array2<f64>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() < 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "array"
        || tokens[3] != "real"
        || tokens[4] != "general"
    {
        return Err(Error::Parse(format!("unsupported MatrixMarket header: {header}")));
    }
    let mut dims: Option<(usize, usize)> = None;
    let mut values: Vec<f64> = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if dims.is_none() {
            let mut it = t.split_whitespace();
            let m: usize = it
                .next()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| Error::Parse("bad size line".into()))?;
            let n: usize = it
                .next()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| Error::Parse("bad size line".into()))?;
            dims = Some((m, n));
            values.reserve(m * n);
        } else {
            for tok in t.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad value: {tok}")))?,
                );
            }
        }
    }
    let (m, n) = dims.ok_or_else(|| Error::Parse("missing size line".into()))?;
    if values.len() != m * n {
        return Err(Error::Parse(format!(
            "expected {} values, found {}",
            m * n,
            values.len()
        )));
    }
    let mut a = Array2::zeros((m, n));
    let mut it = values.into_iter();
    for j in 0..n {
        for i in 0..m {
            a[(i, j)] = it.next().unwrap();
        }
    }
    Ok(a)
}

/// Write a vector as plain text, one value per line.
pub fn write_vector(path: &Path, v: &Array1<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for &x in v {
        writeln!(w, "{}", fmt(x))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a plain-text vector (one value per line, blank and `#` lines
/// ignored).
pub fn read_vector(path: &Path) -> Result<Array1<f64>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut vals = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        vals.push(t.parse::<f64>().map_err(|_| Error::Parse(format!("bad value: {t}")))?);
    }
    Ok(Array1::from(vals))
}

/// Serialize a problem into `dir`: A.mtx, b.vec, x_true.vec, meta.json.
pub fn save_problem(dir: &Path, p: &TestProblem) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix_market(&dir.join("A.mtx"), &p.a)?;
    write_vector(&dir.join("b.vec"), &p.b)?;
    write_vector(&dir.join("x_true.vec"), &p.x_true)?;
    let meta = serde_json::to_string_pretty(&p.spec)?;
    fs::write(dir.join("meta.json"), meta + "\n")?;
    Ok(())
}

/// Load the serialized parts of a problem directory.
pub struct LoadedProblem {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub x_true: Array1<f64>,
    pub spec: ProblemSpec,
}

pub fn load_problem(dir: &Path) -> Result<LoadedProblem> {
    let a = read_matrix_market(&dir.join("A.mtx"))?;
    let b = read_vector(&dir.join("b.vec"))?;
    let x_true = read_vector(&dir.join("x_true.vec"))?;
    let spec: ProblemSpec = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    Ok(LoadedProblem { a, b, x_true, spec })
}

/// CSV writer with `#`-prefixed metadata lines above the header row; the
/// body below the header is a pure function of the data.
pub struct CsvTable {
    meta: Vec<(String, String)>,
    header: String,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(header: &str) -> Self {
        CsvTable { meta: Vec::new(), header: header.to_string(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for (k, v) in &self.meta {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "{}", self.header)?;
        for r in &self.rows {
            writeln!(w, "{r}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// The deterministic part (header + rows), for byte-identity checks.
    pub fn body(&self) -> String {
        let mut s = self.header.clone();
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Per-index Picard table: `k, sigma_k, abs_uTb, abs_uTbtrue, tsvd_err,
/// tsvd_res`. All slices must have equal length s.
#[allow(clippy::too_many_arguments)]
pub fn picard_table(
    sigma_distinct: &Array1<f64>,
    abs_utb: &Array1<f64>,
    abs_utb_true: Option<&Array1<f64>>,
    tsvd_err: &[f64],
    tsvd_res: &[f64],
) -> CsvTable {
    let mut t = CsvTable::new("k,sigma_k,abs_uTb,abs_uTbtrue,tsvd_err,tsvd_res");
    for i in 0..sigma_distinct.len() {
        let utbt = abs_utb_true.map_or(String::new(), |v| fmt(v[i]));
        t.row(&[
            (i + 1).to_string(),
            fmt(sigma_distinct[i]),
            fmt(abs_utb[i]),
            utbt,
            fmt(tsvd_err[i]),
            fmt(tsvd_res[i]),
        ]);
    }
    t
}

/// Bidiagonal decay pairs: `j, alpha, beta` with beta the trailing
/// β_{j+1} of step j.
pub fn decay_table(state: &BidiagState) -> CsvTable {
    let mut t = CsvTable::new("j,alpha,beta");
    for j in 0..state.k_done() {
        let beta = if j + 1 < state.betas.len() { fmt(state.betas[j + 1]) } else { String::new() };
        t.row(&[(j + 1).to_string(), fmt(state.alphas[j]), beta]);
    }
    t
}

/// Per-iteration solver table: `k, res_norm, sol_norm, err_norm,
/// theta_min, theta_max`. The Ritz extremes are optional per-k pairs.
pub fn lsqr_table(run: &LsqrRun, theta_ranges: Option<&[(f64, f64)]>) -> CsvTable {
    let mut t = CsvTable::new("k,res_norm,sol_norm,err_norm,theta_min,theta_max");
    for k in 0..run.res_norms.len() {
        let err = run
            .err_norms
            .as_ref()
            .map_or(String::new(), |e| fmt(e[k]));
        let (tmin, tmax) = theta_ranges
            .and_then(|r| r.get(k))
            .map_or((String::new(), String::new()), |&(a, b)| (fmt(a), fmt(b)));
        t.row(&[(k + 1).to_string(), fmt(run.res_norms[k]), fmt(run.sol_norms[k]), err, tmin, tmax]);
    }
    t
}

/// JSON summary accompanying the solver table.
pub fn lsqr_summary_json(run: &LsqrRun) -> String {
    serde_json::json!({
        "k_star": run.k_star,
        "k_dp": run.k_dp,
        "tau": run.tau,
        "iterations": run.res_norms.len(),
    })
    .to_string()
}

/// Rank-k placement table: `k, gamma_k, interval_lo_idx, interval_hi_idx,
/// closer_to, near_best, count_below, max_count_allowed, attained`.
/// `interval_*_idx` are the 1-based singular-value indices bracketing
/// γ_k from below and above; `closer_to` is the index of the nearer one;
/// `attained` marks count_below reaching the cap. Caps that do not apply
/// are left empty.
pub fn rank_k_table(reports: &[RankKReport]) -> CsvTable {
    let mut t = CsvTable::new(
        "k,gamma_k,interval_lo_idx,interval_hi_idx,closer_to,near_best,count_below,max_count_allowed,attained",
    );
    for r in reports {
        let (lo, hi, closer) = if r.location_flagged {
            (String::new(), String::new(), String::new())
        } else {
            let j = r.location;
            let closer = if r.closer_to_upper { j } else { j + 1 };
            ((j + 1).to_string(), j.to_string(), closer.to_string())
        };
        let (cap, attained) = match r.max_count_allowed {
            Some(c) => (c.to_string(), (r.count_below == c).to_string()),
            None => (String::new(), String::new()),
        };
        t.row(&[
            r.k.to_string(),
            fmt(r.gamma_k),
            lo,
            hi,
            closer,
            r.near_best.to_string(),
            r.count_below.to_string(),
            cap,
            attained,
        ]);
    }
    t
}

/// Figure data: `k, gamma_k, sigma_kplus1`.
pub fn fig_gamma_table(gammas: &[(usize, f64, f64)]) -> CsvTable {
    let mut t = CsvTable::new("k,gamma_k,sigma_kplus1");
    for &(k, g, s1) in gammas {
        t.row(&[k.to_string(), fmt(g), fmt(s1)]);
    }
    t
}

/// Figure data: `k, i, theta_i, sigma_i` for Ritz-vs-singular plots.
pub fn fig_ritz_table(reports: &[RankKReport], sigma_distinct: &Array1<f64>) -> CsvTable {
    let mut t = CsvTable::new("k,i,theta_i,sigma_i");
    for r in reports {
        for i in 0..r.theta.len() {
            t.row(&[
                r.k.to_string(),
                (i + 1).to_string(),
                fmt(r.theta[i]),
                fmt(sigma_distinct[i]),
            ]);
        }
    }
    t
}

/// Figure data: `k, alpha_beta_pair, gamma_k` where the pair column is
/// α_{k+1} + β_{k+2} (the γ_k decay surrogate).
pub fn fig_pair_table(state: &BidiagState, gammas: &[(usize, f64)]) -> CsvTable {
    let mut t = CsvTable::new("k,alpha_beta_pair,gamma_k");
    for &(k, g) in gammas {
        if k < state.k_done() && k + 2 <= state.betas.len() {
            let pair = state.alphas[k] + state.betas[k + 1];
            t.row(&[k.to_string(), fmt(pair), fmt(g)]);
        }
    }
    t
}
