//! Exact covariance algebra: Schur complements, squared partial correlation,
//! mutual information, structural-equation covariance synthesis, and the
//! L(alpha) sign apparatus.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, MixedGraph};

/// Relative tolerance for symmetry and positive-definiteness checks,
/// scaled by the largest diagonal entry.
const PD_REL_TOL: f64 = 1e-12;

fn cholesky_pivots_ok(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return false;
        }
        let s = d.sqrt();
        l[(j, j)] = s;
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / s;
        }
    }
    true
}

/// Symmetric positive-definite matrix indexed by vertex labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    m: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry and positive definiteness, then symmetrizes
    /// exactly so downstream algebra sees `m == m.transpose()`.
    pub fn new(labels: Vec<String>, m: DMatrix<f64>) -> Result<CovarianceMatrix> {
        let n = labels.len();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Invalid(format!(
                "matrix is {}x{}, labels count {n}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate label {l}")));
            }
        }
        let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0_f64, f64::max);
        if n > 0 && max_diag <= 0.0 {
            return Err(Error::NotPositiveDefinite("nonpositive diagonal".into()));
        }
        let tol = PD_REL_TOL * max_diag;
        for i in 0..n {
            for j in i + 1..n {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::Invalid(format!(
                        "asymmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let m = (&m + m.transpose()) * 0.5;
        if !cholesky_pivots_ok(&m, tol) {
            return Err(Error::NotPositiveDefinite(
                "Cholesky pivot under tolerance".into(),
            ));
        }
        Ok(CovarianceMatrix { labels, index, m })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Entry sigma_ab by label.
    pub fn get(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.m[(self.index_of(a)?, self.index_of(b)?)])
    }

    fn resolve_ordered(&self, s: &BTreeSet<String>) -> Result<Vec<usize>> {
        // Original label order, not lexicographic, for deterministic output.
        let mut idx: Vec<usize> = s.iter().map(|l| self.index_of(l)).collect::<Result<_>>()?;
        idx.sort_unstable();
        Ok(idx)
    }

    /// Conditional covariance of W given Z: Sigma_WW - Sigma_WZ Sigma_ZZ^-1 Sigma_ZW.
    pub fn schur_conditional(
        &self,
        w: &BTreeSet<String>,
        z: &BTreeSet<String>,
    ) -> Result<CovarianceMatrix> {
        if let Some(shared) = w.intersection(z).next() {
            return Err(Error::OverlappingSets(format!("W and Z share {shared}")));
        }
        let wi = self.resolve_ordered(w)?;
        let zi = self.resolve_ordered(z)?;
        let labels: Vec<String> = wi.iter().map(|&i| self.labels[i].clone()).collect();
        let sww = DMatrix::from_fn(wi.len(), wi.len(), |r, c| self.m[(wi[r], wi[c])]);
        if zi.is_empty() {
            return CovarianceMatrix::new(labels, sww);
        }
        let szz = DMatrix::from_fn(zi.len(), zi.len(), |r, c| self.m[(zi[r], zi[c])]);
        let szw = DMatrix::from_fn(zi.len(), wi.len(), |r, c| self.m[(zi[r], wi[c])]);
        // Partial-pivoted solve rather than Cholesky: it stays exact on the
        // small rational examples the contracts freeze (no square roots).
        let solved = nalgebra::linalg::LU::new(szz).solve(&szw).ok_or_else(|| {
            Error::NotPositiveDefinite("conditioning block lost definiteness".into())
        })?;
        let cond = sww - szw.transpose() * solved;
        CovarianceMatrix::new(labels, cond)
    }

    /// Squared partial correlation rho2(a,c|Z) in [0,1).
    pub fn partial_correlation_sq(
        &self,
        a: &str,
        c: &str,
        z: &BTreeSet<String>,
    ) -> Result<f64> {
        if a == c {
            return Err(Error::Invalid(format!("correlates coincide: {a}")));
        }
        if z.contains(a) || z.contains(c) {
            return Err(Error::OverlappingSets(format!(
                "conditionate contains a correlate of ({a},{c})"
            )));
        }
        let pair: BTreeSet<String> = [a.to_string(), c.to_string()].into();
        let cond = self.schur_conditional(&pair, z)?;
        let saa = cond.get(a, a)?;
        let scc = cond.get(c, c)?;
        let sac = cond.get(a, c)?;
        Ok(sac * sac / (saa * scc))
    }

    /// Gaussian conditional mutual information in nats:
    /// Inf(a;c|Z) = -1/2 ln(1 - rho2(a,c|Z)).
    pub fn mutual_information(&self, a: &str, c: &str, z: &BTreeSet<String>) -> Result<f64> {
        let rho2 = self.partial_correlation_sq(a, c, z)?;
        Ok(-0.5 * (1.0 - rho2).ln())
    }

    /// J Sigma J with J = diag(1/sqrt(sigma_vv)): unit diagonal, all
    /// partial correlations preserved.
    pub fn normalize_to_correlation(&self) -> CovarianceMatrix {
        let n = self.labels.len();
        let inv_sd: Vec<f64> = (0..n).map(|i| 1.0 / self.m[(i, i)].sqrt()).collect();
        let m = DMatrix::from_fn(n, n, |i, j| self.m[(i, j)] * inv_sd[i] * inv_sd[j]);
        CovarianceMatrix::new(self.labels.clone(), m)
            .expect("normalization preserves definiteness")
    }

    /// Factorization implied by U independent of V given W:
    /// |sigma_UV - sigma_UW sigma_WV / sigma_WW| <= tol.
    pub fn ci_factorization_check(&self, u: &str, v: &str, w: &str, tol: f64) -> Result<bool> {
        if u == v || u == w || v == w {
            return Err(Error::Invalid("labels must be distinct".into()));
        }
        let resid = self.get(u, v)? - self.get(u, w)? * self.get(w, v)? / self.get(w, w)?;
        Ok(resid.abs() <= tol)
    }

    /// Numeric conditional independence of X and Y given Z: every entry of
    /// the conditional X-Y block is small relative to the geometric mean of
    /// the matching conditional variances.
    pub fn numeric_ci(
        &self,
        x: &BTreeSet<String>,
        y: &BTreeSet<String>,
        z: &BTreeSet<String>,
        tol: f64,
    ) -> Result<bool> {
        if let Some(shared) = x.intersection(y).next() {
            return Err(Error::OverlappingSets(format!("X and Y share {shared}")));
        }
        if x.is_empty() || y.is_empty() {
            return Ok(true);
        }
        let both: BTreeSet<String> = x.union(y).cloned().collect();
        let cond = self.schur_conditional(&both, z)?;
        for xl in x {
            for yl in y {
                let scale = (cond.get(xl, xl)? * cond.get(yl, yl)?).sqrt();
                if cond.get(xl, yl)?.abs() > tol * scale {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// CSV serialization: label header row, then full symmetric rows with
    /// shortest round-trip decimal formatting.
    pub fn to_csv(&self) -> String {
        let mut out = self.labels.join(",");
        out.push('\n');
        let n = self.labels.len();
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{:?}", self.m[(i, j)]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<CovarianceMatrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let Some((_, header)) = lines.next() else {
            return Err(Error::Parse {
                line: 1,
                msg: "empty covariance file".into(),
            });
        };
        let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let n = labels.len();
        let mut entries = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (lineno, line) in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("bad number {tok:?}: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {n} entries, found {}", row.len()),
                });
            }
            entries.extend(row);
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected {n} rows, found {rows}"),
            });
        }
        CovarianceMatrix::new(labels, DMatrix::from_row_slice(n, n, &entries))
    }
}

/// Structural-equation parameters: one regression coefficient per directed
/// edge (keyed parent then child) and one conditional variance per vertex.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SemParams {
    pub beta: BTreeMap<(String, String), f64>,
    pub tau2: BTreeMap<String, f64>,
}

impl fmt::Display for SemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .beta
            .iter()
            .map(|((t, h), v)| format!("beta[{t}->{h}]={v:?}"))
            .collect();
        parts.extend(self.tau2.iter().map(|(l, v)| format!("tau2[{l}]={v:?}")));
        f.write_str(&parts.join(", "))
    }
}

/// Closed-form SEM covariance: Sigma = (I-B)^-1 diag(tau2) (I-B)^-T,
/// assembled in topological order and relabelled to the graph's order.
pub fn sem_covariance(g: &MixedGraph, p: &SemParams) -> Result<CovarianceMatrix> {
    if !g.is_dag_structure() {
        return Err(Error::ClassMismatch {
            expected: "DAG",
            actual: g.classify(),
        });
    }
    let n = g.vertex_count();
    for e in g.edges() {
        let key = (g.label(e.tail).to_string(), g.label(e.head).to_string());
        if !p.beta.contains_key(&key) {
            return Err(Error::MissingParam(format!("beta[{} -> {}]", key.0, key.1)));
        }
    }
    if p.beta.len() != g.edges().len() {
        return Err(Error::Invalid("beta keys off the graph's edge set".into()));
    }
    for l in g.labels() {
        match p.tau2.get(l) {
            None => return Err(Error::MissingParam(format!("tau2[{l}]"))),
            Some(t) if *t <= 0.0 => {
                return Err(Error::Invalid(format!("tau2[{l}] must be positive")))
            }
            _ => {}
        }
    }
    if p.tau2.len() != n {
        return Err(Error::Invalid("tau2 keys off the graph's vertex set".into()));
    }

    // Kahn's algorithm, lowest original index first.
    let mut indegree: Vec<usize> = (0..n).map(|v| g.parents(v).len()).collect();
    let mut topo = Vec::with_capacity(n);
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    while let Some(&v) = ready.iter().next() {
        ready.remove(&v);
        topo.push(v);
        for u in g.children(v) {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                ready.insert(u);
            }
        }
    }
    debug_assert_eq!(topo.len(), n);
    let mut pos = vec![0usize; n];
    for (t, &v) in topo.iter().enumerate() {
        pos[v] = t;
    }

    // M = I - B is unit lower triangular in topological coordinates.
    let mut m = DMatrix::<f64>::identity(n, n);
    for e in g.edges() {
        debug_assert_eq!(e.kind, EdgeKind::Directed);
        let key = (g.label(e.tail).to_string(), g.label(e.head).to_string());
        m[(pos[e.head], pos[e.tail])] = -p.beta[&key];
    }
    let inv = m
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("unit lower triangular solve");
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            p.tau2[g.label(topo[i])]
        } else {
            0.0
        }
    });
    let sigma_topo = &inv * d * inv.transpose();
    let sigma = DMatrix::from_fn(n, n, |i, j| sigma_topo[(pos[i], pos[j])]);
    CovarianceMatrix::new(g.labels().to_vec(), sigma)
}

/// Inputs to the L(alpha) sign law, on correlation scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LAlphaContext {
    pub alpha: f64,
    pub k: f64,
    pub kprime: f64,
    pub rho_ac_b: f64,
    pub rho_ad_b: f64,
    pub rho_cd_b: f64,
}

impl LAlphaContext {
    /// Validates K > 0, correlations inside (-1,1), and both denominator
    /// factors of L(alpha) strictly positive.
    pub fn new(
        alpha: f64,
        k: f64,
        kprime: f64,
        rho_ac_b: f64,
        rho_ad_b: f64,
        rho_cd_b: f64,
    ) -> Result<LAlphaContext> {
        if k <= 0.0 {
            return Err(Error::Premise(format!("K must be positive, got {k}")));
        }
        for (name, r) in [("ac", rho_ac_b), ("ad", rho_ad_b), ("cd", rho_cd_b)] {
            if !(r.abs() < 1.0) {
                return Err(Error::Premise(format!("rho_{name}|B out of (-1,1): {r}")));
            }
        }
        let ctx = LAlphaContext {
            alpha,
            k,
            kprime,
            rho_ac_b,
            rho_ad_b,
            rho_cd_b,
        };
        if ctx.denom_ad() <= 0.0 || ctx.denom_cd() <= 0.0 {
            return Err(Error::Premise(
                "denominator factor of L(alpha) not positive".into(),
            ));
        }
        Ok(ctx)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<LAlphaContext> {
        LAlphaContext::new(
            alpha,
            self.k,
            self.kprime,
            self.rho_ac_b,
            self.rho_ad_b,
            self.rho_cd_b,
        )
    }

    fn denom_ad(&self) -> f64 {
        (self.alpha - self.kprime) - self.k * self.rho_ad_b * self.rho_ad_b
    }

    fn denom_cd(&self) -> f64 {
        (self.alpha - self.kprime) - self.k * self.rho_cd_b * self.rho_cd_b
    }

    /// M1 = rho_cd (rho_ad - rho_ac rho_cd); unit-variance form of the
    /// covariance-scale definition, positively proportional to it.
    pub fn m1(&self) -> f64 {
        self.rho_cd_b * (self.rho_ad_b - self.rho_ac_b * self.rho_cd_b)
    }

    /// M2 = rho_ad (rho_cd - rho_ac rho_ad).
    pub fn m2(&self) -> f64 {
        self.rho_ad_b * (self.rho_cd_b - self.rho_ac_b * self.rho_ad_b)
    }

    /// M3(alpha) = (alpha - K') rho_ac - K rho_ad rho_cd.
    pub fn m3(&self) -> f64 {
        (self.alpha - self.kprime) * self.rho_ac_b - self.k * self.rho_ad_b * self.rho_cd_b
    }
}

/// L(alpha) = M3(alpha)^2 / (denominator factors); finite and nonnegative
/// under the context invariants.
pub fn l_alpha(ctx: &LAlphaContext) -> f64 {
    let num = ctx.m3();
    num * num / (ctx.denom_ad() * ctx.denom_cd())
}
