//! Numeric oracle: deterministic parameter sampling, Monte Carlo
//! confirmation or refutation of claimed orderings, coefficient sweeps,
//! and the two-sided chain profile.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{Relation, Rho2};
use crate::error::{Error, Result};
use crate::gaussian::{sem_covariance, SemParams};
use crate::graph::{EdgeKind, GraphBuilder, GraphClass, MixedGraph};

/// Absolute tolerance on rho2 differences before a draw counts as a
/// violation of a claimed ordering.
pub const MC_TOL: f64 = 1e-10;

/// Derives the per-trial generator seed from the run seed; trials stay
/// independent and mergeable no matter how they are scheduled.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut x = seed ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Draws coefficients uniformly on [-2,-0.2] u [0.2,2] per edge and noise
/// variances uniformly on [0.5,2] per vertex, deterministically from the
/// seed. The magnitude floor keeps structural dependences away from the
/// numeric independence tolerance.
pub fn sample_sem_params(g: &MixedGraph, seed: u64) -> SemParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = SemParams::default();
    for e in g.edges() {
        let magnitude = rng.gen_range(0.2..=2.0);
        let beta = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
        params
            .beta
            .insert((g.label(e.tail).to_string(), g.label(e.head).to_string()), beta);
    }
    for l in g.labels() {
        params.tau2.insert(l.clone(), rng.gen_range(0.5..=2.0));
    }
    params
}

/// An ordering between two quantities asserted to hold for all
/// parameterizations Markov to the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub left: Rho2,
    pub right: Rho2,
    pub relation: Relation,
}

impl Claim {
    pub fn new(left: Rho2, right: Rho2, relation: Relation) -> Result<Claim> {
        if !matches!(relation, Relation::Le | Relation::Ge | Relation::Eq) {
            return Err(Error::Invalid(format!(
                "claim relation must be LE, GE or EQ, got {relation}"
            )));
        }
        Ok(Claim {
            left,
            right,
            relation,
        })
    }

    /// Signed slack of the claim at one draw; negative means violated.
    fn margin(&self, left: f64, right: f64) -> f64 {
        match self.relation {
            Relation::Le => right - left,
            Relation::Ge => left - right,
            _ => -(left - right).abs(),
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.relation, self.right)
    }
}

/// Outcome of a Monte Carlo run over one claim.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub trials: u32,
    pub violations: u32,
    pub worst_margin: f64,
    pub counterexample: Option<SemParams>,
}

impl fmt::Display for McReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trials={} violations={} worst_margin={:?}",
            self.trials, self.violations, self.worst_margin
        )?;
        if let Some(p) = &self.counterexample {
            write!(f, "\ncounterexample: {p}")?;
        }
        Ok(())
    }
}

fn check_rho2_labels(g: &MixedGraph, q: &Rho2) -> Result<()> {
    g.index_of(&q.a)?;
    g.index_of(&q.c)?;
    for l in &q.given {
        g.index_of(l)?;
    }
    Ok(())
}

fn require_dag_structure(g: &MixedGraph) -> Result<()> {
    if !g.is_dag_structure() {
        return Err(Error::ClassMismatch {
            expected: "DAG",
            actual: g.classify(),
        });
    }
    Ok(())
}

/// Evaluates both quantities of the claim over `trials` independent
/// parameter draws, counting violations beyond the tolerance and keeping
/// the first violating parameterization.
pub fn monte_carlo_check(
    g: &MixedGraph,
    claim: &Claim,
    trials: u32,
    seed: u64,
) -> Result<McReport> {
    require_dag_structure(g)?;
    check_rho2_labels(g, &claim.left)?;
    check_rho2_labels(g, &claim.right)?;
    let mut report = McReport {
        trials,
        violations: 0,
        worst_margin: f64::INFINITY,
        counterexample: None,
    };
    for t in 0..trials {
        let params = sample_sem_params(g, trial_seed(seed, u64::from(t)));
        let sigma = sem_covariance(g, &params)?;
        let margin = claim.margin(claim.left.eval(&sigma)?, claim.right.eval(&sigma)?);
        if margin < report.worst_margin {
            report.worst_margin = margin;
        }
        if margin < -MC_TOL {
            report.violations += 1;
            report.counterexample.get_or_insert(params);
        }
    }
    Ok(report)
}

/// Searches the sampler for a pair of parameterizations realizing both
/// strict orders between the two quantities.
pub fn incomparability_witness(
    g: &MixedGraph,
    left: &Rho2,
    right: &Rho2,
    trials: u32,
    seed: u64,
) -> Result<Option<(SemParams, SemParams)>> {
    require_dag_structure(g)?;
    check_rho2_labels(g, left)?;
    check_rho2_labels(g, right)?;
    let mut gt: Option<SemParams> = None;
    let mut lt: Option<SemParams> = None;
    for t in 0..trials {
        let params = sample_sem_params(g, trial_seed(seed, u64::from(t)));
        let sigma = sem_covariance(g, &params)?;
        let l = left.eval(&sigma)?;
        let r = right.eval(&sigma)?;
        if l > r + MC_TOL && gt.is_none() {
            gt = Some(params);
        } else if r > l + MC_TOL && lt.is_none() {
            lt = Some(params);
        }
        if let (Some(a), Some(b)) = (&gt, &lt) {
            return Ok(Some((a.clone(), b.clone())));
        }
    }
    Ok(None)
}

/// One swept parameter with named rho2 series evaluated over its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: String,
    pub grid: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param_value");
        for (name, _) in &self.columns {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, v) in self.grid.iter().enumerate() {
            let _ = write!(out, "{v:?}");
            for (_, col) in &self.columns {
                let _ = write!(out, ",{:?}", col[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Grid indices where the named pair of columns orders one way and the
    /// other; evidence that neither ordering holds universally.
    pub fn crossing(&self, left: &str, right: &str) -> Option<(usize, usize)> {
        let col = |name: &str| self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c);
        let (l, r) = (col(left)?, col(right)?);
        let above = (0..self.grid.len()).find(|&i| l[i] > r[i] + MC_TOL);
        let below = (0..self.grid.len()).find(|&i| r[i] > l[i] + MC_TOL);
        above.zip(below)
    }
}

/// The parameter a sweep varies: one edge coefficient or one noise
/// variance, every other parameter pinned at 1.
enum SweepTarget {
    Beta(String, String),
    Tau(String),
}

fn parse_target(g: &MixedGraph, param: &str) -> Result<SweepTarget> {
    if let Some((t, h)) = param.split_once("->") {
        let (t, h) = (t.trim(), h.trim());
        let ti = g.index_of(t)?;
        let hi = g.index_of(h)?;
        let found = g
            .edges()
            .iter()
            .any(|e| e.tail == ti && e.head == hi && e.kind == EdgeKind::Directed);
        if !found {
            return Err(Error::Invalid(format!("no directed edge {t} -> {h}")));
        }
        Ok(SweepTarget::Beta(t.to_string(), h.to_string()))
    } else {
        g.index_of(param.trim())?;
        Ok(SweepTarget::Tau(param.trim().to_string()))
    }
}

/// All-ones parameterization of a DAG.
pub fn unit_params(g: &MixedGraph) -> SemParams {
    let mut params = SemParams::default();
    for e in g.edges() {
        params.beta.insert(
            (g.label(e.tail).to_string(), g.label(e.head).to_string()),
            1.0,
        );
    }
    for l in g.labels() {
        params.tau2.insert(l.clone(), 1.0);
    }
    params
}

/// Evaluates each query's rho2 across the grid of values for one
/// coefficient or noise variance, all other parameters fixed at 1.
pub fn sweep(g: &MixedGraph, param: &str, grid: &[f64], queries: &[Rho2]) -> Result<SweepTable> {
    require_dag_structure(g)?;
    let target = parse_target(g, param)?;
    for q in queries {
        check_rho2_labels(g, q)?;
    }
    let base = unit_params(g);
    let mut columns: Vec<(String, Vec<f64>)> = queries
        .iter()
        .map(|q| (q.to_string(), Vec::with_capacity(grid.len())))
        .collect();
    for &v in grid {
        let mut params = base.clone();
        match &target {
            SweepTarget::Beta(t, h) => {
                params.beta.insert((t.clone(), h.clone()), v);
            }
            SweepTarget::Tau(l) => {
                if v <= 0.0 {
                    return Err(Error::Invalid(format!(
                        "noise variance grid point {v:?} is not positive"
                    )));
                }
                params.tau2.insert(l.clone(), v);
            }
        }
        let sigma = sem_covariance(g, &params)?;
        for (q, (_, col)) in queries.iter().zip(columns.iter_mut()) {
            col.push(q.eval(&sigma)?);
        }
    }
    Ok(SweepTable {
        param: param.to_string(),
        grid: grid.to_vec(),
        columns,
    })
}

/// Evenly spaced grid of n points from lo to hi inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64) / ((n - 1) as f64))
        .collect()
}

/// The two-sided chain: z_{n}→…→z_1→x→y_1→…→y_m with a→x and x→c, all
/// parameters 1. Returns one profile row per conditioning choice, in the
/// order marginal, z_n…z_1, x, y_1…y_m, and checks the qualitative shape:
/// the upstream leg increases and sits above the marginal, the downstream
/// leg increases and sits below it, and the value drops from z_1 to x.
pub fn chain_profile(n_left: usize, n_right: usize) -> Result<SweepTable> {
    let mut builder = GraphBuilder::new();
    builder.vertex("a");
    builder.vertex("x");
    builder.vertex("c");
    for k in 1..=n_left {
        builder.vertex(&format!("z{k}"));
    }
    for k in 1..=n_right {
        builder.vertex(&format!("y{k}"));
    }
    for k in (2..=n_left).rev() {
        builder.edge(&format!("z{k}"), &format!("z{}", k - 1), EdgeKind::Directed)?;
    }
    if n_left >= 1 {
        builder.edge("z1", "x", EdgeKind::Directed)?;
    }
    builder.edge("a", "x", EdgeKind::Directed)?;
    builder.edge("x", "c", EdgeKind::Directed)?;
    if n_right >= 1 {
        builder.edge("x", "y1", EdgeKind::Directed)?;
    }
    for k in 2..=n_right {
        builder.edge(&format!("y{}", k - 1), &format!("y{k}"), EdgeKind::Directed)?;
    }
    let g = builder.build();
    let sigma = sem_covariance(&g, &unit_params(&g))?;

    let mut conditionates: Vec<Option<String>> = vec![None];
    for k in (1..=n_left).rev() {
        conditionates.push(Some(format!("z{k}")));
    }
    conditionates.push(Some("x".to_string()));
    for k in 1..=n_right {
        conditionates.push(Some(format!("y{k}")));
    }
    let values: Vec<f64> = conditionates
        .iter()
        .map(|c| {
            let given: BTreeSet<String> = c.iter().cloned().collect();
            sigma.partial_correlation_sq("a", "c", &given)
        })
        .collect::<Result<_>>()?;

    let marginal = values[0];
    let upstream = &values[1..=n_left];
    let downstream = &values[n_left + 1..];
    let increasing = |s: &[f64]| s.windows(2).all(|w| w[0] < w[1]);
    if !increasing(upstream) || upstream.iter().any(|&v| v <= marginal) {
        return Err(Error::Invalid(
            "upstream profile leg lost its shape".to_string(),
        ));
    }
    if !increasing(downstream) || downstream.iter().any(|&v| v >= marginal) {
        return Err(Error::Invalid(
            "downstream profile leg lost its shape".to_string(),
        ));
    }
    if n_left >= 1 && values[n_left] <= values[n_left + 1] {
        return Err(Error::Invalid("profile drop at x missing".to_string()));
    }

    Ok(SweepTable {
        param: "conditionate index".to_string(),
        grid: (0..values.len()).map(|i| i as f64).collect(),
        columns: vec![("rho2(a,c|i)".to_string(), values)],
    })
}

/// Orients an undirected tree into a DAG by directing every edge away
/// from the root; the SEM sampler then covers tree-Markov models.
pub fn orient_from_root(g: &MixedGraph, root: &str) -> Result<MixedGraph> {
    let class = g.classify();
    if class != GraphClass::Tree {
        return Err(Error::ClassMismatch {
            expected: "Tree",
            actual: class,
        });
    }
    let r = g.index_of(root)?;
    let n = g.labels().len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in g.edges() {
        adjacency[e.tail].push(e.head);
        adjacency[e.head].push(e.tail);
    }
    let mut builder = GraphBuilder::new();
    for l in g.labels() {
        builder.vertex(l);
    }
    let mut seen = vec![false; n];
    seen[r] = true;
    let mut queue = VecDeque::from([r]);
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                builder.edge(g.label(v), g.label(w), EdgeKind::Directed)?;
                queue.push_back(w);
            }
        }
    }
    Ok(builder.build())
}
