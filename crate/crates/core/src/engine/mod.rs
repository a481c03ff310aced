//! Comparison engine: turns separation premises into ordered verdicts on
//! squared partial correlations, each carrying a re-checkable proof trace.

pub mod rules;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, SemParams};
use crate::graph::{MixedGraph, PathResult};
use crate::separation::Triple;

pub use rules::{
    ComparisonRule, PremiseCheck, PremiseOracle, RuleArgs, RuleRegistry, T2Rule, T3Rule, T4Rule,
};

/// Tolerance for numeric conditional-independence premises.
pub const NUMERIC_CI_TOL: f64 = 1e-9;

/// Symbolic quantity rho2(a,c|given).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rho2 {
    pub a: String,
    pub c: String,
    pub given: BTreeSet<String>,
}

impl Rho2 {
    pub fn new(a: &str, c: &str, given: BTreeSet<String>) -> Rho2 {
        Rho2 {
            a: a.to_string(),
            c: c.to_string(),
            given,
        }
    }

    pub fn marginal(a: &str, c: &str) -> Rho2 {
        Rho2::new(a, c, BTreeSet::new())
    }

    /// Evaluates the quantity on a covariance matrix.
    pub fn eval(&self, s: &CovarianceMatrix) -> Result<f64> {
        s.partial_correlation_sq(&self.a, &self.c, &self.given)
    }
}

impl fmt::Display for Rho2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rho2({},{}", self.a, self.c)?;
        if !self.given.is_empty() {
            let joined: Vec<&str> = self.given.iter().map(String::as_str).collect();
            write!(f, "|{}", joined.join(","))?;
        }
        write!(f, ")")
    }
}

/// Relation between two compared quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
    Incomparable,
    Unknown,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relation::Le => "LE",
            Relation::Ge => "GE",
            Relation::Eq => "EQ",
            Relation::Incomparable => "Incomparable",
            Relation::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

/// One discharged theorem application.
#[derive(Debug, Clone)]
pub struct ProofStep {
    pub rule: &'static str,
    pub pivot: Option<String>,
    pub b_set: BTreeSet<String>,
    pub detail: Option<String>,
    pub triples: Vec<Triple>,
}

impl ProofStep {
    fn render(&self) -> String {
        let mut parts = Vec::new();
        if let Some(x) = &self.pivot {
            parts.push(format!("x={x}"));
        }
        let b: Vec<&str> = self.b_set.iter().map(String::as_str).collect();
        parts.push(format!("B={{{}}}", b.join(",")));
        let mut out = format!("{}({})", self.rule, parts.join(", "));
        if let Some(d) = &self.detail {
            out.push_str(&format!(" [{d}]"));
        }
        if !self.triples.is_empty() {
            let ts: Vec<String> = self.triples.iter().map(Triple::to_string).collect();
            out.push_str(&format!(" triples: {}", ts.join("; ")));
        }
        out
    }
}

/// Ordered certificate for a verdict.
#[derive(Debug, Clone, Default)]
pub struct ProofTrace {
    pub steps: Vec<ProofStep>,
}

/// Outcome of a comparison: an overall relation, the ordered chain of
/// compared quantities, the certificate, and (for refutations) a pair of
/// parameterizations realizing both strict orders.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub relation: Relation,
    pub chain: Vec<(Rho2, Relation, Rho2)>,
    pub trace: ProofTrace,
    pub counterexample: Option<(SemParams, SemParams)>,
}

impl Verdict {
    pub fn certified(chain: Vec<(Rho2, Relation, Rho2)>, steps: Vec<ProofStep>) -> Verdict {
        let relation = derive_relation(&chain);
        Verdict {
            relation,
            chain,
            trace: ProofTrace { steps },
            counterexample: None,
        }
    }

    pub fn unknown() -> Verdict {
        Verdict {
            relation: Relation::Unknown,
            chain: Vec::new(),
            trace: ProofTrace::default(),
            counterexample: None,
        }
    }

    pub fn incomparable(left: Rho2, right: Rho2, witnesses: (SemParams, SemParams)) -> Verdict {
        Verdict {
            relation: Relation::Incomparable,
            chain: vec![(left, Relation::Incomparable, right)],
            trace: ProofTrace::default(),
            counterexample: Some(witnesses),
        }
    }

    /// Single-token outcome; chains of more than one leg get a `-chain`
    /// suffix.
    pub fn summary(&self) -> String {
        match self.relation {
            Relation::Unknown => "Unknown".to_string(),
            Relation::Incomparable => "Incomparable".to_string(),
            Relation::Eq => "EQ".to_string(),
            Relation::Le if self.chain.len() > 1 => "LE-chain".to_string(),
            Relation::Le => "LE".to_string(),
            Relation::Ge if self.chain.len() > 1 => "GE-chain".to_string(),
            Relation::Ge => "GE".to_string(),
        }
    }

    /// Line-oriented report: summary, one line per comparison, then the
    /// numbered trace steps.
    pub fn to_report(&self) -> String {
        let mut out = self.summary();
        out.push('\n');
        for (l, rel, r) in &self.chain {
            out.push_str(&format!("{rel}\t{l}\t{r}\n"));
        }
        for (i, step) in self.trace.steps.iter().enumerate() {
            out.push_str(&format!("  #{} {}\n", i + 1, step.render()));
        }
        if let Some((p1, p2)) = &self.counterexample {
            out.push_str(&format!("  witness 1: {p1}\n"));
            out.push_str(&format!("  witness 2: {p2}\n"));
        }
        out
    }
}

fn derive_relation(chain: &[(Rho2, Relation, Rho2)]) -> Relation {
    if chain.is_empty() {
        return Relation::Unknown;
    }
    let mut le = true;
    let mut ge = true;
    for (_, rel, _) in chain {
        match rel {
            Relation::Le => ge = false,
            Relation::Ge => le = false,
            Relation::Eq => {}
            _ => return Relation::Unknown,
        }
    }
    match (le, ge) {
        (true, true) => Relation::Eq,
        (true, false) => Relation::Le,
        (false, true) => Relation::Ge,
        (false, false) => Relation::Unknown,
    }
}

/// Comparison request between rho2(a,c|Z1) and rho2(a,c|Z2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    a: String,
    c: String,
    z1: BTreeSet<String>,
    z2: BTreeSet<String>,
}

impl Query {
    pub fn new(a: &str, c: &str, z1: BTreeSet<String>, z2: BTreeSet<String>) -> Result<Query> {
        if a == c {
            return Err(Error::Invalid(format!("correlates coincide: {a}")));
        }
        for l in [a, c] {
            if z1.contains(l) || z2.contains(l) {
                return Err(Error::OverlappingSets(format!(
                    "correlate {l} appears in a conditionate set"
                )));
            }
        }
        Ok(Query {
            a: a.to_string(),
            c: c.to_string(),
            z1,
            z2,
        })
    }

    pub fn a(&self) -> &str {
        &self.a
    }

    pub fn c(&self) -> &str {
        &self.c
    }

    pub fn z1(&self) -> &BTreeSet<String> {
        &self.z1
    }

    pub fn z2(&self) -> &BTreeSet<String> {
        &self.z2
    }

    pub fn left(&self) -> Rho2 {
        Rho2::new(&self.a, &self.c, self.z1.clone())
    }

    pub fn right(&self) -> Rho2 {
        Rho2::new(&self.a, &self.c, self.z2.clone())
    }
}

fn one(l: &str) -> BTreeSet<String> {
    [l.to_string()].into()
}

fn two(l: &str, r: &str) -> BTreeSet<String> {
    [l.to_string(), r.to_string()].into()
}

/// Fixed-conditionate comparison: c' _|_ a | {c} u Z certifies
/// rho2(a,c'|Z) <= rho2(a,c|Z).
pub fn compare_fixed_conditionate(
    g: &MixedGraph,
    a: &str,
    c: &str,
    cprime: &str,
    z: &BTreeSet<String>,
) -> Result<Verdict> {
    for l in [a, c, cprime].into_iter().chain(z.iter().map(String::as_str)) {
        g.index_of(l)?;
    }
    if a == c || a == cprime || c == cprime {
        return Err(Error::Invalid("correlates must be distinct".to_string()));
    }
    for l in [a, c, cprime] {
        if z.contains(l) {
            return Err(Error::OverlappingSets(format!("Z contains {l}")));
        }
    }
    let oracle = PremiseOracle::Structural(g);
    let mut t3 = z.clone();
    t3.insert(c.to_string());
    let check = oracle.check(&one(cprime), &one(a), &t3)?;
    if !check.passed() {
        return Ok(Verdict::unknown());
    }
    let step = ProofStep {
        rule: "t1",
        pivot: None,
        b_set: z.clone(),
        detail: None,
        triples: check.witness().into_iter().collect(),
    };
    let chain = vec![(
        Rho2::new(a, cprime, z.clone()),
        Relation::Le,
        Rho2::new(a, c, z.clone()),
    )];
    Ok(Verdict::certified(chain, vec![step]))
}

fn run_rule(
    rule: &dyn ComparisonRule,
    g: &MixedGraph,
    a: &str,
    c: &str,
    x: &str,
    b: &BTreeSet<String>,
    z: &str,
    zprime: Option<&str>,
) -> Result<Verdict> {
    for l in [a, c, x, z]
        .into_iter()
        .chain(zprime)
        .chain(b.iter().map(String::as_str))
    {
        g.index_of(l)?;
    }
    let args = RuleArgs::new(a, c, x, b, z, zprime)?;
    let oracle = PremiseOracle::Structural(g);
    Ok(rule.apply(&oracle, &args)?.unwrap_or_else(Verdict::unknown))
}

/// Decreasing comparison at a pivot: emits
/// rho2(a,c|z) <= [rho2(a,c|z') <=] rho2(a,c).
pub fn compare_t2(
    g: &MixedGraph,
    a: &str,
    c: &str,
    x: &str,
    z: &str,
    zprime: Option<&str>,
) -> Result<Verdict> {
    run_rule(&T2Rule, g, a, c, x, &BTreeSet::new(), z, zprime)
}

/// Increasing comparison for independent correlates: emits
/// rho2(a,c|B) <= [rho2(a,c|Bz') <=] rho2(a,c|Bz).
pub fn compare_t3(
    g: &MixedGraph,
    a: &str,
    c: &str,
    x: &str,
    b: &BTreeSet<String>,
    z: &str,
    zprime: Option<&str>,
) -> Result<Verdict> {
    run_rule(&T3Rule, g, a, c, x, b, z, zprime)
}

/// Increasing comparison driven by a _|_ z; the trace names the
/// sub-condition that fired.
pub fn compare_t4(
    g: &MixedGraph,
    a: &str,
    c: &str,
    x: &str,
    b: &BTreeSet<String>,
    z: &str,
    zprime: Option<&str>,
) -> Result<Verdict> {
    run_rule(&T4Rule, g, a, c, x, b, z, zprime)
}

/// Quantitative two-sided comparison of rho2(a,c|Bz) against rho2(a,c|x):
/// the direction is decided by comparing the share of pivot variance
/// explained by B against the residual variance share at z. Premises are
/// checked numerically; their failure is an error, not Unknown.
pub fn compare_t5(
    s: &CovarianceMatrix,
    a: &str,
    c: &str,
    x: &str,
    z: &str,
    b: &BTreeSet<String>,
) -> Result<Verdict> {
    let names = [a, c, x, z];
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if names[i] == names[j] {
                return Err(Error::Invalid(format!("labels must be distinct: {}", names[i])));
            }
        }
    }
    for n in names {
        if b.contains(n) {
            return Err(Error::OverlappingSets(format!("B contains {n}")));
        }
    }
    let oracle = PremiseOracle::Numeric(s, NUMERIC_CI_TOL);
    let mut acz = two(a, c);
    acz.insert(z.to_string());
    let premises = [
        (one(a), one(z), BTreeSet::new(), "a _|_ z"),
        (one(c), two(a, z), BTreeSet::new(), "c _|_ {a,z}"),
        (acz, b.clone(), one(x), "{a,c,z} _|_ B | x"),
    ];
    let mut triples = Vec::new();
    for (t1, t2, t3, what) in premises {
        match oracle.check(&t1, &t2, &t3)? {
            PremiseCheck::Holds(t) => triples.push(t),
            PremiseCheck::Vacuous => {}
            PremiseCheck::Fails => {
                return Err(Error::Premise(format!(
                    "{what} fails at tolerance {NUMERIC_CI_TOL:e}"
                )))
            }
        }
    }
    let sxx = s.get(x, x)?;
    let szz = s.get(z, z)?;
    let sxx_b = conditional_variance(s, x, b)?;
    let szz_b = conditional_variance(s, z, b)?;
    let lhs = (sxx - sxx_b) / sxx;
    let rhs = szz_b / szz;
    let rel = if lhs >= rhs { Relation::Ge } else { Relation::Le };
    let mut given = b.clone();
    given.insert(z.to_string());
    let detail = format!(
        "explained pivot variance {lhs:?} vs residual z variance {rhs:?}"
    );
    let step = ProofStep {
        rule: "t5",
        pivot: Some(x.to_string()),
        b_set: b.clone(),
        detail: Some(detail),
        triples,
    };
    let chain = vec![(Rho2::new(a, c, given), rel, Rho2::new(a, c, one(x)))];
    Ok(Verdict::certified(chain, vec![step]))
}

fn conditional_variance(s: &CovarianceMatrix, w: &str, b: &BTreeSet<String>) -> Result<f64> {
    if b.is_empty() {
        return s.get(w, w);
    }
    let cond = s.schur_conditional(&one(w), b)?;
    cond.get(w, w)
}

/// Pivot candidates for rule search: junction vertices of the relevant
/// paths first (on unique-path skeletons), then every vertex, minus the
/// excluded set.
fn pivot_candidates(
    g: &MixedGraph,
    a: &str,
    c: &str,
    near: &[&str],
    exclude: &BTreeSet<String>,
) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    if let Ok(PathResult::Unique(pac)) = g.unique_path(a, c) {
        for &w in near {
            if let Ok(PathResult::Unique(paw)) = g.unique_path(a, w) {
                let junction = pac
                    .vertices()
                    .iter()
                    .zip(paw.vertices().iter())
                    .take_while(|(p, q)| p == q)
                    .map(|(p, _)| p.clone())
                    .last();
                if let Some(j) = junction {
                    out.push(j);
                }
            }
        }
    }
    out.extend(g.labels().iter().cloned());
    let mut seen = BTreeSet::new();
    out.retain(|l| !exclude.contains(l) && seen.insert(l.clone()));
    out
}

/// Tries the registered rules at the given pivot, or over all candidate
/// pivots when none is fixed; the first discharged rule wins and its name
/// lands in the trace.
pub fn compare_auto(
    g: &MixedGraph,
    a: &str,
    c: &str,
    x: Option<&str>,
    b: &BTreeSet<String>,
    z: &str,
    zprime: Option<&str>,
) -> Result<Verdict> {
    for l in [a, c, z]
        .into_iter()
        .chain(x)
        .chain(zprime)
        .chain(b.iter().map(String::as_str))
    {
        g.index_of(l)?;
    }
    let registry = RuleRegistry::standard();
    let oracle = PremiseOracle::Structural(g);
    let pivots = match x {
        Some(p) => vec![p.to_string()],
        None => {
            let mut near = vec![z];
            near.extend(zprime);
            pivot_candidates(g, a, c, &near, b)
        }
    };
    for p in &pivots {
        let args = RuleArgs::new(a, c, p, b, z, zprime)?;
        for rule in registry.iter() {
            if let Some(v) = rule.apply(&oracle, &args)? {
                return Ok(v);
            }
        }
    }
    Ok(Verdict::unknown())
}

struct Factor {
    qu: Rho2,
    qv: Rho2,
    eq: bool,
    le_steps: Option<Vec<ProofStep>>,
    ge_steps: Option<Vec<ProofStep>>,
    eq_steps: Vec<ProofStep>,
}

impl Factor {
    fn le(&self) -> bool {
        self.eq || self.le_steps.is_some()
    }

    fn ge(&self) -> bool {
        self.eq || self.ge_steps.is_some()
    }

    fn into_parts(self, relation: Relation) -> ((Rho2, Relation, Rho2), Vec<ProofStep>) {
        let mut steps = self.eq_steps;
        let rel = if self.eq {
            Relation::Eq
        } else {
            match relation {
                Relation::Ge => {
                    steps.extend(self.ge_steps.into_iter().flatten());
                    Relation::Ge
                }
                _ => {
                    steps.extend(self.le_steps.into_iter().flatten());
                    relation
                }
            }
        };
        ((self.qu, rel, self.qv), steps)
    }
}

/// Certifies rho2(a,c|B,u) <= rho2(a,c|B,v) through one three-term chain:
/// decreasing with roles (z=u, z'=v), or increasing with roles (z=v, z'=u).
fn swap_le(
    g: &MixedGraph,
    oracle: &PremiseOracle,
    a: &str,
    c: &str,
    u: &str,
    v: &str,
    b: &BTreeSet<String>,
) -> Result<Option<Vec<ProofStep>>> {
    for x in pivot_candidates(g, a, c, &[u, v], b) {
        let down = RuleArgs::new(a, c, &x, b, u, Some(v))?;
        if let Some(verdict) = T2Rule.apply(oracle, &down)? {
            return Ok(Some(verdict.trace.steps));
        }
        let up = RuleArgs::new(a, c, &x, b, v, Some(u))?;
        for rule in [&T3Rule as &dyn ComparisonRule, &T4Rule] {
            if let Some(verdict) = rule.apply(oracle, &up)? {
                return Ok(Some(verdict.trace.steps));
            }
        }
    }
    Ok(None)
}

/// Certifies rho2(a,c|B,w) <= rho2(a,c|B) over candidate pivots.
fn telescope_decreasing(
    g: &MixedGraph,
    oracle: &PremiseOracle,
    a: &str,
    c: &str,
    w: &str,
    b: &BTreeSet<String>,
) -> Result<Option<Vec<ProofStep>>> {
    for x in pivot_candidates(g, a, c, &[w], b) {
        let args = RuleArgs::new(a, c, &x, b, w, None)?;
        if let Some(verdict) = T2Rule.apply(oracle, &args)? {
            return Ok(Some(verdict.trace.steps));
        }
    }
    Ok(None)
}

/// Certifies rho2(a,c|B) <= rho2(a,c|B,w) over candidate pivots.
fn telescope_increasing(
    g: &MixedGraph,
    oracle: &PremiseOracle,
    a: &str,
    c: &str,
    w: &str,
    b: &BTreeSet<String>,
) -> Result<Option<Vec<ProofStep>>> {
    for x in pivot_candidates(g, a, c, &[w], b) {
        let args = RuleArgs::new(a, c, &x, b, w, None)?;
        for rule in [&T3Rule as &dyn ComparisonRule, &T4Rule] {
            if let Some(verdict) = rule.apply(oracle, &args)? {
                return Ok(Some(verdict.trace.steps));
            }
        }
    }
    Ok(None)
}

fn certify_factor(
    g: &MixedGraph,
    oracle: &PremiseOracle,
    q: &Query,
    u: Option<&str>,
    v: Option<&str>,
    bk: &BTreeSet<String>,
) -> Result<Factor> {
    let quantity = |extra: Option<&str>| {
        let mut given = bk.clone();
        if let Some(e) = extra {
            given.insert(e.to_string());
        }
        Rho2::new(&q.a, &q.c, given)
    };
    let qu = quantity(u);
    let qv = quantity(v);
    let ac = two(&q.a, &q.c);

    // A side whose vertex is separated from the correlates given B drops
    // out of its quantity entirely.
    let collapse = |w: Option<&str>| -> Result<(Option<ProofStep>, bool)> {
        let Some(w) = w else { return Ok((None, false)) };
        match oracle.check(&ac, &one(w), bk)? {
            PremiseCheck::Holds(t) => Ok((
                Some(ProofStep {
                    rule: "identity",
                    pivot: None,
                    b_set: bk.clone(),
                    detail: Some(format!("rho2 unchanged: {w} separated from the correlates")),
                    triples: vec![t],
                }),
                true,
            )),
            _ => Ok((None, false)),
        }
    };
    let (step_u, red_u) = collapse(u)?;
    let (step_v, red_v) = collapse(v)?;
    let eq_steps: Vec<ProofStep> = step_u.into_iter().chain(step_v).collect();
    let u_eff = if red_u { None } else { u };
    let v_eff = if red_v { None } else { v };

    let (eq, le_steps, ge_steps) = match (u_eff, v_eff) {
        (None, None) => (true, None, None),
        (Some(w), None) => (
            false,
            telescope_decreasing(g, oracle, &q.a, &q.c, w, bk)?,
            telescope_increasing(g, oracle, &q.a, &q.c, w, bk)?,
        ),
        (None, Some(w)) => (
            false,
            telescope_increasing(g, oracle, &q.a, &q.c, w, bk)?,
            telescope_decreasing(g, oracle, &q.a, &q.c, w, bk)?,
        ),
        (Some(uu), Some(vv)) => (
            false,
            swap_le(g, oracle, &q.a, &q.c, uu, vv, bk)?,
            swap_le(g, oracle, &q.a, &q.c, vv, uu, bk)?,
        ),
    };
    Ok(Factor {
        qu,
        qv,
        eq,
        le_steps,
        ge_steps,
        eq_steps,
    })
}

/// Compares rho2(a,c|Z1) against rho2(a,c|Z2) by factoring the move from
/// Z1 to Z2 into single-vertex swaps, certifying every factor in a common
/// direction, and composing. Shared vertices stay in the context; a vertex
/// separated from the correlates collapses by conditional irrelevance.
pub fn chain_compare(g: &MixedGraph, q: &Query) -> Result<Verdict> {
    for l in [q.a.as_str(), q.c.as_str()]
        .into_iter()
        .chain(q.z1.iter().map(String::as_str))
        .chain(q.z2.iter().map(String::as_str))
    {
        g.index_of(l)?;
    }
    if q.z1 == q.z2 {
        return Ok(Verdict::certified(
            vec![(q.left(), Relation::Eq, q.right())],
            Vec::new(),
        ));
    }
    let common: BTreeSet<String> = q.z1.intersection(&q.z2).cloned().collect();
    let d1: Vec<String> = q.z1.difference(&q.z2).cloned().collect();
    let d2: Vec<String> = q.z2.difference(&q.z1).cloned().collect();
    let m = d1.len().max(d2.len());
    let oracle = PremiseOracle::Structural(g);

    let mut factors = Vec::with_capacity(m);
    for k in 0..m {
        let u = d1.get(k).map(String::as_str);
        let v = d2.get(k).map(String::as_str);
        let mut bk = common.clone();
        bk.extend(d2[..k.min(d2.len())].iter().cloned());
        bk.extend(d1[(k + 1).min(d1.len())..].iter().cloned());
        factors.push(certify_factor(g, &oracle, q, u, v, &bk)?);
    }

    let le_ok = factors.iter().all(Factor::le);
    let ge_ok = factors.iter().all(Factor::ge);
    let relation = match (le_ok, ge_ok) {
        (true, true) => Relation::Eq,
        (true, false) => Relation::Le,
        (false, true) => Relation::Ge,
        (false, false) => return Ok(Verdict::unknown()),
    };
    let mut chain = Vec::with_capacity(m);
    let mut steps = Vec::new();
    for f in factors {
        let (leg, mut fs) = f.into_parts(relation);
        chain.push(leg);
        steps.append(&mut fs);
    }
    Ok(Verdict {
        relation,
        chain,
        trace: ProofTrace { steps },
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sem_covariance;
    use crate::graph::MixedGraph;

    fn unit_params(g: &MixedGraph) -> SemParams {
        let mut p = SemParams::default();
        for e in g.edges() {
            p.beta.insert(
                (g.label(e.tail).to_string(), g.label(e.head).to_string()),
                1.0,
            );
        }
        for l in g.labels() {
            p.tau2.insert(l.clone(), 1.0);
        }
        p
    }

    fn star_tail() -> MixedGraph {
        MixedGraph::parse("dag\nx -> a\nx -> c\nx -> zp\nzp -> z\n").unwrap()
    }

    #[test]
    fn t2_three_chain_on_star_tail() {
        let g = star_tail();
        let v = compare_t2(&g, "a", "c", "x", "zp", Some("z")).unwrap();
        assert_eq!(v.relation, Relation::Le);
        assert_eq!(v.summary(), "LE-chain");
        let report = v.to_report();
        assert_eq!(
            report,
            "LE-chain\n\
             LE\trho2(a,c|zp)\trho2(a,c|z)\n\
             LE\trho2(a,c|z)\trho2(a,c)\n\
             \x20 #1 t2(x=x, B={}) triples: {a} _|_ {c} | {x}; {a,c} _|_ {zp} | {x}; {a,c} _|_ {z} | {zp}\n"
        );

        // The certified order holds numerically at unit coefficients.
        let s = sem_covariance(&g, &unit_params(&g)).unwrap();
        let vals: Vec<f64> = [
            Rho2::new("a", "c", [String::from("zp")].into()),
            Rho2::new("a", "c", [String::from("z")].into()),
            Rho2::marginal("a", "c"),
        ]
        .iter()
        .map(|r| r.eval(&s).unwrap())
        .collect();
        assert!((vals[0] - 1.0 / 9.0).abs() < 1e-12);
        assert!((vals[1] - 4.0 / 25.0).abs() < 1e-12);
        assert!((vals[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn t2_premise_failure_is_unknown() {
        let g = star_tail();
        let v = compare_t2(&g, "a", "c", "z", "zp", None).unwrap();
        assert_eq!(v.relation, Relation::Unknown);
        assert_eq!(v.summary(), "Unknown");
        assert!(v.chain.is_empty());
    }

    #[test]
    fn t3_degenerate_pivot_equal_to_z() {
        // Two colliders plus a mediator: the increasing chain runs from the
        // marginal through y up to the pivot itself.
        let g = MixedGraph::parse("dag\na -> x\nc -> x\nx -> y\ny -> z\na -> z\nc -> z\n").unwrap();
        let v = compare_t3(&g, "a", "c", "x", &BTreeSet::new(), "x", Some("y")).unwrap();
        assert_eq!(v.relation, Relation::Le);
        assert_eq!(v.chain.len(), 2);
        assert_eq!(v.chain[0].0, Rho2::marginal("a", "c"));
        assert_eq!(v.chain[1].2, Rho2::new("a", "c", [String::from("x")].into()));
        assert_eq!(v.trace.steps.len(), 1);
        assert_eq!(v.trace.steps[0].rule, "t3");
        assert_eq!(v.trace.steps[0].triples.len(), 2);
    }

    #[test]
    fn t4_subcondition_recorded() {
        // Ancestor of the screened vertex as conditionate: only the
        // (i)(f) screen discharges because z itself must join the screen.
        let g =
            MixedGraph::parse("dag\nzp -> z\nz -> x\na -> x\nc -> x\nx -> b\nz -> b\n").unwrap();
        let b: BTreeSet<String> = [String::from("b")].into();
        let v = compare_t4(&g, "a", "c", "x", &b, "z", Some("zp")).unwrap();
        assert_eq!(v.relation, Relation::Le);
        let detail = v.trace.steps[0].detail.as_deref().unwrap();
        assert_eq!(detail, "condition (i)(f)");
        assert_eq!(
            v.chain,
            vec![
                (
                    Rho2::new("a", "c", [String::from("b")].into()),
                    Relation::Le,
                    Rho2::new("a", "c", [String::from("b"), String::from("zp")].into()),
                ),
                (
                    Rho2::new("a", "c", [String::from("b"), String::from("zp")].into()),
                    Relation::Le,
                    Rho2::new("a", "c", [String::from("b"), String::from("z")].into()),
                ),
            ]
        );
    }

    #[test]
    fn t4_empty_b_collapses_to_equalities() {
        let g = MixedGraph::parse("dag\nnode a\nnode c\nnode z\nnode x\n").unwrap();
        let v = compare_t4(&g, "a", "c", "x", &BTreeSet::new(), "z", None).unwrap();
        assert_eq!(v.relation, Relation::Eq);
        assert_eq!(v.summary(), "EQ");
        let detail = v.trace.steps[0].detail.as_deref().unwrap();
        assert!(detail.contains("all compared quantities are zero"), "{detail}");
    }

    #[test]
    fn t5_direction_tracks_variance_ratios() {
        let g = MixedGraph::parse("dag\na -> x\nc -> x\nz -> x\nx -> b\n").unwrap();
        let mut p = unit_params(&g);
        p.beta.insert((String::from("x"), String::from("b")), 10.0);
        let s = sem_covariance(&g, &p).unwrap();

        let b: BTreeSet<String> = [String::from("b")].into();
        let v = compare_t5(&s, "a", "c", "x", "z", &b).unwrap();
        assert_eq!(v.relation, Relation::Ge);
        assert_eq!(v.summary(), "GE");
        let detail = v.trace.steps[0].detail.as_deref().unwrap();
        assert!(detail.contains("explained pivot variance"), "{detail}");

        let v_empty = compare_t5(&s, "a", "c", "x", "z", &BTreeSet::new()).unwrap();
        assert_eq!(v_empty.relation, Relation::Le);

        let err = compare_t5(&s, "a", "c", "x", "b", &BTreeSet::new()).unwrap_err();
        assert!(matches!(err, Error::Premise(_)));
    }

    #[test]
    fn t1_fixed_conditionate() {
        // c blocks c' from a along the only path.
        let g = MixedGraph::parse("dag\na -> c\nc -> cp\n").unwrap();
        let v = compare_fixed_conditionate(&g, "a", "c", "cp", &BTreeSet::new()).unwrap();
        assert_eq!(v.relation, Relation::Le);
        assert_eq!(v.trace.steps[0].rule, "t1");
        assert_eq!(
            v.chain,
            vec![(
                Rho2::marginal("a", "cp"),
                Relation::Le,
                Rho2::marginal("a", "c"),
            )]
        );
        // Reversing the roles has no certificate on this graph.
        let v2 = compare_fixed_conditionate(&g, "a", "cp", "c", &BTreeSet::new()).unwrap();
        assert_eq!(v2.relation, Relation::Unknown);
    }

    fn tail_tree() -> MixedGraph {
        MixedGraph::parse("dag\nx -> a\nx -> c\nx -> w1\nw1 -> w2\n").unwrap()
    }

    #[test]
    fn chain_compare_swaps_and_composes() {
        let g = tail_tree();
        let q = Query::new(
            "a",
            "c",
            [String::from("w1")].into(),
            [String::from("w2")].into(),
        )
        .unwrap();
        let v = chain_compare(&g, &q).unwrap();
        assert_eq!(v.relation, Relation::Le);

        let rq = Query::new(
            "a",
            "c",
            [String::from("w2")].into(),
            [String::from("w1")].into(),
        )
        .unwrap();
        let rv = chain_compare(&g, &rq).unwrap();
        assert_eq!(rv.relation, Relation::Ge);
    }

    #[test]
    fn chain_compare_equal_sets_and_redundant_vertex() {
        let g = tail_tree();
        let q = Query::new(
            "a",
            "c",
            [String::from("w1")].into(),
            [String::from("w1")].into(),
        )
        .unwrap();
        let v = chain_compare(&g, &q).unwrap();
        assert_eq!(v.relation, Relation::Eq);
        assert!(v.trace.steps.is_empty());

        // {w1} vs {w1, w2}: w2 is separated from {a,c} given w1, so the
        // larger set conditions on an irrelevant vertex.
        let q2 = Query::new(
            "a",
            "c",
            [String::from("w1")].into(),
            [String::from("w1"), String::from("w2")].into(),
        )
        .unwrap();
        let v2 = chain_compare(&g, &q2).unwrap();
        assert_eq!(v2.relation, Relation::Eq);
        assert_eq!(v2.trace.steps.len(), 1);
        assert_eq!(v2.trace.steps[0].rule, "identity");
    }

    #[test]
    fn chain_compare_without_certificate_is_unknown() {
        // Extra edge c -> z1 breaks every premise pattern.
        let g = MixedGraph::parse("dag\nx -> a\nx -> c\nx -> z1\nz1 -> z2\nc -> z1\n").unwrap();
        let q = Query::new(
            "a",
            "c",
            [String::from("z1")].into(),
            [String::from("z2")].into(),
        )
        .unwrap();
        let v = chain_compare(&g, &q).unwrap();
        assert_eq!(v.relation, Relation::Unknown);
        assert!(v.chain.is_empty());
    }

    #[test]
    fn compare_auto_reports_the_rule_that_fired() {
        // Mediator with a side collider: the decreasing rule fires with
        // context B = {b}.
        let g = MixedGraph::parse("dag\na -> x\nx -> c\nx -> b\nz -> b\nzp -> z\n").unwrap();
        let b: BTreeSet<String> = [String::from("b")].into();
        let v = compare_auto(&g, "a", "c", Some("x"), &b, "z", Some("zp")).unwrap();
        assert_eq!(v.relation, Relation::Le);
        assert_eq!(v.trace.steps[0].rule, "t2");
        assert_eq!(
            v.chain[0].0,
            Rho2::new("a", "c", [String::from("b"), String::from("z")].into())
        );

        // Without a fixed pivot the search still lands on x.
        let v2 = compare_auto(&g, "a", "c", None, &b, "z", Some("zp")).unwrap();
        assert_eq!(v2.relation, Relation::Le);
        assert_eq!(v2.trace.steps[0].pivot.as_deref(), Some("x"));
    }

    #[test]
    fn rule_registry_lookup() {
        let reg = RuleRegistry::standard();
        assert_eq!(reg.names(), vec!["t2", "t3", "t4"]);
        assert!(reg.get("t3").is_some());
        assert!(reg.get("t9").is_none());
    }

    #[test]
    fn query_validation() {
        assert!(Query::new("a", "a", BTreeSet::new(), BTreeSet::new()).is_err());
        assert!(Query::new("a", "c", [String::from("a")].into(), BTreeSet::new()).is_err());
    }
}
