//! Path-based comparison rules on Markov trees, and the two-sided witness
//! construction showing the conditionate-set criterion is complete.

use std::collections::BTreeSet;

use crate::engine::{ProofStep, Relation, Rho2, Verdict};
use crate::error::{Error, Result};
use crate::gaussian::{sem_covariance, CovarianceMatrix, SemParams};
use crate::graph::{EdgeKind, GraphBuilder, GraphClass, MixedGraph, Path, PathResult};
use crate::separation::Triple;

fn require_tree(g: &MixedGraph) -> Result<()> {
    let class = g.classify();
    if class != GraphClass::Tree {
        return Err(Error::ClassMismatch {
            expected: "Tree",
            actual: class,
        });
    }
    Ok(())
}

fn one(l: &str) -> BTreeSet<String> {
    [l.to_string()].into()
}

fn two(l: &str, r: &str) -> BTreeSet<String> {
    [l.to_string(), r.to_string()].into()
}

/// The unique path between two vertices of a tree.
fn tree_path(g: &MixedGraph, x: &str, y: &str) -> Result<Path> {
    match g.unique_path(x, y)? {
        PathResult::Unique(p) => Ok(p),
        _ => Err(Error::Invalid(format!("no unique path between {x} and {y}"))),
    }
}

fn path_meets(p: &Path, z: &BTreeSet<String>) -> bool {
    p.vertices().iter().any(|v| z.contains(v))
}

fn check_labels<'a>(g: &MixedGraph, labels: impl IntoIterator<Item = &'a str>) -> Result<()> {
    for l in labels {
        g.index_of(l)?;
    }
    Ok(())
}

/// Fixed-conditionate rule: when c lies on the path from a to c', then
/// rho2(a,c'|Z) <= rho2(a,c|Z) for every conditionate set Z.
pub fn tree_compare_fixed_conditionate(
    g: &MixedGraph,
    a: &str,
    c: &str,
    cprime: &str,
    z: &BTreeSet<String>,
) -> Result<Verdict> {
    require_tree(g)?;
    check_labels(g, [a, c, cprime].into_iter().chain(z.iter().map(String::as_str)))?;
    if a == c || a == cprime {
        return Err(Error::Invalid("correlates must differ from a".to_string()));
    }
    for l in [a, c, cprime] {
        if z.contains(l) {
            return Err(Error::OverlappingSets(format!("Z contains {l}")));
        }
    }
    let left = Rho2::new(a, cprime, z.clone());
    let right = Rho2::new(a, c, z.clone());
    if c == cprime {
        return Ok(Verdict::certified(
            vec![(left, Relation::Eq, right)],
            Vec::new(),
        ));
    }
    let p = tree_path(g, a, cprime)?;
    if !p.contains(c) {
        return Ok(Verdict::unknown());
    }
    let step = ProofStep {
        rule: "t6",
        pivot: None,
        b_set: z.clone(),
        detail: Some(format!("{c} lies on path({a},{cprime})")),
        triples: Vec::new(),
    };
    Ok(Verdict::certified(
        vec![(left, Relation::Le, right)],
        vec![step],
    ))
}

/// Certifies rho2(a,c|from) <= rho2(a,c|to) by the path criterion: both
/// correlate paths to every vertex of `to` beyond `from` meet `from`.
fn shield_step(
    g: &MixedGraph,
    a: &str,
    c: &str,
    from: &BTreeSet<String>,
    to: &BTreeSet<String>,
) -> Result<Option<ProofStep>> {
    let fresh: BTreeSet<String> = to.difference(from).cloned().collect();
    for z in &fresh {
        let pa = tree_path(g, a, z)?;
        let pc = tree_path(g, c, z)?;
        if !path_meets(&pa, from) || !path_meets(&pc, from) {
            return Ok(None);
        }
    }
    let (detail, triples) = if fresh.is_empty() {
        ("target set adds no new conditionates".to_string(), Vec::new())
    } else {
        (
            "both correlate paths to every new conditionate meet the source set".to_string(),
            vec![Triple::new(two(a, c), fresh, from.clone())?],
        )
    };
    Ok(Some(ProofStep {
        rule: "t7",
        pivot: None,
        b_set: from.clone(),
        detail: Some(detail),
        triples,
    }))
}

/// Certifies that conditioning on `z` zeroes rho2(a,c): some member sits on
/// the a-c path.
fn trunk_zero_step(
    g: &MixedGraph,
    a: &str,
    c: &str,
    z: &BTreeSet<String>,
    side: &str,
) -> Result<Option<ProofStep>> {
    let trunk = tree_path(g, a, c)?;
    if !path_meets(&trunk, z) {
        return Ok(None);
    }
    Ok(Some(ProofStep {
        rule: "t7",
        pivot: None,
        b_set: z.clone(),
        detail: Some(format!(
            "{side} conditioning set meets path({a},{c}); that quantity is zero"
        )),
        triples: vec![Triple::new(one(a), one(c), z.clone())?],
    }))
}

/// Conditionate-set comparison at fixed correlates: LE when Z1 shields Z2
/// from both correlates (or zeroes the left side), GE symmetrically, EQ
/// when both directions certify.
pub fn tree_compare_conditionates(
    g: &MixedGraph,
    a: &str,
    c: &str,
    z1: &BTreeSet<String>,
    z2: &BTreeSet<String>,
) -> Result<Verdict> {
    require_tree(g)?;
    check_labels(
        g,
        [a, c]
            .into_iter()
            .chain(z1.iter().map(String::as_str))
            .chain(z2.iter().map(String::as_str)),
    )?;
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
    let le = match shield_step(g, a, c, z1, z2)? {
        Some(s) => Some(s),
        None => trunk_zero_step(g, a, c, z1, "left")?,
    };
    let ge = match shield_step(g, a, c, z2, z1)? {
        Some(s) => Some(s),
        None => trunk_zero_step(g, a, c, z2, "right")?,
    };
    let (rel, steps) = match (le, ge) {
        (Some(l), Some(r)) => (Relation::Eq, vec![l, r]),
        (Some(l), None) => (Relation::Le, vec![l]),
        (None, Some(r)) => (Relation::Ge, vec![r]),
        (None, None) => return Ok(Verdict::unknown()),
    };
    let left = Rho2::new(a, c, z1.clone());
    let right = Rho2::new(a, c, z2.clone());
    Ok(Verdict::certified(vec![(left, rel, right)], steps))
}

/// General tree rule: rho2(a,c'|Z') <= rho2(a,c|Z) composed from a
/// conditionate move at correlates (a,c') and a correlate move at Z.
pub fn tree_general_compare(
    g: &MixedGraph,
    a: &str,
    c: &str,
    cprime: &str,
    z: &BTreeSet<String>,
    zprime: &BTreeSet<String>,
) -> Result<Verdict> {
    require_tree(g)?;
    check_labels(
        g,
        [a, c, cprime]
            .into_iter()
            .chain(z.iter().map(String::as_str))
            .chain(zprime.iter().map(String::as_str)),
    )?;
    if a == c || a == cprime {
        return Err(Error::Invalid("correlates must differ from a".to_string()));
    }
    for l in [a, c, cprime] {
        if z.contains(l) || zprime.contains(l) {
            return Err(Error::OverlappingSets(format!(
                "correlate {l} appears in a conditionate set"
            )));
        }
    }
    let p = tree_path(g, a, cprime)?;
    if !p.contains(c) {
        return Ok(Verdict::unknown());
    }
    let left = Rho2::new(a, cprime, zprime.clone());
    let right = Rho2::new(a, c, z.clone());

    // Z' on the a-c' path zeroes the left side outright.
    if path_meets(&p, zprime) {
        let step = ProofStep {
            rule: "t7",
            pivot: None,
            b_set: zprime.clone(),
            detail: Some(format!(
                "conditioning set meets path({a},{cprime}); left quantity is zero"
            )),
            triples: vec![Triple::new(one(a), one(cprime), zprime.clone())?],
        };
        return Ok(Verdict::certified(
            vec![(left, Relation::Le, right)],
            vec![step],
        ));
    }

    let mut steps = Vec::new();
    let mid = Rho2::new(a, cprime, z.clone());
    let first_rel = if z == zprime {
        Relation::Eq
    } else {
        match shield_step(g, a, cprime, zprime, z)? {
            Some(s) => {
                steps.push(s);
                Relation::Le
            }
            None => return Ok(Verdict::unknown()),
        }
    };
    let second_rel = if c == cprime {
        Relation::Eq
    } else {
        steps.push(ProofStep {
            rule: "t6",
            pivot: None,
            b_set: z.clone(),
            detail: Some(format!("{c} lies on path({a},{cprime})")),
            triples: Vec::new(),
        });
        Relation::Le
    };
    Ok(Verdict::certified(
        vec![(left, first_rel, mid.clone()), (mid, second_rel, right)],
        steps,
    ))
}

/// Parameters of one completeness witness: a unit-coefficient precision
/// factor over the union-of-paths subgraph, with free coefficients b1 and
/// b2 on the edges attaching the chosen Z1 and Z2 branches.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessParams {
    pub b1: f64,
    pub b2: f64,
    /// Oriented (parent, child) edges: the a-c trunk, then the branch
    /// toward the chosen Z1 vertex, then the branch toward the chosen Z2
    /// vertex.
    pub e_i: Vec<(String, String)>,
    /// Vertex listing: trunk, the two branches, then the remaining
    /// vertices in label order.
    pub order: Vec<String>,
    /// Edge carrying b1: where the Z1 branch leaves the rest of the
    /// coupled subgraph.
    pub attach1: (String, String),
    /// Edge carrying b2.
    pub attach2: (String, String),
}

impl WitnessParams {
    /// Assembles the covariance: unit-noise structural equations over the
    /// oriented union-of-paths subgraph, coefficient 1 except on the two
    /// attachment edges; vertices off the subgraph are independent noise.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        let mut builder = GraphBuilder::new();
        for l in &self.order {
            builder.vertex(l);
        }
        for (t, h) in &self.e_i {
            builder.edge(t, h, EdgeKind::Directed)?;
        }
        let g = builder.build();
        let mut params = SemParams::default();
        for (t, h) in &self.e_i {
            let key = (t.clone(), h.clone());
            let beta = if key == self.attach1 {
                self.b1
            } else if key == self.attach2 {
                self.b2
            } else {
                1.0
            };
            params.beta.insert(key, beta);
        }
        for l in &self.order {
            params.tau2.insert(l.clone(), 1.0);
        }
        sem_covariance(&g, &params)
    }
}

/// True when both correlate paths to z meet the screen set.
fn shielded(g: &MixedGraph, a: &str, c: &str, z: &str, screen: &BTreeSet<String>) -> Result<bool> {
    let pa = tree_path(g, a, z)?;
    let pc = tree_path(g, c, z)?;
    Ok(path_meets(&pa, screen) && path_meets(&pc, screen))
}

/// Suffix of path(a, z) from the point where it leaves the a-c trunk.
fn branch_from_trunk(g: &MixedGraph, trunk: &Path, a: &str, z: &str) -> Result<Vec<String>> {
    let paz = tree_path(g, a, z)?;
    let shared = trunk
        .vertices()
        .iter()
        .zip(paz.vertices().iter())
        .take_while(|(p, q)| p == q)
        .count();
    Ok(paz.vertices()[shared - 1..].to_vec())
}

/// Builds the pair of witness parameterizations for the completeness
/// construction. The chosen branch vertices are the first members of each
/// set not shielded by the other; the attachment coefficient of a branch
/// sits on its first edge outside the trunk and the other branch, so that
/// zeroing it decouples the entire branch remainder.
pub fn witness_params(
    g: &MixedGraph,
    a: &str,
    c: &str,
    z1: &BTreeSet<String>,
    z2: &BTreeSet<String>,
) -> Result<(WitnessParams, WitnessParams)> {
    require_tree(g)?;
    check_labels(
        g,
        [a, c]
            .into_iter()
            .chain(z1.iter().map(String::as_str))
            .chain(z2.iter().map(String::as_str)),
    )?;
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
    let trunk = tree_path(g, a, c)?;
    if path_meets(&trunk, z1) || path_meets(&trunk, z2) {
        return Err(Error::Premise(
            "a conditioning set meets the a-c path".to_string(),
        ));
    }
    let pick = |own: &BTreeSet<String>, other: &BTreeSet<String>| -> Result<String> {
        for z in own {
            if !shielded(g, a, c, z, other)? {
                return Ok(z.clone());
            }
        }
        Err(Error::Premise(
            "the correlates are separated from one set by the other".to_string(),
        ))
    };
    let zh1 = pick(z1, z2)?;
    let zh2 = pick(z2, z1)?;

    let branch1 = branch_from_trunk(g, &trunk, a, &zh1)?;
    let branch2 = branch_from_trunk(g, &trunk, a, &zh2)?;

    // Attachment: last vertex of the branch still inside the trunk or the
    // other branch, paired with its successor.
    let attachment = |own: &[String], other: &[String]| -> (String, String) {
        let shared: BTreeSet<&String> = trunk.vertices().iter().chain(other).collect();
        let split = own.iter().rposition(|v| shared.contains(v)).unwrap_or(0);
        (own[split].clone(), own[split + 1].clone())
    };
    let attach1 = attachment(&branch1, &branch2);
    let attach2 = attachment(&branch2, &branch1);

    let mut e_i: Vec<(String, String)> = Vec::new();
    let push_path = |vs: &[String], e_i: &mut Vec<(String, String)>| {
        for w in vs.windows(2) {
            let edge = (w[0].clone(), w[1].clone());
            if !e_i.contains(&edge) {
                e_i.push(edge);
            }
        }
    };
    push_path(trunk.vertices(), &mut e_i);
    push_path(&branch1, &mut e_i);
    push_path(&branch2, &mut e_i);

    let mut order: Vec<String> = Vec::new();
    for v in trunk
        .vertices()
        .iter()
        .chain(branch1.iter())
        .chain(branch2.iter())
        .chain(g.labels().iter())
    {
        if !order.contains(v) {
            order.push(v.clone());
        }
    }

    let w1 = WitnessParams {
        b1: 0.0,
        b2: 1.0,
        e_i: e_i.clone(),
        order: order.clone(),
        attach1: attach1.clone(),
        attach2: attach2.clone(),
    };
    let w2 = WitnessParams {
        b1: 1.0,
        b2: 0.0,
        e_i,
        order,
        attach1,
        attach2,
    };
    Ok((w1, w2))
}

/// Two covariance matrices Markov to the tree realizing both strict orders
/// between rho2(a,c|Z1) and rho2(a,c|Z2). Requires that neither set
/// separates the correlates from the other and that both avoid the a-c
/// path; under the path criterion's failure in both directions these
/// always exist.
pub fn completeness_witness(
    g: &MixedGraph,
    a: &str,
    c: &str,
    z1: &BTreeSet<String>,
    z2: &BTreeSet<String>,
) -> Result<(CovarianceMatrix, CovarianceMatrix)> {
    let (w1, w2) = witness_params(g, a, c, z1, z2)?;
    Ok((w1.covariance()?, w2.covariance()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MixedGraph;

    fn chain() -> MixedGraph {
        MixedGraph::parse("ug\na -- c\nc -- cp\ncp -- zp\nzp -- z\n").unwrap()
    }

    fn star_tail() -> MixedGraph {
        MixedGraph::parse("ug\nx -- a\nx -- c\nx -- zp\nzp -- z\n").unwrap()
    }

    #[test]
    fn fixed_conditionate_on_chain() {
        let g = chain();
        let z: BTreeSet<String> = [String::from("z")].into();
        let v = tree_compare_fixed_conditionate(&g, "a", "c", "cp", &z).unwrap();
        assert_eq!(v.relation, Relation::Le);
        assert_eq!(v.trace.steps[0].rule, "t6");
        assert_eq!(
            v.chain[0].0,
            Rho2::new("a", "cp", [String::from("z")].into())
        );
        // c off the a-cp path: no certificate.
        let v2 = tree_compare_fixed_conditionate(&g, "c", "a", "cp", &BTreeSet::new()).unwrap();
        assert_eq!(v2.relation, Relation::Unknown);
        // Directed input is not a tree for these rules.
        let d = MixedGraph::parse("dag\na -> c\n").unwrap();
        assert!(matches!(
            tree_compare_fixed_conditionate(&d, "a", "c", "c", &BTreeSet::new()),
            Err(Error::ClassMismatch { .. })
        ));
    }

    #[test]
    fn conditionates_direction_and_eq() {
        let g = star_tail();
        let zp: BTreeSet<String> = [String::from("zp")].into();
        let z: BTreeSet<String> = [String::from("z")].into();
        let v = tree_compare_conditionates(&g, "a", "c", &zp, &z).unwrap();
        assert_eq!(v.relation, Relation::Le);
        let v2 = tree_compare_conditionates(&g, "a", "c", &z, &zp).unwrap();
        assert_eq!(v2.relation, Relation::Ge);
        let v3 = tree_compare_conditionates(&g, "a", "c", &z, &z).unwrap();
        assert_eq!(v3.relation, Relation::Eq);
    }

    #[test]
    fn conditionates_trunk_zero() {
        let g = star_tail();
        let x: BTreeSet<String> = [String::from("x")].into();
        let z: BTreeSet<String> = [String::from("z")].into();
        let v = tree_compare_conditionates(&g, "a", "c", &x, &z).unwrap();
        assert_eq!(v.relation, Relation::Le);
        assert!(v
            .trace
            .steps
            .iter()
            .any(|s| s.detail.as_deref().is_some_and(|d| d.contains("meets path"))
                || s.detail.as_deref().is_some_and(|d| d.contains("new conditionate"))));
    }

    #[test]
    fn general_compare_two_factors() {
        let g = chain();
        let z: BTreeSet<String> = [String::from("z")].into();
        let zp: BTreeSet<String> = [String::from("zp")].into();
        let v = tree_general_compare(&g, "a", "c", "cp", &z, &zp).unwrap();
        assert_eq!(v.relation, Relation::Le);
        assert_eq!(v.chain.len(), 2);
        assert_eq!(v.trace.steps.len(), 2);
        assert_eq!(v.trace.steps[0].rule, "t7");
        assert_eq!(v.trace.steps[1].rule, "t6");

        // c = c' and Z = Z' degenerate to equality.
        let veq = tree_general_compare(&g, "a", "c", "c", &z, &z).unwrap();
        assert_eq!(veq.relation, Relation::Eq);

        // No shielding: Z' empty cannot screen Z.
        let vunk = tree_general_compare(&g, "a", "c", "cp", &z, &BTreeSet::new()).unwrap();
        assert_eq!(vunk.relation, Relation::Unknown);
    }

    #[test]
    fn witness_on_star() {
        // Trunk a-x-c with two branches off the junction.
        let g = MixedGraph::parse("ug\na -- x\nx -- c\nx -- z1\nx -- z2\n").unwrap();
        let z1: BTreeSet<String> = [String::from("z1")].into();
        let z2: BTreeSet<String> = [String::from("z2")].into();
        let (s1, s2) = completeness_witness(&g, "a", "c", &z1, &z2).unwrap();

        let r = |s: &CovarianceMatrix, z: &BTreeSet<String>| {
            s.partial_correlation_sq("a", "c", z).unwrap()
        };
        assert!((r(&s1, &z1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((r(&s1, &z2) - 1.0 / 10.0).abs() < 1e-12);
        assert!(r(&s1, &z1) > r(&s1, &z2) + 1e-8);
        assert!(r(&s2, &z2) > r(&s2, &z1) + 1e-8);
    }

    #[test]
    fn witness_with_shared_branch_prefix() {
        // Both chosen vertices hang off the same stem x-s; the attachment
        // coefficients must sit past the shared prefix.
        let g = MixedGraph::parse("ug\na -- x\nx -- c\nx -- s\ns -- z1\ns -- z2\n").unwrap();
        let z1: BTreeSet<String> = [String::from("z1")].into();
        let z2: BTreeSet<String> = [String::from("z2")].into();
        let (w1, _) = witness_params(&g, "a", "c", &z1, &z2).unwrap();
        assert_eq!(w1.attach1, (String::from("s"), String::from("z1")));
        assert_eq!(w1.attach2, (String::from("s"), String::from("z2")));

        let (s1, s2) = completeness_witness(&g, "a", "c", &z1, &z2).unwrap();
        let r = |s: &CovarianceMatrix, z: &BTreeSet<String>| {
            s.partial_correlation_sq("a", "c", z).unwrap()
        };
        assert!((r(&s1, &z1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((r(&s1, &z2) - 1.0 / 6.0).abs() < 1e-12);
        assert!((r(&s2, &z2) - 1.0 / 3.0).abs() < 1e-12);
        assert!((r(&s2, &z1) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn witness_decouples_interior_set_members() {
        // zz sits between the junction and z1; choosing z1 as the branch
        // endpoint must still decouple all of Z1 in the first witness.
        let g = MixedGraph::parse("ug\na -- v\nv -- c\nv -- zz\nzz -- z1\nv -- w\n").unwrap();
        let z1: BTreeSet<String> = [String::from("z1"), String::from("zz")].into();
        let z2: BTreeSet<String> = [String::from("w")].into();
        let (s1, s2) = completeness_witness(&g, "a", "c", &z1, &z2).unwrap();
        let r = |s: &CovarianceMatrix, z: &BTreeSet<String>| {
            s.partial_correlation_sq("a", "c", z).unwrap()
        };
        let marginal = s1.partial_correlation_sq("a", "c", &BTreeSet::new()).unwrap();
        assert!((r(&s1, &z1) - marginal).abs() < 1e-12);
        assert!(r(&s1, &z1) > r(&s1, &z2) + 1e-8);
        assert!(r(&s2, &z2) > r(&s2, &z1) + 1e-8);
    }

    #[test]
    fn witness_premise_failures() {
        let g = star_tail();
        // Z2 shields Z1 completely: premises of the construction fail.
        let zp: BTreeSet<String> = [String::from("zp")].into();
        let z: BTreeSet<String> = [String::from("z")].into();
        assert!(matches!(
            completeness_witness(&g, "a", "c", &z, &zp),
            Err(Error::Premise(_))
        ));
        // Conditioning set on the trunk.
        let x: BTreeSet<String> = [String::from("x")].into();
        assert!(matches!(
            completeness_witness(&g, "a", "c", &x, &z),
            Err(Error::Premise(_))
        ));
    }
}
