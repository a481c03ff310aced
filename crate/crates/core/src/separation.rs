//! Separation oracles for undirected, directed, and mixed ancestral graphs,
//! plus the conditioning operation on undirected models.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{GraphClass, MixedGraph, Path};

/// Independence statement <T1, T2, T3>: T1 and T2 nonempty, all three
/// pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    t1: BTreeSet<String>,
    t2: BTreeSet<String>,
    t3: BTreeSet<String>,
}

impl Triple {
    pub fn new(
        t1: BTreeSet<String>,
        t2: BTreeSet<String>,
        t3: BTreeSet<String>,
    ) -> Result<Triple> {
        if t1.is_empty() || t2.is_empty() {
            return Err(Error::Invalid("triple with empty side".into()));
        }
        for (x, y, name) in [(&t1, &t2, "T1/T2"), (&t1, &t3, "T1/T3"), (&t2, &t3, "T2/T3")] {
            if let Some(shared) = x.intersection(y).next() {
                return Err(Error::OverlappingSets(format!("{name} share {shared}")));
            }
        }
        Ok(Triple { t1, t2, t3 })
    }

    /// Convenience constructor from slices; panics on invalid input.
    pub fn of(t1: &[&str], t2: &[&str], t3: &[&str]) -> Triple {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect();
        Triple::new(s(t1), s(t2), s(t3)).expect("literal triple is valid")
    }

    pub fn t1(&self) -> &BTreeSet<String> {
        &self.t1
    }

    pub fn t2(&self) -> &BTreeSet<String> {
        &self.t2
    }

    pub fn t3(&self) -> &BTreeSet<String> {
        &self.t3
    }
}

fn format_set(f: &mut fmt::Formatter<'_>, s: &BTreeSet<String>) -> fmt::Result {
    write!(f, "{{")?;
    for (i, x) in s.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "}}")
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_set(f, &self.t1)?;
        write!(f, " _|_ ")?;
        format_set(f, &self.t2)?;
        write!(f, " | ")?;
        format_set(f, &self.t3)
    }
}

/// Role of a vertex on a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColliderStatus {
    Collider,
    NonCollider,
    Endpoint,
}

/// Collider test: an interior vertex with arrowheads on both incident path
/// edges.
pub fn collider_status(p: &Path, v: &str) -> Result<ColliderStatus> {
    let Some(i) = p.position(v) else {
        return Err(Error::Invalid(format!("vertex {v} not on path")));
    };
    if i == 0 || i + 1 == p.vertices().len() {
        return Ok(ColliderStatus::Endpoint);
    }
    let into = p.steps()[i - 1].arrowhead_at_next();
    let back = p.steps()[i].arrowhead_at_prev();
    Ok(if into && back {
        ColliderStatus::Collider
    } else {
        ColliderStatus::NonCollider
    })
}

fn require_disjoint(sets: &[&BTreeSet<String>]) -> Result<()> {
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if let Some(shared) = sets[i].intersection(sets[j]).next() {
                return Err(Error::OverlappingSets(format!(
                    "query sets share {shared}"
                )));
            }
        }
    }
    Ok(())
}

fn require_class(g: &MixedGraph, expected: &'static str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ClassMismatch {
            expected,
            actual: g.classify(),
        })
    }
}

/// Undirected separation: every path from A to C meets Z.
pub fn ug_separated(
    g: &MixedGraph,
    a: &BTreeSet<String>,
    c: &BTreeSet<String>,
    z: &BTreeSet<String>,
) -> Result<bool> {
    require_class(g, "undirected graph", g.classify().is_undirected())?;
    require_disjoint(&[a, c, z])?;
    let mut blocked = vec![false; g.vertex_count()];
    for l in z {
        blocked[g.index_of(l)?] = true;
    }
    let mut seen = vec![false; g.vertex_count()];
    let mut queue = VecDeque::new();
    for l in a {
        let i = g.index_of(l)?;
        seen[i] = true;
        queue.push_back(i);
    }
    let targets: Vec<usize> = c.iter().map(|l| g.index_of(l)).collect::<Result<_>>()?;
    while let Some(v) = queue.pop_front() {
        for u in g.neighbors(v) {
            if seen[u] || blocked[u] {
                continue;
            }
            seen[u] = true;
            queue.push_back(u);
        }
    }
    Ok(!targets.into_iter().any(|t| seen[t]))
}

/// Walk-reachability test for a connecting path given Z. A transition
/// through v is legal when v, as a collider, lies in ant(Z), or, as a
/// noncollider, lies outside Z. Sound for both d- and m-separation since
/// ant = an on fully directed graphs.
fn arrow_connected(
    g: &MixedGraph,
    x: &BTreeSet<String>,
    y: &BTreeSet<String>,
    z: &BTreeSet<String>,
) -> Result<bool> {
    let mut in_z = vec![false; g.vertex_count()];
    for l in z {
        in_z[g.index_of(l)?] = true;
    }
    let mut in_ant_z = vec![false; g.vertex_count()];
    for l in g.anteriors(z)? {
        in_ant_z[g.index_of(&l)?] = true;
    }
    let mut target = vec![false; g.vertex_count()];
    for l in y {
        target[g.index_of(l)?] = true;
    }

    // State: (vertex, arrived with an arrowhead at it).
    let mut seen = vec![false; 2 * g.vertex_count()];
    let mut queue: VecDeque<(usize, bool)> = VecDeque::new();
    for l in x {
        let s = g.index_of(l)?;
        for &ei in g.incident(s) {
            let e = &g.edges()[ei];
            let u = e.other(s);
            let state = (u, e.arrowhead_at(u));
            if !seen[2 * state.0 + state.1 as usize] {
                seen[2 * state.0 + state.1 as usize] = true;
                queue.push_back(state);
            }
        }
    }

    while let Some((v, head_in)) = queue.pop_front() {
        if target[v] {
            return Ok(true);
        }
        for &ei in g.incident(v) {
            let e = &g.edges()[ei];
            let collider = head_in && e.arrowhead_at(v);
            let legal = if collider { in_ant_z[v] } else { !in_z[v] };
            if !legal {
                continue;
            }
            let u = e.other(v);
            let state = (u, e.arrowhead_at(u));
            if !seen[2 * state.0 + state.1 as usize] {
                seen[2 * state.0 + state.1 as usize] = true;
                queue.push_back(state);
            }
        }
    }
    Ok(false)
}

/// d-separation on a DAG: no path with all noncolliders outside Z and all
/// colliders inside an(Z).
pub fn d_separated(
    g: &MixedGraph,
    x: &BTreeSet<String>,
    y: &BTreeSet<String>,
    z: &BTreeSet<String>,
) -> Result<bool> {
    require_class(g, "DAG", g.is_dag_structure())?;
    require_disjoint(&[x, y, z])?;
    Ok(!arrow_connected(g, x, y, z)?)
}

/// m-separation on a MAG (or DAG): as d-separation with ant(Z) in place of
/// an(Z).
pub fn m_separated(
    g: &MixedGraph,
    x: &BTreeSet<String>,
    y: &BTreeSet<String>,
    z: &BTreeSet<String>,
) -> Result<bool> {
    require_class(g, "MAG or DAG", g.is_ancestral_structure())?;
    require_disjoint(&[x, y, z])?;
    Ok(!arrow_connected(g, x, y, z)?)
}

/// Conditioning an undirected model on Z: the induced subgraph on the
/// complement carries exactly the conditioned independences.
pub fn condition_model(g: &MixedGraph, z: &BTreeSet<String>) -> Result<MixedGraph> {
    require_class(g, "undirected graph", g.classify().is_undirected())?;
    let keep: BTreeSet<String> = g
        .labels()
        .iter()
        .filter(|l| !z.contains(*l))
        .cloned()
        .collect();
    for l in z {
        g.index_of(l)?;
    }
    g.induced_subgraph(&keep)
}

/// Separation under the criterion matching the graph's class.
pub fn separation_oracle(g: &MixedGraph, t: &Triple) -> Result<bool> {
    match g.classify() {
        c if c.is_undirected() => ug_separated(g, t.t1(), t.t2(), t.t3()),
        c if c.is_dag() => d_separated(g, t.t1(), t.t2(), t.t3()),
        GraphClass::Mag => m_separated(g, t.t1(), t.t2(), t.t3()),
        actual => Err(Error::ClassMismatch {
            expected: "UG, DAG, or MAG",
            actual,
        }),
    }
}
