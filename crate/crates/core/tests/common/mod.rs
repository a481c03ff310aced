//! Fixture loading, random structure generators, and a brute-force
//! path-enumeration separation oracle kept independent of the library's
//! separation code.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pcorder::gaussian::CovarianceMatrix;
use pcorder::graph::{Edge, EdgeKind, GraphBuilder, MixedGraph};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../graphs")
        .join(name)
}

pub fn fixture(name: &str) -> MixedGraph {
    let text = fs::read_to_string(fixture_path(name))
        .unwrap_or_else(|e| panic!("reading {name}: {e}"));
    MixedGraph::parse(&text).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

pub fn set(labels: &[&str]) -> BTreeSet<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn label(i: usize) -> String {
    format!("v{i}")
}

/// Random labeled tree: vertex i attaches to a uniform earlier vertex.
pub fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> MixedGraph {
    assert!(n >= 2, "a tree needs at least two vertices");
    let mut b = GraphBuilder::new();
    b.vertex(&label(0));
    for i in 1..n {
        let j = rng.gen_range(0..i);
        b.edge(&label(j), &label(i), EdgeKind::Undirected).unwrap();
    }
    b.build()
}

/// Random polytree: tree skeleton with each edge oriented by coin flip.
pub fn random_polytree(n: usize, rng: &mut ChaCha8Rng) -> MixedGraph {
    assert!(n >= 2, "a polytree needs at least two vertices");
    let mut b = GraphBuilder::new();
    b.vertex(&label(0));
    for i in 1..n {
        let j = rng.gen_range(0..i);
        if rng.gen_bool(0.5) {
            b.edge(&label(j), &label(i), EdgeKind::Directed).unwrap();
        } else {
            b.edge(&label(i), &label(j), EdgeKind::Directed).unwrap();
        }
    }
    b.build()
}

/// Random DAG: edge i -> j for i < j with probability p.
pub fn random_dag(n: usize, p: f64, rng: &mut ChaCha8Rng) -> MixedGraph {
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.vertex(&label(i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                b.edge(&label(i), &label(j), EdgeKind::Directed).unwrap();
            }
        }
    }
    b.build()
}

/// Random ancestral mixed graph: a DAG plus bidirected edges between pairs
/// with no directed path either way, which keeps no vertex an ancestor of
/// a spouse.
pub fn random_mag(n: usize, p: f64, q: f64, rng: &mut ChaCha8Rng) -> MixedGraph {
    let mut directed = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                directed.push((i, j));
            }
        }
    }
    let mut reach = vec![vec![false; n]; n];
    for &(i, j) in &directed {
        reach[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.vertex(&label(i));
    }
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(i, j) in &directed {
        used.insert((i, j));
        b.edge(&label(i), &label(j), EdgeKind::Directed).unwrap();
    }
    for i in 0..n {
        for j in i + 1..n {
            if used.contains(&(i, j)) || reach[i][j] || reach[j][i] {
                continue;
            }
            if rng.gen_bool(q) {
                b.edge(&label(i), &label(j), EdgeKind::Bidirected).unwrap();
            }
        }
    }
    b.build()
}

/// Random positive definite covariance, labels v0..v(dim-1).
pub fn random_spd(dim: usize, rng: &mut ChaCha8Rng) -> CovarianceMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..=1.0));
    let m = &a * a.transpose() + DMatrix::identity(dim, dim) * rng.gen_range(0.5..=1.5);
    let labels = (0..dim).map(label).collect();
    CovarianceMatrix::new(labels, m).expect("random SPD construction")
}

/// Anterior closure: walks backwards over directed edges and across
/// undirected ones. Reduces to the ancestor set on a DAG.
fn anterior_closure(g: &MixedGraph, z: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = z.clone();
    let mut frontier: Vec<usize> = z.iter().copied().collect();
    while let Some(v) = frontier.pop() {
        for e in g.edges() {
            let w = match e.kind {
                EdgeKind::Directed if e.head == v => e.tail,
                EdgeKind::Undirected if e.touches(v) => e.other(v),
                _ => continue,
            };
            if out.insert(w) {
                frontier.push(w);
            }
        }
    }
    out
}

fn connecting_dfs(
    g: &MixedGraph,
    v: usize,
    t: usize,
    prev: Option<&Edge>,
    visited: &mut [bool],
    z: &BTreeSet<usize>,
    ant: &BTreeSet<usize>,
) -> bool {
    if v == t {
        return true;
    }
    for e in g.edges() {
        if !e.touches(v) {
            continue;
        }
        let w = e.other(v);
        if visited[w] {
            continue;
        }
        if let Some(pe) = prev {
            let collider = pe.arrowhead_at(v) && e.arrowhead_at(v);
            let open = if collider {
                ant.contains(&v)
            } else {
                !z.contains(&v)
            };
            if !open {
                continue;
            }
        }
        visited[w] = true;
        if connecting_dfs(g, w, t, Some(e), visited, z, ant) {
            return true;
        }
        visited[w] = false;
    }
    false
}

/// Separation by exhaustive simple-path enumeration: a path connects given
/// Z when its noncolliders avoid Z and its colliders sit in the anterior
/// closure of Z. Covers undirected, directed, and mixed ancestral graphs.
pub fn brute_force_separated(
    g: &MixedGraph,
    xs: &BTreeSet<String>,
    ys: &BTreeSet<String>,
    zs: &BTreeSet<String>,
) -> bool {
    let idx = |s: &BTreeSet<String>| -> BTreeSet<usize> {
        s.iter().map(|l| g.index_of(l).unwrap()).collect()
    };
    let (xi, yi, zi) = (idx(xs), idx(ys), idx(zs));
    let ant = anterior_closure(g, &zi);
    for &x in &xi {
        for &y in &yi {
            let mut visited = vec![false; g.vertex_count()];
            visited[x] = true;
            if connecting_dfs(g, x, y, None, &mut visited, &zi, &ant) {
                return false;
            }
        }
    }
    true
}

/// All subsets of `pool` with at most `k` elements.
pub fn small_subsets(pool: &[String], k: usize) -> Vec<BTreeSet<String>> {
    let mut out = vec![BTreeSet::new()];
    for item in pool {
        let take: Vec<BTreeSet<String>> = out
            .iter()
            .filter(|s| s.len() < k)
            .map(|s| {
                let mut t = s.clone();
                t.insert(item.clone());
                t
            })
            .collect();
        out.extend(take);
    }
    out
}
