//! Mixed graphs: typed edges, file parsing, classification, traversal.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Edge type in a mixed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Undirected,
    Directed,
    Bidirected,
}

/// Single edge; at most one per unordered vertex pair.
/// For `Directed` the orientation is `tail -> head`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub kind: EdgeKind,
}

impl Edge {
    /// True when this edge carries an arrowhead at endpoint `v`.
    pub fn arrowhead_at(&self, v: usize) -> bool {
        match self.kind {
            EdgeKind::Undirected => false,
            EdgeKind::Bidirected => true,
            EdgeKind::Directed => self.head == v,
        }
    }

    /// The endpoint opposite to `v`.
    pub fn other(&self, v: usize) -> usize {
        if self.tail == v {
            self.head
        } else {
            self.tail
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.tail == v || self.head == v
    }
}

/// Most specific structural class of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphClass {
    UndirectedGraph,
    Tree,
    Forest,
    Dag,
    Polytree,
    Mag,
    Invalid,
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphClass::UndirectedGraph => "UndirectedGraph",
            GraphClass::Tree => "Tree",
            GraphClass::Forest => "Forest",
            GraphClass::Dag => "DAG",
            GraphClass::Polytree => "Polytree",
            GraphClass::Mag => "MAG",
            GraphClass::Invalid => "Invalid",
        };
        f.write_str(s)
    }
}

impl GraphClass {
    /// Undirected classes, where every edge is `--`.
    pub fn is_undirected(self) -> bool {
        matches!(
            self,
            GraphClass::UndirectedGraph | GraphClass::Tree | GraphClass::Forest
        )
    }

    /// Fully directed acyclic classes.
    pub fn is_dag(self) -> bool {
        matches!(self, GraphClass::Dag | GraphClass::Polytree)
    }
}

/// One step along a path: edge kind plus, for directed edges, whether the
/// arrow points toward the next vertex of the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub kind: EdgeKind,
    pub toward_next: bool,
}

impl PathStep {
    /// Arrowhead at the vertex the step leads into.
    pub fn arrowhead_at_next(&self) -> bool {
        match self.kind {
            EdgeKind::Undirected => false,
            EdgeKind::Bidirected => true,
            EdgeKind::Directed => self.toward_next,
        }
    }

    /// Arrowhead at the vertex the step leaves.
    pub fn arrowhead_at_prev(&self) -> bool {
        match self.kind {
            EdgeKind::Undirected => false,
            EdgeKind::Bidirected => true,
            EdgeKind::Directed => !self.toward_next,
        }
    }
}

/// Simple path with endpoints first and last; membership treats it as the
/// vertex subset pi(x,y) including endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    vertices: Vec<String>,
    steps: Vec<PathStep>,
}

impl Path {
    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn contains(&self, label: &str) -> bool {
        self.vertices.iter().any(|v| v == label)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == label)
    }
}

/// Outcome of a unique-path query.
#[derive(Debug, Clone, PartialEq)]
pub enum PathResult {
    Unique(Path),
    NotUnique,
    NoPath,
}

/// Incremental construction; vertices keep first-appearance order.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a vertex; idempotent.
    pub fn vertex(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    /// Adds an edge, registering endpoints as needed.
    pub fn edge(&mut self, tail: &str, head: &str, kind: EdgeKind) -> Result<()> {
        if tail == head {
            return Err(Error::Invalid(format!("self-loop at {tail}")));
        }
        let t = self.vertex(tail);
        let h = self.vertex(head);
        if self
            .edges
            .iter()
            .any(|e| e.touches(t) && e.touches(h))
        {
            return Err(Error::Invalid(format!(
                "duplicate edge between {tail} and {head}"
            )));
        }
        self.edges.push(Edge {
            tail: t,
            head: h,
            kind,
        });
        Ok(())
    }

    pub fn build(self) -> MixedGraph {
        let mut adj = vec![Vec::new(); self.labels.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.tail].push(i);
            adj[e.head].push(i);
        }
        MixedGraph {
            labels: self.labels,
            index: self.index,
            edges: self.edges,
            adj,
        }
    }
}

/// Vertex-labelled mixed graph. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MixedGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl PartialEq for MixedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.edges == other.edges
    }
}

impl MixedGraph {
    /// Parses the graph file format: a class hint line `ug | dag | mag`,
    /// then edge lines `A -- B`, `A -> B`, `A <-> B` and isolated-vertex
    /// lines `node A`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<MixedGraph> {
        let mut builder = GraphBuilder::new();
        let mut hint: Option<&str> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }

            let Some(hint) = hint else {
                hint = Some(match line {
                    "ug" | "dag" | "mag" => line,
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("expected class hint ug|dag|mag, found {line:?}"),
                        })
                    }
                });
                continue;
            };

            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["node", label] => {
                    check_label(label, lineno)?;
                    builder.vertex(label);
                }
                [a, op, b] => {
                    check_label(a, lineno)?;
                    check_label(b, lineno)?;
                    let kind = match *op {
                        "--" => EdgeKind::Undirected,
                        "->" => EdgeKind::Directed,
                        "<->" => EdgeKind::Bidirected,
                        _ => {
                            return Err(Error::Parse {
                                line: lineno,
                                msg: format!("unknown edge operator {op:?}"),
                            })
                        }
                    };
                    let allowed = match hint {
                        "ug" => kind == EdgeKind::Undirected,
                        "dag" => kind == EdgeKind::Directed,
                        _ => true,
                    };
                    if !allowed {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("edge kind {op:?} not allowed under hint {hint:?}"),
                        });
                    }
                    builder.edge(a, b, kind).map_err(|e| Error::Parse {
                        line: lineno,
                        msg: e.to_string(),
                    })?;
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("cannot parse line {line:?}"),
                    })
                }
            }
        }

        if hint.is_none() {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file: expected class hint ug|dag|mag".into(),
            });
        }
        Ok(builder.build())
    }

    /// Serializes back to the file format; `parse` of the output
    /// reconstructs an equal graph.
    pub fn to_file_string(&self) -> String {
        let has = |k: EdgeKind| self.edges.iter().any(|e| e.kind == k);
        let hint = if has(EdgeKind::Bidirected) || (has(EdgeKind::Directed) && has(EdgeKind::Undirected)) {
            "mag"
        } else if has(EdgeKind::Directed) {
            "dag"
        } else {
            "ug"
        };
        let mut out = String::from(hint);
        out.push('\n');
        for label in &self.labels {
            out.push_str("node ");
            out.push_str(label);
            out.push('\n');
        }
        for e in &self.edges {
            let op = match e.kind {
                EdgeKind::Undirected => "--",
                EdgeKind::Directed => "->",
                EdgeKind::Bidirected => "<->",
            };
            out.push_str(&format!("{} {} {}\n", self.labels[e.tail], op, self.labels[e.head]));
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Edge indices incident to `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Skeleton neighbours of `v`, in edge insertion order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(move |&i| self.edges[i].other(v))
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<&Edge> {
        self.adj[u]
            .iter()
            .map(|&i| &self.edges[i])
            .find(|e| e.touches(v))
    }

    /// Parents: u with u -> v.
    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.adj[v]
            .iter()
            .map(|&i| &self.edges[i])
            .filter(|e| e.kind == EdgeKind::Directed && e.head == v)
            .map(|e| e.tail)
            .collect()
    }

    /// Children: u with v -> u.
    pub fn children(&self, v: usize) -> Vec<usize> {
        self.adj[v]
            .iter()
            .map(|&i| &self.edges[i])
            .filter(|e| e.kind == EdgeKind::Directed && e.tail == v)
            .map(|e| e.head)
            .collect()
    }

    /// Spouses: u with u <-> v.
    pub fn spouses(&self, v: usize) -> Vec<usize> {
        self.adj[v]
            .iter()
            .map(|&i| &self.edges[i])
            .filter(|e| e.kind == EdgeKind::Bidirected)
            .map(|e| e.other(v))
            .collect()
    }

    /// Undirected neighbours: u with u -- v.
    pub fn undirected_neighbors(&self, v: usize) -> Vec<usize> {
        self.adj[v]
            .iter()
            .map(|&i| &self.edges[i])
            .filter(|e| e.kind == EdgeKind::Undirected)
            .map(|e| e.other(v))
            .collect()
    }

    fn resolve_set(&self, labels: &BTreeSet<String>) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l)).collect()
    }

    /// Usable as a DAG: every edge directed, no directed cycle.
    /// Edgeless graphs qualify.
    pub fn is_dag_structure(&self) -> bool {
        self.edges.iter().all(|e| e.kind == EdgeKind::Directed) && !self.has_directed_cycle()
    }

    /// Satisfies the ancestral conditions: no vertex anterior to its parents
    /// or spouses, and no vertex with both neighbours and parents/spouses.
    /// Holds for every DAG and UG; fails on directed cycles.
    pub fn is_ancestral_structure(&self) -> bool {
        self.is_ancestral()
    }

    /// Most specific structural class. Never errors: structural defects
    /// classify as `Invalid`.
    pub fn classify(&self) -> GraphClass {
        let has = |k: EdgeKind| self.edges.iter().any(|e| e.kind == k);
        let directed = has(EdgeKind::Directed);
        let undirected = has(EdgeKind::Undirected);
        let bidirected = has(EdgeKind::Bidirected);

        if bidirected || (directed && undirected) {
            return if self.is_ancestral() {
                GraphClass::Mag
            } else {
                GraphClass::Invalid
            };
        }
        if directed {
            if self.has_directed_cycle() {
                return GraphClass::Invalid;
            }
            return if self.skeleton_connected() && self.edges.len() + 1 == self.labels.len() {
                GraphClass::Polytree
            } else {
                GraphClass::Dag
            };
        }
        if self.skeleton_cyclic() {
            GraphClass::UndirectedGraph
        } else if self.skeleton_connected() {
            GraphClass::Tree
        } else {
            GraphClass::Forest
        }
    }

    fn skeleton_connected(&self) -> bool {
        if self.labels.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.labels.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.labels.len()
    }

    fn skeleton_cyclic(&self) -> bool {
        // Simple graph: a cycle exists iff some component has >= as many
        // edges as vertices; detected by BFS with parent-edge exclusion.
        let mut seen = vec![false; self.labels.len()];
        for start in 0..self.labels.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([(start, usize::MAX)]);
            while let Some((v, via)) = queue.pop_front() {
                for &i in &self.adj[v] {
                    if i == via {
                        continue;
                    }
                    let u = self.edges[i].other(v);
                    if seen[u] {
                        return true;
                    }
                    seen[u] = true;
                    queue.push_back((u, i));
                }
            }
        }
        false
    }

    fn has_directed_cycle(&self) -> bool {
        // DFS colouring over directed edges only.
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; self.labels.len()];
        for start in 0..self.labels.len() {
            if color[start] != WHITE {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = GRAY;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                let children = self.children(v);
                if *next < children.len() {
                    let u = children[*next];
                    *next += 1;
                    match color[u] {
                        GRAY => return true,
                        WHITE => {
                            color[u] = GRAY;
                            stack.push((u, 0));
                        }
                        _ => {}
                    }
                } else {
                    color[v] = BLACK;
                    stack.pop();
                }
            }
        }
        false
    }

    fn is_ancestral(&self) -> bool {
        for v in 0..self.labels.len() {
            let mut pa_sp: BTreeSet<String> = BTreeSet::new();
            for u in self.parents(v).into_iter().chain(self.spouses(v)) {
                pa_sp.insert(self.labels[u].clone());
            }
            if !pa_sp.is_empty() {
                if !self.undirected_neighbors(v).is_empty() {
                    return false;
                }
                let ant = self
                    .anteriors(&pa_sp)
                    .expect("labels from this graph resolve");
                if ant.contains(&self.labels[v]) {
                    return false;
                }
            }
        }
        true
    }

    /// Single skeleton path between `x` and `y` when one exists.
    /// Edge directions are ignored for connectivity but retained in the path.
    pub fn unique_path(&self, x: &str, y: &str) -> Result<PathResult> {
        let xi = self.index_of(x)?;
        let yi = self.index_of(y)?;
        if xi == yi {
            return Ok(PathResult::Unique(Path {
                vertices: vec![x.to_string()],
                steps: Vec::new(),
            }));
        }

        // Iterative DFS enumerating simple paths, stopping at the second.
        let mut found: Option<Vec<usize>> = None;
        let mut on_path = vec![false; self.labels.len()];
        let mut path = vec![xi];
        on_path[xi] = true;
        let mut cursor = vec![0usize];
        loop {
            let v = *path.last().expect("path never empties before return");
            let c = cursor.last_mut().expect("cursor parallels path");
            if *c < self.adj[v].len() {
                let u = self.edges[self.adj[v][*c]].other(v);
                *c += 1;
                if on_path[u] {
                    continue;
                }
                if u == yi {
                    let mut full = path.clone();
                    full.push(yi);
                    if found.is_some() {
                        return Ok(PathResult::NotUnique);
                    }
                    found = Some(full);
                    continue;
                }
                on_path[u] = true;
                path.push(u);
                cursor.push(0);
            } else {
                on_path[v] = false;
                path.pop();
                cursor.pop();
                if path.is_empty() {
                    break;
                }
            }
        }

        match found {
            None => Ok(PathResult::NoPath),
            Some(vs) => Ok(PathResult::Unique(self.path_from_indices(&vs))),
        }
    }

    fn path_from_indices(&self, vs: &[usize]) -> Path {
        let steps = vs
            .windows(2)
            .map(|w| {
                let e = self
                    .edge_between(w[0], w[1])
                    .expect("consecutive path vertices are adjacent");
                PathStep {
                    kind: e.kind,
                    toward_next: e.kind != EdgeKind::Directed || e.head == w[1],
                }
            })
            .collect();
        Path {
            vertices: vs.iter().map(|&i| self.labels[i].clone()).collect(),
            steps,
        }
    }

    /// Ancestor set an(X): vertices with a directed path to some x in X,
    /// including X itself.
    pub fn ancestors(&self, xs: &BTreeSet<String>) -> Result<BTreeSet<String>> {
        let start = self.resolve_set(xs)?;
        let mut seen = vec![false; self.labels.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for v in start {
            seen[v] = true;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            for u in self.parents(v) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        Ok(self.collect_seen(&seen))
    }

    /// Anterior set ant(X): vertices reaching X along paths whose every edge
    /// is undirected or directed toward X; includes X.
    pub fn anteriors(&self, xs: &BTreeSet<String>) -> Result<BTreeSet<String>> {
        let start = self.resolve_set(xs)?;
        let mut seen = vec![false; self.labels.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for v in start {
            seen[v] = true;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            for u in self
                .parents(v)
                .into_iter()
                .chain(self.undirected_neighbors(v))
            {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        Ok(self.collect_seen(&seen))
    }

    fn collect_seen(&self, seen: &[bool]) -> BTreeSet<String> {
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| self.labels[i].clone())
            .collect()
    }

    /// Subgraph on `w`: vertices keep relative order, edges with both
    /// endpoints in `w` survive with kinds intact.
    pub fn induced_subgraph(&self, w: &BTreeSet<String>) -> Result<MixedGraph> {
        let keep: Vec<usize> = {
            let mut k = self.resolve_set(w)?;
            k.sort_unstable();
            k
        };
        let mut builder = GraphBuilder::new();
        for &v in &keep {
            builder.vertex(&self.labels[v]);
        }
        let in_w: BTreeSet<usize> = keep.into_iter().collect();
        for e in &self.edges {
            if in_w.contains(&e.tail) && in_w.contains(&e.head) {
                builder
                    .edge(&self.labels[e.tail], &self.labels[e.head], e.kind)
                    .expect("edges of a valid graph stay valid");
            }
        }
        Ok(builder.build())
    }
}

fn check_label(label: &str, line: usize) -> Result<()> {
    let bad = label.is_empty()
        || label.contains(',')
        || matches!(label, "--" | "->" | "<->");
    if bad {
        return Err(Error::Parse {
            line,
            msg: format!("bad label {label:?}"),
        });
    }
    Ok(())
}
