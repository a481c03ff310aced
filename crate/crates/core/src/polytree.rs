//! Effect classification for adding one conditioning vertex on polytrees,
//! and junction location on a directed trunk from observed effect signs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, GraphBuilder, GraphClass, MixedGraph, PathResult};
use crate::separation::d_separated;

/// Direction of the change in rho2(a,c|b,z) relative to rho2(a,c|b).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increases,
    Decreases,
    NoEffect,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Increases => "Increases",
            Direction::Decreases => "Decreases",
            Direction::NoEffect => "NoEffect",
        })
    }
}

/// Which case of the classification fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    Cond1,
    Cond2,
    Degenerate,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::Cond1 => "Cond1",
            CaseTag::Cond2 => "Cond2",
            CaseTag::Degenerate => "Degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModselCase {
    pub direction: Direction,
    pub case_tag: CaseTag,
}

impl fmt::Display for ModselCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.direction, self.case_tag)
    }
}

fn one(l: &str) -> BTreeSet<String> {
    [l.to_string()].into()
}

fn require_polytree(g: &MixedGraph) -> Result<()> {
    let class = g.classify();
    if class != GraphClass::Polytree {
        return Err(Error::ClassMismatch {
            expected: "Polytree",
            actual: class,
        });
    }
    Ok(())
}

/// Classifies whether conditioning on z (on top of the collider b) raises
/// or lowers rho2(a,c|b) for a polytree with a upstream of c upstream of b.
/// When b is an ancestor of z the added vertex carries no new information
/// and the quantity is unchanged.
pub fn modsel_classify(g: &MixedGraph, a: &str, c: &str, b: &str, z: &str) -> Result<ModselCase> {
    require_polytree(g)?;
    for l in [a, c, b, z] {
        g.index_of(l)?;
    }
    if a == c || a == b || c == b {
        return Err(Error::Invalid("a, c, b must be distinct".to_string()));
    }
    if z == a || z == c || z == b {
        return Err(Error::Invalid(format!("z = {z} coincides with a role vertex")));
    }
    if !g.ancestors(&one(c))?.contains(a) {
        return Err(Error::Premise(format!("{a} is not an ancestor of {c}")));
    }
    if !g.ancestors(&one(b))?.contains(c) {
        return Err(Error::Premise(format!("{c} is not an ancestor of {b}")));
    }
    if g.ancestors(&one(z))?.contains(b) {
        return Ok(ModselCase {
            direction: Direction::NoEffect,
            case_tag: CaseTag::Degenerate,
        });
    }
    let empty = BTreeSet::new();
    let a_sep = d_separated(g, &one(a), &one(z), &empty)?;
    let c_sep = d_separated(g, &one(c), &one(z), &empty)?;
    if a_sep && !c_sep {
        Ok(ModselCase {
            direction: Direction::Increases,
            case_tag: CaseTag::Cond1,
        })
    } else {
        Ok(ModselCase {
            direction: Direction::Decreases,
            case_tag: CaseTag::Cond2,
        })
    }
}

/// Observed sign of rho2(a,p|b,z) - rho2(a,p|b) at one probe p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
            Sign::Zero => "0",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            "0" => Ok(Sign::Zero),
            other => Err(Error::Parse {
                line: 0,
                msg: format!("sign must be +, - or 0, got {other:?}"),
            }),
        }
    }
}

impl From<Direction> for Sign {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Increases => Sign::Plus,
            Direction::Decreases => Sign::Minus,
            Direction::NoEffect => Sign::Zero,
        }
    }
}

/// Result of junction location: the trunk segment the branch attaches to,
/// or evidence inconsistent with every candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocateOutcome {
    Segment(String, String),
    Contradiction,
}

impl fmt::Display for LocateOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocateOutcome::Segment(u, v) => write!(f, "segment({u},{v})"),
            LocateOutcome::Contradiction => f.write_str("contradiction"),
        }
    }
}

fn fresh_label(g: &MixedGraph, base: &str, taken: &BTreeSet<String>) -> String {
    let mut l = base.to_string();
    while g.index_of(&l).is_ok() || taken.contains(&l) {
        l.push('_');
    }
    l
}

/// Rebuilds the skeleton with the trunk edge (u, v) subdivided by a
/// junction vertex fed by a new branch vertex.
fn attach_candidate(
    g: &MixedGraph,
    u: &str,
    v: &str,
    junction: &str,
    branch: &str,
) -> Result<MixedGraph> {
    let mut builder = GraphBuilder::new();
    for l in g.labels() {
        builder.vertex(l);
    }
    builder.vertex(junction);
    builder.vertex(branch);
    for e in g.edges() {
        let (t, h) = (g.label(e.tail), g.label(e.head));
        if t == u && h == v {
            continue;
        }
        builder.edge(t, h, e.kind)?;
    }
    builder.edge(u, junction, EdgeKind::Directed)?;
    builder.edge(junction, v, EdgeKind::Directed)?;
    builder.edge(branch, junction, EdgeKind::Directed)?;
    Ok(builder.build())
}

/// Locates the trunk segment where an unobserved branch feeds in, from the
/// signs the branch's conditioning vertex induces at the probes. Each
/// candidate segment predicts every probe's sign through the effect
/// classification; exactly one consistent candidate names the segment,
/// none is a contradiction, and several leave the junction unbracketed.
pub fn locate_junction(
    g: &MixedGraph,
    probes: &[(String, Sign)],
    a: &str,
    b: &str,
) -> Result<LocateOutcome> {
    require_polytree(g)?;
    g.index_of(a)?;
    g.index_of(b)?;
    if probes.is_empty() {
        return Err(Error::Invalid("no probes supplied".to_string()));
    }
    let trunk = match g.unique_path(a, b)? {
        PathResult::Unique(p) => p,
        _ => return Err(Error::Invalid(format!("no path from {a} to {b}"))),
    };
    if trunk
        .steps()
        .iter()
        .any(|s| s.kind != EdgeKind::Directed || !s.toward_next)
    {
        return Err(Error::Premise(format!(
            "path({a},{b}) is not directed from {a} toward {b}"
        )));
    }
    let mut seen = BTreeSet::new();
    for (p, _) in probes {
        g.index_of(p)?;
        if p == a || p == b {
            return Err(Error::Invalid(format!("probe {p} is an endpoint")));
        }
        if !trunk.contains(p) {
            return Err(Error::Invalid(format!("probe {p} is not on path({a},{b})")));
        }
        if !seen.insert(p.clone()) {
            return Err(Error::Invalid(format!("duplicate probe {p}")));
        }
    }

    let junction = fresh_label(g, "junction", &BTreeSet::new());
    let branch = fresh_label(g, "tributary", &[junction.clone()].into());
    let mut consistent = Vec::new();
    for w in trunk.vertices().windows(2) {
        let candidate = attach_candidate(g, &w[0], &w[1], &junction, &branch)?;
        let mut ok = true;
        for (p, observed) in probes {
            let predicted: Sign = modsel_classify(&candidate, a, p, b, &branch)?
                .direction
                .into();
            if predicted != *observed {
                ok = false;
                break;
            }
        }
        if ok {
            consistent.push((w[0].clone(), w[1].clone()));
        }
    }
    match consistent.len() {
        0 => Ok(LocateOutcome::Contradiction),
        1 => {
            let (u, v) = consistent.remove(0);
            Ok(LocateOutcome::Segment(u, v))
        }
        _ => Err(Error::Premise(
            "several attachment segments are consistent; the junction is not bracketed"
                .to_string(),
        )),
    }
}

/// Parses a probes CSV: optional `probe,sign` header, then one
/// `label,sign` row per probe with sign in {+, -, 0}.
pub fn parse_probes(text: &str) -> Result<Vec<(String, Sign)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line == "probe,sign") {
            continue;
        }
        let (label, sign) = line.split_once(',').ok_or(Error::Parse {
            line: i + 1,
            msg: "expected label,sign".to_string(),
        })?;
        let sign = sign.trim().parse::<Sign>().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("sign must be +, - or 0, got {:?}", sign.trim()),
        })?;
        out.push((label.trim().to_string(), sign));
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no probe rows".to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MixedGraph;

    fn river() -> MixedGraph {
        MixedGraph::parse("dag\na -> c\nc -> d\nd -> e\ne -> b\n").unwrap()
    }

    #[test]
    fn classify_all_three_cases() {
        // z feeds the trunk between a and c: upstream probes blocked at the
        // junction collider, downstream probes correlated.
        let g = MixedGraph::parse("dag\na -> x\nx -> c\nc -> b\nz -> x\n").unwrap();
        let up = modsel_classify(&g, "a", "c", "b", "z").unwrap();
        assert_eq!(up.direction, Direction::Increases);
        assert_eq!(up.case_tag, CaseTag::Cond1);

        // z upstream of a: both correlates depend on it.
        let g2 = MixedGraph::parse("dag\nz -> a\na -> c\nc -> b\n").unwrap();
        let c2 = modsel_classify(&g2, "a", "c", "b", "z").unwrap();
        assert_eq!(c2.direction, Direction::Decreases);
        assert_eq!(c2.case_tag, CaseTag::Cond2);

        // z a second parent of b: independent of both correlates.
        let g3 = MixedGraph::parse("dag\na -> c\nc -> b\nz -> b\n").unwrap();
        let c3 = modsel_classify(&g3, "a", "c", "b", "z").unwrap();
        assert_eq!(c3.direction, Direction::Decreases);

        // z downstream of b adds nothing.
        let g4 = MixedGraph::parse("dag\na -> c\nc -> b\nb -> z\n").unwrap();
        let c4 = modsel_classify(&g4, "a", "c", "b", "z").unwrap();
        assert_eq!(c4.direction, Direction::NoEffect);
        assert_eq!(c4.case_tag, CaseTag::Degenerate);
    }

    #[test]
    fn classify_precondition_errors() {
        let g = river();
        assert!(matches!(
            modsel_classify(&g, "c", "a", "b", "d"),
            Err(Error::Premise(_))
        ));
        let ug = MixedGraph::parse("ug\na -- c\nc -- b\n").unwrap();
        assert!(matches!(
            modsel_classify(&ug, "a", "c", "b", "c"),
            Err(Error::ClassMismatch { .. })
        ));
    }

    #[test]
    fn locate_brackets_the_junction() {
        let g = river();
        let probes = vec![
            (String::from("c"), Sign::Minus),
            (String::from("d"), Sign::Plus),
            (String::from("e"), Sign::Plus),
        ];
        let out = locate_junction(&g, &probes, "a", "b").unwrap();
        assert_eq!(
            out,
            LocateOutcome::Segment(String::from("c"), String::from("d"))
        );
    }

    #[test]
    fn locate_contradictions() {
        let g = river();
        let zeros = vec![
            (String::from("c"), Sign::Zero),
            (String::from("d"), Sign::Zero),
        ];
        assert_eq!(
            locate_junction(&g, &zeros, "a", "b").unwrap(),
            LocateOutcome::Contradiction
        );
        let flipped = vec![
            (String::from("c"), Sign::Plus),
            (String::from("d"), Sign::Minus),
        ];
        assert_eq!(
            locate_junction(&g, &flipped, "a", "b").unwrap(),
            LocateOutcome::Contradiction
        );
    }

    #[test]
    fn locate_unbracketed_is_an_error() {
        // With only one probe showing +, every upstream segment fits.
        let g = MixedGraph::parse("dag\na -> u\nu -> c\nc -> b\n").unwrap();
        let probes = vec![(String::from("c"), Sign::Plus)];
        assert!(matches!(
            locate_junction(&g, &probes, "a", "b"),
            Err(Error::Premise(_))
        ));
    }

    #[test]
    fn locate_all_minus_picks_the_last_segment() {
        let g = river();
        let probes = vec![
            (String::from("c"), Sign::Minus),
            (String::from("d"), Sign::Minus),
            (String::from("e"), Sign::Minus),
        ];
        assert_eq!(
            locate_junction(&g, &probes, "a", "b").unwrap(),
            LocateOutcome::Segment(String::from("e"), String::from("b"))
        );
    }

    #[test]
    fn probes_csv_round_trip() {
        let text = "probe,sign\nc,-\nd,+\ne,+\n";
        let probes = parse_probes(text).unwrap();
        assert_eq!(probes.len(), 3);
        assert_eq!(probes[0], (String::from("c"), Sign::Minus));
        assert!(parse_probes("c;+\n").is_err());
        assert!(parse_probes("probe,sign\n").is_err());
    }
}
