//! Pivot-based comparison rules behind a common trait, registered by name
//! and selectable at runtime.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::graph::MixedGraph;
use crate::separation::{separation_oracle, Triple};

use super::{ProofStep, Relation, Rho2, Verdict};

/// Premise backend: graphical separation, or numeric conditional
/// independence at a tolerance.
pub enum PremiseOracle<'a> {
    Structural(&'a MixedGraph),
    Numeric(&'a CovarianceMatrix, f64),
}

/// Outcome of one premise test.
pub enum PremiseCheck {
    /// Holds; carries the reduced triple that witnessed it.
    Holds(Triple),
    /// Holds trivially: reduction emptied one side.
    Vacuous,
    Fails,
}

impl PremiseCheck {
    pub fn passed(&self) -> bool {
        !matches!(self, PremiseCheck::Fails)
    }

    pub fn witness(self) -> Option<Triple> {
        match self {
            PremiseCheck::Holds(t) => Some(t),
            _ => None,
        }
    }
}

impl PremiseOracle<'_> {
    /// Tests T1 _|_ T2 | T3 after dropping members of T3 from both sides;
    /// an emptied side holds vacuously. The reduction keeps degenerate
    /// pivot choices (x = z, x = a) inside the theorems' proofs.
    pub fn check(
        &self,
        t1: &BTreeSet<String>,
        t2: &BTreeSet<String>,
        t3: &BTreeSet<String>,
    ) -> Result<PremiseCheck> {
        let r1: BTreeSet<String> = t1.difference(t3).cloned().collect();
        let r2: BTreeSet<String> = t2.difference(t3).cloned().collect();
        if r1.is_empty() || r2.is_empty() {
            return Ok(PremiseCheck::Vacuous);
        }
        let triple = Triple::new(r1, r2, t3.clone())?;
        let ok = match self {
            PremiseOracle::Structural(g) => separation_oracle(g, &triple)?,
            PremiseOracle::Numeric(s, tol) => {
                s.numeric_ci(triple.t1(), triple.t2(), triple.t3(), *tol)?
            }
        };
        Ok(if ok {
            PremiseCheck::Holds(triple)
        } else {
            PremiseCheck::Fails
        })
    }

    /// Re-verifies an emitted trace triple.
    pub fn verify_triple(&self, t: &Triple) -> Result<bool> {
        match self {
            PremiseOracle::Structural(g) => separation_oracle(g, t),
            PremiseOracle::Numeric(s, tol) => s.numeric_ci(t.t1(), t.t2(), t.t3(), *tol),
        }
    }
}

/// Inputs to a pivot rule: compare rho2(a,c|B,z) against rho2(a,c|B),
/// optionally through the middle quantity rho2(a,c|B,z').
#[derive(Debug, Clone)]
pub struct RuleArgs {
    pub a: String,
    pub c: String,
    pub x: String,
    pub b: BTreeSet<String>,
    pub z: String,
    pub zprime: Option<String>,
}

impl RuleArgs {
    /// The pivot x may coincide with a, c, z, or z' (degenerate cases the
    /// proofs cover); it may not sit inside B, and B stays disjoint from
    /// the named vertices.
    pub fn new(
        a: &str,
        c: &str,
        x: &str,
        b: &BTreeSet<String>,
        z: &str,
        zprime: Option<&str>,
    ) -> Result<RuleArgs> {
        if a == c {
            return Err(Error::Invalid(format!("correlates coincide: {a}")));
        }
        if z == a || z == c {
            return Err(Error::OverlappingSets(format!(
                "z = {z} collides with a correlate"
            )));
        }
        if let Some(zp) = zprime {
            if zp == a || zp == c || zp == z {
                return Err(Error::OverlappingSets(format!(
                    "z' = {zp} collides with another named vertex"
                )));
            }
        }
        for v in [a, c, z, x].into_iter().chain(zprime) {
            if b.contains(v) {
                return Err(Error::OverlappingSets(format!("B contains {v}")));
            }
        }
        Ok(RuleArgs {
            a: a.to_string(),
            c: c.to_string(),
            x: x.to_string(),
            b: b.clone(),
            z: z.to_string(),
            zprime: zprime.map(str::to_string),
        })
    }

    fn one(l: &str) -> BTreeSet<String> {
        [l.to_string()].into()
    }

    fn pair(l: &str, r: &str) -> BTreeSet<String> {
        [l.to_string(), r.to_string()].into()
    }

    fn with(s: &BTreeSet<String>, extra: &str) -> BTreeSet<String> {
        let mut out = s.clone();
        out.insert(extra.to_string());
        out
    }

    /// rho2(a,c|B) with optional extra conditioning vertex.
    fn quantity(&self, extra: Option<&str>) -> Rho2 {
        let mut given = self.b.clone();
        if let Some(e) = extra {
            given.insert(e.to_string());
        }
        Rho2::new(&self.a, &self.c, given)
    }

    fn step(&self, rule: &'static str, detail: Option<String>, triples: Vec<Triple>) -> ProofStep {
        ProofStep {
            rule,
            pivot: Some(self.x.clone()),
            b_set: self.b.clone(),
            detail,
            triples,
        }
    }
}

/// A theorem-backed comparison strategy. `apply` returns `None` when its
/// premises cannot be discharged.
pub trait ComparisonRule: Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, oracle: &PremiseOracle, args: &RuleArgs) -> Result<Option<Verdict>>;
}

/// Checks the z' hand-off premise shared by the increasing rules and the
/// degenerate sigma(z,z'|B) = 0 collapse. Returns the leg relation between
/// rho2(a,c|B) and rho2(a,c|B,z') plus trace material, or None when the
/// hand-off fails.
fn zprime_leg(
    oracle: &PremiseOracle,
    args: &RuleArgs,
    zp: &str,
    handoff: &Triple2,
) -> Result<Option<(Relation, Option<String>, Vec<Triple>)>> {
    let p = oracle.check(&handoff.t1, &handoff.t2, &handoff.t3)?;
    if !p.passed() {
        return Ok(None);
    }
    let mut triples: Vec<Triple> = p.witness().into_iter().collect();
    let degen = oracle.check(&RuleArgs::one(&args.z), &RuleArgs::one(zp), &args.b)?;
    if let PremiseCheck::Holds(t) = degen {
        triples.push(t);
        Ok(Some((
            Relation::Eq,
            Some("sigma(z,z'|B) = 0: the z' quantity collapses".to_string()),
            triples,
        )))
    } else {
        Ok(Some((Relation::Le, None, triples)))
    }
}

/// Three label sets forming a premise before reduction.
struct Triple2 {
    t1: BTreeSet<String>,
    t2: BTreeSet<String>,
    t3: BTreeSet<String>,
}

/// Decreasing rule: a _|_ c | xB and ac _|_ z | xB give
/// rho2(a,c|Bz) <= rho2(a,c|Bz') <= rho2(a,c|B), the middle leg under
/// ac _|_ z' | zB. Valid on the B-conditional model, hence the B argument.
pub struct T2Rule;

impl ComparisonRule for T2Rule {
    fn name(&self) -> &'static str {
        "t2"
    }

    fn apply(&self, oracle: &PremiseOracle, args: &RuleArgs) -> Result<Option<Verdict>> {
        let xb = RuleArgs::with(&args.b, &args.x);
        let p1 = oracle.check(&RuleArgs::one(&args.a), &RuleArgs::one(&args.c), &xb)?;
        if !p1.passed() {
            return Ok(None);
        }
        let ac = RuleArgs::pair(&args.a, &args.c);
        let p2 = oracle.check(&ac, &RuleArgs::one(&args.z), &xb)?;
        if !p2.passed() {
            return Ok(None);
        }
        let mut triples: Vec<Triple> =
            [p1, p2].into_iter().filter_map(PremiseCheck::witness).collect();

        match args.zprime.as_deref() {
            None => {
                let chain = vec![(args.quantity(Some(&args.z)), Relation::Le, args.quantity(None))];
                let step = args.step("t2", None, triples);
                Ok(Some(Verdict::certified(chain, vec![step])))
            }
            Some(zp) => {
                let handoff = Triple2 {
                    t1: ac,
                    t2: RuleArgs::one(zp),
                    t3: RuleArgs::with(&args.b, &args.z),
                };
                let Some((upper_rel, detail, mut extra)) = zprime_leg(oracle, args, zp, &handoff)?
                else {
                    return Ok(None);
                };
                triples.append(&mut extra);
                let chain = vec![
                    (args.quantity(Some(&args.z)), Relation::Le, args.quantity(Some(zp))),
                    (args.quantity(Some(zp)), upper_rel, args.quantity(None)),
                ];
                let step = args.step("t2", detail, triples);
                Ok(Some(Verdict::certified(chain, vec![step])))
            }
        }
    }
}

/// Increasing rule: a _|_ c and ac _|_ zB | x give
/// rho2(a,c|B) <= rho2(a,c|Bz') <= rho2(a,c|Bz), the z' leg under
/// z' _|_ acB | z.
pub struct T3Rule;

impl ComparisonRule for T3Rule {
    fn name(&self) -> &'static str {
        "t3"
    }

    fn apply(&self, oracle: &PremiseOracle, args: &RuleArgs) -> Result<Option<Verdict>> {
        let empty = BTreeSet::new();
        let p1 = oracle.check(&RuleArgs::one(&args.a), &RuleArgs::one(&args.c), &empty)?;
        if !p1.passed() {
            return Ok(None);
        }
        let ac = RuleArgs::pair(&args.a, &args.c);
        let zb = RuleArgs::with(&args.b, &args.z);
        let p2 = oracle.check(&ac, &zb, &RuleArgs::one(&args.x))?;
        if !p2.passed() {
            return Ok(None);
        }
        let mut triples: Vec<Triple> =
            [p1, p2].into_iter().filter_map(PremiseCheck::witness).collect();

        increasing_chain(oracle, args, "t3", None, &mut triples)
    }
}

/// Shared tail of the increasing rules: assembles either the single leg
/// rho2(a,c|B) <= rho2(a,c|Bz) or the three-term chain through z'.
fn increasing_chain(
    oracle: &PremiseOracle,
    args: &RuleArgs,
    rule: &'static str,
    detail: Option<String>,
    triples: &mut Vec<Triple>,
) -> Result<Option<Verdict>> {
    match args.zprime.as_deref() {
        None => {
            let chain = vec![(args.quantity(None), Relation::Le, args.quantity(Some(&args.z)))];
            let step = args.step(rule, detail, std::mem::take(triples));
            Ok(Some(Verdict::certified(chain, vec![step])))
        }
        Some(zp) => {
            let mut acb = RuleArgs::pair(&args.a, &args.c);
            acb.extend(args.b.iter().cloned());
            let handoff = Triple2 {
                t1: RuleArgs::one(zp),
                t2: acb,
                t3: RuleArgs::one(&args.z),
            };
            let Some((lower_rel, degen_detail, mut extra)) = zprime_leg(oracle, args, zp, &handoff)?
            else {
                return Ok(None);
            };
            triples.append(&mut extra);
            let detail = match (detail, degen_detail) {
                (Some(d), Some(e)) => Some(format!("{d}; {e}")),
                (d, e) => d.or(e),
            };
            let chain = vec![
                (args.quantity(None), lower_rel, args.quantity(Some(zp))),
                (args.quantity(Some(zp)), Relation::Le, args.quantity(Some(&args.z))),
            ];
            let step = args.step(rule, detail, std::mem::take(triples));
            Ok(Some(Verdict::certified(chain, vec![step])))
        }
    }
}

/// Increasing rule driven by a _|_ z: either condition (i), c _|_ az plus
/// one of six B-screening clauses, or condition (ii), az _|_ cB | x. With
/// empty B under (i) all compared quantities vanish and the chain is an
/// equality.
pub struct T4Rule;

impl ComparisonRule for T4Rule {
    fn name(&self) -> &'static str {
        "t4"
    }

    fn apply(&self, oracle: &PremiseOracle, args: &RuleArgs) -> Result<Option<Verdict>> {
        let empty = BTreeSet::new();
        let p1 = oracle.check(&RuleArgs::one(&args.a), &RuleArgs::one(&args.z), &empty)?;
        if !p1.passed() {
            return Ok(None);
        }
        let mut triples: Vec<Triple> = p1.witness().into_iter().collect();
        let mut fired: Vec<String> = Vec::new();

        let az = RuleArgs::pair(&args.a, &args.z);
        let cz = RuleArgs::pair(&args.c, &args.z);
        let ac = RuleArgs::pair(&args.a, &args.c);
        let x1 = RuleArgs::one(&args.x);

        // Condition (i): c _|_ az, then any screening clause for B.
        let ci = oracle.check(&RuleArgs::one(&args.c), &az, &empty)?;
        let mut cond_i = false;
        if ci.passed() {
            let screens: [(&str, &BTreeSet<String>, BTreeSet<String>); 6] = [
                ("(i)(a)", &az, x1.clone()),
                ("(i)(b)", &az, RuleArgs::with(&x1, &args.c)),
                ("(i)(c)", &cz, x1.clone()),
                ("(i)(d)", &cz, RuleArgs::with(&x1, &args.a)),
                ("(i)(e)", &ac, x1.clone()),
                ("(i)(f)", &ac, RuleArgs::with(&x1, &args.z)),
            ];
            let mut screen_triples = Vec::new();
            for (tag, t1, t3) in screens {
                if args.b.is_empty() {
                    // Vacuous screening; condition (i) reduces to c _|_ az.
                    cond_i = true;
                    break;
                }
                let p = oracle.check(t1, &args.b, &t3)?;
                if let PremiseCheck::Holds(t) = p {
                    fired.push(tag.to_string());
                    screen_triples.push(t);
                    cond_i = true;
                }
            }
            if cond_i {
                if args.b.is_empty() {
                    fired.push("(i)".to_string());
                }
                triples.extend(ci.witness());
                triples.extend(screen_triples);
            }
        }

        // Condition (ii): az _|_ cB | x.
        let mut cb = RuleArgs::one(&args.c);
        cb.extend(args.b.iter().cloned());
        let cii = oracle.check(&az, &cb, &x1)?;
        let cond_ii = cii.passed();
        if cond_ii {
            fired.push("(ii)".to_string());
            triples.extend(cii.witness());
        }

        if !cond_i && !cond_ii {
            return Ok(None);
        }
        let mut detail = format!("condition {}", fired.join(","));

        // Empty B under (i): every compared quantity is zero.
        if cond_i && args.b.is_empty() {
            detail.push_str("; all compared quantities are zero");
            let chain = match args.zprime.as_deref() {
                None => vec![(args.quantity(None), Relation::Eq, args.quantity(Some(&args.z)))],
                Some(zp) => {
                    let mut acb = ac.clone();
                    acb.extend(args.b.iter().cloned());
                    let handoff = Triple2 {
                        t1: RuleArgs::one(zp),
                        t2: acb,
                        t3: RuleArgs::one(&args.z),
                    };
                    let Some((_, _, mut extra)) = zprime_leg(oracle, args, zp, &handoff)? else {
                        return Ok(None);
                    };
                    triples.append(&mut extra);
                    vec![
                        (args.quantity(None), Relation::Eq, args.quantity(Some(zp))),
                        (args.quantity(Some(zp)), Relation::Eq, args.quantity(Some(&args.z))),
                    ]
                }
            };
            let step = args.step("t4", Some(detail), triples);
            return Ok(Some(Verdict::certified(chain, vec![step])));
        }

        increasing_chain(oracle, args, "t4", Some(detail), &mut triples)
    }
}

/// Registry of the pivot rules, tried in declaration order.
pub struct RuleRegistry {
    rules: Vec<Box<dyn ComparisonRule>>,
}

impl RuleRegistry {
    pub fn standard() -> RuleRegistry {
        RuleRegistry {
            rules: vec![Box::new(T2Rule), Box::new(T3Rule), Box::new(T4Rule)],
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn ComparisonRule> {
        self.rules
            .iter()
            .find(|r| r.name() == name)
            .map(AsRef::as_ref)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.rules.iter().map(|r| r.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn ComparisonRule> {
        self.rules.iter().map(AsRef::as_ref)
    }
}
