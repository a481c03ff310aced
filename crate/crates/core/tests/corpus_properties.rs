//! Cross-module invariants: serialization round-trips, coherence of the
//! covariance oracle under conditioning and rescaling, Markov soundness of
//! the sampler on the fixture corpus, and soundness of certified verdicts
//! against Monte Carlo evaluation.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use common::{
    fixture, label, random_dag, random_mag, random_polytree, random_spd, random_tree, rng,
    small_subsets,
};
use pcorder::engine::{chain_compare, Query, Relation, Rho2};
use pcorder::gaussian::sem_covariance;
use pcorder::graph::{GraphClass, MixedGraph};
use pcorder::separation::d_separated;
use pcorder::tree::tree_compare_conditionates;
use pcorder::verify::{monte_carlo_check, orient_from_root, sample_sem_params, trial_seed, Claim};
use proptest::prelude::*;
use rand::Rng;

fn graphs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../graphs")
}

fn corpus() -> Vec<(String, MixedGraph)> {
    let mut names: Vec<String> = fs::read_dir(graphs_dir())
        .expect("graphs directory")
        .filter_map(|entry| {
            let name = entry.expect("directory entry").file_name();
            let name = name.to_string_lossy().into_owned();
            name.ends_with(".graph").then_some(name)
        })
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), fixture(&n))).collect()
}

fn assert_same_graph(context: &str, g: &MixedGraph, h: &MixedGraph) {
    assert_eq!(g.labels(), h.labels(), "{context}: labels differ");
    assert_eq!(g.edges(), h.edges(), "{context}: edges differ");
}

#[test]
fn corpus_files_round_trip_through_the_serializer() {
    for (name, g) in corpus() {
        let back = MixedGraph::parse(&g.to_file_string()).expect("reparse");
        assert_same_graph(&name, &g, &back);
        assert_eq!(g.classify(), back.classify(), "{name}: class drifted");
    }
}

#[test]
fn corpus_markov_soundness_of_the_sem_sampler() {
    // Every d-separation in a corpus DAG must show up as a numerically exact
    // conditional independence in any covariance sampled for that DAG.
    for (name, g) in corpus() {
        if !matches!(g.classify(), GraphClass::Dag | GraphClass::Polytree) || g.vertex_count() > 8
        {
            continue;
        }
        let labels: Vec<String> = g.labels().to_vec();
        for t in 0..5u64 {
            let params = sample_sem_params(&g, trial_seed(7000, t));
            let sigma = sem_covariance(&g, &params).expect("sampled SEM covariance");
            for i in 0..labels.len() {
                for j in i + 1..labels.len() {
                    let xs = BTreeSet::from([labels[i].clone()]);
                    let ys = BTreeSet::from([labels[j].clone()]);
                    let rest: Vec<String> = labels
                        .iter()
                        .filter(|l| **l != labels[i] && **l != labels[j])
                        .cloned()
                        .collect();
                    for zs in small_subsets(&rest, 2) {
                        if d_separated(&g, &xs, &ys, &zs).expect("d-separation query") {
                            assert!(
                                sigma.numeric_ci(&xs, &ys, &zs, 1e-9).expect("numeric CI"),
                                "{name}: {xs:?} vs {ys:?} given {zs:?} d-separated but correlated"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn certified_verdicts_survive_monte_carlo_on_random_trees() {
    let mut r = rng(4242);
    let mut certified = 0u32;
    for case in 0..100u64 {
        let n = r.gen_range(4..=9);
        let g = random_tree(n, &mut r);
        let a = label(r.gen_range(0..n));
        let c = loop {
            let c = label(r.gen_range(0..n));
            if c != a {
                break c;
            }
        };
        let mut pool: Vec<String> = (0..n).map(label).filter(|l| *l != a && *l != c).collect();
        for i in (1..pool.len()).rev() {
            pool.swap(i, r.gen_range(0..=i));
        }
        let k1 = r.gen_range(0..=2.min(pool.len()));
        let k2 = r.gen_range(0..=2.min(pool.len().saturating_sub(k1)));
        let z1: BTreeSet<String> = pool[..k1].iter().cloned().collect();
        let z2: BTreeSet<String> = pool[k1..k1 + k2].iter().cloned().collect();

        let tree_verdict = tree_compare_conditionates(&g, &a, &c, &z1, &z2).expect("tree rule");
        let query = Query::new(&a, &c, z1.clone(), z2.clone()).expect("query");
        let engine_verdict = chain_compare(&g, &query).expect("engine");

        let oriented = orient_from_root(&g, &a).expect("orientation");
        for relation in [tree_verdict.relation, engine_verdict.relation] {
            if !matches!(relation, Relation::Le | Relation::Ge | Relation::Eq) {
                continue;
            }
            certified += 1;
            let claim = Claim::new(
                Rho2::new(&a, &c, z1.clone()),
                Rho2::new(&a, &c, z2.clone()),
                relation,
            )
            .expect("claim");
            let mc = monte_carlo_check(&oriented, &claim, 60, 9000 + case).expect("mc");
            assert_eq!(
                mc.violations, 0,
                "case {case}: certified {relation:?} for rho2({a},{c}|{z1:?}) vs {z2:?} violated, \
                 worst margin {:?}",
                mc.worst_margin
            );
        }
    }
    assert!(certified > 60, "only {certified} certified verdicts; property ran near-vacuously");
}

#[test]
fn joint_separation_from_an_ancestor_pair_reduces_to_the_descendant() {
    // On a polytree, if a is an ancestor of c then every marginally active
    // path from z to a extends to c, so {a,c} and {c} have the same
    // unconditional separations.
    let mut r = rng(515);
    let mut checked = 0u32;
    for _ in 0..200 {
        let n = r.gen_range(3..=10);
        let g = random_polytree(n, &mut r);
        for a in g.labels() {
            let down = g
                .labels()
                .iter()
                .filter(|c| **c != *a)
                .filter(|c| {
                    g.ancestors(&BTreeSet::from([(*c).clone()]))
                        .expect("ancestor query")
                        .contains(a)
                })
                .cloned()
                .collect::<Vec<String>>();
            for c in down {
                for z in g.labels() {
                    if *z == *a || *z == c {
                        continue;
                    }
                    let zs = BTreeSet::from([z.clone()]);
                    let pair = BTreeSet::from([a.clone(), c.clone()]);
                    let solo = BTreeSet::from([c.clone()]);
                    let empty = BTreeSet::new();
                    assert_eq!(
                        d_separated(&g, &pair, &zs, &empty).expect("pair query"),
                        d_separated(&g, &solo, &zs, &empty).expect("solo query"),
                        "ancestor {a}, descendant {c}, z {z}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 500, "only {checked} ancestor pairs exercised");
}

#[test]
fn monte_carlo_reports_are_reproducible_per_seed() {
    let g = fixture("fig1c.graph");
    let claim = Claim::new(
        Rho2::new("a", "c", BTreeSet::from(["z".to_string()])),
        Rho2::new("a", "c", BTreeSet::new()),
        Relation::Le,
    )
    .expect("claim");
    let first = monte_carlo_check(&g, &claim, 200, 31).expect("mc");
    let second = monte_carlo_check(&g, &claim, 200, 31).expect("mc");
    assert_eq!(first, second);
    let other = monte_carlo_check(&g, &claim, 200, 32).expect("mc");
    assert_ne!(first.worst_margin, other.worst_margin);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_graphs_round_trip_through_the_serializer(
        seed in any::<u64>(),
        n in 2usize..12,
        kind in 0usize..4,
    ) {
        let mut r = rng(seed);
        let g = match kind {
            0 => random_dag(n, 0.4, &mut r),
            1 => random_mag(n, 0.3, 0.3, &mut r),
            2 => random_polytree(n, &mut r),
            _ => random_tree(n, &mut r),
        };
        let text = g.to_file_string();
        let back = MixedGraph::parse(&text).expect("reparse");
        assert_same_graph("random graph", &g, &back);
        prop_assert_eq!(back.to_file_string(), text);
    }

    #[test]
    fn conditioning_composes_through_the_schur_complement(
        seed in any::<u64>(),
        dim in 4usize..9,
    ) {
        // rho2(a,c | B union Z) computed on the full matrix must match
        // rho2(a,c | Z) computed after absorbing B by Schur complement.
        let mut r = rng(seed);
        let sigma = random_spd(dim, &mut r);
        let mut b = BTreeSet::new();
        let mut z = BTreeSet::new();
        for i in 2..dim {
            if r.gen_bool(0.5) {
                b.insert(label(i));
            } else if r.gen_bool(0.5) {
                z.insert(label(i));
            }
        }
        let both: BTreeSet<String> = b.union(&z).cloned().collect();
        let direct = sigma
            .partial_correlation_sq(&label(0), &label(1), &both)
            .expect("direct rho2");
        let kept: BTreeSet<String> =
            sigma.labels().iter().filter(|l| !b.contains(*l)).cloned().collect();
        let reduced = sigma.schur_conditional(&kept, &b).expect("schur");
        let staged = reduced
            .partial_correlation_sq(&label(0), &label(1), &z)
            .expect("staged rho2");
        prop_assert!(
            (direct - staged).abs() <= 1e-12,
            "direct {direct} vs staged {staged} with B={b:?}, Z={z:?}"
        );
    }

    #[test]
    fn correlation_rescaling_preserves_every_rho2(
        seed in any::<u64>(),
        dim in 3usize..8,
    ) {
        let mut r = rng(seed);
        let sigma = random_spd(dim, &mut r);
        let scaled = sigma.normalize_to_correlation();
        let labels: Vec<String> = sigma.labels().to_vec();
        for (i, a) in labels.iter().enumerate() {
            for c in labels.iter().skip(i + 1) {
                let rest: Vec<String> = labels
                    .iter()
                    .filter(|l| *l != a && *l != c)
                    .cloned()
                    .collect();
                for zs in small_subsets(&rest, 2) {
                    let before = sigma.partial_correlation_sq(a, c, &zs).expect("rho2");
                    let after = scaled.partial_correlation_sq(a, c, &zs).expect("rho2");
                    prop_assert!(
                        (before - after).abs() <= 1e-12,
                        "rho2({a},{c}|{zs:?}) moved from {before} to {after}"
                    );
                }
            }
        }
    }
}
