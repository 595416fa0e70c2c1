//! Metrics checked against slow, independent recomputations over the raw
//! edge list.

use std::collections::{BTreeMap, BTreeSet};

use callnet::fixtures::{self, key};
use callnet::metrics::{
    all_function_reach, api_call_counts, call_based_view, coexistence_bloat, dependency_counts, function_reach,
    metadata_view, spearman, MetricsError,
};
use callnet::synth::{generate, Span, SynthSpec};
use callnet::{build_cdn, Cdn, FeatureSelection, ReleaseKey, ResolvedTree, VersionPolicy};
use proptest::prelude::*;

const PATH_BUDGET: usize = 200_000;

/// Functions lying on some simple call path that starts at a root function
/// and only enters functions of the tree's releases. `None` when the number
/// of explored paths exceeds the budget.
fn enumerate_paths(cdn: &Cdn, tree: &ResolvedTree) -> Option<BTreeSet<String>> {
    let release = |id: &str| cdn.node(id).and_then(|n| n.release());
    let allowed = |id: &str| release(id).is_some_and(|r| tree.nodes.contains(&r));
    let edges: Vec<(&str, &str)> = cdn.edges.iter().map(|e| (e.caller.as_str(), e.callee.as_str())).collect();

    fn walk<'a>(
        at: &'a str,
        edges: &[(&'a str, &'a str)],
        allowed: &dyn Fn(&str) -> bool,
        path: &mut Vec<&'a str>,
        seen: &mut BTreeSet<String>,
        budget: &mut usize,
    ) -> bool {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        seen.insert(at.to_owned());
        path.push(at);
        for &(a, b) in edges {
            if a == at && allowed(b) && !path.contains(&b) && !walk(b, edges, allowed, path, seen, budget) {
                return false;
            }
        }
        path.pop();
        true
    }

    let mut seen = BTreeSet::new();
    let mut budget = PATH_BUDGET;
    for id in cdn.nodes.nodes.keys() {
        if release(id.as_str()).as_ref() == Some(&tree.root)
            && !walk(id.as_str(), &edges, &allowed, &mut Vec::new(), &mut seen, &mut budget)
        {
            return None;
        }
    }
    Some(seen)
}

fn metadata_sets(tree: &ResolvedTree) -> (BTreeSet<ReleaseKey>, BTreeSet<ReleaseKey>) {
    let direct: BTreeSet<ReleaseKey> = tree
        .children
        .get(&tree.root)
        .into_iter()
        .flatten()
        .map(|c| c.node.clone())
        .filter(|n| *n != tree.root)
        .collect();
    let transitive = tree.nodes.iter().filter(|n| **n != tree.root && !direct.contains(*n)).cloned().collect();
    (direct, transitive)
}

struct Expected {
    direct: BTreeSet<ReleaseKey>,
    transitive: BTreeSet<ReleaseKey>,
    direct_calls: usize,
    transitive_calls: usize,
}

fn oracle(cdn: &Cdn, tree: &ResolvedTree) -> Option<Expected> {
    let reached = enumerate_paths(cdn, tree)?;
    let (meta_direct, meta_transitive) = metadata_sets(tree);
    let release = |id: &str| cdn.node(id).and_then(|n| n.release());
    let package = |id: &str| cdn.node(id).map(|n| n.package.clone());
    let in_tree = |id: &str| release(id).is_some_and(|r| tree.nodes.contains(&r));
    let is_root = |id: &str| release(id).as_ref() == Some(&tree.root);

    let mut direct = BTreeSet::new();
    let mut direct_calls = 0;
    let mut transitive_calls = 0;
    for e in &cdn.edges {
        let (a, b) = (e.caller.as_str(), e.callee.as_str());
        let rb = release(b);
        if is_root(a) {
            if let Some(r) = rb.as_ref().filter(|_| in_tree(b)) {
                direct.insert(r.clone());
            }
            if rb.as_ref().is_some_and(|r| meta_direct.contains(r) && *r != tree.root) {
                direct_calls += 1;
            }
        }
        let inter = match (release(a), rb.clone()) {
            (Some(x), Some(y)) => x != y,
            _ => package(a) != package(b),
        };
        if reached.contains(a) && inter && rb.as_ref().is_some_and(|r| meta_transitive.contains(r)) {
            transitive_calls += 1;
        }
    }
    let reached_releases: BTreeSet<ReleaseKey> = reached.iter().filter_map(|id| release(id)).collect();
    Some(Expected {
        direct: meta_direct.intersection(&direct).cloned().collect(),
        transitive: meta_transitive.intersection(&reached_releases).cloned().collect(),
        direct_calls,
        transitive_calls,
    })
}

fn synth(seed: u64, packages: usize) -> callnet::synth::SynthFixture {
    generate(&SynthSpec {
        packages,
        versions: Span::new(1, 3),
        fan_out: Span::new(0, 3.min(packages - 1)),
        functions: Span::new(2, 6),
        edge_density: 1.2,
        api_call_probability: 0.5,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn call_based_view_and_api_calls_match_path_enumeration(seed in any::<u64>(), packages in 2usize..14) {
        let fx = synth(seed, packages);
        let at = *fx.timestamps.last().unwrap();
        let build = build_cdn(&fx.index, at, &fx.store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default);
        let (cdn, trees) = (&build.cdn, &build.network.trees);
        let view = call_based_view(cdn, trees);
        let meta = metadata_view(trees);
        let mut checked = 0;
        for (name, tree) in trees {
            let Some(expected) = oracle(cdn, tree) else { continue };
            checked += 1;
            let got = &view.roots[name];
            prop_assert_eq!(&got.direct, &expected.direct, "direct deps of {}", name);
            prop_assert_eq!(&got.transitive, &expected.transitive, "transitive deps of {}", name);
            prop_assert_eq!(api_call_counts(cdn, trees, name).unwrap(), (expected.direct_calls, expected.transitive_calls));
            let (cd, ct) = dependency_counts(&view, name).unwrap();
            let (md, mt) = dependency_counts(&meta, name).unwrap();
            prop_assert!(cd <= md && ct <= mt);
        }
        prop_assert!(checked * 2 >= trees.len(), "path budget too small: {} of {}", checked, trees.len());
    }

    #[test]
    fn function_reach_routes_agree(seed in any::<u64>(), packages in 2usize..25) {
        let fx = synth(seed, packages);
        let at = *fx.timestamps.last().unwrap();
        let build = build_cdn(&fx.index, at, &fx.store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default);
        let all = all_function_reach(&build.cdn);
        prop_assert_eq!(all.len(), build.cdn.nodes.len());
        for (id, r) in &all {
            prop_assert_eq!(*r, function_reach(&build.cdn, id.as_str()).unwrap(), "{}", id);
            prop_assert!((0.0..=1.0).contains(r));
        }
    }

    #[test]
    fn spearman_matches_naive_average_ranks(values in prop::collection::vec((0i32..8, 0i32..8), 2..40)) {
        let xs: Vec<f64> = values.iter().map(|v| v.0 as f64).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.1 as f64).collect();
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|x| {
                    let below = v.iter().filter(|y| *y < x).count() as f64;
                    let equal = v.iter().filter(|y| *y == x).count() as f64;
                    below + (equal + 1.0) / 2.0
                })
                .collect()
        };
        let (rx, ry) = (rank(&xs), rank(&ys));
        let n = rx.len() as f64;
        let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        match spearman(&xs, &ys) {
            Ok(rho) => {
                prop_assert!(vx > 0.0 && vy > 0.0);
                prop_assert!((rho - cov / (vx * vy).sqrt()).abs() < 1e-9, "{} vs {}", rho, cov / (vx * vy).sqrt());
            }
            Err(MetricsError::ConstantSeries) => prop_assert!(vx == 0.0 || vy == 0.0),
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }
}

#[test]
fn spearman_rejects_bad_input() {
    assert!(matches!(spearman(&[1.0, 2.0], &[1.0]), Err(MetricsError::LengthMismatch { .. })));
    assert!(spearman(&[1.0], &[2.0]).is_err());
}

#[test]
fn coexisting_log_versions_are_half_bloat() {
    let fx = fixtures::duplicate_constraints("0.5.*");
    let build = build_cdn(&fx.index, fx.at, &fx.store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default);
    let report = coexistence_bloat(&build.cdn, &build.network.trees["app"]);
    // x::run, y::run, log 0.4.6 info, log 0.5.5 info
    assert_eq!((report.duplicated, report.total), (2, 4));
    assert_eq!(report.percentage, 50.0);
    assert_eq!(report.root, key("app", "1.0.0"));

    let merged = fixtures::duplicate_constraints("=0.4.4");
    let build = build_cdn(&merged.index, merged.at, &merged.store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default);
    assert_eq!(coexistence_bloat(&build.cdn, &build.network.trees["app"]).duplicated, 0);
}

#[test]
fn figure2_views_differ_only_where_calls_are_missing() {
    let fx = fixtures::figure2();
    let build = build_cdn(&fx.index, fx.at, &fx.store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default);
    let trees: BTreeMap<String, ResolvedTree> = build.network.trees.clone();
    let meta = metadata_view(&trees);
    let call = call_based_view(&build.cdn, &trees);
    assert_eq!(dependency_counts(&meta, "App").unwrap(), (1, 1));
    assert_eq!(dependency_counts(&call, "App").unwrap(), (1, 1));
    assert_eq!(api_call_counts(&build.cdn, &trees, "App").unwrap(), (1, 1));
}
