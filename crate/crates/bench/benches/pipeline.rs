use std::hint::black_box;

use callnet::export::{write_cdn_edges, write_cdn_nodes};
use callnet::metrics::{all_function_reach_in, call_based_view_in, CallIndex};
use callnet::{build_cdn, package_network, validate, Constraint, FeatureSelection, Version, VersionPolicy};
use callnet_bench::{ecosystem, latest};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn semver(c: &mut Criterion) {
    let reqs: Vec<Constraint> = ["^1.2", "~0.4.1", ">=1.0.0, <2.0.0", "0.3.*", "=1.4.2"]
        .iter()
        .map(|r| Constraint::parse(r).unwrap())
        .collect();
    let versions: Vec<Version> = (0..4)
        .flat_map(|a| (0..6).flat_map(move |b| (0..6).map(move |p| Version::new(a, b, p))))
        .collect();
    c.bench_function("constraint_matches_720", |b| {
        b.iter(|| {
            let mut hits = 0;
            for r in &reqs {
                for v in &versions {
                    hits += r.matches(black_box(v)) as usize;
                }
            }
            hits
        })
    });
}

fn resolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("package_network");
    for packages in [50, 200] {
        let fx = ecosystem(packages);
        let at = latest(&fx);
        group.throughput(Throughput::Elements(packages as u64));
        group.bench_with_input(BenchmarkId::from_parameter(packages), &fx, |b, fx| {
            b.iter(|| package_network(&fx.index, at, VersionPolicy::LatestPerPackage, &FeatureSelection::Default))
        });
    }
    group.finish();

    let fx = ecosystem(200);
    c.bench_function("validate_200", |b| b.iter(|| validate(black_box(&fx.index))));
}

fn unify(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_cdn");
    group.sample_size(10);
    for packages in [50, 200] {
        let fx = ecosystem(packages);
        let at = latest(&fx);
        group.bench_with_input(BenchmarkId::from_parameter(packages), &fx, |b, fx| {
            b.iter(|| build_cdn(&fx.index, at, &fx.store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default))
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let fx = ecosystem(200);
    let build = build_cdn(&fx.index, latest(&fx), &fx.store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default);
    let index = CallIndex::new(&build.cdn);
    let mut group = c.benchmark_group("metrics_200");
    group.sample_size(20);
    group.bench_function("call_index", |b| b.iter(|| CallIndex::new(black_box(&build.cdn))));
    group.bench_function("call_based_view", |b| b.iter(|| call_based_view_in(&index, &build.network.trees)));
    group.bench_function("all_function_reach", |b| b.iter(|| all_function_reach_in(&index)));
    group.bench_function("export_cdn", |b| {
        b.iter(|| {
            let (mut nodes, mut edges) = (Vec::new(), Vec::new());
            write_cdn_nodes(&build.cdn, &mut nodes).unwrap();
            write_cdn_edges(&build.cdn, &mut edges).unwrap();
            nodes.len() + edges.len()
        })
    });
    group.finish();
}

criterion_group!(benches, semver, resolve, unify, metrics);
criterion_main!(benches);
