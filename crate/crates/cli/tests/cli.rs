use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use callnet::callgraph::{write_store_dir, CallGraphStore, Dispatch};
use callnet::fixtures::{self, key, release, GraphBuilder};
use callnet::index::{write_index, write_timestamps};
use callnet::metrics::{
    all_dependent_counts, api_call_counts, call_based_view, call_summary, coexistence_bloat, compare_networks,
    degree_distribution, dependency_counts, dependent_counts, function_reach, metadata_view, reach, Direction, Scope,
    Statistic,
};
use callnet::synth::{generate, Span, SynthSpec};
use callnet::{
    build_cdn, changed_fraction, load_index_files, validate, FeatureSelection, Index, RawCallGraph, ReleaseKey,
    VersionPolicy,
};
use serde_json::{json, Value};
use tempfile::TempDir;

fn callnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_callnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn callnet")
}

fn status(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Paths of a registry written to disk.
struct Registry {
    dir: PathBuf,
}

impl Registry {
    fn write(dir: &Path, index: &Index, raw: &BTreeMap<ReleaseKey, RawCallGraph>) -> Registry {
        fs::create_dir_all(dir).unwrap();
        write_index(index, BufWriter::new(File::create(dir.join("index.jsonl")).unwrap())).unwrap();
        write_timestamps(index, BufWriter::new(File::create(dir.join("timestamps.csv")).unwrap())).unwrap();
        fs::create_dir_all(dir.join("callgraphs")).unwrap();
        write_store_dir(&dir.join("callgraphs"), raw.iter()).unwrap();
        Registry { dir: dir.to_owned() }
    }

    fn index(&self) -> String {
        self.dir.join("index.jsonl").display().to_string()
    }

    fn timestamps(&self) -> String {
        self.dir.join("timestamps.csv").display().to_string()
    }

    fn store(&self) -> String {
        self.dir.join("callgraphs").display().to_string()
    }

    fn load(&self) -> (Index, CallGraphStore) {
        let index = load_index_files(&self.dir.join("index.jsonl"), &self.dir.join("timestamps.csv")).unwrap();
        let (store, issues) = CallGraphStore::load_dir(&self.dir.join("callgraphs"), &index).unwrap();
        assert!(issues.is_empty(), "{issues:?}");
        (index, store)
    }

    fn build(&self, out: &Path, at: &[&str], extra: &[&str]) -> Output {
        let (out, index, timestamps, store) = (out.display().to_string(), self.index(), self.timestamps(), self.store());
        let mut args = vec!["build", "--index", &index, "--timestamps", &timestamps, "--cg-store", &store, "--out", &out];
        for t in at {
            args.extend(["--at", t]);
        }
        args.extend(extra);
        callnet(&args)
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn csv_rows(path: &Path) -> usize {
    csv::Reader::from_path(path).unwrap().records().count()
}

fn figure2_registry(tmp: &TempDir) -> Registry {
    let fx = fixtures::figure2();
    Registry::write(&tmp.path().join("reg"), &fx.index, &fx.raw)
}

fn small_synth(seed: u64) -> callnet::synth::SynthFixture {
    generate(&SynthSpec {
        packages: 25,
        versions: Span::new(1, 3),
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

#[test]
fn validate_clean_fixture_writes_empty_report() {
    let tmp = TempDir::new().unwrap();
    let reg = figure2_registry(&tmp);
    let out = tmp.path().join("out");
    let o = callnet(&["validate", "--index", &reg.index(), "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap(), "--strict"]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        read_json(&out.join("validation.json")),
        json!({ "unknown_dependencies": [], "unsolvable": [] })
    );
}

#[test]
fn validate_lists_unknown_dependency_and_honours_strict() {
    let tmp = TempDir::new().unwrap();
    let index = Index::from_releases([
        release("app", "1.0.0", "2020-01-01", &[("ghost", "1")]),
        release("lib", "1.0.0", "2020-01-01", &[]),
    ])
    .unwrap();
    let reg = Registry::write(&tmp.path().join("reg"), &index, &BTreeMap::new());
    let out = tmp.path().join("out");
    let base = ["validate", "--index", &reg.index(), "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap()];

    assert_eq!(status(&callnet(&base)), 0);
    let report = read_json(&out.join("validation.json"));
    assert_eq!(
        report["unknown_dependencies"],
        json!([{ "release": { "name": "app", "version": "1.0.0" }, "dependency": "ghost" }])
    );

    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(status(&callnet(&strict)), 3);
}

#[test]
fn validate_report_on_large_synth_equals_library() {
    let tmp = TempDir::new().unwrap();
    let fx = generate(&SynthSpec {
        packages: 2_000,
        versions: Span::new(5, 5),
        functions: Span::new(1, 1),
        seed: 11,
        ..SynthSpec::default()
    })
    .unwrap();
    // Dropping every 40th package leaves dangling requirements behind.
    let mut index = fx.index.clone();
    index.retain(|r| r.name.trim_start_matches("pkg").parse::<usize>().unwrap() % 40 != 7);
    assert!(index.release_count() > 9_500);
    let reg = Registry::write(&tmp.path().join("reg"), &index, &BTreeMap::new());
    let out = tmp.path().join("out");
    let o = callnet(&["validate", "--index", &reg.index(), "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap()]);
    assert_eq!(status(&o), 0);

    let (loaded, _) = reg.load();
    let expected = validate(&loaded);
    assert!(!expected.is_empty());
    assert_eq!(read_json(&out.join("validation.json")), serde_json::to_value(&expected).unwrap());
}

#[test]
fn build_figure2_matches_expected_shape() {
    let tmp = TempDir::new().unwrap();
    let reg = figure2_registry(&tmp);
    let out = tmp.path().join("out");
    let o = reg.build(&out, &["2021-01-01"], &["--strict"]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let snap = out.join("20210101T000000Z");
    assert_eq!(csv_rows(&snap.join("cdn_nodes.csv")), 7);
    assert_eq!(csv_rows(&snap.join("cdn_edges.csv")), 5);
    assert_eq!(csv_rows(&snap.join("skipped.csv")), 0);
    let edges = fs::read_to_string(snap.join("cdn_edges.csv")).unwrap();
    assert!(edges.contains("io::crates::Lib1v3.2.0::bar,io::crates::Lib2v0.2.0::used,static"));
    let manifest = read_json(&snap.join("manifest.json"));
    assert_eq!(manifest["pdn"], json!({ "nodes": 3, "edges": 2 }));
    assert_eq!(manifest["cdn"], json!({ "nodes": 7, "edges": 5 }));

    let o = callnet(&["analyze", "--out", out.to_str().unwrap(), "--metrics", "call-summary"]);
    assert_eq!(status(&o), 0);
    let summary = read_json(&snap.join("metrics/call-summary.json"));
    assert_eq!(summary["inter"]["static_calls"], 2);
    assert_eq!(summary["intra"]["static_calls"], 3);
    assert_eq!(summary["functions"], 7);
    assert!(!snap.join("metrics/reach.json").exists());
}

#[test]
fn build_on_empty_index_writes_empty_outputs() {
    let tmp = TempDir::new().unwrap();
    let reg = Registry::write(&tmp.path().join("reg"), &Index::new(), &BTreeMap::new());
    let out = tmp.path().join("out");
    assert_eq!(status(&reg.build(&out, &["2020-01-01"], &["--strict"])), 0);
    let snap = out.join("20200101T000000Z");
    for file in ["pdn_nodes.csv", "pdn_edges.csv", "pdn_trees.csv", "cdn_nodes.csv", "cdn_edges.csv", "skipped.csv"] {
        assert_eq!(csv_rows(&snap.join(file)), 0, "{file}");
    }
    assert_eq!(read_json(&snap.join("manifest.json"))["cdn"], json!({ "nodes": 0, "edges": 0 }));
}

fn tree_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_owned(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn seeded_synth_builds_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let fx = small_synth(5);
    let times: Vec<String> = fx.snapshot_times(3).iter().map(|t| t.to_rfc3339()).collect();
    let at: Vec<&str> = times.iter().map(String::as_str).collect();
    let reg = Registry::write(&tmp.path().join("reg"), &fx.index, &fx.raw);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(status(&reg.build(out, &at, &[])), 0);
        assert_eq!(status(&callnet(&["analyze", "--out", out.to_str().unwrap()])), 0);
    }
    let (fa, fb) = (tree_files(&a), tree_files(&b));
    assert_eq!(fa.len(), 3 * (9 + 9));
    assert!(fa == fb, "outputs differ between reruns");
}

#[test]
fn reach_of_chain_sink_is_one() {
    let tmp = TempDir::new().unwrap();
    let index = Index::from_releases([
        release("a", "1.0.0", "2020-01-03", &[("b", "1")]),
        release("b", "1.0.0", "2020-01-02", &[("c", "1")]),
        release("c", "1.0.0", "2020-01-01", &[]),
    ])
    .unwrap();
    let graph = |pkg: &str, callee: Option<&str>| {
        let mut g = GraphBuilder::new();
        let f = g.func(pkg, "f");
        if let Some(c) = callee {
            let t = g.func(c, "f");
            g.call(f, t, Dispatch::Static);
        }
        g.build()
    };
    let raw = BTreeMap::from([
        (key("a", "1.0.0"), graph("a", Some("b"))),
        (key("b", "1.0.0"), graph("b", Some("c"))),
        (key("c", "1.0.0"), graph("c", None)),
    ]);
    let reg = Registry::write(&tmp.path().join("reg"), &index, &raw);
    let out = tmp.path().join("out");
    assert_eq!(status(&reg.build(&out, &["2021-01-01"], &["--strict"])), 0);
    assert_eq!(status(&callnet(&["analyze", "--out", out.to_str().unwrap(), "--metrics", "reach,dependents"])), 0);
    let reach = read_json(&out.join("20210101T000000Z/metrics/reach.json"));
    for view in ["metadata", "call-based"] {
        assert_eq!(reach[view]["c"], 1.0, "{view}");
        assert_eq!(reach[view]["b"], 0.5, "{view}");
        assert_eq!(reach[view]["a"], 0.0, "{view}");
    }
}

fn views_of(value: &Value) -> [(&'static str, &Value); 2] {
    [("metadata", &value["metadata"]), ("call-based", &value["call-based"])]
}

#[test]
fn analyze_reports_equal_direct_library_calls() {
    let tmp = TempDir::new().unwrap();
    let fx = small_synth(21);
    let reg = Registry::write(&tmp.path().join("reg"), &fx.index, &fx.raw);
    let at = *fx.timestamps.last().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(status(&reg.build(&out, &[&at.to_rfc3339()], &[])), 0);
    assert_eq!(status(&callnet(&["analyze", "--out", out.to_str().unwrap()])), 0);
    let metrics = out.join(at.format("%Y%m%dT%H%M%SZ").to_string()).join("metrics");
    let report = |name: &str| read_json(&metrics.join(format!("{name}.json")));

    let (index, store) = reg.load();
    let build = build_cdn(&index, at, &store, VersionPolicy::LatestPerPackage, &FeatureSelection::Default);
    let (cdn, trees) = (&build.cdn, &build.network.trees);
    assert!(cdn.edges.len() > 20, "fixture too small to be meaningful");
    let meta = metadata_view(trees);
    let call = call_based_view(cdn, trees);
    let view = |name: &str| if name == "metadata" { &meta } else { &call };

    assert_eq!(report("call-summary"), serde_json::to_value(call_summary(cdn)).unwrap());

    let degrees = report("degrees");
    let mut expected = Vec::new();
    for direction in [Direction::In, Direction::Out] {
        for scope in [Scope::All, Scope::InterPackage] {
            for dispatch in [None, Some(Dispatch::Static), Some(Dispatch::Dynamic), Some(Dispatch::Macro)] {
                expected.push(serde_json::to_value(degree_distribution(cdn, direction, dispatch, scope)).unwrap());
            }
        }
    }
    assert_eq!(degrees, Value::Array(expected));

    let deps = report("dependencies");
    for (name, got) in views_of(&deps) {
        let got = got.as_object().unwrap();
        assert_eq!(got.len(), trees.len());
        for (root, v) in got {
            let (d, t) = dependency_counts(view(name), root).unwrap();
            assert_eq!(v, &json!({ "direct": d, "transitive": t }), "{name} {root}");
        }
    }

    let dependents = report("dependents");
    for (name, got) in views_of(&dependents) {
        let got = got.as_object().unwrap();
        let keys: BTreeSet<&String> = got.keys().collect();
        let all = all_dependent_counts(view(name));
        assert_eq!(keys, all.keys().collect());
        for (pkg, v) in got {
            let (d, t) = dependent_counts(view(name), pkg).unwrap();
            assert_eq!(v, &json!({ "direct": d, "total": t }), "{name} {pkg}");
        }
    }

    let reaches = report("reach");
    for (name, got) in views_of(&reaches) {
        for (pkg, v) in got.as_object().unwrap() {
            assert_eq!(v.as_f64().unwrap(), reach(view(name), pkg).unwrap(), "{name} {pkg}");
        }
    }

    let api = report("api-calls");
    assert_eq!(api.as_object().unwrap().len(), trees.len());
    for root in trees.keys() {
        let (d, t) = api_call_counts(cdn, trees, root).unwrap();
        assert_eq!(api[root], json!({ "direct": d, "transitive": t }), "{root}");
    }

    let bloat: Vec<Value> = trees.values().map(|t| serde_json::to_value(coexistence_bloat(cdn, t)).unwrap()).collect();
    assert_eq!(report("bloat"), Value::Array(bloat));

    let freach = report("function-reach");
    let functions = freach["functions"].as_object().unwrap();
    assert_eq!(functions.len(), cdn.nodes.len());
    for (id, v) in functions {
        assert_eq!(v.as_f64().unwrap(), function_reach(cdn, id).unwrap(), "{id}");
    }

    let correlation = report("correlation");
    let stats = [
        Statistic::DirectDependencies,
        Statistic::TransitiveDependencies,
        Statistic::DirectDependents,
        Statistic::TotalDependents,
    ];
    for (row, s) in correlation.as_array().unwrap().iter().zip(stats) {
        match compare_networks(&meta, &call, s) {
            Ok(c) => assert_eq!(row, &serde_json::to_value(c).unwrap()),
            Err(e) => assert_eq!(row["error"], e.to_string()),
        }
    }
}

#[test]
fn diff_identical_instants_reports_nothing() {
    let tmp = TempDir::new().unwrap();
    let reg = Registry::write(&tmp.path().join("reg"), &fixtures::retroactive(), &BTreeMap::new());
    let out = tmp.path().join("out");
    let args = ["diff", "--index", &reg.index(), "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap()];
    let mut same = args.to_vec();
    same.extend(["--at", "2020-03-01", "--at", "2020-03-15"]);
    assert_eq!(status(&callnet(&same)), 0);
    let report = read_json(&out.join("diff_20200301T000000Z_20200315T000000Z.json"));
    assert_eq!(report["changed"], 0);
    assert_eq!(report["roots"], 1);
}

#[test]
fn diff_across_new_release_lists_root() {
    let tmp = TempDir::new().unwrap();
    let reg = Registry::write(&tmp.path().join("reg"), &fixtures::retroactive(), &BTreeMap::new());
    let out = tmp.path().join("out");
    let o = callnet(&[
        "diff", "--index", &reg.index(), "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap(),
        "--at", "2020-03-01", "--at", "2020-05-01",
    ]);
    assert_eq!(status(&o), 0);
    let report = read_json(&out.join("diff_20200301T000000Z_20200501T000000Z.json"));
    assert_eq!(report["changed"], 1);
    assert_eq!(report["fraction"], 1.0);
    let tree = &report["trees"][0];
    assert_eq!(tree["root"], json!({ "name": "A", "version": "1.0.0" }));
    assert_eq!(tree["changes"], json!([{ "package": "B", "before": ["1.1.0"], "after": ["1.2.0"] }]));
}

#[test]
fn diff_fraction_matches_changed_fraction_on_synth() {
    let tmp = TempDir::new().unwrap();
    let fx = small_synth(8);
    let reg = Registry::write(&tmp.path().join("reg"), &fx.index, &BTreeMap::new());
    let (index, _) = reg.load();
    let times = fx.snapshot_times(5);
    let baseline = times[1];
    for later in &times[2..] {
        let out = tmp.path().join("out");
        let o = callnet(&[
            "diff", "--index", &reg.index(), "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap(),
            "--at", &baseline.to_rfc3339(), "--at", &later.to_rfc3339(),
        ]);
        assert_eq!(status(&o), 0);
        let name = format!("diff_{}_{}.json", baseline.format("%Y%m%dT%H%M%SZ"), later.format("%Y%m%dT%H%M%SZ"));
        let got = read_json(&out.join(name))["fraction"].as_f64().unwrap();
        assert_eq!(got, changed_fraction(&index, baseline, &[*later - baseline])[0]);
    }
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let tmp = TempDir::new().unwrap();
    let reg = figure2_registry(&tmp);
    let out = tmp.path().join("out");

    // Unparsable index line.
    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{\"name\": \"x\",\n").unwrap();
    let o = callnet(&["validate", "--index", bad.to_str().unwrap(), "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap()]);
    assert_eq!(status(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    // Instants out of order.
    assert_eq!(status(&reg.build(&out, &["2021-01-01", "2020-01-01"], &[])), 2);
    assert_eq!(status(&reg.build(&out, &["not-a-date"], &[])), 2);

    // Missing input path.
    let o = callnet(&["validate", "--index", "/nonexistent/index.jsonl", "--timestamps", &reg.timestamps(), "--out", out.to_str().unwrap()]);
    assert_eq!(status(&o), 1);

    // A root without a call graph is skipped: fine by default, status 4 when strict.
    let fx = fixtures::figure2();
    let mut raw = fx.raw.clone();
    raw.remove(&key("Lib2", "0.1.0"));
    raw.remove(&key("Lib2", "0.2.0"));
    let partial = Registry::write(&tmp.path().join("partial"), &fx.index, &raw);
    assert_eq!(status(&partial.build(&out, &["2021-01-01"], &[])), 0);
    assert!(csv_rows(&out.join("20210101T000000Z/skipped.csv")) > 0);
    assert_eq!(status(&partial.build(&out, &["2021-01-01"], &["--strict"])), 4);
}

#[test]
fn unknown_metric_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = callnet(&["analyze", "--out", tmp.path().to_str().unwrap(), "--metrics", "reach,bogus"]);
    assert_eq!(status(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown metric"));
}
