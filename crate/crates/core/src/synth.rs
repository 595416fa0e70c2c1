//! Seeded synthetic registries with call graphs, and brute-force oracles for
//! resolution and reachability.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use chrono::Duration;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::callgraph::{write_store_dir, CallGraphStore, Dispatch, RawCallGraph, RawTypeRef, EXTERN_PACKAGE};
use crate::fixtures::{ty, GraphBuilder};
use crate::index::{
    write_index, write_timestamps, DepKind, DependencySpec, Index, Release, ReleaseKey, Timestamp,
};
use crate::resolver::{ResolvedChild, ResolvedTree};
use crate::semver::{CompatClass, Constraint, Version};

/// Environment variable bounding the graph size the closure oracle accepts.
pub const ORACLE_MAX_NODES_VAR: &str = "CALLNET_ORACLE_MAX_NODES";
pub const DEFAULT_ORACLE_MAX_NODES: usize = 5_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("infeasible spec: {0}")]
    Infeasible(String),
}

/// Inclusive integer range sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub min: usize,
    pub max: usize,
}

impl Span {
    pub const fn new(min: usize, max: usize) -> Self {
        Span { min, max }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub packages: usize,
    pub versions: Span,
    /// Dependencies declared per release, capped by the packages available.
    pub fan_out: Span,
    /// Chance a requirement is a range rather than an exact pin.
    pub dynamic_probability: f64,
    pub functions: Span,
    /// Mean intra-package calls per function.
    pub edge_density: f64,
    /// Chance a function calls into a dependency.
    pub api_call_probability: f64,
    /// Relative weights of static, dynamic and macro calls.
    pub dispatch_mix: [f64; 3],
    /// Chance a package declares an interface, and that a dependent
    /// implements one it can see.
    pub interface_density: f64,
    /// Chance a dependency is optional behind an `extra` feature.
    pub optional_probability: f64,
    pub yank_probability: f64,
    pub seed: u64,
    pub start: Timestamp,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            packages: 20,
            versions: Span::new(1, 4),
            fan_out: Span::new(0, 3),
            dynamic_probability: 0.8,
            functions: Span::new(4, 12),
            edge_density: 1.5,
            api_call_probability: 0.3,
            dispatch_mix: [0.8, 0.1, 0.1],
            interface_density: 0.3,
            optional_probability: 0.1,
            yank_probability: 0.0,
            seed: 0,
            start: chrono::DateTime::from_timestamp(1_431_648_000, 0).expect("valid start"),
        }
    }
}

impl SynthSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Desk-scale ecosystem: 500 packages, 5 versions, about 200 functions.
    pub fn scale(seed: u64) -> Self {
        SynthSpec {
            packages: 500,
            versions: Span::new(5, 5),
            fan_out: Span::new(1, 4),
            functions: Span::new(180, 220),
            edge_density: 2.0,
            api_call_probability: 0.1,
            seed,
            ..SynthSpec::default()
        }
    }

    fn check(&self) -> Result<(), SynthError> {
        let probs = [
            ("dynamic_probability", self.dynamic_probability),
            ("api_call_probability", self.api_call_probability),
            ("interface_density", self.interface_density),
            ("optional_probability", self.optional_probability),
            ("yank_probability", self.yank_probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::Invalid(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if self.dispatch_mix.iter().any(|w| !w.is_finite() || *w < 0.0) || self.dispatch_mix.iter().sum::<f64>() <= 0.0 {
            return Err(SynthError::Invalid("dispatch_mix needs non-negative weights with a positive sum".into()));
        }
        if !self.edge_density.is_finite() || self.edge_density < 0.0 {
            return Err(SynthError::Invalid("edge_density must be non-negative".into()));
        }
        for (name, s) in [("versions", self.versions), ("fan_out", self.fan_out), ("functions", self.functions)] {
            if s.min > s.max {
                return Err(SynthError::Invalid(format!("{name}: min {} > max {}", s.min, s.max)));
            }
        }
        if self.packages > 0 && self.versions.min == 0 {
            return Err(SynthError::Invalid("every package needs at least one version".into()));
        }
        if self.packages > 0 && self.fan_out.min >= self.packages {
            return Err(SynthError::Infeasible(format!(
                "fan-out of at least {} with only {} packages",
                self.fan_out.min, self.packages
            )));
        }
        Ok(())
    }
}

/// A generated ecosystem.
#[derive(Debug, Clone)]
pub struct SynthFixture {
    pub index: Index,
    pub raw: BTreeMap<ReleaseKey, RawCallGraph>,
    pub store: CallGraphStore,
    /// Publication times of every release, ascending.
    pub timestamps: Vec<Timestamp>,
}

impl SynthFixture {
    /// `count` snapshot times spread evenly from the first to the last
    /// publication.
    pub fn snapshot_times(&self, count: usize) -> Vec<Timestamp> {
        let (Some(first), Some(last)) = (self.timestamps.first(), self.timestamps.last()) else {
            return Vec::new();
        };
        match count {
            0 => Vec::new(),
            1 => vec![*last],
            n => {
                let span = *last - *first;
                (0..n).map(|i| *first + span * (i as i32) / (n as i32 - 1)).collect()
            }
        }
    }

    /// Writes `index.jsonl`, `timestamps.csv` and `callgraphs/`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("index.jsonl"))?);
        write_index(&self.index, &mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("timestamps.csv"))?);
        write_timestamps(&self.index, &mut w)?;
        w.flush()?;
        write_store_dir(&dir.join("callgraphs"), self.raw.iter())
    }
}

fn package_name(i: usize) -> String {
    format!("pkg{i:04}")
}

fn bump(rng: &mut impl Rng, v: &Version) -> Version {
    let roll: f64 = rng.gen();
    if roll < 0.6 {
        Version::new(v.major, v.minor, v.patch + 1)
    } else if roll < 0.9 {
        Version::new(v.major, v.minor + 1, 0)
    } else {
        Version::new(v.major + 1, 0, 0)
    }
}

fn requirement(rng: &mut impl Rng, v: &Version, dynamic: bool) -> Constraint {
    let text = if !dynamic {
        format!("={v}")
    } else {
        match rng.gen_range(0..5) {
            0 => format!("^{v}"),
            1 => format!("~{}.{}", v.major, v.minor),
            2 if v.major == 0 => format!("0.{}.*", v.minor),
            2 => format!("{}.*", v.major),
            3 => format!(">={v}, <{}.0.0", v.major + 1),
            _ => v.to_string(),
        }
    };
    Constraint::parse(&text).expect("generated requirement")
}

fn pick_dispatch(rng: &mut impl Rng, mix: &[f64; 3]) -> Dispatch {
    let total: f64 = mix.iter().sum();
    let mut roll = rng.gen::<f64>() * total;
    for (i, w) in mix.iter().enumerate() {
        if roll < *w {
            return Dispatch::ALL[i];
        }
        roll -= w;
    }
    Dispatch::Static
}

struct PackagePlan {
    name: String,
    base_functions: usize,
    /// Public functions present in every version.
    api: usize,
    interface: bool,
    releases: Vec<Release>,
}

/// Generates a deterministic ecosystem. Package `i` depends only on
/// packages before it, favoring the lowest-numbered ones, so dependency
/// graphs are acyclic with hubs. Every requirement matches a non-yanked
/// release published before its dependent.
pub fn generate(spec: &SynthSpec) -> Result<SynthFixture, SynthError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut plans: Vec<PackagePlan> = Vec::with_capacity(spec.packages);

    for i in 0..spec.packages {
        let name = package_name(i);
        let base_functions = spec.functions.sample(&mut rng).max(1);
        let api = (base_functions / 2).max(1);
        let interface = i == 0 || rng.gen_bool(spec.interface_density);
        let count = spec.versions.sample(&mut rng);
        let mut version = if rng.gen_bool(0.5) {
            Version::new(0, 1, 0)
        } else {
            Version::new(1, 0, 0)
        };
        let mut created = spec.start + Duration::hours(i as i64);
        let mut releases = Vec::with_capacity(count);
        for _ in 0..count {
            let fan_out = spec.fan_out.sample(&mut rng).min(i);
            let mut targets = BTreeSet::new();
            for _ in 0..fan_out * 3 {
                if targets.len() == fan_out {
                    break;
                }
                let u: f64 = rng.gen();
                targets.insert(((u * u) * i as f64) as usize);
            }
            let mut deps = Vec::new();
            let mut features: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for j in targets {
                let visible: Vec<&Release> = plans[j].releases.iter().filter(|r| r.created_at <= created && !r.yanked).collect();
                let Some(target) = visible.choose(&mut rng) else { continue };
                let dynamic = rng.gen_bool(spec.dynamic_probability);
                let mut dep = DependencySpec::normal(plans[j].name.clone(), requirement(&mut rng, &target.version, dynamic));
                if rng.gen_bool(spec.optional_probability) {
                    dep.optional = true;
                    features.entry("extra".into()).or_default().push(format!("dep:{}", dep.name));
                }
                if target.features.contains_key("extra") && rng.gen_bool(0.5) {
                    dep.features.push("extra".into());
                }
                if rng.gen_bool(0.1) {
                    dep.default_features = false;
                }
                deps.push(dep);
            }
            if features.contains_key("extra") && rng.gen_bool(0.5) {
                features.insert("default".into(), vec!["extra".into()]);
            }
            releases.push(Release {
                name: name.clone(),
                version: version.clone(),
                created_at: created,
                deps,
                features,
                yanked: rng.gen_bool(spec.yank_probability),
            });
            version = bump(&mut rng, &version);
            created += Duration::days(rng.gen_range(1..=60)) + Duration::minutes(rng.gen_range(0..1440));
        }
        plans.push(PackagePlan {
            name,
            base_functions,
            api,
            interface,
            releases,
        });
    }

    let mut raw = BTreeMap::new();
    for (i, plan) in plans.iter().enumerate() {
        for (vi, release) in plan.releases.iter().enumerate() {
            let g = release_graph(&mut rng, spec, &plans, i, vi, release);
            raw.insert(release.key(), g);
        }
    }

    let releases: Vec<Release> = plans.into_iter().flat_map(|p| p.releases).collect();
    let mut timestamps: Vec<Timestamp> = releases.iter().map(|r| r.created_at).collect();
    timestamps.sort();
    let index = Index::from_releases(releases).map_err(|e| SynthError::Invalid(e.to_string()))?;
    let (store, issues) = CallGraphStore::annotate_all(&index, raw.clone());
    if let Some(issue) = issues.first() {
        return Err(SynthError::Invalid(format!("generated graph {}: {}", issue.path, issue.reason)));
    }
    Ok(SynthFixture {
        index,
        raw,
        store,
        timestamps,
    })
}

fn function_path(k: usize) -> String {
    format!("m{}::f{k}", k % 4)
}

fn release_graph(
    rng: &mut ChaCha8Rng,
    spec: &SynthSpec,
    plans: &[PackagePlan],
    i: usize,
    vi: usize,
    release: &Release,
) -> RawCallGraph {
    let plan = &plans[i];
    let own = plan.name.as_str();
    let mut g = GraphBuilder::new();
    let count = plan.base_functions + vi;
    let local: Vec<u64> = (0..count)
        .map(|k| {
            let id = g.func(own, &function_path(k));
            if k >= plan.api {
                g.private(id);
            }
            id
        })
        .collect();

    let self_ty = || ty(None, "Self");
    let iface_ty = |pkg: &str, j: usize| ty(Some(pkg), &format!("Api{j}"));
    let own_decl = plan.interface.then(|| {
        let decl = g.func_sig(own, &format!("Api{i}::call"), vec![self_ty()], None);
        g.interface(iface_ty(own, i), &[("call", decl)]);
        decl
    });

    // Dependencies visible to this release, with their declared interface.
    let deps: Vec<(&PackagePlan, usize)> = release
        .deps
        .iter()
        .filter(|d| d.kind == DepKind::Normal)
        .filter_map(|d| {
            let j = plans.iter().position(|p| p.name == d.name)?;
            Some((&plans[j], j))
        })
        .collect();
    let mut dep_decls: BTreeMap<usize, u64> = BTreeMap::new();
    for &(dep, j) in &deps {
        if dep.interface && rng.gen_bool(spec.interface_density.max(0.5)) {
            let decl = g.func_sig(&dep.name, &format!("Api{j}::call"), vec![self_ty()], None);
            dep_decls.insert(j, decl);
            let implementor = RawTypeRef {
                package: Some(own.to_owned()),
                version: None,
                path: format!("Impl{j}"),
            };
            let imp = g.func_sig(own, &format!("Impl{j}::call"), vec![implementor.clone()], None);
            g.implementation(iface_ty(&dep.name, j), implementor, "call", imp);
            g.call(local[0], imp, Dispatch::Static);
        }
    }

    let whole = spec.edge_density.floor() as usize;
    let frac = spec.edge_density - whole as f64;
    for (k, &caller) in local.iter().enumerate() {
        let calls = whole + usize::from(rng.gen_bool(frac));
        for _ in 0..calls {
            if local.len() < 2 {
                break;
            }
            let mut callee = local[rng.gen_range(0..local.len())];
            if callee == caller {
                callee = local[(k + 1) % local.len()];
            }
            match pick_dispatch(rng, &spec.dispatch_mix) {
                Dispatch::Dynamic => match own_decl.or_else(|| dep_decls.values().next().copied()) {
                    Some(decl) => g.call(caller, decl, Dispatch::Dynamic),
                    None => g.call(caller, callee, Dispatch::Static),
                },
                d => g.call(caller, callee, d),
            }
        }
        if !deps.is_empty() && rng.gen_bool(spec.api_call_probability) {
            let (dep, j) = deps[rng.gen_range(0..deps.len())];
            let target = g.func(&dep.name, &function_path(rng.gen_range(0..dep.api)));
            let dispatch = match pick_dispatch(rng, &spec.dispatch_mix) {
                Dispatch::Dynamic => match dep_decls.get(&j) {
                    Some(&decl) => {
                        g.call(caller, decl, Dispatch::Dynamic);
                        Dispatch::Static
                    }
                    None => Dispatch::Static,
                },
                d => d,
            };
            g.call(caller, target, dispatch);
        }
        if rng.gen_bool(0.02) {
            let std_fn = g.func("std", "fmt::format");
            g.call(caller, std_fn, Dispatch::Static);
        }
        if rng.gen_bool(0.005) {
            let foreign = g.func(EXTERN_PACKAGE, "pipe");
            g.call(caller, foreign, Dispatch::Static);
        }
    }

    // Each dispatch kind shows up in the first package whenever calls exist.
    if i == 0 && vi == 0 && spec.edge_density > 0.0 {
        if let Some(decl) = own_decl {
            g.call(local[0], decl, Dispatch::Dynamic);
            let imp_ty = RawTypeRef {
                package: Some(own.to_owned()),
                version: None,
                path: "Local".into(),
            };
            let imp = g.func_sig(own, "Local::call", vec![imp_ty.clone()], None);
            g.implementation(iface_ty(own, i), imp_ty, "call", imp);
        }
        if local.len() >= 2 {
            g.call(local[0], local[1], Dispatch::Macro);
            g.call(local[1], local[0], Dispatch::Static);
        }
    }
    let mut raw = g.build();
    raw.package = Some(own.to_owned());
    raw.version = Some(release.version.clone());
    raw
}

// ---------------------------------------------------------------------------
// Oracles

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph of {nodes} nodes exceeds the oracle bound of {bound}")]
    TooLarge { nodes: usize, bound: usize },
}

pub fn oracle_max_nodes() -> usize {
    std::env::var(ORACLE_MAX_NODES_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_ORACLE_MAX_NODES)
}

/// Nodes reachable from `start` over `edges` by exhaustive depth-first
/// search, scanning the whole edge list at every step. `start` itself is
/// never part of the result.
pub fn oracle_closure(nodes: usize, edges: &[(usize, usize)], start: usize) -> Result<BTreeSet<usize>, OracleError> {
    let bound = oracle_max_nodes();
    if nodes > bound {
        return Err(OracleError::TooLarge { nodes, bound });
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        for &(a, b) in edges {
            if a == n && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    seen.remove(&start);
    Ok(seen)
}

/// Resolution by brute force: every round recomputes the visible releases
/// from the raw index, picks each class's version by scanning all releases,
/// and walks the tree depth-first. Returns the error text on failure.
pub fn oracle_resolve(
    index: &Index,
    root: &ReleaseKey,
    at: Timestamp,
    features: &BTreeSet<String>,
) -> Result<ResolvedTree, String> {
    let visible = |r: &Release| r.created_at <= at;
    let mirror: Vec<&Release> = index.releases().filter(|r| visible(r)).collect();
    let valid = |r: &Release| {
        r.deps.iter().filter(|d| d.kind != DepKind::Dev).all(|d| {
            mirror
                .iter()
                .any(|m| m.name == d.name && !m.yanked && d.req.matches(&m.version))
        })
    };
    let eligible: Vec<&Release> = mirror.iter().copied().filter(|r| valid(r)).collect();
    let find = |key: &ReleaseKey| eligible.iter().copied().find(|r| r.name == key.name && r.version == key.version);
    let candidates = |name: &str| -> Vec<&Release> {
        eligible.iter().copied().filter(|r| r.name == name && !r.yanked).collect()
    };
    if find(root).is_none() {
        return Err(format!("{root} is not in the snapshot"));
    }

    #[derive(Clone, PartialEq, Eq, Default)]
    struct Class {
        reqs: BTreeSet<Constraint>,
        default_features: bool,
        features: BTreeSet<String>,
    }
    let mut state: BTreeMap<(String, CompatClass), Class> = BTreeMap::new();
    state.insert(
        (root.name.clone(), root.version.compat_class()),
        Class {
            reqs: BTreeSet::from([Constraint::exact(&root.version)]),
            ..Class::default()
        },
    );

    loop {
        let mut choice: BTreeMap<(String, CompatClass), ReleaseKey> = BTreeMap::new();
        for ((name, class), c) in &state {
            let best = candidates(name)
                .into_iter()
                .filter(|r| r.version.compat_class() == *class && c.reqs.iter().all(|q| q.matches(&r.version)))
                .max_by(|a, b| a.version.cmp(&b.version));
            match best {
                Some(r) => {
                    choice.insert((name.clone(), *class), r.key());
                }
                None => return Err(format!("no release of `{name}` satisfies the gathered requirements")),
            }
        }

        let mut next = state.clone();
        let mut visited = BTreeSet::from([root.clone()]);
        let mut children: BTreeMap<ReleaseKey, Vec<ResolvedChild>> = BTreeMap::new();
        let mut self_cycle = false;
        let mut stack = vec![root.clone()];
        while let Some(node) = stack.pop() {
            let release = find(&node).expect("chosen releases are eligible");
            let enabled = if node == *root {
                features.clone()
            } else {
                let c = &state[&(node.name.clone(), node.version.compat_class())];
                let requested: Vec<&str> = c
                    .default_features
                    .then_some("default")
                    .into_iter()
                    .chain(c.features.iter().map(String::as_str))
                    .collect();
                release.expand_features(requested, false).map_err(|e| e.to_string())?
            };
            let mut kids = Vec::new();
            for spec in release.runtime_deps_expanded(&enabled) {
                let newest = candidates(&spec.name)
                    .into_iter()
                    .filter(|r| spec.req.matches(&r.version))
                    .max_by(|a, b| a.version.cmp(&b.version));
                let Some(newest) = newest else {
                    return Err(format!("no release of `{}` satisfies `{}`", spec.name, spec.req));
                };
                let key = (spec.name.clone(), newest.version.compat_class());
                let c = next.entry(key.clone()).or_default();
                c.reqs.insert(spec.req.clone());
                c.default_features |= spec.default_features;
                c.features.extend(spec.features.iter().cloned());
                if let Some(chosen) = choice.get(&key) {
                    self_cycle |= chosen.name == node.name;
                    kids.push(ResolvedChild {
                        node: chosen.clone(),
                        spec: spec.clone(),
                    });
                }
            }
            for kid in kids.iter().rev() {
                if visited.insert(kid.node.clone()) {
                    stack.push(kid.node.clone());
                }
            }
            if !kids.is_empty() {
                children.insert(node, kids);
            }
        }

        let settled = next == state && next.keys().all(|k| choice.contains_key(k));
        if settled {
            return Ok(ResolvedTree {
                root: root.clone(),
                nodes: visited,
                children,
                self_cycle,
            });
        }
        state = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::validate;

    #[test]
    fn zero_packages_is_empty() {
        let fx = generate(&SynthSpec {
            packages: 0,
            ..SynthSpec::default()
        })
        .unwrap();
        assert!(fx.index.is_empty() && fx.store.is_empty() && fx.timestamps.is_empty());
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec::default().with_seed(7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.index, b.index);
        assert_eq!(a.raw, b.raw);
        let c = generate(&spec.with_seed(8)).unwrap();
        assert_ne!(a.raw, c.raw);
    }

    #[test]
    fn hundred_packages_validate_clean() {
        let fx = generate(&SynthSpec {
            packages: 100,
            ..SynthSpec::default().with_seed(3)
        })
        .unwrap();
        assert!(validate(&fx.index).is_empty());
        let mut counts = [0; 3];
        for g in fx.raw.values() {
            for (c, n) in counts.iter_mut().zip(g.dispatch_counts()) {
                *c += n;
            }
        }
        assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
    }

    #[test]
    fn timestamps_increase_per_package() {
        let fx = generate(&SynthSpec::default().with_seed(11)).unwrap();
        for (_, releases) in fx.index.packages() {
            let mut times: Vec<_> = releases.iter().map(|r| (r.version.clone(), r.created_at)).collect();
            times.sort();
            assert!(times.windows(2).all(|w| w[0].1 < w[1].1));
        }
    }

    #[test]
    fn infeasible_and_invalid_specs() {
        let spec = SynthSpec {
            packages: 3,
            fan_out: Span::new(3, 4),
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&spec), Err(SynthError::Infeasible(_))));
        let spec = SynthSpec {
            dynamic_probability: 1.5,
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&spec), Err(SynthError::Invalid(_))));
    }

    #[test]
    fn closure_basics() {
        assert_eq!(oracle_closure(3, &[(0, 1), (1, 2)], 0).unwrap(), BTreeSet::from([1, 2]));
        assert_eq!(oracle_closure(1, &[(0, 0)], 0).unwrap(), BTreeSet::new());
    }

    #[test]
    fn oracle_resolves_root_only() {
        let index = Index::from_releases([crate::fixtures::release("solo", "1.0.0", "2020-01-01", &[])]).unwrap();
        let root = crate::fixtures::key("solo", "1.0.0");
        let tree = oracle_resolve(&index, &root, crate::fixtures::ts("2021-01-01"), &BTreeSet::new()).unwrap();
        assert_eq!(tree.nodes, BTreeSet::from([root]));
        assert!(tree.children.is_empty());
    }
}
