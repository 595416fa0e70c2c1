//! Network analyses: call accounting, degree distributions, dependency and
//! dependent counts under the metadata and call-based views, API-call counts,
//! coexistence bloat, reach, and rank correlation between views.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::callgraph::{Dispatch, FunctionId, FunctionNode, Visibility};
use crate::index::ReleaseKey;
use crate::resolver::ResolvedTree;
use crate::unify::Cdn;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("unknown root package `{0}`")]
    UnknownRoot(String),
    #[error("unknown package `{0}`")]
    UnknownPackage(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),
    #[error("series is constant; rank correlation undefined")]
    ConstantSeries,
    #[error("the two views share no packages")]
    EmptyIntersection,
}

// ---------------------------------------------------------------------------
// Indexed view of a CDN

/// Dense adjacency over a CDN; node `i` is the `i`-th id in sorted order.
pub struct CallIndex<'c> {
    pub cdn: &'c Cdn,
    pub ids: Vec<&'c FunctionId>,
    pub nodes: Vec<&'c FunctionNode>,
    pos: HashMap<&'c str, u32>,
    /// Package name per node, interned.
    pub package_of: Vec<u32>,
    pub packages: Vec<&'c str>,
    /// Release per node, `None` for extern and standard-library code.
    pub release_of: Vec<Option<u32>>,
    pub releases: Vec<&'c ReleaseKey>,
    release_pos: HashMap<&'c ReleaseKey, u32>,
    pub out: Vec<Vec<(u32, Dispatch)>>,
    pub inn: Vec<Vec<(u32, Dispatch)>>,
}

impl<'c> CallIndex<'c> {
    pub fn new(cdn: &'c Cdn) -> Self {
        let n = cdn.nodes.len();
        let mut ids = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        let mut pos = HashMap::with_capacity(n);
        let mut package_pos: HashMap<&str, u32> = HashMap::new();
        let mut packages = Vec::new();
        let mut package_of = Vec::with_capacity(n);
        let releases: Vec<&ReleaseKey> = cdn.package_index.keys().collect();
        let release_pos: HashMap<&ReleaseKey, u32> =
            releases.iter().enumerate().map(|(i, k)| (*k, i as u32)).collect();
        let mut release_of = Vec::with_capacity(n);
        for (i, (id, node)) in cdn.nodes.nodes.iter().enumerate() {
            ids.push(id);
            nodes.push(node.as_ref());
            pos.insert(id.as_str(), i as u32);
            let p = *package_pos.entry(node.package.as_str()).or_insert_with(|| {
                packages.push(node.package.as_str());
                (packages.len() - 1) as u32
            });
            package_of.push(p);
            release_of.push(
                node.version
                    .resolved()
                    .and_then(|v| release_pos.get(&ReleaseKey::new(node.package.clone(), v.clone())).copied()),
            );
        }
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for e in &cdn.edges {
            let (Some(&a), Some(&b)) = (pos.get(e.caller.as_str()), pos.get(e.callee.as_str())) else {
                continue;
            };
            out[a as usize].push((b, e.dispatch));
            inn[b as usize].push((a, e.dispatch));
        }
        CallIndex {
            cdn,
            ids,
            nodes,
            pos,
            package_of,
            packages,
            release_of,
            releases,
            release_pos,
            out,
            inn,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<u32> {
        self.pos.get(id).copied()
    }

    pub fn release_position(&self, key: &ReleaseKey) -> Option<u32> {
        self.release_pos.get(key).copied()
    }

    /// Whether an edge crosses a release boundary. Code outside any release
    /// (extern, standard library) counts by package name.
    pub fn is_inter(&self, a: u32, b: u32) -> bool {
        match (self.release_of[a as usize], self.release_of[b as usize]) {
            (Some(x), Some(y)) => x != y,
            _ => self.package_of[a as usize] != self.package_of[b as usize],
        }
    }

    fn functions_of(&self, release: &ReleaseKey) -> Vec<u32> {
        self.cdn
            .package_index
            .get(release)
            .into_iter()
            .flatten()
            .filter_map(|id| self.position(id.as_str()))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Call accounting

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DispatchCounts {
    pub static_calls: usize,
    pub dynamic_calls: usize,
    pub macro_calls: usize,
}

impl DispatchCounts {
    pub fn add(&mut self, dispatch: Dispatch) {
        match dispatch {
            Dispatch::Static => self.static_calls += 1,
            Dispatch::Dynamic => self.dynamic_calls += 1,
            Dispatch::Macro => self.macro_calls += 1,
        }
    }

    pub fn get(&self, dispatch: Dispatch) -> usize {
        match dispatch {
            Dispatch::Static => self.static_calls,
            Dispatch::Dynamic => self.dynamic_calls,
            Dispatch::Macro => self.macro_calls,
        }
    }

    pub fn total(&self) -> usize {
        self.static_calls + self.dynamic_calls + self.macro_calls
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CallSummary {
    pub functions: usize,
    pub public_functions: usize,
    pub private_functions: usize,
    pub edges: usize,
    pub intra: DispatchCounts,
    pub inter: DispatchCounts,
}

pub fn call_summary(cdn: &Cdn) -> CallSummary {
    let index = CallIndex::new(cdn);
    let mut s = CallSummary {
        functions: index.len(),
        ..CallSummary::default()
    };
    for node in &index.nodes {
        match node.visibility {
            Visibility::Public => s.public_functions += 1,
            Visibility::Private => s.private_functions += 1,
        }
    }
    for (a, targets) in index.out.iter().enumerate() {
        for &(b, dispatch) in targets {
            s.edges += 1;
            if index.is_inter(a as u32, b) {
                s.inter.add(dispatch);
            } else {
                s.intra.add(dispatch);
            }
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Degree distributions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    All,
    InterPackage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub p99: f64,
}

/// Median, mean and nearest-rank 99th percentile; `None` when empty.
pub fn summary_stats(values: &[f64]) -> Option<SummaryStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
    let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
    Some(SummaryStats {
        count: n,
        median,
        mean: v.iter().sum::<f64>() / n as f64,
        p99: v[rank - 1],
    })
}

/// Degree is the number of distinct other functions joined by qualifying
/// edges. Functions with degree zero are left out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeHistogram {
    pub direction: Direction,
    pub dispatch: Option<Dispatch>,
    pub scope: Scope,
    pub counts: BTreeMap<usize, usize>,
    pub stats: Option<SummaryStats>,
}

impl DegreeHistogram {
    pub fn functions(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn weighted_total(&self) -> usize {
        self.counts.iter().map(|(d, c)| d * c).sum()
    }
}

pub fn degree_distribution(cdn: &Cdn, direction: Direction, dispatch: Option<Dispatch>, scope: Scope) -> DegreeHistogram {
    let index = CallIndex::new(cdn);
    degree_distribution_in(&index, direction, dispatch, scope)
}

pub fn degree_distribution_in(
    index: &CallIndex<'_>,
    direction: Direction,
    dispatch: Option<Dispatch>,
    scope: Scope,
) -> DegreeHistogram {
    let adjacency = match direction {
        Direction::Out => &index.out,
        Direction::In => &index.inn,
    };
    let mut counts = BTreeMap::new();
    let mut degrees = Vec::new();
    let mut seen = BTreeSet::new();
    for (a, edges) in adjacency.iter().enumerate() {
        let a = a as u32;
        seen.clear();
        for &(b, d) in edges {
            if b == a || dispatch.is_some_and(|want| want != d) {
                continue;
            }
            if scope == Scope::InterPackage && !index.is_inter(a, b) {
                continue;
            }
            seen.insert(b);
        }
        if !seen.is_empty() {
            *counts.entry(seen.len()).or_insert(0) += 1;
            degrees.push(seen.len() as f64);
        }
    }
    DegreeHistogram {
        direction,
        dispatch,
        scope,
        counts,
        stats: summary_stats(&degrees),
    }
}

// ---------------------------------------------------------------------------
// Dependency views

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViewKind {
    Metadata,
    CallBased,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootDependencies {
    pub root: ReleaseKey,
    pub direct: BTreeSet<ReleaseKey>,
    /// Dependencies that are not direct.
    pub transitive: BTreeSet<ReleaseKey>,
    /// The tree contains another version of the root package.
    pub self_cycle: bool,
}

/// Dependencies of every root under one view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyView {
    pub kind: ViewKind,
    pub roots: BTreeMap<String, RootDependencies>,
}

fn metadata_sets(tree: &ResolvedTree) -> RootDependencies {
    let direct: BTreeSet<ReleaseKey> = tree.direct().into_iter().cloned().collect();
    let transitive = tree
        .nodes
        .iter()
        .filter(|n| **n != tree.root && !direct.contains(*n))
        .cloned()
        .collect();
    RootDependencies {
        root: tree.root.clone(),
        direct,
        transitive,
        self_cycle: tree.nodes.iter().any(|n| n.name == tree.root.name && *n != tree.root),
    }
}

pub fn metadata_view(trees: &BTreeMap<String, ResolvedTree>) -> DependencyView {
    DependencyView {
        kind: ViewKind::Metadata,
        roots: trees.iter().map(|(name, t)| (name.clone(), metadata_sets(t))).collect(),
    }
}

/// Functions reachable from `start` through edges whose callee lies in an
/// allowed release. Includes `start`.
fn reachable_within(index: &CallIndex<'_>, start: &[u32], allowed: &dyn Fn(u32) -> bool) -> Vec<bool> {
    let mut seen = vec![false; index.len()];
    let mut queue: VecDeque<u32> = VecDeque::new();
    for &s in start {
        if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(a) = queue.pop_front() {
        for &(b, _) in &index.out[a as usize] {
            if !seen[b as usize] && allowed(b) {
                seen[b as usize] = true;
                queue.push_back(b);
            }
        }
    }
    seen
}

/// Release positions of a tree's nodes, plus a membership test over nodes.
fn tree_releases(index: &CallIndex<'_>, tree: &ResolvedTree) -> BTreeSet<u32> {
    tree.nodes.iter().filter_map(|k| index.release_position(k)).collect()
}

struct CallReach {
    root_functions: Vec<u32>,
    reached: Vec<bool>,
    direct_callees: BTreeSet<u32>,
}

fn call_reach(index: &CallIndex<'_>, tree: &ResolvedTree) -> CallReach {
    let members = tree_releases(index, tree);
    let allowed = |b: u32| index.release_of[b as usize].is_some_and(|r| members.contains(&r));
    let root_functions = index.functions_of(&tree.root);
    let reached = reachable_within(index, &root_functions, &allowed);
    let direct_callees = root_functions
        .iter()
        .flat_map(|&a| index.out[a as usize].iter())
        .filter(|(b, _)| allowed(*b))
        .filter_map(|&(b, _)| index.release_of[b as usize])
        .collect();
    CallReach {
        root_functions,
        reached,
        direct_callees,
    }
}

/// A direct dependency counts if a root function calls into it; a
/// transitive one if any of its functions is reachable from the root's.
pub fn call_based_view(cdn: &Cdn, trees: &BTreeMap<String, ResolvedTree>) -> DependencyView {
    let index = CallIndex::new(cdn);
    call_based_view_in(&index, trees)
}

pub fn call_based_view_in(index: &CallIndex<'_>, trees: &BTreeMap<String, ResolvedTree>) -> DependencyView {
    let mut roots = BTreeMap::new();
    for (name, tree) in trees {
        let meta = metadata_sets(tree);
        let reach = call_reach(index, tree);
        let reached_releases: BTreeSet<u32> = reach
            .reached
            .iter()
            .enumerate()
            .filter(|(_, r)| **r)
            .filter_map(|(i, _)| index.release_of[i])
            .collect();
        let pick = |set: &BTreeSet<ReleaseKey>, hit: &BTreeSet<u32>| -> BTreeSet<ReleaseKey> {
            set.iter()
                .filter(|k| index.release_position(k).is_some_and(|r| hit.contains(&r)))
                .cloned()
                .collect()
        };
        roots.insert(
            name.clone(),
            RootDependencies {
                root: tree.root.clone(),
                direct: pick(&meta.direct, &reach.direct_callees),
                transitive: pick(&meta.transitive, &reached_releases),
                self_cycle: meta.self_cycle,
            },
        );
    }
    DependencyView {
        kind: ViewKind::CallBased,
        roots,
    }
}

/// `(direct, transitive)` dependency counts of a root package.
pub fn dependency_counts(view: &DependencyView, root: &str) -> Result<(usize, usize), MetricsError> {
    view.roots
        .get(root)
        .map(|d| (d.direct.len(), d.transitive.len()))
        .ok_or_else(|| MetricsError::UnknownRoot(root.to_owned()))
}

fn mentions(deps: &BTreeSet<ReleaseKey>, package: &str) -> bool {
    deps.iter().any(|k| k.name == package)
}

/// `(direct, total)` dependents of a package: roots depending on it
/// directly, and directly or transitively. A package is not its own
/// dependent.
pub fn dependent_counts(view: &DependencyView, package: &str) -> Result<(usize, usize), MetricsError> {
    let known = view.roots.contains_key(package)
        || view
            .roots
            .values()
            .any(|d| mentions(&d.direct, package) || mentions(&d.transitive, package));
    if !known {
        return Err(MetricsError::UnknownPackage(package.to_owned()));
    }
    let mut direct = 0;
    let mut total = 0;
    for (name, deps) in &view.roots {
        if name == package {
            continue;
        }
        let d = mentions(&deps.direct, package);
        if d {
            direct += 1;
        }
        if d || mentions(&deps.transitive, package) {
            total += 1;
        }
    }
    Ok((direct, total))
}

/// Dependents of every package at once: `package -> (direct, total)`.
pub fn all_dependent_counts(view: &DependencyView) -> BTreeMap<String, (usize, usize)> {
    let mut out: BTreeMap<String, (usize, usize)> = view.roots.keys().map(|k| (k.clone(), (0, 0))).collect();
    for (name, deps) in &view.roots {
        let direct: BTreeSet<&str> = deps.direct.iter().map(|k| k.name.as_str()).collect();
        let all: BTreeSet<&str> = direct
            .iter()
            .copied()
            .chain(deps.transitive.iter().map(|k| k.name.as_str()))
            .collect();
        for pkg in all {
            if pkg == name {
                continue;
            }
            let entry = out.entry(pkg.to_owned()).or_insert((0, 0));
            entry.1 += 1;
            if direct.contains(pkg) {
                entry.0 += 1;
            }
        }
    }
    out
}

/// Fraction of the other snapshot packages that depend on `package`.
pub fn reach(view: &DependencyView, package: &str) -> Result<f64, MetricsError> {
    let (_, total) = dependent_counts(view, package)?;
    let others = view.roots.len().saturating_sub(1);
    Ok(if others == 0 { 0.0 } else { total as f64 / others as f64 })
}

// ---------------------------------------------------------------------------
// API calls

/// `(direct, transitive)` API calls of a root. Direct calls are edges from
/// the root's functions into direct dependencies; transitive calls are
/// inter-package edges leaving a reachable function and landing in a
/// non-direct dependency. Each edge counts once.
pub fn api_call_counts(cdn: &Cdn, trees: &BTreeMap<String, ResolvedTree>, root: &str) -> Result<(usize, usize), MetricsError> {
    let index = CallIndex::new(cdn);
    api_call_counts_in(&index, trees, root)
}

pub fn api_call_counts_in(
    index: &CallIndex<'_>,
    trees: &BTreeMap<String, ResolvedTree>,
    root: &str,
) -> Result<(usize, usize), MetricsError> {
    let tree = trees.get(root).ok_or_else(|| MetricsError::UnknownRoot(root.to_owned()))?;
    let meta = metadata_sets(tree);
    let direct: BTreeSet<u32> = meta.direct.iter().filter_map(|k| index.release_position(k)).collect();
    let transitive: BTreeSet<u32> = meta.transitive.iter().filter_map(|k| index.release_position(k)).collect();
    let reach = call_reach(index, tree);
    let root_release = index.release_position(&tree.root);
    let mut direct_calls = 0;
    for &a in &reach.root_functions {
        for &(b, _) in &index.out[a as usize] {
            if index.release_of[b as usize].is_some_and(|r| direct.contains(&r) && Some(r) != root_release) {
                direct_calls += 1;
            }
        }
    }
    let mut transitive_calls = 0;
    for (a, reached) in reach.reached.iter().enumerate() {
        if !reached {
            continue;
        }
        for &(b, _) in &index.out[a] {
            if index.is_inter(a as u32, b) && index.release_of[b as usize].is_some_and(|r| transitive.contains(&r)) {
                transitive_calls += 1;
            }
        }
    }
    Ok((direct_calls, transitive_calls))
}

// ---------------------------------------------------------------------------
// Coexistence bloat

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BloatReport {
    pub root: ReleaseKey,
    /// Public dependency functions whose version-stripped identifier occurs
    /// under two or more versions.
    pub duplicated: usize,
    pub total: usize,
    pub percentage: f64,
    /// The tree held other versions of the root package; their functions
    /// were left out.
    pub self_cycle: bool,
}

/// Bloat over a set of dependency function nodes of one root.
pub fn bloat_of<'a>(root: &ReleaseKey, nodes: impl IntoIterator<Item = &'a FunctionNode>) -> BloatReport {
    let mut self_cycle = false;
    let mut versions: HashMap<String, BTreeSet<&crate::semver::Version>> = HashMap::new();
    let mut keys = Vec::new();
    for n in nodes {
        let Some(v) = n.version.resolved() else { continue };
        if n.package == root.name {
            if *v != root.version {
                self_cycle = true;
            }
            continue;
        }
        if n.visibility != Visibility::Public {
            continue;
        }
        let key = n.unversioned_id();
        versions.entry(key.clone()).or_default().insert(v);
        keys.push(key);
    }
    let duplicated = keys.iter().filter(|k| versions[*k].len() >= 2).count();
    let total = keys.len();
    BloatReport {
        root: root.clone(),
        duplicated,
        total,
        percentage: if total == 0 { 0.0 } else { 100.0 * duplicated as f64 / total as f64 },
        self_cycle,
    }
}

/// Bloat of one root, from the CDN functions of its tree's releases.
pub fn coexistence_bloat(cdn: &Cdn, tree: &ResolvedTree) -> BloatReport {
    let nodes = tree
        .nodes
        .iter()
        .filter(|k| **k != tree.root)
        .flat_map(|k| cdn.package_index.get(k).into_iter().flatten())
        .filter_map(|id| cdn.node(id.as_str()));
    bloat_of(&tree.root, nodes)
}

// ---------------------------------------------------------------------------
// Function reach

fn named_packages(index: &CallIndex<'_>) -> usize {
    index.packages.iter().filter(|p| **p != crate::callgraph::EXTERN_PACKAGE).count()
}

/// Fraction of the other packages holding a function that reaches `id`
/// through calls.
pub fn function_reach(cdn: &Cdn, id: &str) -> Result<f64, MetricsError> {
    let index = CallIndex::new(cdn);
    function_reach_in(&index, id)
}

pub fn function_reach_in(index: &CallIndex<'_>, id: &str) -> Result<f64, MetricsError> {
    let start = index.position(id).ok_or_else(|| MetricsError::UnknownFunction(id.to_owned()))?;
    let own = index.package_of[start as usize];
    let mut seen = vec![false; index.len()];
    let mut queue = VecDeque::from([start]);
    seen[start as usize] = true;
    let mut pkgs = BTreeSet::new();
    while let Some(b) = queue.pop_front() {
        for &(a, _) in &index.inn[b as usize] {
            if !seen[a as usize] {
                seen[a as usize] = true;
                queue.push_back(a);
            }
        }
    }
    for (i, s) in seen.iter().enumerate() {
        let p = index.package_of[i];
        if *s && i as u32 != start && p != own && index.packages[p as usize] != crate::callgraph::EXTERN_PACKAGE {
            pkgs.insert(p);
        }
    }
    let others = named_packages(index).saturating_sub(1);
    Ok(if others == 0 { 0.0 } else { pkgs.len() as f64 / others as f64 })
}

/// Function reach of every function, via the strongly connected components
/// of the call graph and per-component package bitsets.
pub fn all_function_reach(cdn: &Cdn) -> BTreeMap<FunctionId, f64> {
    let index = CallIndex::new(cdn);
    all_function_reach_in(&index)
}

pub fn all_function_reach_in(index: &CallIndex<'_>) -> BTreeMap<FunctionId, f64> {
    use petgraph::algo::tarjan_scc;
    use petgraph::graph::{DiGraph, NodeIndex};

    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(index.len(), 0);
    for _ in 0..index.len() {
        g.add_node(());
    }
    for (a, outs) in index.out.iter().enumerate() {
        for &(b, _) in outs {
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b as usize), ());
        }
    }
    // Components come out sinks first; callers are processed last.
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; index.len()];
    for (c, members) in sccs.iter().enumerate() {
        for m in members {
            comp[m.index()] = c;
        }
    }
    let words = index.packages.len().div_ceil(64);
    let mut bits = vec![0u64; sccs.len() * words];
    let extern_pkg = index.packages.iter().position(|p| *p == crate::callgraph::EXTERN_PACKAGE);
    for c in (0..sccs.len()).rev() {
        for m in &sccs[c] {
            let p = index.package_of[m.index()] as usize;
            if Some(p) != extern_pkg {
                bits[c * words + p / 64] |= 1 << (p % 64);
            }
        }
        // Every successor component sits earlier in the order.
        for m in &sccs[c] {
            for &(b, _) in &index.out[m.index()] {
                let d = comp[b as usize];
                if d != c {
                    for w in 0..words {
                        let v = bits[c * words + w];
                        bits[d * words + w] |= v;
                    }
                }
            }
        }
    }
    let others = named_packages(index).saturating_sub(1);
    let mut out = BTreeMap::new();
    for (i, id) in index.ids.iter().enumerate() {
        let c = comp[i];
        let own = index.package_of[i] as usize;
        let mut count = 0usize;
        for w in 0..words {
            let mut v = bits[c * words + w];
            if own / 64 == w {
                v &= !(1 << (own % 64));
            }
            count += v.count_ones() as usize;
        }
        // A singleton component contributes its own package only, already
        // removed above.
        let value = if others == 0 { 0.0 } else { count as f64 / others as f64 };
        out.insert((*id).clone(), value);
    }
    out
}

// ---------------------------------------------------------------------------
// Rank correlation

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricsError::TooFewObservations(xs.len()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ConstantSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    DirectDependencies,
    TransitiveDependencies,
    DirectDependents,
    TotalDependents,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub statistic: Statistic,
    pub packages: Vec<String>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub rho: Option<f64>,
    /// Why `rho` is missing, when it is.
    pub degenerate: Option<String>,
}

fn statistic_values(view: &DependencyView, statistic: Statistic) -> BTreeMap<String, f64> {
    match statistic {
        Statistic::DirectDependencies => view
            .roots
            .iter()
            .map(|(k, d)| (k.clone(), d.direct.len() as f64))
            .collect(),
        Statistic::TransitiveDependencies => view
            .roots
            .iter()
            .map(|(k, d)| (k.clone(), d.transitive.len() as f64))
            .collect(),
        Statistic::DirectDependents | Statistic::TotalDependents => {
            let direct = statistic == Statistic::DirectDependents;
            all_dependent_counts(view)
                .into_iter()
                .filter(|(k, _)| view.roots.contains_key(k))
                .map(|(k, (d, t))| (k, if direct { d } else { t } as f64))
                .collect()
        }
    }
}

/// Pairs a statistic over the packages both views share and correlates it.
pub fn compare_networks(a: &DependencyView, b: &DependencyView, statistic: Statistic) -> Result<Comparison, MetricsError> {
    let va = statistic_values(a, statistic);
    let vb = statistic_values(b, statistic);
    let packages: Vec<String> = va.keys().filter(|k| vb.contains_key(*k)).cloned().collect();
    if packages.is_empty() {
        return Err(MetricsError::EmptyIntersection);
    }
    let xs: Vec<f64> = packages.iter().map(|p| va[p]).collect();
    let ys: Vec<f64> = packages.iter().map(|p| vb[p]).collect();
    let (rho, degenerate) = match spearman(&xs, &ys) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Comparison {
        statistic,
        packages,
        a: xs,
        b: ys,
        rho,
        degenerate,
    })
}
