//! Retroactive dependency resolution and the package-level network at a
//! timestamp.
//!
//! Resolution gathers requirements per `(package, compat class)`. A
//! requirement belongs to the class of the newest release that satisfies it
//! on its own; inside one class the newest release satisfying every gathered
//! requirement is chosen, while different classes of the same package
//! coexist. Choosing a version can reveal new requirements, so rounds repeat
//! until a round adds nothing; each round reads only the state left by the
//! previous one. Requirements (and requested features) only
//! accumulate across rounds, which bounds the number of rounds.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::index::{
    mirror_at, validate, DependencySpec, FeatureSelection, Index, IndexError, Release, ReleaseKey, Timestamp,
    ValidationReport,
};
use crate::semver::{CompatClass, Constraint, Version};

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("{0} is not a member of the snapshot")]
    UnknownRoot(ReleaseKey),
    #[error("no release of `{package}` satisfies `{req}` (required via {})", display_path(.path))]
    Unresolvable {
        package: String,
        req: String,
        path: Vec<ReleaseKey>,
    },
    #[error(transparent)]
    Feature(#[from] IndexError),
}

fn display_path(path: &[ReleaseKey]) -> String {
    path.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> ")
}

/// The releases visible at one instant: published at or before `at`, minus
/// releases that fail validation against that mirror.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub at: Timestamp,
    pub mirror: Index,
    pub validation: ValidationReport,
    excluded: BTreeSet<ReleaseKey>,
}

impl Snapshot {
    pub fn new(index: &Index, at: Timestamp) -> Self {
        let mirror = mirror_at(index, at);
        let validation = validate(&mirror);
        let excluded = validation.flagged();
        Snapshot {
            at,
            mirror,
            validation,
            excluded,
        }
    }

    pub fn is_member(&self, key: &ReleaseKey) -> bool {
        self.mirror.get(key).is_some() && !self.excluded.contains(key)
    }

    pub fn release(&self, key: &ReleaseKey) -> Option<&Release> {
        self.mirror.get(key).filter(|_| !self.excluded.contains(key))
    }

    /// Resolution candidates for `name`, ascending by version.
    pub fn candidates<'a>(&'a self, name: &str) -> impl DoubleEndedIterator<Item = &'a Release> + 'a {
        self.mirror
            .versions(name)
            .iter()
            .filter(move |r| !r.yanked && !self.excluded.contains(&r.key()))
    }

    /// The most recently published eligible release of every package.
    pub fn roots(&self) -> Vec<&Release> {
        self.mirror
            .packages()
            .filter_map(|(name, _)| {
                self.candidates(name)
                    .max_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.version.cmp(&b.version)))
            })
            .collect()
    }

    pub fn excluded(&self) -> &BTreeSet<ReleaseKey> {
        &self.excluded
    }

    fn newest_matching(&self, name: &str, req: &Constraint) -> Option<&Release> {
        self.candidates(name).rev().find(|r| req.matches(&r.version))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedChild {
    pub node: ReleaseKey,
    pub spec: DependencySpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedTree {
    pub root: ReleaseKey,
    pub nodes: BTreeSet<ReleaseKey>,
    /// Children per parent, in the parent's declaration order.
    pub children: BTreeMap<ReleaseKey, Vec<ResolvedChild>>,
    /// Some release depends on its own package.
    pub self_cycle: bool,
}

impl ResolvedTree {
    pub fn children_of(&self, node: &ReleaseKey) -> &[ResolvedChild] {
        self.children.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Breadth-first order from the root; each node once.
    pub fn level_order(&self) -> Vec<&ReleaseKey> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut queue = VecDeque::from([&self.root]);
        seen.insert(&self.root);
        while let Some(node) = queue.pop_front() {
            order.push(node);
            for child in self.children_of(node) {
                if seen.insert(&child.node) {
                    queue.push_back(&child.node);
                }
            }
        }
        order
    }

    /// Root's direct dependencies, as resolved nodes.
    pub fn direct(&self) -> BTreeSet<&ReleaseKey> {
        self.children_of(&self.root)
            .iter()
            .map(|c| &c.node)
            .filter(|n| **n != self.root)
            .collect()
    }

    /// Package name to the sorted versions present in the tree.
    pub fn version_map(&self) -> BTreeMap<&str, Vec<&Version>> {
        let mut map: BTreeMap<&str, Vec<&Version>> = BTreeMap::new();
        for node in &self.nodes {
            map.entry(node.name.as_str()).or_default().push(&node.version);
        }
        map
    }
}

#[derive(Default)]
struct ClassState {
    reqs: BTreeSet<Constraint>,
    default_features: bool,
    features: BTreeSet<String>,
    choice: Option<ReleaseKey>,
    dirty: bool,
    /// Path to the node that added the latest requirement.
    last_path: Vec<ReleaseKey>,
}

/// Resolves `root` against `snapshot`. `features` is the root's already
/// expanded feature set; other nodes get their default features (unless
/// every requester opts out) plus the features requested on them.
pub fn resolve_tree(
    snapshot: &Snapshot,
    root: &ReleaseKey,
    features: &BTreeSet<String>,
) -> Result<ResolvedTree, ResolveError> {
    if !snapshot.is_member(root) {
        return Err(ResolveError::UnknownRoot(root.clone()));
    }
    let mut classes: BTreeMap<(String, CompatClass), ClassState> = BTreeMap::new();
    // A package cannot pull in a second, compatible copy of the root.
    classes.insert(
        (root.name.clone(), root.version.compat_class()),
        ClassState {
            reqs: BTreeSet::from([Constraint::exact(&root.version)]),
            dirty: true,
            last_path: vec![root.clone()],
            ..ClassState::default()
        },
    );
    let mut class_of: HashMap<(String, Constraint), Option<CompatClass>> = HashMap::new();

    loop {
        for ((name, class), state) in classes.iter_mut().filter(|(_, s)| s.dirty) {
            state.dirty = false;
            let chosen = snapshot
                .candidates(name)
                .rev()
                .find(|r| r.version.compat_class() == *class && state.reqs.iter().all(|q| q.matches(&r.version)));
            match chosen {
                Some(r) => state.choice = Some(r.key()),
                None => {
                    let req = state.reqs.iter().fold(Constraint::ANY, |acc, q| acc.and(q));
                    return Err(ResolveError::Unresolvable {
                        package: name.clone(),
                        req: req.to_string(),
                        path: state.last_path.clone(),
                    });
                }
            }
        }

        // Traverse with this round's choices and features; what the
        // traversal asks for is applied once it is over.
        let mut pending: Vec<(String, CompatClass, DependencySpec, Vec<ReleaseKey>)> = Vec::new();
        let mut visited = BTreeSet::from([root.clone()]);
        let mut parent: HashMap<ReleaseKey, ReleaseKey> = HashMap::new();
        let mut children: BTreeMap<ReleaseKey, Vec<ResolvedChild>> = BTreeMap::new();
        let mut queue = VecDeque::from([root.clone()]);
        let mut self_cycle = false;

        while let Some(node) = queue.pop_front() {
            let release = snapshot.release(&node).expect("tree nodes are snapshot members");
            let enabled = if &node == root {
                features.clone()
            } else {
                let state = &classes[&(node.name.clone(), node.version.compat_class())];
                let requested = state
                    .default_features
                    .then_some("default")
                    .into_iter()
                    .chain(state.features.iter().map(String::as_str));
                release.expand_features(requested, false)?
            };
            let path_to = |parent: &HashMap<ReleaseKey, ReleaseKey>| {
                let mut path = vec![node.clone()];
                while let Some(p) = parent.get(path.last().unwrap()) {
                    path.push(p.clone());
                }
                path.reverse();
                path
            };
            for spec in release.runtime_deps_expanded(&enabled) {
                let class = *class_of
                    .entry((spec.name.clone(), spec.req.clone()))
                    .or_insert_with(|| {
                        snapshot
                            .newest_matching(&spec.name, &spec.req)
                            .map(|r| r.version.compat_class())
                    });
                let Some(class) = class else {
                    return Err(ResolveError::Unresolvable {
                        package: spec.name.clone(),
                        req: spec.req.to_string(),
                        path: path_to(&parent),
                    });
                };
                pending.push((spec.name.clone(), class, spec.clone(), path_to(&parent)));
                let Some(chosen) = classes.get(&(spec.name.clone(), class)).and_then(|s| s.choice.clone()) else {
                    continue;
                };
                if chosen.name == node.name {
                    self_cycle = true;
                }
                children.entry(node.clone()).or_default().push(ResolvedChild {
                    node: chosen.clone(),
                    spec: spec.clone(),
                });
                if visited.insert(chosen.clone()) {
                    parent.insert(chosen.clone(), node.clone());
                    queue.push_back(chosen);
                }
            }
        }

        let mut changed = false;
        for (name, class, spec, path) in pending {
            let state = classes.entry((name, class)).or_default();
            if state.choice.is_none() {
                changed = true;
            }
            if state.reqs.insert(spec.req) {
                state.dirty = true;
                state.last_path = path;
                changed = true;
            }
            if spec.default_features && !state.default_features {
                state.default_features = true;
                changed = true;
            }
            for f in spec.features {
                if state.features.insert(f) {
                    changed = true;
                }
            }
        }

        if !changed {
            return Ok(ResolvedTree {
                root: root.clone(),
                nodes: visited,
                children,
                self_cycle,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum VersionPolicy {
    /// One root per package: its most recently published eligible release.
    #[default]
    LatestPerPackage,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SkippedRoot {
    pub root: ReleaseKey,
    pub reason: String,
}

/// Versioned packages joined by resolved dependency edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageNetwork {
    pub at: Timestamp,
    pub nodes: BTreeSet<ReleaseKey>,
    pub edges: BTreeSet<(ReleaseKey, ReleaseKey)>,
    /// Releases with an edge into their own package.
    pub self_cycles: BTreeSet<ReleaseKey>,
}

impl PackageNetwork {
    pub fn empty(at: Timestamp) -> Self {
        PackageNetwork {
            at,
            nodes: BTreeSet::new(),
            edges: BTreeSet::new(),
            self_cycles: BTreeSet::new(),
        }
    }

    pub fn add_tree(&mut self, tree: &ResolvedTree) {
        self.nodes.extend(tree.nodes.iter().cloned());
        for (parent, kids) in &tree.children {
            for child in kids {
                if child.node.name == parent.name {
                    self.self_cycles.insert(parent.clone());
                }
                self.edges.insert((parent.clone(), child.node.clone()));
            }
        }
    }
}

/// Trees of every snapshot root and their union.
#[derive(Debug, Clone)]
pub struct NetworkBuild {
    pub network: PackageNetwork,
    /// Resolved tree per root package name.
    pub trees: BTreeMap<String, ResolvedTree>,
    pub skipped: Vec<SkippedRoot>,
}

pub fn snapshot_roots(snapshot: &Snapshot, policy: VersionPolicy) -> Vec<ReleaseKey> {
    match policy {
        VersionPolicy::LatestPerPackage => snapshot.roots().into_iter().map(Release::key).collect(),
    }
}

pub fn package_network_in(snapshot: &Snapshot, policy: VersionPolicy, features: &FeatureSelection) -> NetworkBuild {
    let mut network = PackageNetwork::empty(snapshot.at);
    let mut trees = BTreeMap::new();
    let mut skipped = Vec::new();
    for root in snapshot_roots(snapshot, policy) {
        let release = snapshot.release(&root).expect("roots are members");
        let result = release
            .select_features(features)
            .map_err(ResolveError::from)
            .and_then(|enabled| resolve_tree(snapshot, &root, &enabled));
        match result {
            Ok(tree) => {
                network.add_tree(&tree);
                trees.insert(root.name.clone(), tree);
            }
            Err(e) => {
                log::debug!("skipping root {root}: {e}");
                skipped.push(SkippedRoot {
                    root,
                    reason: e.to_string(),
                })
            }
        }
    }
    NetworkBuild {
        network,
        trees,
        skipped,
    }
}

pub fn package_network(index: &Index, at: Timestamp, policy: VersionPolicy, features: &FeatureSelection) -> NetworkBuild {
    package_network_in(&Snapshot::new(index, at), policy, features)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VersionChange {
    pub package: String,
    pub before: Vec<Version>,
    pub after: Vec<Version>,
}

impl fmt::Display for VersionChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |vs: &[Version]| vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("+");
        let before = if self.before.is_empty() { "-".to_owned() } else { join(&self.before) };
        let after = if self.after.is_empty() { "-".to_owned() } else { join(&self.after) };
        write!(f, "{}: {before}->{after}", self.package)
    }
}

/// Compares the package-to-versions multisets of two trees.
pub fn tree_changed(a: &ResolvedTree, b: &ResolvedTree) -> (bool, Vec<VersionChange>) {
    let (ma, mb) = (a.version_map(), b.version_map());
    let names: BTreeSet<&str> = ma.keys().chain(mb.keys()).copied().collect();
    let diff: Vec<VersionChange> = names
        .into_iter()
        .filter_map(|name| {
            let before: Vec<Version> = ma.get(name).into_iter().flatten().map(|v| (*v).clone()).collect();
            let after: Vec<Version> = mb.get(name).into_iter().flatten().map(|v| (*v).clone()).collect();
            (before != after).then(|| VersionChange {
                package: name.to_owned(),
                before,
                after,
            })
        })
        .collect();
    (!diff.is_empty(), diff)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeChange {
    pub root: ReleaseKey,
    pub changed: bool,
    pub changes: Vec<VersionChange>,
    /// Set when the root no longer resolves at the later time; counts as a
    /// change.
    pub error: Option<String>,
}

/// Roots whose tree is compared over time: snapshot roots at `at` with at
/// least one runtime dependency under their default features, and a
/// successful resolution.
pub fn drift_roots(snapshot: &Snapshot) -> Vec<(ReleaseKey, BTreeSet<String>, ResolvedTree)> {
    snapshot
        .roots()
        .into_iter()
        .filter_map(|release| {
            let features = release.default_features();
            release.runtime_deps_expanded(&features).next()?;
            let tree = resolve_tree(snapshot, &release.key(), &features).ok()?;
            Some((release.key(), features, tree))
        })
        .collect()
}

/// Re-resolves every drift root of `baseline` at `later` and reports which
/// trees differ.
pub fn changed_trees(index: &Index, baseline: Timestamp, later: Timestamp) -> Vec<TreeChange> {
    let base = Snapshot::new(index, baseline);
    let next = Snapshot::new(index, later);
    drift_roots(&base)
        .into_iter()
        .map(|(root, features, before)| match resolve_tree(&next, &root, &features) {
            Ok(after) => {
                let (changed, changes) = tree_changed(&before, &after);
                TreeChange {
                    root,
                    changed,
                    changes,
                    error: None,
                }
            }
            Err(e) => TreeChange {
                root,
                changed: true,
                changes: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Fraction of drift roots whose tree changed after each window. Zero when
/// there are no roots.
pub fn changed_fraction(index: &Index, baseline: Timestamp, windows: &[chrono::Duration]) -> Vec<f64> {
    windows
        .iter()
        .map(|window| {
            let changes = changed_trees(index, baseline, baseline + *window);
            if changes.is_empty() {
                0.0
            } else {
                changes.iter().filter(|c| c.changed).count() as f64 / changes.len() as f64
            }
        })
        .collect()
}
