//! Temporal network generation: per-root unification of call graphs along
//! resolved trees, cross-package linking of dynamic dispatch, and the merge
//! of every unified graph into one call-based dependency network.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::callgraph::{CallEdge, CallGraphStore, Dispatch, FunctionId, FunctionNode, NodeVersion, PackageCallGraph, Signature, TypeRef, Visibility};
use crate::index::{FeatureSelection, Index, ReleaseKey, Timestamp};
use crate::resolver::{package_network_in, NetworkBuild, ResolvedTree, SkippedRoot, Snapshot, VersionPolicy};
use crate::semver::Version;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnifyError {
    #[error("incomplete input for {root}: no call graph for {}", list(.missing))]
    IncompleteInput { root: ReleaseKey, missing: Vec<ReleaseKey> },
}

fn list(keys: &[ReleaseKey]) -> String {
    keys.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Implementation of an interface method, after version rewriting.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ImplEntry {
    pub interface: String,
    pub method: String,
    pub implementor: TypeRef,
    pub function: FunctionId,
}

/// Nodes keyed by canonical id, with the releases whose graphs mention them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeSet {
    pub nodes: BTreeMap<FunctionId, Arc<FunctionNode>>,
    pub provenance: BTreeMap<FunctionId, BTreeSet<ReleaseKey>>,
    /// Nodes whose visibility comes from their own package's graph.
    owned: BTreeSet<FunctionId>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a node. The declaring package's visibility wins; otherwise public
    /// wins. The outcome does not depend on insertion order.
    fn insert(&mut self, id: &FunctionId, node: &Arc<FunctionNode>, owned: bool, sources: &BTreeSet<ReleaseKey>) {
        match self.nodes.get_mut(id) {
            None => {
                self.nodes.insert(id.clone(), node.clone());
                if owned {
                    self.owned.insert(id.clone());
                }
            }
            Some(existing) => {
                let existing_owned = self.owned.contains(id);
                let replace = if owned != existing_owned {
                    owned
                } else {
                    existing.visibility == Visibility::Private && node.visibility == Visibility::Public
                };
                if replace {
                    *existing = node.clone();
                }
                if owned {
                    self.owned.insert(id.clone());
                }
            }
        }
        match self.provenance.get_mut(id) {
            Some(set) => set.extend(sources.iter().cloned()),
            None => {
                self.provenance.insert(id.clone(), sources.clone());
            }
        }
    }

    /// Restores a node read back from disk.
    pub fn insert_loaded(&mut self, id: FunctionId, node: Arc<FunctionNode>, owned: bool, sources: BTreeSet<ReleaseKey>) {
        if owned {
            self.owned.insert(id.clone());
        }
        self.provenance.insert(id.clone(), sources);
        self.nodes.insert(id, node);
    }

    fn merge(&mut self, other: &NodeSet) {
        for (id, node) in &other.nodes {
            let sources = other.provenance.get(id).cloned().unwrap_or_default();
            self.insert(id, node, other.owned.contains(id), &sources);
        }
    }
}

/// Fully resolved call graph of one root and its dependency tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnifiedGraph {
    pub root: ReleaseKey,
    pub nodes: NodeSet,
    pub edges: BTreeSet<CallEdge>,
    /// Interface method declarations: function to (interface id, method).
    pub declarations: BTreeMap<FunctionId, (String, String)>,
    pub impls: BTreeSet<ImplEntry>,
    /// Nodes dropped because a referenced package was absent from the tree.
    pub dropped: usize,
}

impl UnifiedGraph {
    fn empty(root: ReleaseKey) -> Self {
        UnifiedGraph {
            root,
            nodes: NodeSet::default(),
            edges: BTreeSet::new(),
            declarations: BTreeMap::new(),
            impls: BTreeSet::new(),
            dropped: 0,
        }
    }

    pub fn node(&self, id: &str) -> Option<&FunctionNode> {
        self.nodes.nodes.get(id).map(Arc::as_ref)
    }
}

/// A package call graph with unresolved versions filled in for one
/// substitution.
#[derive(Debug)]
struct Rewritten {
    owner: ReleaseKey,
    nodes: Vec<(FunctionId, Arc<FunctionNode>, bool)>,
    edges: Vec<CallEdge>,
    declarations: Vec<(FunctionId, String, String)>,
    impls: Vec<ImplEntry>,
    dropped: usize,
}

type Substitution = Vec<(String, Option<Version>)>;

fn unresolved_packages(graph: &PackageCallGraph) -> BTreeSet<&str> {
    fn add_type<'a>(t: &'a TypeRef, out: &mut BTreeSet<&'a str>) {
        if t.version == NodeVersion::Unresolved {
            if let Some(p) = &t.package {
                out.insert(p.as_str());
            }
        }
    }
    let mut out = BTreeSet::new();
    for f in graph.unresolved_section() {
        if f.version == NodeVersion::Unresolved {
            out.insert(f.package.as_str());
        }
        for t in f.signature.args.iter().chain(f.signature.ret.iter()) {
            add_type(t, &mut out);
        }
    }
    for d in &graph.interfaces {
        add_type(&d.interface, &mut out);
    }
    for r in &graph.impls {
        add_type(&r.interface, &mut out);
        add_type(&r.implementor, &mut out);
    }
    out
}

fn rewrite(graph: &PackageCallGraph, subst: &Substitution) -> Rewritten {
    let lookup = |pkg: &str| -> Option<Version> {
        subst
            .binary_search_by(|(p, _)| p.as_str().cmp(pkg))
            .ok()
            .and_then(|i| subst[i].1.clone())
    };
    let mut nodes = Vec::with_capacity(graph.functions().len());
    let mut ids: Vec<Option<FunctionId>> = Vec::with_capacity(graph.functions().len());
    let mut dropped = 0;
    for f in graph.functions() {
        match f.with_versions(&lookup) {
            Some(n) => {
                let id = n.canonical_id();
                let owned = n.package == graph.owner.name;
                ids.push(Some(id.clone()));
                nodes.push((id, Arc::new(n), owned));
            }
            None => {
                dropped += 1;
                ids.push(None);
            }
        }
    }
    let edges = graph
        .edges
        .iter()
        .filter_map(|&(a, b, dispatch)| {
            Some(CallEdge {
                caller: ids[a].clone()?,
                callee: ids[b].clone()?,
                dispatch,
            })
        })
        .collect();
    let mut declarations = Vec::new();
    for d in &graph.interfaces {
        let Some(iface) = d.interface.with_versions(&lookup) else { continue };
        let iface = iface.canonical();
        for (method, f) in &d.methods {
            if let Some(id) = &ids[*f] {
                declarations.push((id.clone(), iface.clone(), method.clone()));
            }
        }
    }
    let impls = graph
        .impls
        .iter()
        .filter_map(|r| {
            Some(ImplEntry {
                interface: r.interface.with_versions(&lookup)?.canonical(),
                method: r.method.clone(),
                implementor: r.implementor.with_versions(&lookup)?,
                function: ids[r.function].clone()?,
            })
        })
        .collect();
    Rewritten {
        owner: graph.owner.clone(),
        nodes,
        edges,
        declarations,
        impls,
        dropped,
    }
}

/// Unifies trees against a store, reusing rewritten graphs across roots.
pub struct Unifier<'s> {
    store: &'s CallGraphStore,
    cache: HashMap<(ReleaseKey, Substitution), Arc<Rewritten>>,
}

impl<'s> Unifier<'s> {
    pub fn new(store: &'s CallGraphStore) -> Self {
        Unifier {
            store,
            cache: HashMap::new(),
        }
    }

    /// Level-order merge of the tree's call graphs. Each parent's unresolved
    /// references to a package take the version resolved for that parent's
    /// dependency on it.
    pub fn unify(&mut self, tree: &ResolvedTree) -> Result<UnifiedGraph, UnifyError> {
        let order = tree.level_order();
        let missing: Vec<ReleaseKey> = order
            .iter()
            .filter(|k| self.store.get(k).is_none())
            .map(|k| (*k).clone())
            .collect();
        if !missing.is_empty() {
            return Err(UnifyError::IncompleteInput {
                root: tree.root.clone(),
                missing,
            });
        }
        let mut unified = UnifiedGraph::empty(tree.root.clone());
        for key in order {
            let graph = self.store.get(key).expect("checked above");
            let subst: Substitution = unresolved_packages(graph)
                .into_iter()
                .map(|pkg| {
                    let chosen = tree
                        .children_of(key)
                        .iter()
                        .filter(|c| c.node.name == pkg)
                        .map(|c| &c.node.version)
                        .max()
                        .cloned();
                    (pkg.to_owned(), chosen)
                })
                .collect();
            let rewritten = self
                .cache
                .entry((key.clone(), subst))
                .or_insert_with_key(|(_, subst)| Arc::new(rewrite(graph, subst)))
                .clone();
            merge_rewritten(&mut unified, &rewritten);
        }
        Ok(unified)
    }
}

fn merge_rewritten(unified: &mut UnifiedGraph, r: &Rewritten) {
    let sources = BTreeSet::from([r.owner.clone()]);
    for (id, node, owned) in &r.nodes {
        unified.nodes.insert(id, node, *owned, &sources);
    }
    unified.edges.extend(r.edges.iter().cloned());
    for (f, iface, method) in &r.declarations {
        unified.declarations.insert(f.clone(), (iface.clone(), method.clone()));
    }
    unified.impls.extend(r.impls.iter().cloned());
    unified.dropped += r.dropped;
}

pub fn unify_release(tree: &ResolvedTree, store: &CallGraphStore) -> Result<UnifiedGraph, UnifyError> {
    Unifier::new(store).unify(tree)
}

fn substitute_self(sig: &Signature, implementor: &TypeRef) -> Signature {
    let fix = |t: &TypeRef| if t.is_self() { implementor.clone() } else { t.clone() };
    Signature {
        args: sig.args.iter().map(fix).collect(),
        ret: sig.ret.as_ref().map(fix),
    }
}

/// Candidate targets of a dynamic call to `decl`: implementations of the
/// same interface (same version) and method whose signature matches the
/// declaration with `Self` bound to the implementing type.
pub fn dynamic_targets<'g>(unified: &'g UnifiedGraph, decl: &str) -> Vec<&'g FunctionId> {
    let Some((iface, method)) = unified.declarations.get(decl) else {
        return Vec::new();
    };
    let Some(decl_node) = unified.node(decl) else {
        return Vec::new();
    };
    unified
        .impls
        .iter()
        .filter(|i| &i.interface == iface && &i.method == method)
        .filter(|i| {
            unified.node(i.function.as_str()).is_some_and(|imp| {
                substitute_self(&decl_node.signature, &i.implementor)
                    == substitute_self(&imp.signature, &i.implementor)
            })
        })
        .map(|i| &i.function)
        .collect()
}

/// Adds an edge from every dynamic call site on an interface method to each
/// compatible implementation in the merged graph. Runs once; only adds.
pub fn link_dynamic(mut unified: UnifiedGraph) -> UnifiedGraph {
    let mut added = Vec::new();
    for e in unified.edges.iter().filter(|e| e.dispatch == Dispatch::Dynamic) {
        for target in dynamic_targets(&unified, e.callee.as_str()) {
            added.push(CallEdge {
                caller: e.caller.clone(),
                callee: target.clone(),
                dispatch: Dispatch::Dynamic,
            });
        }
    }
    unified.edges.extend(added);
    unified
}

/// The call-based dependency network at one point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cdn {
    pub at: Timestamp,
    pub nodes: NodeSet,
    pub edges: BTreeSet<CallEdge>,
    /// Release to the functions it defines.
    pub package_index: BTreeMap<ReleaseKey, BTreeSet<FunctionId>>,
}

impl Cdn {
    pub fn empty(at: Timestamp) -> Self {
        Cdn {
            at,
            nodes: NodeSet::default(),
            edges: BTreeSet::new(),
            package_index: BTreeMap::new(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&FunctionNode> {
        self.nodes.nodes.get(id).map(Arc::as_ref)
    }

    /// Set union with a unified graph.
    pub fn merge(&mut self, unified: &UnifiedGraph) {
        for (id, node) in &unified.nodes.nodes {
            if !self.nodes.nodes.contains_key(id) {
                if let Some(release) = node.release() {
                    self.package_index.entry(release).or_default().insert(id.clone());
                }
            }
        }
        self.nodes.merge(&unified.nodes);
        self.edges.extend(unified.edges.iter().cloned());
    }

    pub fn from_unified<'a>(at: Timestamp, graphs: impl IntoIterator<Item = &'a UnifiedGraph>) -> Self {
        let mut cdn = Cdn::empty(at);
        for g in graphs {
            cdn.merge(g);
        }
        cdn
    }
}

/// Size of one root's unified graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UnifiedStats {
    pub nodes: usize,
    pub edges: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct CdnBuild {
    pub network: NetworkBuild,
    pub cdn: Cdn,
    /// Roots resolved but not unified.
    pub skipped: Vec<SkippedRoot>,
    pub unified: BTreeMap<String, UnifiedStats>,
}

/// Unifies and links every tree of `network`, merging into one CDN.
pub fn build_cdn_from(network: NetworkBuild, store: &CallGraphStore) -> CdnBuild {
    let mut unifier = Unifier::new(store);
    let mut cdn = Cdn::empty(network.network.at);
    let mut skipped = Vec::new();
    let mut unified = BTreeMap::new();
    for (name, tree) in &network.trees {
        match unifier.unify(tree) {
            Ok(g) => {
                let g = link_dynamic(g);
                unified.insert(
                    name.clone(),
                    UnifiedStats {
                        nodes: g.nodes.len(),
                        edges: g.edges.len(),
                        dropped: g.dropped,
                    },
                );
                cdn.merge(&g);
            }
            Err(e) => {
                log::debug!("skipping root {}: {e}", tree.root);
                skipped.push(SkippedRoot {
                    root: tree.root.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    CdnBuild {
        network,
        cdn,
        skipped,
        unified,
    }
}

pub fn build_cdn_in(
    snapshot: &Snapshot,
    store: &CallGraphStore,
    policy: VersionPolicy,
    features: &FeatureSelection,
) -> CdnBuild {
    build_cdn_from(package_network_in(snapshot, policy, features), store)
}

pub fn build_cdn(
    index: &Index,
    at: Timestamp,
    store: &CallGraphStore,
    policy: VersionPolicy,
    features: &FeatureSelection,
) -> CdnBuild {
    build_cdn_in(&Snapshot::new(index, at), store, policy, features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::resolver::resolve_tree;

    fn tree(index: &Index, at: Timestamp, root: &ReleaseKey) -> ResolvedTree {
        let snap = Snapshot::new(index, at);
        let enabled = snap.release(root).unwrap().default_features();
        resolve_tree(&snap, root, &enabled).unwrap()
    }

    #[test]
    fn fills_unresolved_from_tree() {
        let fx = fixtures::figure2();
        let app = fixtures::key("App", "1.0.0");
        let g = unify_release(&tree(&fx.index, fx.at, &app), &fx.store).unwrap();
        assert!(g.node("io::crates::Lib2v0.2.0::used").is_some());
        assert!(g.nodes.nodes.keys().all(|id| !id.as_str().contains("<?>")));
        assert_eq!(g.nodes.len(), 7);
        assert_eq!(g.edges.len(), 5);
    }

    #[test]
    fn fully_resolved_graph_is_identity() {
        let fx = fixtures::figure2();
        let lib2 = fixtures::key("Lib2", "0.2.0");
        let g = unify_release(&tree(&fx.index, fx.at, &lib2), &fx.store).unwrap();
        let graph = fx.store.get(&lib2).unwrap();
        let expected: BTreeSet<_> = graph.functions().iter().map(FunctionNode::canonical_id).collect();
        assert_eq!(g.nodes.nodes.keys().cloned().collect::<BTreeSet<_>>(), expected);
        assert_eq!(g.edges.len(), graph.edges.len());
    }

    #[test]
    fn missing_graph_is_incomplete_input() {
        let fx = fixtures::figure2();
        let app = fixtures::key("App", "1.0.0");
        let mut store = CallGraphStore::new();
        store.insert(fx.store.get(&app).unwrap().clone());
        let err = unify_release(&tree(&fx.index, fx.at, &app), &store).unwrap_err();
        let UnifyError::IncompleteInput { missing, .. } = err;
        assert_eq!(missing, vec![fixtures::key("Lib1", "3.2.0"), fixtures::key("Lib2", "0.2.0")]);
    }

    #[test]
    fn serde_dynamic_call_linked() {
        let fx = fixtures::serde_scenario();
        let a = fixtures::key("A", "1.0.0");
        let g = unify_release(&tree(&fx.index, fx.at, &a), &fx.store).unwrap();
        let bar = "io::crates::Cv1.0.0::bar(io::crates::serdev1.0.0::Serialize)";
        let target = "io::crates::Bv1.0.0::Foo::serialize(io::crates::Bv1.0.0::Foo)";
        let has = |g: &UnifiedGraph| g.edges.iter().any(|e| e.caller.as_str() == bar && e.callee.as_str() == target);
        assert!(!has(&g));
        let before = g.edges.clone();
        let linked = link_dynamic(g);
        assert!(has(&linked));
        assert!(before.is_subset(&linked.edges));
    }

    #[test]
    fn no_implementations_leaves_graph() {
        let fx = fixtures::serde_scenario();
        let c = fixtures::key("C", "1.0.0");
        let g = unify_release(&tree(&fx.index, fx.at, &c), &fx.store).unwrap();
        assert_eq!(link_dynamic(g.clone()), g);
    }

    #[test]
    fn fig2_cdn() {
        let fx = fixtures::figure2();
        let build = build_cdn(&fx.index, fx.at, &fx.store, VersionPolicy::default(), &FeatureSelection::Default);
        assert!(build.skipped.is_empty());
        assert_eq!(build.cdn.nodes.len(), 7);
        assert_eq!(build.cdn.edges.len(), 5);
        let unused = "io::crates::Lib2v0.2.0::unused";
        assert!(build.cdn.node(unused).is_some());
        assert!(build.cdn.edges.iter().all(|e| e.callee.as_str() != unused));
    }

    #[test]
    fn empty_mirror_gives_empty_cdn() {
        let fx = fixtures::figure2();
        let early = fx.at - chrono::Duration::days(10_000);
        let build = build_cdn(&fx.index, early, &fx.store, VersionPolicy::default(), &FeatureSelection::Default);
        assert!(build.cdn.nodes.is_empty() && build.cdn.edges.is_empty());
    }

    #[test]
    fn visibility_merge_prefers_owner() {
        let make = |vis| {
            Arc::new(FunctionNode {
                registry: "io::crates".into(),
                package: "p".into(),
                version: NodeVersion::Resolved(Version::new(1, 0, 0)),
                path: "f".into(),
                signature: Signature::default(),
                visibility: vis,
            })
        };
        let id = make(Visibility::Private).canonical_id();
        let none = BTreeSet::new();
        for order in [[true, false], [false, true]] {
            let mut set = NodeSet::default();
            for owned in order {
                let vis = if owned { Visibility::Private } else { Visibility::Public };
                set.insert(&id, &make(vis), owned, &none);
            }
            assert_eq!(set.nodes[&id].visibility, Visibility::Private);
        }
    }
}
