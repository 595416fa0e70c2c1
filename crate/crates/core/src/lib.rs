//! Call-based dependency networks for a package registry.
//!
//! The pipeline reads a registry index and per-release call graphs, resolves
//! every release retroactively at chosen instants, stitches the call graphs
//! of each resolved tree into one versioned function graph, and measures the
//! result against the plain package-level network.
//!
//! ```
//! use callnet::{build_cdn, call_summary, fixtures, FeatureSelection, VersionPolicy};
//!
//! let fx = fixtures::figure2();
//! let build = build_cdn(&fx.index, fx.at, &fx.store, VersionPolicy::default(), &FeatureSelection::Default);
//! let summary = call_summary(&build.cdn);
//! assert_eq!((summary.intra.total(), summary.inter.total()), (3, 2));
//! ```

pub mod callgraph;
pub mod export;
pub mod fixtures;
pub mod index;
pub mod metrics;
pub mod resolver;
pub mod semver;
pub mod synth;
pub mod unify;

pub use callgraph::{
    annotate, load_callgraph, CallEdge, CallGraphError, CallGraphStore, Dispatch, FunctionId, FunctionNode,
    PackageCallGraph, RawCallGraph, Visibility,
};
pub use index::{
    load_index, load_index_files, mirror_at, parse_timestamp, validate, FeatureSelection, Index, IndexError, Release,
    ReleaseKey, Timestamp, ValidationReport,
};
pub use metrics::{
    api_call_counts, call_based_view, call_summary, coexistence_bloat, compare_networks, degree_distribution,
    dependency_counts, dependent_counts, function_reach, metadata_view, reach, spearman, CallIndex, MetricsError,
};
pub use resolver::{
    changed_fraction, changed_trees, package_network, resolve_tree, tree_changed, NetworkBuild, PackageNetwork,
    ResolveError, ResolvedTree, Snapshot, VersionPolicy,
};
pub use semver::{CompatClass, Constraint, Version};
pub use unify::{build_cdn, link_dynamic, unify_release, Cdn, CdnBuild, UnifiedGraph, UnifyError};
