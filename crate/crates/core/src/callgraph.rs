//! Per-package call graphs and their annotation with version-qualified,
//! globally unique function identifiers.
//!
//! Call-graph files are JSON documents:
//!
//! ```text
//! {
//!   "registry": "io::crates",                 // optional, this is the default
//!   "package": "App", "version": "0.1.0",     // optional owner
//!   "functions": [
//!     {"id": 0, "package": "App", "version": null, "path": "main",
//!      "visibility": "public",
//!      "signature": {"args": [{"package": null, "version": null, "path": "u32"}], "ret": null}}
//!   ],
//!   "edges": [{"caller": 0, "callee": 1, "dispatch": "static"}],
//!   "type_hierarchy": {
//!     "interfaces": [{"type": {"package": "serde", "version": null, "path": "Serialize"},
//!                     "methods": [{"name": "serialize", "function": 3}]}],
//!     "impls": [{"interface": {...}, "implementor": {...}, "method": "serialize", "function": 4}]
//!   }
//! }
//! ```
//!
//! `dispatch` is one of `static`, `dynamic`, `macro`. Type references with a
//! `null` package are primitives (or `Self` in interface declarations).
//! Functions and types from the standard library (`std`, `core`, `alloc`,
//! `proc_macro`, `test`) need no dependency entry; `extern` marks foreign
//! code that belongs to no package.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{DepKind, DependencySpec, Index, ReleaseKey};
use crate::semver::Version;

pub const DEFAULT_REGISTRY: &str = "io::crates";
pub const EXTERN_PACKAGE: &str = "extern";
pub const STD_PACKAGES: &[&str] = &["std", "core", "alloc", "proc_macro", "test"];
pub const UNRESOLVED_TOKEN: &str = "<?>";

pub fn is_std_package(name: &str) -> bool {
    STD_PACKAGES.contains(&name)
}

#[derive(Debug, Error)]
pub enum CallGraphError {
    #[error("call graph parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("call graph {locus}: {message}")]
    Malformed { locus: String, message: String },
    #[error("function {function} (`{path}`) references package `{package}`, which is neither {owner} nor one of its dependencies")]
    Dangling {
        owner: ReleaseKey,
        function: u64,
        path: String,
        package: String,
    },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<CallGraphError>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Version slot of an annotated identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeVersion {
    Resolved(Version),
    /// Dependency declared with a dynamic requirement; filled in during
    /// unification.
    Unresolved,
    /// Primitives, standard library and `extern` code.
    Unversioned,
}

impl NodeVersion {
    pub fn resolved(&self) -> Option<&Version> {
        match self {
            NodeVersion::Resolved(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    #[default]
    Public,
    Private,
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::Public => "public",
            Visibility::Private => "private",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispatch {
    Static,
    Dynamic,
    Macro,
}

impl Dispatch {
    pub const ALL: [Dispatch; 3] = [Dispatch::Static, Dispatch::Dynamic, Dispatch::Macro];
}

impl fmt::Display for Dispatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dispatch::Static => "static",
            Dispatch::Dynamic => "dynamic",
            Dispatch::Macro => "macro",
        })
    }
}

impl std::str::FromStr for Dispatch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Dispatch::Static),
            "dynamic" => Ok(Dispatch::Dynamic),
            "macro" => Ok(Dispatch::Macro),
            other => Err(format!("unknown dispatch kind `{other}`")),
        }
    }
}

/// Annotated reference to a type. `package: None` is a primitive or `Self`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeRef {
    pub registry: String,
    pub package: Option<String>,
    pub version: NodeVersion,
    pub path: String,
}

impl TypeRef {
    pub fn primitive(path: impl Into<String>) -> Self {
        TypeRef {
            registry: String::new(),
            package: None,
            version: NodeVersion::Unversioned,
            path: path.into(),
        }
    }

    pub fn is_self(&self) -> bool {
        self.package.is_none() && self.path == "Self"
    }

    fn render(&self, out: &mut String, with_versions: bool) {
        match &self.package {
            None => out.push_str(&self.path),
            Some(pkg) => {
                write_qualifier(out, &self.registry, pkg, &self.version, with_versions);
                out.push_str("::");
                out.push_str(&self.path);
            }
        }
    }

    pub fn canonical(&self) -> String {
        let mut s = String::new();
        self.render(&mut s, true);
        s
    }

    pub fn with_versions(&self, lookup: &dyn Fn(&str) -> Option<Version>) -> Option<TypeRef> {
        match (&self.package, &self.version) {
            (Some(pkg), NodeVersion::Unresolved) => Some(TypeRef {
                version: NodeVersion::Resolved(lookup(pkg)?),
                ..self.clone()
            }),
            _ => Some(self.clone()),
        }
    }
}

fn write_qualifier(out: &mut String, registry: &str, package: &str, version: &NodeVersion, with_versions: bool) {
    if is_std_package(package) || package == EXTERN_PACKAGE {
        out.push_str(package);
        return;
    }
    out.push_str(registry);
    out.push_str("::");
    out.push_str(package);
    if with_versions {
        match version {
            NodeVersion::Resolved(v) => {
                let _ = write!(out, "v{v}");
            }
            NodeVersion::Unresolved => out.push_str(UNRESOLVED_TOKEN),
            NodeVersion::Unversioned => {}
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub args: Vec<TypeRef>,
    pub ret: Option<TypeRef>,
}

impl Signature {
    pub fn is_empty(&self) -> bool {
        self.args.is_empty() && self.ret.is_none()
    }

    fn render(&self, out: &mut String, with_versions: bool) {
        if self.is_empty() {
            return;
        }
        out.push('(');
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            arg.render(out, with_versions);
        }
        out.push(')');
        if let Some(ret) = &self.ret {
            out.push_str("->");
            ret.render(out, with_versions);
        }
    }

    fn types(&self) -> impl Iterator<Item = &TypeRef> {
        self.args.iter().chain(self.ret.iter())
    }

    fn with_versions(&self, lookup: &dyn Fn(&str) -> Option<Version>) -> Option<Signature> {
        Some(Signature {
            args: self
                .args
                .iter()
                .map(|a| a.with_versions(lookup))
                .collect::<Option<Vec<_>>>()?,
            ret: match &self.ret {
                Some(r) => Some(r.with_versions(lookup)?),
                None => None,
            },
        })
    }
}

/// Canonical function identifier text; the deduplication key in merged
/// graphs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunctionId(Arc<str>);

impl FunctionId {
    pub fn new(text: &str) -> Self {
        FunctionId(Arc::from(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for FunctionId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A call between two canonical identifiers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallEdge {
    pub caller: FunctionId,
    pub callee: FunctionId,
    pub dispatch: Dispatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionNode {
    pub registry: String,
    pub package: String,
    pub version: NodeVersion,
    pub path: String,
    pub signature: Signature,
    pub visibility: Visibility,
}

impl FunctionNode {
    fn render(&self, with_versions: bool) -> String {
        let mut s = String::with_capacity(self.registry.len() + self.package.len() + self.path.len() + 16);
        write_qualifier(&mut s, &self.registry, &self.package, &self.version, with_versions);
        s.push_str("::");
        s.push_str(&self.path);
        self.signature.render(&mut s, with_versions);
        s
    }

    /// `registry::packagevX.Y.Z::path(args)->ret`, with `<?>` in place of an
    /// unresolved version and the signature omitted when empty.
    pub fn canonical_id(&self) -> FunctionId {
        FunctionId::new(&self.render(true))
    }

    /// The identifier with every version stripped.
    pub fn unversioned_id(&self) -> String {
        self.render(false)
    }

    pub fn is_resolved(&self) -> bool {
        self.version != NodeVersion::Unresolved
            && self.signature.types().all(|t| t.version != NodeVersion::Unresolved)
    }

    pub fn is_extern(&self) -> bool {
        self.package == EXTERN_PACKAGE
    }

    /// The release this function belongs to, when it has a concrete version.
    pub fn release(&self) -> Option<ReleaseKey> {
        self.version
            .resolved()
            .map(|v| ReleaseKey::new(self.package.clone(), v.clone()))
    }

    /// Fills unresolved version slots from `lookup`; `None` when a needed
    /// package has no version available.
    pub fn with_versions(&self, lookup: &dyn Fn(&str) -> Option<Version>) -> Option<FunctionNode> {
        let version = match &self.version {
            NodeVersion::Unresolved => NodeVersion::Resolved(lookup(&self.package)?),
            other => other.clone(),
        };
        Some(FunctionNode {
            version,
            signature: self.signature.with_versions(lookup)?,
            ..self.clone()
        })
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTypeRef {
    pub package: Option<String>,
    #[serde(default)]
    pub version: Option<Version>,
    pub path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSignature {
    #[serde(default)]
    pub args: Vec<RawTypeRef>,
    #[serde(default)]
    pub ret: Option<RawTypeRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFunction {
    pub id: u64,
    pub package: String,
    #[serde(default)]
    pub version: Option<Version>,
    pub path: String,
    #[serde(default)]
    pub visibility: Visibility,
    #[serde(default)]
    pub signature: RawSignature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdge {
    pub caller: u64,
    pub callee: u64,
    pub dispatch: Dispatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMethod {
    pub name: String,
    pub function: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInterface {
    #[serde(rename = "type")]
    pub interface: RawTypeRef,
    #[serde(default)]
    pub methods: Vec<RawMethod>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawImpl {
    pub interface: RawTypeRef,
    pub implementor: RawTypeRef,
    pub method: String,
    pub function: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTypeHierarchy {
    #[serde(default)]
    pub interfaces: Vec<RawInterface>,
    #[serde(default)]
    pub impls: Vec<RawImpl>,
}

fn default_registry() -> String {
    DEFAULT_REGISTRY.to_owned()
}

/// A call graph as emitted by a generator, before annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCallGraph {
    #[serde(default = "default_registry")]
    pub registry: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub package: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<Version>,
    #[serde(default)]
    pub functions: Vec<RawFunction>,
    #[serde(default)]
    pub edges: Vec<RawEdge>,
    #[serde(default)]
    pub type_hierarchy: RawTypeHierarchy,
}

impl Default for RawCallGraph {
    fn default() -> Self {
        RawCallGraph {
            registry: default_registry(),
            package: None,
            version: None,
            functions: Vec::new(),
            edges: Vec::new(),
            type_hierarchy: RawTypeHierarchy::default(),
        }
    }
}

impl RawCallGraph {
    pub fn dispatch_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for e in &self.edges {
            counts[e.dispatch as usize] += 1;
        }
        counts
    }

    fn check(&self) -> Result<(), CallGraphError> {
        let mut ids = BTreeSet::new();
        for (i, f) in self.functions.iter().enumerate() {
            if !ids.insert(f.id) {
                return Err(CallGraphError::Malformed {
                    locus: format!("function #{i}"),
                    message: format!("duplicate function id {}", f.id),
                });
            }
        }
        let known = |id: u64, locus: String| {
            if ids.contains(&id) {
                Ok(())
            } else {
                Err(CallGraphError::Malformed {
                    locus,
                    message: format!("unknown function id {id}"),
                })
            }
        };
        for (i, e) in self.edges.iter().enumerate() {
            known(e.caller, format!("edge #{i} caller"))?;
            known(e.callee, format!("edge #{i} callee"))?;
        }
        for (i, iface) in self.type_hierarchy.interfaces.iter().enumerate() {
            for m in &iface.methods {
                known(m.function, format!("interface #{i} method `{}`", m.name))?;
            }
        }
        for (i, imp) in self.type_hierarchy.impls.iter().enumerate() {
            known(imp.function, format!("impl #{i}"))?;
        }
        Ok(())
    }
}

/// Parses and checks a call-graph document.
pub fn load_callgraph(mut reader: impl Read) -> Result<RawCallGraph, CallGraphError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    if text.trim().is_empty() {
        return Ok(RawCallGraph::default());
    }
    let raw: RawCallGraph = serde_json::from_str(&text).map_err(|e| CallGraphError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.check()?;
    Ok(raw)
}

pub fn load_callgraph_file(path: &Path) -> Result<RawCallGraph, CallGraphError> {
    File::open(path)
        .map_err(CallGraphError::from)
        .and_then(|f| load_callgraph(BufReader::new(f)))
        .map_err(|e| CallGraphError::File {
            path: path.to_owned(),
            source: Box::new(e),
        })
}

pub fn write_callgraph(raw: &RawCallGraph, out: impl Write) -> io::Result<()> {
    serde_json::to_writer_pretty(out, raw).map_err(io::Error::from)
}

// ---------------------------------------------------------------------------
// Annotation

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceDecl {
    pub interface: TypeRef,
    /// Method name and the function node declaring it.
    pub methods: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplRecord {
    pub interface: TypeRef,
    pub implementor: TypeRef,
    pub method: String,
    pub function: usize,
}

/// An annotated call graph of one release. Functions are stored resolved
/// section first; edges and type-hierarchy entries index into `functions`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageCallGraph {
    pub owner: ReleaseKey,
    pub registry: String,
    functions: Vec<FunctionNode>,
    resolved_len: usize,
    pub edges: Vec<(usize, usize, Dispatch)>,
    pub interfaces: Vec<InterfaceDecl>,
    pub impls: Vec<ImplRecord>,
    /// Standard-library functions removed during annotation.
    pub dropped_std: usize,
}

impl PackageCallGraph {
    pub fn functions(&self) -> &[FunctionNode] {
        &self.functions
    }

    pub fn resolved_section(&self) -> &[FunctionNode] {
        &self.functions[..self.resolved_len]
    }

    pub fn unresolved_section(&self) -> &[FunctionNode] {
        &self.functions[self.resolved_len..]
    }

    /// Back to file form, with the annotated versions written out.
    pub fn to_raw(&self) -> RawCallGraph {
        let raw_type = |t: &TypeRef| RawTypeRef {
            package: t.package.clone(),
            version: t.version.resolved().cloned(),
            path: t.path.clone(),
        };
        RawCallGraph {
            registry: self.registry.clone(),
            package: Some(self.owner.name.clone()),
            version: Some(self.owner.version.clone()),
            functions: self
                .functions
                .iter()
                .enumerate()
                .map(|(i, f)| RawFunction {
                    id: i as u64,
                    package: f.package.clone(),
                    version: f.version.resolved().cloned(),
                    path: f.path.clone(),
                    visibility: f.visibility,
                    signature: RawSignature {
                        args: f.signature.args.iter().map(raw_type).collect(),
                        ret: f.signature.ret.as_ref().map(raw_type),
                    },
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b, dispatch)| RawEdge {
                    caller: a as u64,
                    callee: b as u64,
                    dispatch,
                })
                .collect(),
            type_hierarchy: RawTypeHierarchy {
                interfaces: self
                    .interfaces
                    .iter()
                    .map(|d| RawInterface {
                        interface: raw_type(&d.interface),
                        methods: d
                            .methods
                            .iter()
                            .map(|(name, f)| RawMethod {
                                name: name.clone(),
                                function: *f as u64,
                            })
                            .collect(),
                    })
                    .collect(),
                impls: self
                    .impls
                    .iter()
                    .map(|r| RawImpl {
                        interface: raw_type(&r.interface),
                        implementor: raw_type(&r.implementor),
                        method: r.method.clone(),
                        function: r.function as u64,
                    })
                    .collect(),
            },
        }
    }
}

enum PackageMapping {
    Drop,
    Version(NodeVersion),
}

struct Annotator<'a> {
    owner: &'a ReleaseKey,
    /// Dependency name to its pinned version, or `None` for dynamic
    /// requirements.
    deps: HashMap<&'a str, Option<Version>>,
}

impl<'a> Annotator<'a> {
    fn new(owner: &'a ReleaseKey, deps: &'a [DependencySpec]) -> Self {
        let mut map: HashMap<&str, Option<Version>> = HashMap::new();
        for d in deps {
            let pinned = d.req.pinned_version();
            map.entry(d.name.as_str())
                .and_modify(|cur| {
                    if *cur != pinned {
                        *cur = None;
                    }
                })
                .or_insert(pinned);
        }
        Annotator { owner, deps: map }
    }

    fn map_package(&self, package: &str) -> Option<PackageMapping> {
        if is_std_package(package) {
            Some(PackageMapping::Drop)
        } else if package == EXTERN_PACKAGE {
            Some(PackageMapping::Version(NodeVersion::Unversioned))
        } else if package == self.owner.name {
            Some(PackageMapping::Version(NodeVersion::Resolved(self.owner.version.clone())))
        } else {
            self.deps.get(package).map(|pinned| {
                PackageMapping::Version(match pinned {
                    Some(v) => NodeVersion::Resolved(v.clone()),
                    None => NodeVersion::Unresolved,
                })
            })
        }
    }

    fn type_ref(&self, registry: &str, raw: &RawTypeRef) -> Result<TypeRef, String> {
        let Some(pkg) = &raw.package else {
            return Ok(TypeRef::primitive(raw.path.clone()));
        };
        let version = match self.map_package(pkg) {
            None => return Err(pkg.clone()),
            Some(PackageMapping::Drop) => NodeVersion::Unversioned,
            Some(PackageMapping::Version(v)) => v,
        };
        Ok(TypeRef {
            registry: registry.to_owned(),
            package: Some(pkg.clone()),
            version,
            path: raw.path.clone(),
        })
    }
}

/// Qualifies every identifier in `raw` with registry, package and version:
/// local functions get the owner's version, dependencies pinned with
/// `=X.Y.Z` get that version, other dependencies are left unresolved.
/// Standard-library functions and the edges touching them are removed.
pub fn annotate(
    raw: &RawCallGraph,
    owner: &ReleaseKey,
    deps: &[DependencySpec],
) -> Result<PackageCallGraph, CallGraphError> {
    raw.check()?;
    let annotator = Annotator::new(owner, deps);
    let registry = raw.registry.as_str();
    let dangling = |f: &RawFunction, package: String| CallGraphError::Dangling {
        owner: owner.clone(),
        function: f.id,
        path: f.path.clone(),
        package,
    };

    // Annotate nodes, merging any that collapse onto the same identifier.
    let mut nodes: Vec<FunctionNode> = Vec::new();
    let mut by_id: HashMap<FunctionId, usize> = HashMap::new();
    let mut raw_to_node: HashMap<u64, usize> = HashMap::new();
    let mut dropped_std = 0;
    for f in &raw.functions {
        let version = match annotator.map_package(&f.package) {
            None => return Err(dangling(f, f.package.clone())),
            Some(PackageMapping::Drop) => {
                dropped_std += 1;
                continue;
            }
            Some(PackageMapping::Version(v)) => v,
        };
        let signature = Signature {
            args: f
                .signature
                .args
                .iter()
                .map(|t| annotator.type_ref(registry, t))
                .collect::<Result<_, _>>()
                .map_err(|p| dangling(f, p))?,
            ret: f
                .signature
                .ret
                .as_ref()
                .map(|t| annotator.type_ref(registry, t))
                .transpose()
                .map_err(|p| dangling(f, p))?,
        };
        let node = FunctionNode {
            registry: registry.to_owned(),
            package: f.package.clone(),
            version,
            path: f.path.clone(),
            signature,
            visibility: f.visibility,
        };
        let idx = *by_id.entry(node.canonical_id()).or_insert_with(|| {
            nodes.push(node);
            nodes.len() - 1
        });
        raw_to_node.insert(f.id, idx);
    }

    // Resolved section first, keeping relative order inside each section.
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| !nodes[i].is_resolved());
    let mut position = vec![0; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let resolved_len = order.iter().take_while(|&&i| nodes[i].is_resolved()).count();
    let mut slots: Vec<Option<FunctionNode>> = nodes.into_iter().map(Some).collect();
    let functions: Vec<FunctionNode> = order.iter().map(|&i| slots[i].take().expect("each node once")).collect();
    let remap = |raw_id: u64| raw_to_node.get(&raw_id).map(|&i| position[i]);

    let mut seen_edges = BTreeSet::new();
    let edges = raw
        .edges
        .iter()
        .filter_map(|e| Some((remap(e.caller)?, remap(e.callee)?, e.dispatch)))
        .filter(|e| seen_edges.insert(*e))
        .collect();

    let type_err = |what: String, package: String| CallGraphError::Dangling {
        owner: owner.clone(),
        function: u64::MAX,
        path: what,
        package,
    };
    let mut interfaces = Vec::new();
    for d in &raw.type_hierarchy.interfaces {
        let interface = annotator
            .type_ref(registry, &d.interface)
            .map_err(|p| type_err(format!("interface {}", d.interface.path), p))?;
        let methods = d
            .methods
            .iter()
            .filter_map(|m| Some((m.name.clone(), remap(m.function)?)))
            .collect();
        interfaces.push(InterfaceDecl { interface, methods });
    }
    let mut impls = Vec::new();
    for r in &raw.type_hierarchy.impls {
        let Some(function) = remap(r.function) else { continue };
        let interface = annotator
            .type_ref(registry, &r.interface)
            .map_err(|p| type_err(format!("impl of {}", r.interface.path), p))?;
        let implementor = annotator
            .type_ref(registry, &r.implementor)
            .map_err(|p| type_err(format!("implementor {}", r.implementor.path), p))?;
        impls.push(ImplRecord {
            interface,
            implementor,
            method: r.method.clone(),
            function,
        });
    }

    Ok(PackageCallGraph {
        owner: owner.clone(),
        registry: registry.to_owned(),
        functions,
        resolved_len,
        edges,
        interfaces,
        impls,
        dropped_std,
    })
}

/// Annotated call graphs keyed by release.
#[derive(Debug, Clone, Default)]
pub struct CallGraphStore {
    graphs: BTreeMap<ReleaseKey, PackageCallGraph>,
}

/// A store entry that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct StoreIssue {
    pub path: String,
    pub reason: String,
}

impl CallGraphStore {
    pub fn new() -> Self {
        CallGraphStore::default()
    }

    pub fn insert(&mut self, graph: PackageCallGraph) {
        self.graphs.insert(graph.owner.clone(), graph);
    }

    pub fn get(&self, release: &ReleaseKey) -> Option<&PackageCallGraph> {
        self.graphs.get(release)
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PackageCallGraph> {
        self.graphs.values()
    }

    /// Annotates raw graphs against the index releases they belong to.
    pub fn annotate_all(
        index: &Index,
        raws: impl IntoIterator<Item = (ReleaseKey, RawCallGraph)>,
    ) -> (CallGraphStore, Vec<StoreIssue>) {
        let mut store = CallGraphStore::new();
        let mut issues = Vec::new();
        for (key, raw) in raws {
            let Some(release) = index.get(&key) else {
                issues.push(StoreIssue {
                    path: key.to_string(),
                    reason: "release not in index".into(),
                });
                continue;
            };
            let deps: Vec<DependencySpec> = release
                .deps
                .iter()
                .filter(|d| d.kind == DepKind::Normal)
                .cloned()
                .collect();
            match annotate(&raw, &key, &deps) {
                Ok(g) => store.insert(g),
                Err(e) => issues.push(StoreIssue {
                    path: key.to_string(),
                    reason: e.to_string(),
                }),
            }
        }
        issues.sort();
        (store, issues)
    }

    /// Loads `<dir>/<package>/<version>.json` files and annotates them.
    /// Unreadable or dangling graphs are reported, not fatal.
    pub fn load_dir(dir: &Path, index: &Index) -> io::Result<(CallGraphStore, Vec<StoreIssue>)> {
        let mut raws = Vec::new();
        let mut issues = Vec::new();
        let mut packages: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        packages.sort_by_key(|e| e.file_name());
        for pkg in packages.into_iter().filter(|e| e.path().is_dir()) {
            let name = pkg.file_name().to_string_lossy().into_owned();
            let mut files: Vec<_> = fs::read_dir(pkg.path())?.collect::<Result<_, _>>()?;
            files.sort_by_key(|e| e.file_name());
            for file in files {
                let path = file.path();
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                let version = match Version::parse(stem) {
                    Ok(v) => v,
                    Err(e) => {
                        issues.push(StoreIssue {
                            path: path.display().to_string(),
                            reason: e.to_string(),
                        });
                        continue;
                    }
                };
                match load_callgraph_file(&path) {
                    Ok(raw) => raws.push((ReleaseKey::new(name.clone(), version), raw)),
                    Err(e) => issues.push(StoreIssue {
                        path: path.display().to_string(),
                        reason: e.to_string(),
                    }),
                }
            }
        }
        let (store, mut more) = Self::annotate_all(index, raws);
        issues.append(&mut more);
        issues.sort();
        Ok((store, issues))
    }
}

/// Writes raw graphs in the store directory layout.
pub fn write_store_dir<'a>(
    dir: &Path,
    graphs: impl IntoIterator<Item = (&'a ReleaseKey, &'a RawCallGraph)>,
) -> io::Result<()> {
    for (key, raw) in graphs {
        let pkg_dir = dir.join(&key.name);
        fs::create_dir_all(&pkg_dir)?;
        let file = File::create(pkg_dir.join(format!("{}.json", key.version)))?;
        let mut w = io::BufWriter::new(file);
        write_callgraph(raw, &mut w)?;
        w.flush()?;
    }
    Ok(())
}
