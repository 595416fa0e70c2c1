//! Delimited-text and DOT serializations of package and call networks, and
//! the loaders that read them back.
//!
//! | file | columns |
//! |------|---------|
//! | `pdn_nodes.csv` | package, version |
//! | `pdn_edges.csv` | from_package, from_version, to_package, to_version |
//! | `pdn_trees.csv` | root_package, root_version, parent_package, parent_version, child_package, child_version, req, spec |
//! | `cdn_nodes.csv` | id, package, version, visibility, registry, path, signature, sources |
//! | `cdn_edges.csv` | caller, callee, dispatch |
//! | `skipped.csv`   | package, version, reason |
//!
//! A tree row with empty parent and child columns records a root without
//! dependencies; `spec` is the full dependency declaration as JSON.
//! `signature` is JSON in the call-graph file's type-ref form;
//! `sources` lists the releases whose graphs mention the function, joined
//! with `;`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Read, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::callgraph::{
    is_std_package, CallEdge, FunctionId, FunctionNode, NodeVersion, RawSignature, RawTypeRef, Signature, TypeRef,
    Visibility, EXTERN_PACKAGE,
};
use crate::index::{DependencySpec, ReleaseKey, Timestamp};
use crate::resolver::{PackageNetwork, ResolvedChild, ResolvedTree, SkippedRoot};
use crate::semver::{Constraint, Version};
use crate::unify::{Cdn, NodeSet};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{file} row {row}: {message}")]
    Row { file: &'static str, row: usize, message: String },
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(input)
}

fn dot_quote(text: &str) -> String {
    let mut s = String::with_capacity(text.len() + 2);
    s.push('"');
    for c in text.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

// ---------------------------------------------------------------------------
// Package networks

pub fn write_pdn_nodes(network: &PackageNetwork, out: impl Write) -> Result<(), ExportError> {
    let mut w = writer(out);
    w.write_record(["package", "version"])?;
    for k in &network.nodes {
        w.write_record([k.name.as_str(), &k.version.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pdn_edges(network: &PackageNetwork, out: impl Write) -> Result<(), ExportError> {
    let mut w = writer(out);
    w.write_record(["from_package", "from_version", "to_package", "to_version"])?;
    for (a, b) in &network.edges {
        w.write_record([a.name.as_str(), &a.version.to_string(), &b.name, &b.version.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pdn_trees(trees: &BTreeMap<String, ResolvedTree>, out: impl Write) -> Result<(), ExportError> {
    let mut w = writer(out);
    w.write_record([
        "root_package",
        "root_version",
        "parent_package",
        "parent_version",
        "child_package",
        "child_version",
        "req",
        "spec",
    ])?;
    for tree in trees.values() {
        let root_version = tree.root.version.to_string();
        if tree.children.is_empty() {
            w.write_record([tree.root.name.as_str(), &root_version, "", "", "", "", "", ""])?;
        }
        for (parent, kids) in &tree.children {
            let parent_version = parent.version.to_string();
            for kid in kids {
                w.write_record([
                    tree.root.name.as_str(),
                    &root_version,
                    &parent.name,
                    &parent_version,
                    &kid.node.name,
                    &kid.node.version.to_string(),
                    &kid.spec.req.to_string(),
                    &serde_json::to_string(&kid.spec).map_err(io::Error::from)?,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_pdn_dot(network: &PackageNetwork, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "digraph pdn {{")?;
    writeln!(out, "  rankdir=LR;")?;
    for k in &network.nodes {
        writeln!(out, "  {};", dot_quote(&k.to_string()))?;
    }
    for (a, b) in &network.edges {
        writeln!(out, "  {} -> {};", dot_quote(&a.to_string()), dot_quote(&b.to_string()))?;
    }
    writeln!(out, "}}")
}

pub fn write_skipped(skipped: &[SkippedRoot], out: impl Write) -> Result<(), ExportError> {
    let mut w = writer(out);
    w.write_record(["package", "version", "reason"])?;
    let mut rows: Vec<&SkippedRoot> = skipped.iter().collect();
    rows.sort();
    for s in rows {
        w.write_record([s.root.name.as_str(), &s.root.version.to_string(), &s.reason])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_version(file: &'static str, row: usize, text: &str) -> Result<Version, ExportError> {
    Version::parse(text).map_err(|e| ExportError::Row {
        file,
        row,
        message: e.to_string(),
    })
}

/// Rebuilds resolved trees from `pdn_trees.csv`, keyed by root package.
pub fn read_pdn_trees(input: impl Read) -> Result<BTreeMap<String, ResolvedTree>, ExportError> {
    const FILE: &str = "pdn_trees.csv";
    let mut trees: BTreeMap<String, ResolvedTree> = BTreeMap::new();
    for (i, record) in reader(input).records().enumerate() {
        let r = record?;
        let row = i + 2;
        let field = |n: usize| r.get(n).unwrap_or("");
        let root = ReleaseKey::new(field(0), parse_version(FILE, row, field(1))?);
        let tree = trees.entry(root.name.clone()).or_insert_with(|| ResolvedTree {
            root: root.clone(),
            nodes: BTreeSet::from([root.clone()]),
            children: BTreeMap::new(),
            self_cycle: false,
        });
        if field(2).is_empty() {
            continue;
        }
        let parent = ReleaseKey::new(field(2), parse_version(FILE, row, field(3))?);
        let child = ReleaseKey::new(field(4), parse_version(FILE, row, field(5))?);
        // The full spec column is optional; without it the child is read
        // back as a plain normal dependency on `req`.
        let spec = if field(7).is_empty() {
            let req = Constraint::parse(field(6)).map_err(|e| ExportError::Row {
                file: FILE,
                row,
                message: e.to_string(),
            })?;
            DependencySpec::normal(child.name.clone(), req)
        } else {
            serde_json::from_str(field(7)).map_err(|e| ExportError::Row {
                file: FILE,
                row,
                message: e.to_string(),
            })?
        };
        tree.self_cycle |= parent.name == child.name;
        tree.nodes.insert(parent.clone());
        tree.nodes.insert(child.clone());
        tree.children.entry(parent).or_default().push(ResolvedChild { spec, node: child });
    }
    Ok(trees)
}

pub fn read_skipped(input: impl Read) -> Result<Vec<SkippedRoot>, ExportError> {
    let mut out = Vec::new();
    for (i, record) in reader(input).records().enumerate() {
        let r = record?;
        out.push(SkippedRoot {
            root: ReleaseKey::new(
                r.get(0).unwrap_or(""),
                parse_version("skipped.csv", i + 2, r.get(1).unwrap_or(""))?,
            ),
            reason: r.get(2).unwrap_or("").to_owned(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Call networks

fn raw_type(t: &TypeRef) -> RawTypeRef {
    RawTypeRef {
        package: t.package.clone(),
        version: t.version.resolved().cloned(),
        path: t.path.clone(),
    }
}

fn signature_json(sig: &Signature) -> String {
    let raw = RawSignature {
        args: sig.args.iter().map(raw_type).collect(),
        ret: sig.ret.as_ref().map(raw_type),
    };
    serde_json::to_string(&raw).expect("signatures serialize")
}

fn node_version(package: Option<&str>, version: Option<Version>) -> NodeVersion {
    match (package, version) {
        (_, Some(v)) => NodeVersion::Resolved(v),
        (None, None) => NodeVersion::Unversioned,
        (Some(p), None) if is_std_package(p) || p == EXTERN_PACKAGE => NodeVersion::Unversioned,
        (Some(_), None) => NodeVersion::Unresolved,
    }
}

fn type_from_raw(registry: &str, t: RawTypeRef) -> TypeRef {
    match t.package {
        None => TypeRef::primitive(t.path),
        Some(p) => TypeRef {
            registry: registry.to_owned(),
            version: node_version(Some(&p), t.version),
            package: Some(p),
            path: t.path,
        },
    }
}

fn release_text(k: &ReleaseKey) -> String {
    format!("{}@{}", k.name, k.version)
}

pub fn write_cdn_nodes(cdn: &Cdn, out: impl Write) -> Result<(), ExportError> {
    let mut w = writer(out);
    w.write_record(["id", "package", "version", "visibility", "registry", "path", "signature", "sources"])?;
    for (id, node) in &cdn.nodes.nodes {
        let version = node.version.resolved().map(ToString::to_string).unwrap_or_default();
        let sources = cdn
            .nodes
            .provenance
            .get(id)
            .into_iter()
            .flatten()
            .map(release_text)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            id.as_str(),
            &node.package,
            &version,
            &node.visibility.to_string(),
            &node.registry,
            &node.path,
            &signature_json(&node.signature),
            &sources,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cdn_edges(cdn: &Cdn, out: impl Write) -> Result<(), ExportError> {
    let mut w = writer(out);
    w.write_record(["caller", "callee", "dispatch"])?;
    for e in &cdn.edges {
        w.write_record([e.caller.as_str(), e.callee.as_str(), &e.dispatch.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// DOT with one cluster per release; extern and standard-library functions
/// stay outside clusters.
pub fn write_cdn_dot(cdn: &Cdn, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "digraph cdn {{")?;
    writeln!(out, "  rankdir=LR;")?;
    let mut clustered = BTreeSet::new();
    for (n, (release, ids)) in cdn.package_index.iter().enumerate() {
        writeln!(out, "  subgraph cluster_{n} {{")?;
        writeln!(out, "    label={};", dot_quote(&release.to_string()))?;
        for id in ids {
            writeln!(out, "    {};", dot_quote(id.as_str()))?;
            clustered.insert(id);
        }
        writeln!(out, "  }}")?;
    }
    for id in cdn.nodes.nodes.keys().filter(|id| !clustered.contains(id)) {
        writeln!(out, "  {};", dot_quote(id.as_str()))?;
    }
    for e in &cdn.edges {
        let style = match e.dispatch {
            crate::callgraph::Dispatch::Static => "",
            crate::callgraph::Dispatch::Dynamic => " [style=dashed]",
            crate::callgraph::Dispatch::Macro => " [style=dotted]",
        };
        writeln!(out, "  {} -> {}{style};", dot_quote(e.caller.as_str()), dot_quote(e.callee.as_str()))?;
    }
    writeln!(out, "}}")
}

fn parse_release(text: &str) -> Option<ReleaseKey> {
    let (name, version) = text.rsplit_once('@')?;
    Some(ReleaseKey::new(name, Version::parse(version).ok()?))
}

/// Reads a CDN written by [`write_cdn_nodes`] and [`write_cdn_edges`].
pub fn read_cdn(at: Timestamp, nodes: impl Read, edges: impl Read) -> Result<Cdn, ExportError> {
    const NODES: &str = "cdn_nodes.csv";
    let mut set = NodeSet::default();
    let mut package_index: BTreeMap<ReleaseKey, BTreeSet<FunctionId>> = BTreeMap::new();
    for (i, record) in reader(nodes).records().enumerate() {
        let r = record?;
        let row = i + 2;
        let field = |n: usize| r.get(n).unwrap_or("");
        let bad = |message: String| ExportError::Row {
            file: NODES,
            row,
            message,
        };
        let version = match field(2) {
            "" => None,
            v => Some(parse_version(NODES, row, v)?),
        };
        let visibility = match field(3) {
            "public" => Visibility::Public,
            "private" => Visibility::Private,
            other => return Err(bad(format!("unknown visibility `{other}`"))),
        };
        let registry = field(4);
        let raw: RawSignature = serde_json::from_str(field(6)).map_err(|e| bad(e.to_string()))?;
        let node = FunctionNode {
            registry: registry.to_owned(),
            package: field(1).to_owned(),
            version: node_version(Some(field(1)), version),
            path: field(5).to_owned(),
            signature: Signature {
                args: raw.args.into_iter().map(|t| type_from_raw(registry, t)).collect(),
                ret: raw.ret.map(|t| type_from_raw(registry, t)),
            },
            visibility,
        };
        let id = node.canonical_id();
        if id.as_str() != field(0) {
            return Err(bad(format!("id `{}` does not match its fields (`{id}`)", field(0))));
        }
        let sources: BTreeSet<ReleaseKey> = field(7)
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| parse_release(s).ok_or_else(|| bad(format!("bad source `{s}`"))))
            .collect::<Result<_, _>>()?;
        let owned = sources.iter().any(|k| k.name == node.package);
        if let Some(release) = node.release() {
            package_index.entry(release).or_default().insert(id.clone());
        }
        set.insert_loaded(id, Arc::new(node), owned, sources);
    }
    let mut edge_set = BTreeSet::new();
    for (i, record) in reader(edges).records().enumerate() {
        let r = record?;
        let field = |n: usize| r.get(n).unwrap_or("");
        let dispatch = field(2).parse().map_err(|message| ExportError::Row {
            file: "cdn_edges.csv",
            row: i + 2,
            message,
        })?;
        edge_set.insert(CallEdge {
            caller: FunctionId::new(field(0)),
            callee: FunctionId::new(field(1)),
            dispatch,
        });
    }
    Ok(Cdn {
        at,
        nodes: set,
        edges: edge_set,
        package_index,
    })
}
