//! Package-registry index: loading, validation and time slicing.
//!
//! The index file holds one JSON object per line:
//!
//! ```text
//! {"name":"app","vers":"1.0.0","deps":[{"name":"lib1","req":"^3.2","kind":"normal"}],"features":{},"yanked":false}
//! ```
//!
//! Dependency objects accept `name`, `req`, `kind` (`normal` | `dev` |
//! `build`, default `normal`), `optional` (default `false`), `enabled_by`
//! (features of the owning release that switch an optional dependency on),
//! `target` (platform cfg, may be `null`), `features` (features requested on
//! the dependency) and `default_features` (default `true`). Lines starting
//! with `#` and blank lines are ignored.
//!
//! Creation times come from a separate `name,version,timestamp` file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semver::{Constraint, Version};

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("timestamp line {line}: {message}")]
    Timestamp { line: usize, message: String },
    #[error("duplicate release {release} (line {line})")]
    Duplicate { release: ReleaseKey, line: usize },
    #[error("release {0} has no creation timestamp")]
    MissingTimestamp(ReleaseKey),
    #[error("release {release} declares no feature `{feature}`")]
    UnknownFeature { release: ReleaseKey, feature: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `(package, version)` identity of a release.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReleaseKey {
    pub name: String,
    pub version: Version,
}

impl ReleaseKey {
    pub fn new(name: impl Into<String>, version: Version) -> Self {
        ReleaseKey {
            name: name.into(),
            version,
        }
    }
}

impl fmt::Display for ReleaseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name, self.version)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepKind {
    #[default]
    Normal,
    Dev,
    Build,
}

impl fmt::Display for DepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DepKind::Normal => "normal",
            DepKind::Dev => "dev",
            DepKind::Build => "build",
        })
    }
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencySpec {
    pub name: String,
    pub req: Constraint,
    #[serde(default)]
    pub kind: DepKind,
    #[serde(default)]
    pub optional: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enabled_by: Vec<String>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<String>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub default_features: bool,
}

impl DependencySpec {
    pub fn normal(name: impl Into<String>, req: Constraint) -> Self {
        DependencySpec {
            name: name.into(),
            req,
            kind: DepKind::Normal,
            optional: false,
            enabled_by: Vec::new(),
            target: None,
            features: Vec::new(),
            default_features: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Release {
    pub name: String,
    pub version: Version,
    pub created_at: Timestamp,
    pub deps: Vec<DependencySpec>,
    /// Declared features; each maps to the features (or `dep:name` entries)
    /// it switches on. The `default` entry is the default feature set.
    pub features: BTreeMap<String, Vec<String>>,
    pub yanked: bool,
}

/// Root feature selection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum FeatureSelection {
    #[default]
    Default,
    None,
    All,
    List(Vec<String>),
}

impl Release {
    pub fn key(&self) -> ReleaseKey {
        ReleaseKey::new(self.name.clone(), self.version.clone())
    }

    fn is_known_feature(&self, name: &str) -> bool {
        name == "default"
            || self.features.contains_key(name)
            || self.deps.iter().any(|d| d.optional && d.name == name)
    }

    /// Transitive closure of `requested` over the feature table. With
    /// `strict`, an undeclared requested name is an error; otherwise it is
    /// skipped.
    pub fn expand_features<'a>(
        &self,
        requested: impl IntoIterator<Item = &'a str>,
        strict: bool,
    ) -> Result<BTreeSet<String>, IndexError> {
        let mut enabled = BTreeSet::new();
        let mut stack = Vec::new();
        for name in requested {
            if !self.is_known_feature(name) {
                if strict {
                    return Err(IndexError::UnknownFeature {
                        release: self.key(),
                        feature: name.to_owned(),
                    });
                }
                continue;
            }
            stack.push(name.to_owned());
        }
        while let Some(name) = stack.pop() {
            let name = name.strip_prefix("dep:").map(str::to_owned).unwrap_or(name);
            if !enabled.insert(name.clone()) {
                continue;
            }
            if let Some(implied) = self.features.get(&name) {
                stack.extend(implied.iter().cloned());
            }
        }
        Ok(enabled)
    }

    pub fn default_features(&self) -> BTreeSet<String> {
        self.expand_features(["default"], false).unwrap_or_default()
    }

    pub fn select_features(&self, selection: &FeatureSelection) -> Result<BTreeSet<String>, IndexError> {
        match selection {
            FeatureSelection::Default => Ok(self.default_features()),
            FeatureSelection::None => Ok(BTreeSet::new()),
            FeatureSelection::All => {
                let all: Vec<&str> = self
                    .features
                    .keys()
                    .map(String::as_str)
                    .chain(self.deps.iter().filter(|d| d.optional).map(|d| d.name.as_str()))
                    .collect();
                self.expand_features(all, false)
            }
            FeatureSelection::List(names) => self.expand_features(names.iter().map(String::as_str), true),
        }
    }

    /// Dependencies needed at run time under an already expanded feature set.
    pub fn runtime_deps_expanded<'a>(
        &'a self,
        enabled: &'a BTreeSet<String>,
    ) -> impl Iterator<Item = &'a DependencySpec> + 'a {
        self.deps.iter().filter(move |d| is_runtime_dep(d, enabled))
    }
}

fn is_runtime_dep(d: &DependencySpec, enabled: &BTreeSet<String>) -> bool {
    d.kind == DepKind::Normal
        && (!d.optional || enabled.contains(&d.name) || d.enabled_by.iter().any(|f| enabled.contains(f)))
}

/// Normal and platform-specific dependencies, plus optional ones switched on
/// by `features`. Dev and build dependencies are never returned.
pub fn runtime_deps<'a>(release: &'a Release, features: &[&str]) -> Result<Vec<&'a DependencySpec>, IndexError> {
    let enabled = release.expand_features(features.iter().copied(), true)?;
    Ok(release.deps.iter().filter(|d| is_runtime_dep(d, &enabled)).collect())
}

/// Releases grouped by package, each list sorted by version precedence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Index {
    packages: BTreeMap<String, Vec<Release>>,
}

impl Index {
    pub fn new() -> Self {
        Index::default()
    }

    /// Builds an index from releases, rejecting duplicate `(name, version)`.
    pub fn from_releases(releases: impl IntoIterator<Item = Release>) -> Result<Self, IndexError> {
        let mut index = Index::new();
        for (i, release) in releases.into_iter().enumerate() {
            index.insert(release, i + 1)?;
        }
        Ok(index)
    }

    fn insert(&mut self, release: Release, line: usize) -> Result<(), IndexError> {
        let list = self.packages.entry(release.name.clone()).or_default();
        match list.binary_search_by(|r| r.version.cmp(&release.version)) {
            Ok(_) => Err(IndexError::Duplicate {
                release: release.key(),
                line,
            }),
            Err(pos) => {
                list.insert(pos, release);
                Ok(())
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.packages.is_empty()
    }

    pub fn package_count(&self) -> usize {
        self.packages.len()
    }

    pub fn release_count(&self) -> usize {
        self.packages.values().map(Vec::len).sum()
    }

    pub fn packages(&self) -> impl Iterator<Item = (&str, &[Release])> {
        self.packages.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn releases(&self) -> impl Iterator<Item = &Release> {
        self.packages.values().flatten()
    }

    pub fn versions(&self, name: &str) -> &[Release] {
        self.packages.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains_package(&self, name: &str) -> bool {
        self.packages.contains_key(name)
    }

    pub fn get(&self, key: &ReleaseKey) -> Option<&Release> {
        let list = self.packages.get(&key.name)?;
        list.binary_search_by(|r| r.version.cmp(&key.version))
            .ok()
            .map(|i| &list[i])
    }

    pub fn latest_timestamp(&self) -> Option<Timestamp> {
        self.releases().map(|r| r.created_at).max()
    }

    /// Most recently published non-yanked release of `name`; equal
    /// timestamps go to the higher version.
    pub fn most_recent(&self, name: &str) -> Option<&Release> {
        self.versions(name)
            .iter()
            .filter(|r| !r.yanked)
            .max_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.version.cmp(&b.version)))
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Release) -> bool) {
        for list in self.packages.values_mut() {
            list.retain(&mut keep);
        }
        self.packages.retain(|_, list| !list.is_empty());
    }
}

/// The releases published at or before `at`; packages left empty are dropped.
pub fn mirror_at(index: &Index, at: Timestamp) -> Index {
    let mut mirror = index.clone();
    mirror.retain(|r| r.created_at <= at);
    mirror
}

#[derive(Deserialize, Serialize)]
struct IndexRecord {
    name: String,
    vers: Version,
    #[serde(default)]
    deps: Vec<DependencySpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    features: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    yanked: bool,
}

pub fn parse_timestamp(text: &str) -> Result<Timestamp, String> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, fmt) {
            return Ok(t.and_utc());
        }
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc());
    }
    Err(format!("`{text}` is not an ISO-8601 timestamp"))
}

pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}

fn load_timestamps(source: impl BufRead) -> Result<BTreeMap<(String, Version), Timestamp>, IndexError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut out = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| IndexError::Timestamp {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 1),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        let err = |message: String| IndexError::Timestamp { line, message };
        if row.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", row.len())));
        }
        if i == 0 && &row[0] == "name" && &row[1] == "version" {
            continue;
        }
        let version = Version::parse(&row[1]).map_err(|e| err(e.to_string()))?;
        let at = parse_timestamp(&row[2]).map_err(err)?;
        if out.insert((row[0].to_owned(), version), at).is_some() {
            return Err(err(format!("duplicate timestamp for {} {}", &row[0], &row[1])));
        }
    }
    Ok(out)
}

/// Parses an index and its timestamp table. Releases without a timestamp are
/// rejected; timestamps for releases absent from the index are ignored.
pub fn load_index(index_source: impl BufRead, timestamp_source: impl BufRead) -> Result<Index, IndexError> {
    let timestamps = load_timestamps(timestamp_source)?;
    let mut index = Index::new();
    for (i, line) in index_source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: IndexRecord = serde_json::from_str(trimmed).map_err(|e| IndexError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let created_at = *timestamps
            .get(&(record.name.clone(), record.vers.clone()))
            .ok_or_else(|| IndexError::MissingTimestamp(ReleaseKey::new(record.name.clone(), record.vers.clone())))?;
        index.insert(
            Release {
                name: record.name,
                version: record.vers,
                created_at,
                deps: record.deps,
                features: record.features,
                yanked: record.yanked,
            },
            line_no,
        )?;
    }
    Ok(index)
}

pub fn load_index_files(index_path: &Path, timestamp_path: &Path) -> Result<Index, IndexError> {
    load_index(
        BufReader::new(File::open(index_path)?),
        BufReader::new(File::open(timestamp_path)?),
    )
}

/// Writes the index in its line-delimited form, packages and versions in
/// sorted order.
pub fn write_index(index: &Index, mut out: impl Write) -> io::Result<()> {
    for r in index.releases() {
        let record = IndexRecord {
            name: r.name.clone(),
            vers: r.version.clone(),
            deps: r.deps.clone(),
            features: r.features.clone(),
            yanked: r.yanked,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_timestamps(index: &Index, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "version", "timestamp"])?;
    for r in index.releases() {
        w.write_record([r.name.as_str(), &r.version.to_string(), &format_timestamp(&r.created_at)])?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct UnknownDependency {
    pub release: ReleaseKey,
    pub dependency: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct UnsolvableConstraint {
    pub release: ReleaseKey,
    pub dependency: String,
    pub req: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub unknown_dependencies: Vec<UnknownDependency>,
    pub unsolvable: Vec<UnsolvableConstraint>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.unknown_dependencies.is_empty() && self.unsolvable.is_empty()
    }

    pub fn flagged(&self) -> BTreeSet<ReleaseKey> {
        self.unknown_dependencies
            .iter()
            .map(|u| u.release.clone())
            .chain(self.unsolvable.iter().map(|u| u.release.clone()))
            .collect()
    }
}

/// Flags releases whose normal or build dependencies name a package missing
/// from the index, or carry a requirement no non-yanked release satisfies.
/// Dev dependencies are not checked.
pub fn validate(index: &Index) -> ValidationReport {
    let mut report = ValidationReport::default();
    for release in index.releases() {
        for dep in release.deps.iter().filter(|d| d.kind != DepKind::Dev) {
            if !index.contains_package(&dep.name) {
                report.unknown_dependencies.push(UnknownDependency {
                    release: release.key(),
                    dependency: dep.name.clone(),
                });
            } else if !index
                .versions(&dep.name)
                .iter()
                .any(|r| !r.yanked && dep.req.matches(&r.version))
            {
                report.unsolvable.push(UnsolvableConstraint {
                    release: release.key(),
                    dependency: dep.name.clone(),
                    req: dep.req.to_string(),
                });
            }
        }
    }
    report.unknown_dependencies.sort();
    report.unknown_dependencies.dedup();
    report.unsolvable.sort();
    report.unsolvable.dedup();
    report
}
