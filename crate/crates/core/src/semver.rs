//! Versions and version requirements, following the registry resolver's rules.
//!
//! A requirement is a comma-separated conjunction of comparators. Each
//! comparator is an optional operator (`=`, `>`, `>=`, `<`, `<=`, `~`, `^`)
//! followed by a possibly partial version; `*`, `x` and `X` act as wildcards
//! in the minor and patch positions. A comparator without an operator is a
//! caret requirement (`1.2.3` means `^1.2.3`), except for wildcard forms such
//! as `1.*`. The empty requirement and a lone `*` accept every release.
//!
//! Exact (`=1.2.3`) and bare (`1.2.3`) forms are kept apart: only the former
//! pins a single version.
//!
//! Prerelease versions only satisfy a requirement when one of its comparators
//! names a prerelease on the same `major.minor.patch`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemverError {
    #[error("invalid version `{text}`: {reason}")]
    Version { text: String, reason: String },
    #[error("invalid requirement `{text}`: {reason}")]
    Requirement { text: String, reason: String },
}

fn version_err(text: &str, reason: impl Into<String>) -> SemverError {
    SemverError::Version {
        text: text.to_owned(),
        reason: reason.into(),
    }
}

fn req_err(text: &str, reason: impl Into<String>) -> SemverError {
    SemverError::Requirement {
        text: text.to_owned(),
        reason: reason.into(),
    }
}

/// One dot-separated prerelease identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Identifier {
    Numeric(u64),
    Alphanumeric(String),
}

impl Ord for Identifier {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Identifier::Numeric(a), Identifier::Numeric(b)) => a.cmp(b),
            (Identifier::Numeric(_), Identifier::Alphanumeric(_)) => Ordering::Less,
            (Identifier::Alphanumeric(_), Identifier::Numeric(_)) => Ordering::Greater,
            (Identifier::Alphanumeric(a), Identifier::Alphanumeric(b)) => {
                a.as_bytes().cmp(b.as_bytes())
            }
        }
    }
}

impl PartialOrd for Identifier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identifier::Numeric(n) => write!(f, "{n}"),
            Identifier::Alphanumeric(s) => f.write_str(s),
        }
    }
}

/// Prerelease tag. The empty tag (a normal release) sorts above every
/// non-empty tag.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Prerelease(Vec<Identifier>);

impl Prerelease {
    pub const EMPTY: Prerelease = Prerelease(Vec::new());

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn identifiers(&self) -> &[Identifier] {
        &self.0
    }

    fn parse(text: &str, whole: &str) -> Result<Self, SemverError> {
        let mut ids = Vec::new();
        for part in text.split('.') {
            if part.is_empty() {
                return Err(version_err(whole, "empty prerelease identifier"));
            }
            if !part.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') {
                return Err(version_err(whole, format!("bad character in `{part}`")));
            }
            if part.bytes().all(|b| b.is_ascii_digit()) {
                if part.len() > 1 && part.starts_with('0') {
                    return Err(version_err(whole, "leading zero in numeric identifier"));
                }
                let n = part
                    .parse()
                    .map_err(|_| version_err(whole, "numeric identifier overflows"))?;
                ids.push(Identifier::Numeric(n));
            } else {
                ids.push(Identifier::Alphanumeric(part.to_owned()));
            }
        }
        Ok(Prerelease(ids))
    }
}

impl Ord for Prerelease {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0.is_empty(), other.0.is_empty()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            // Lexicographic over identifiers; a shorter prefix sorts first.
            (false, false) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for Prerelease {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Prerelease {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

/// A three-part semantic version. Build metadata is carried for display but
/// takes no part in equality, hashing or precedence.
#[derive(Debug, Clone)]
pub struct Version {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
    pub pre: Prerelease,
    pub build: Option<String>,
}

impl Version {
    pub const fn new(major: u64, minor: u64, patch: u64) -> Self {
        Version {
            major,
            minor,
            patch,
            pre: Prerelease::EMPTY,
            build: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, SemverError> {
        let (core, build) = match text.split_once('+') {
            Some((core, build)) => {
                if build.is_empty()
                    || !build
                        .split('.')
                        .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-'))
                {
                    return Err(version_err(text, "malformed build metadata"));
                }
                (core, Some(build.to_owned()))
            }
            None => (text, None),
        };
        let (triple, pre) = match core.split_once('-') {
            Some((triple, pre)) => (triple, Prerelease::parse(pre, text)?),
            None => (core, Prerelease::EMPTY),
        };
        let mut parts = triple.split('.');
        let mut next = |what: &str| -> Result<u64, SemverError> {
            let part = parts
                .next()
                .ok_or_else(|| version_err(text, format!("missing {what} component")))?;
            parse_number(part).map_err(|reason| version_err(text, format!("{what}: {reason}")))
        };
        let major = next("major")?;
        let minor = next("minor")?;
        let patch = next("patch")?;
        if parts.next().is_some() {
            return Err(version_err(text, "more than three components"));
        }
        Ok(Version {
            major,
            minor,
            patch,
            pre,
            build,
        })
    }

    pub fn is_prerelease(&self) -> bool {
        !self.pre.is_empty()
    }

    /// Key shared by all versions a caret requirement treats as
    /// interchangeable.
    pub fn compat_class(&self) -> CompatClass {
        match (self.major, self.minor) {
            (0, 0) => CompatClass::Patch(self.patch),
            (0, minor) => CompatClass::Minor(minor),
            (major, _) => CompatClass::Major(major),
        }
    }
}

fn parse_number(part: &str) -> Result<u64, String> {
    if part.is_empty() {
        return Err("empty component".into());
    }
    if !part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("`{part}` is not a number"));
    }
    if part.len() > 1 && part.starts_with('0') {
        return Err(format!("leading zero in `{part}`"));
    }
    part.parse().map_err(|_| format!("`{part}` overflows"))
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl Hash for Version {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.major, self.minor, self.patch, &self.pre).hash(state);
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.major, self.minor, self.patch)
            .cmp(&(other.major, other.minor, other.patch))
            .then_with(|| self.pre.cmp(&other.pre))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)?;
        if !self.pre.is_empty() {
            write!(f, "-{}", self.pre)?;
        }
        if let Some(build) = &self.build {
            write!(f, "+{build}")?;
        }
        Ok(())
    }
}

impl FromStr for Version {
    type Err = SemverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Version::parse(s)
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Version::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Caret-compatibility class: same major; same minor when the major is 0;
/// the exact patch when both are 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompatClass {
    Major(u64),
    Minor(u64),
    Patch(u64),
}

impl fmt::Display for CompatClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompatClass::Major(m) => write!(f, "{m}.x"),
            CompatClass::Minor(m) => write!(f, "0.{m}.x"),
            CompatClass::Patch(p) => write!(f, "0.0.{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Exact,
    Greater,
    GreaterEq,
    Less,
    LessEq,
    Tilde,
    Caret,
    Wildcard,
}

/// A single comparator; `minor` and `patch` are `None` for partial versions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparator {
    pub op: Op,
    pub major: u64,
    pub minor: Option<u64>,
    pub patch: Option<u64>,
    pub pre: Vec<Identifier>,
}

impl Comparator {
    fn pre(&self) -> Prerelease {
        Prerelease(self.pre.clone())
    }

    fn matches_ignoring_pre_rule(&self, v: &Version) -> bool {
        match self.op {
            Op::Exact | Op::Wildcard => self.matches_exact(v),
            Op::Greater => self.matches_greater(v),
            Op::GreaterEq => self.matches_exact(v) || self.matches_greater(v),
            Op::Less => self.matches_less(v),
            Op::LessEq => self.matches_exact(v) || self.matches_less(v),
            Op::Tilde => self.matches_tilde(v),
            Op::Caret => self.matches_caret(v),
        }
    }

    fn matches_exact(&self, v: &Version) -> bool {
        if v.major != self.major {
            return false;
        }
        match (self.minor, self.patch) {
            (None, _) => true,
            (Some(minor), None) => v.minor == minor,
            (Some(minor), Some(patch)) => {
                v.minor == minor && v.patch == patch && v.pre == self.pre()
            }
        }
    }

    fn matches_greater(&self, v: &Version) -> bool {
        if v.major != self.major {
            return v.major > self.major;
        }
        let Some(minor) = self.minor else { return false };
        if v.minor != minor {
            return v.minor > minor;
        }
        let Some(patch) = self.patch else { return false };
        if v.patch != patch {
            return v.patch > patch;
        }
        v.pre > self.pre()
    }

    fn matches_less(&self, v: &Version) -> bool {
        if v.major != self.major {
            return v.major < self.major;
        }
        let Some(minor) = self.minor else { return false };
        if v.minor != minor {
            return v.minor < minor;
        }
        let Some(patch) = self.patch else { return false };
        if v.patch != patch {
            return v.patch < patch;
        }
        v.pre < self.pre()
    }

    fn matches_tilde(&self, v: &Version) -> bool {
        if v.major != self.major {
            return false;
        }
        let Some(minor) = self.minor else { return true };
        if v.minor != minor {
            return false;
        }
        let Some(patch) = self.patch else { return true };
        if v.patch != patch {
            return v.patch > patch;
        }
        v.pre >= self.pre()
    }

    fn matches_caret(&self, v: &Version) -> bool {
        if v.major != self.major {
            return false;
        }
        let Some(minor) = self.minor else { return true };
        let Some(patch) = self.patch else {
            return if self.major > 0 {
                v.minor >= minor
            } else {
                v.minor == minor
            };
        };
        if self.major > 0 {
            if v.minor != minor {
                return v.minor > minor;
            }
            if v.patch != patch {
                return v.patch > patch;
            }
        } else if minor > 0 {
            if v.minor != minor {
                return false;
            }
            if v.patch != patch {
                return v.patch > patch;
            }
        } else if v.minor != minor || v.patch != patch {
            return false;
        }
        v.pre >= self.pre()
    }

    /// True when this comparator opts a prerelease of `v` in.
    fn admits_prerelease_of(&self, v: &Version) -> bool {
        self.major == v.major
            && self.minor == Some(v.minor)
            && self.patch == Some(v.patch)
            && !self.pre.is_empty()
    }

    /// Pins a single concrete version (`=MAJOR.MINOR.PATCH`).
    pub fn pinned_version(&self) -> Option<Version> {
        match (self.op, self.minor, self.patch) {
            (Op::Exact, Some(minor), Some(patch)) => Some(Version {
                major: self.major,
                minor,
                patch,
                pre: self.pre(),
                build: None,
            }),
            _ => None,
        }
    }

    fn parse(text: &str, whole: &str) -> Result<Self, SemverError> {
        let text = text.trim();
        let (op, rest) = if let Some(r) = text.strip_prefix(">=") {
            (Some(Op::GreaterEq), r)
        } else if let Some(r) = text.strip_prefix("<=") {
            (Some(Op::LessEq), r)
        } else if let Some(r) = text.strip_prefix('>') {
            (Some(Op::Greater), r)
        } else if let Some(r) = text.strip_prefix('<') {
            (Some(Op::Less), r)
        } else if let Some(r) = text.strip_prefix('=') {
            (Some(Op::Exact), r)
        } else if let Some(r) = text.strip_prefix('~') {
            (Some(Op::Tilde), r)
        } else if let Some(r) = text.strip_prefix('^') {
            (Some(Op::Caret), r)
        } else {
            (None, text)
        };
        let rest = rest.trim_start();
        if rest.is_empty() {
            return Err(req_err(whole, "missing version after operator"));
        }
        let rest = rest
            .split_once('+')
            .map(|(core, _build)| core)
            .unwrap_or(rest);
        let (triple, pre) = match rest.split_once('-') {
            Some((triple, pre)) => (triple, Some(pre)),
            None => (rest, None),
        };

        let is_wild = |s: &str| matches!(s, "*" | "x" | "X");
        let mut parts = triple.split('.');
        let major_text = parts.next().unwrap_or_default();
        if is_wild(major_text) {
            return Err(req_err(whole, "a wildcard major version must be the only comparator"));
        }
        let major = parse_number(major_text).map_err(|r| req_err(whole, r))?;
        let mut wildcard = false;
        let mut component = |part: Option<&str>| -> Result<Option<u64>, SemverError> {
            match part {
                None => Ok(None),
                Some(p) if is_wild(p) => {
                    wildcard = true;
                    Ok(None)
                }
                Some(_) if wildcard => Err(req_err(whole, "version component after wildcard")),
                Some(p) => parse_number(p).map(Some).map_err(|r| req_err(whole, r)),
            }
        };
        let minor = component(parts.next())?;
        let patch = component(parts.next())?;
        if parts.next().is_some() {
            return Err(req_err(whole, "more than three version components"));
        }
        let pre = match pre {
            Some(_) if patch.is_none() => {
                return Err(req_err(whole, "prerelease requires a full version"))
            }
            Some(p) => Prerelease::parse(p, whole)
                .map_err(|_| req_err(whole, "malformed prerelease"))?
                .0,
            None => Vec::new(),
        };
        let op = match op {
            Some(op) => op,
            None if wildcard => Op::Wildcard,
            None => Op::Caret,
        };
        Ok(Comparator {
            op,
            major,
            minor,
            patch,
            pre,
        })
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            Op::Exact => "=",
            Op::Greater => ">",
            Op::GreaterEq => ">=",
            Op::Less => "<",
            Op::LessEq => "<=",
            Op::Tilde => "~",
            Op::Caret => "^",
            Op::Wildcard => "",
        };
        write!(f, "{op}{}", self.major)?;
        match (self.minor, self.patch) {
            (Some(minor), Some(patch)) => {
                write!(f, ".{minor}.{patch}")?;
                if !self.pre.is_empty() {
                    write!(f, "-{}", self.pre())?;
                }
            }
            (Some(minor), None) => {
                write!(f, ".{minor}")?;
                if self.op == Op::Wildcard {
                    f.write_str(".*")?;
                }
            }
            (None, _) => {
                if self.op == Op::Wildcard {
                    f.write_str(".*")?;
                }
            }
        }
        Ok(())
    }
}

/// A conjunction of comparators. No comparators means "any version".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub comparators: Vec<Comparator>,
}

impl Constraint {
    pub const ANY: Constraint = Constraint {
        comparators: Vec::new(),
    };

    pub fn parse(text: &str) -> Result<Self, SemverError> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "*" || trimmed == "x" || trimmed == "X" {
            return Ok(Constraint::ANY);
        }
        let comparators = trimmed
            .split(',')
            .map(|part| {
                if part.trim().is_empty() {
                    Err(req_err(text, "empty comparator"))
                } else {
                    Comparator::parse(part, text)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Constraint { comparators })
    }

    pub fn exact(version: &Version) -> Self {
        Constraint {
            comparators: vec![Comparator {
                op: Op::Exact,
                major: version.major,
                minor: Some(version.minor),
                patch: Some(version.patch),
                pre: version.pre.identifiers().to_vec(),
            }],
        }
    }

    pub fn matches(&self, version: &Version) -> bool {
        if !self
            .comparators
            .iter()
            .all(|c| c.matches_ignoring_pre_rule(version))
        {
            return false;
        }
        !version.is_prerelease()
            || self
                .comparators
                .iter()
                .any(|c| c.admits_prerelease_of(version))
    }

    /// The single version this requirement pins, if it is a lone `=X.Y.Z`.
    /// Anything else is a dynamic requirement.
    pub fn pinned_version(&self) -> Option<Version> {
        match self.comparators.as_slice() {
            [only] => only.pinned_version(),
            _ => None,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        self.pinned_version().is_none()
    }

    /// Conjunction of two requirements.
    pub fn and(&self, other: &Constraint) -> Constraint {
        let mut comparators = self.comparators.clone();
        for c in &other.comparators {
            if !comparators.contains(c) {
                comparators.push(c.clone());
            }
        }
        Constraint { comparators }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comparators.is_empty() {
            return f.write_str("*");
        }
        for (i, c) in self.comparators.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Constraint {
    type Err = SemverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Constraint::parse(s)
    }
}

impl Serialize for Constraint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Constraint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Constraint::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// A release a resolver may pick from.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a, T> {
    pub version: &'a Version,
    pub created_at: T,
    pub yanked: bool,
}

/// Highest-precedence non-yanked candidate created at or before `at` that
/// satisfies `constraint`.
pub fn latest_matching<'a, T: PartialOrd + Copy>(
    candidates: impl IntoIterator<Item = Candidate<'a, T>>,
    constraint: &Constraint,
    at: T,
) -> Option<&'a Version> {
    candidates
        .into_iter()
        .filter(|c| !c.yanked && c.created_at <= at && constraint.matches(c.version))
        .map(|c| c.version)
        .max()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Version {
        Version::parse(s).unwrap()
    }

    fn req(s: &str) -> Constraint {
        Constraint::parse(s).unwrap()
    }

    #[test]
    fn parses_plain_versions() {
        assert_eq!(v("1.0.0"), Version::new(1, 0, 0));
        assert_eq!(v("0.0.0"), Version::new(0, 0, 0));
        assert!(v("1.2.3-alpha.1") < v("1.2.3"));
        assert_eq!(v("1.2.3+build.5"), v("1.2.3"));
        assert_eq!(v("1.2.3+build.5").to_string(), "1.2.3+build.5");
    }

    #[test]
    fn rejects_malformed_versions() {
        for bad in ["", "1", "1.2", "1.2.3.4", "01.2.3", "1.2.x", "a.b.c", "1.2.3-", "1.2.3+", "1.2.3-a..b"] {
            assert!(Version::parse(bad).is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn wildcard_constraints() {
        let c = req("1.*");
        assert_eq!(c.comparators[0].op, Op::Wildcard);
        assert!(c.matches(&v("1.0.0")));
        assert!(c.matches(&v("1.8.0")));
        assert!(c.matches(&v("1.20.2")));
        assert!(!c.matches(&v("2.0.0")));
        assert!(!c.matches(&v("0.9.9")));
    }

    #[test]
    fn range_conjunction() {
        let c = req(">1.0.0, <=2.0.0");
        assert_eq!(c.comparators.len(), 2);
        assert!(!c.matches(&v("1.0.0")));
        assert!(c.matches(&v("1.0.1")));
        assert!(c.matches(&v("2.0.0")));
        assert!(!c.matches(&v("2.0.1")));
    }

    #[test]
    fn empty_requirement_is_any() {
        assert_eq!(req(""), Constraint::ANY);
        assert!(req("").matches(&v("0.0.1")));
        assert!(req("*").matches(&v("7.3.1")));
    }

    #[test]
    fn caret_on_zero() {
        assert!(!req("^0.4.0").matches(&v("0.5.0")));
        assert!(req("^0.4.0").matches(&v("0.4.9")));
        assert!(!req("^0.0.1").matches(&v("0.0.2")));
        assert!(req("0.4").matches(&v("0.4.7")));
    }

    #[test]
    fn bare_and_exact_are_distinct() {
        assert_ne!(req("1.0.0"), req("=1.0.0"));
        assert!(req("1.0.0").matches(&v("1.4.0")));
        assert!(!req("=1.0.0").matches(&v("1.4.0")));
        assert_eq!(req("=0.2.0").pinned_version(), Some(v("0.2.0")));
        assert_eq!(req("0.2.0").pinned_version(), None);
        assert_eq!(req("=0.2").pinned_version(), None);
    }

    #[test]
    fn prerelease_needs_opt_in() {
        assert!(!req(">=1.0.0").matches(&v("1.2.0-beta")));
        assert!(req(">=1.2.0-alpha").matches(&v("1.2.0-beta")));
        assert!(!req(">=1.2.0-alpha").matches(&v("1.3.0-beta")));
    }

    #[test]
    fn rejects_malformed_requirements() {
        for bad in [">=", "1.*.3", "*, 1.0", "1.0.0,", "^a", "1.2-beta", "1.2.3.4"] {
            assert!(Constraint::parse(bad).is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn compat_classes() {
        assert_eq!(v("1.2.0").compat_class(), v("1.9.9").compat_class());
        assert_ne!(v("0.4.4").compat_class(), v("0.5.5").compat_class());
        assert_ne!(v("0.0.1").compat_class(), v("0.0.2").compat_class());
        assert_eq!(v("0.4.4").compat_class(), v("0.4.0").compat_class());
    }

    #[test]
    fn latest_matching_respects_time_and_yank() {
        let versions = [v("1.1.0"), v("1.2.0"), v("1.3.0")];
        let cands = |yank_last: bool| -> Vec<Candidate<'_, i32>> {
            versions
                .iter()
                .zip([10, 20, 30])
                .map(|(version, created_at)| Candidate {
                    version,
                    created_at,
                    yanked: yank_last && created_at == 30,
                })
                .collect()
        };
        let c = req("1.*");
        assert_eq!(latest_matching(cands(false), &c, 15), Some(&versions[0]));
        assert_eq!(latest_matching(cands(false), &c, 25), Some(&versions[1]));
        assert_eq!(latest_matching(cands(false), &c, 35), Some(&versions[2]));
        assert_eq!(latest_matching(cands(true), &c, 35), Some(&versions[1]));
        assert_eq!(latest_matching(cands(false), &c, 5), None);
        assert_eq!(latest_matching(cands(false), &req("2.*"), 35), None);
    }
}
