//! Metric reports written by `callnet analyze`, one JSON document per metric.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use callnet::metrics::{
    all_dependent_counts, all_function_reach_in, api_call_counts_in, call_based_view_in, call_summary,
    coexistence_bloat, compare_networks, degree_distribution_in, dependency_counts, metadata_view, reach,
    summary_stats, CallIndex, DependencyView, Direction, Scope, Statistic,
};
use callnet::{Cdn, Dispatch, ResolvedTree};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    CallSummary,
    Degrees,
    Dependencies,
    Dependents,
    Reach,
    ApiCalls,
    Bloat,
    FunctionReach,
    Correlation,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::CallSummary,
        Metric::Degrees,
        Metric::Dependencies,
        Metric::Dependents,
        Metric::Reach,
        Metric::ApiCalls,
        Metric::Bloat,
        Metric::FunctionReach,
        Metric::Correlation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::CallSummary => "call-summary",
            Metric::Degrees => "degrees",
            Metric::Dependencies => "dependencies",
            Metric::Dependents => "dependents",
            Metric::Reach => "reach",
            Metric::ApiCalls => "api-calls",
            Metric::Bloat => "bloat",
            Metric::FunctionReach => "function-reach",
            Metric::Correlation => "correlation",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
                format!("unknown metric `{s}` (known: {})", known.join(", "))
            })
    }
}

#[derive(Serialize)]
struct Dependencies {
    direct: usize,
    transitive: usize,
}

#[derive(Serialize)]
struct Dependents {
    direct: usize,
    total: usize,
}

/// Inputs shared by every report of one snapshot.
pub struct Analysis<'a> {
    cdn: &'a Cdn,
    trees: &'a BTreeMap<String, ResolvedTree>,
    index: CallIndex<'a>,
    metadata: DependencyView,
    call_based: DependencyView,
}

impl<'a> Analysis<'a> {
    pub fn new(cdn: &'a Cdn, trees: &'a BTreeMap<String, ResolvedTree>) -> Self {
        let index = CallIndex::new(cdn);
        let metadata = metadata_view(trees);
        let call_based = call_based_view_in(&index, trees);
        Analysis {
            cdn,
            trees,
            index,
            metadata,
            call_based,
        }
    }

    fn views(&self) -> [(&'static str, &DependencyView); 2] {
        [("metadata", &self.metadata), ("call-based", &self.call_based)]
    }

    pub fn report(&self, metric: Metric) -> Value {
        match metric {
            Metric::CallSummary => json!(call_summary(self.cdn)),
            Metric::Degrees => self.degrees(),
            Metric::Dependencies => self.per_view(|view| {
                let counts: BTreeMap<&String, Dependencies> = view
                    .roots
                    .keys()
                    .map(|root| {
                        let (direct, transitive) = dependency_counts(view, root).expect("root of its own view");
                        (root, Dependencies { direct, transitive })
                    })
                    .collect();
                json!(counts)
            }),
            Metric::Dependents => self.per_view(|view| {
                let counts: BTreeMap<String, Dependents> = all_dependent_counts(view)
                    .into_iter()
                    .map(|(pkg, (direct, total))| (pkg, Dependents { direct, total }))
                    .collect();
                json!(counts)
            }),
            Metric::Reach => self.per_view(|view| {
                let values: BTreeMap<&String, f64> = view
                    .roots
                    .keys()
                    .map(|pkg| (pkg, reach(view, pkg).expect("root of its own view")))
                    .collect();
                json!(values)
            }),
            Metric::ApiCalls => {
                let counts: BTreeMap<&String, Value> = self
                    .trees
                    .keys()
                    .map(|root| {
                        let (direct, transitive) =
                            api_call_counts_in(&self.index, self.trees, root).expect("root has a tree");
                        (root, json!({ "direct": direct, "transitive": transitive }))
                    })
                    .collect();
                json!(counts)
            }
            Metric::Bloat => {
                let reports: Vec<_> = self.trees.values().map(|tree| coexistence_bloat(self.cdn, tree)).collect();
                json!(reports)
            }
            Metric::FunctionReach => {
                let values = all_function_reach_in(&self.index);
                let all: Vec<f64> = values.values().copied().collect();
                let functions: BTreeMap<&str, f64> = values.iter().map(|(id, r)| (id.as_str(), *r)).collect();
                json!({ "stats": summary_stats(&all), "functions": functions })
            }
            Metric::Correlation => {
                let rows: Vec<Value> = [
                    Statistic::DirectDependencies,
                    Statistic::TransitiveDependencies,
                    Statistic::DirectDependents,
                    Statistic::TotalDependents,
                ]
                .into_iter()
                .map(|s| match compare_networks(&self.metadata, &self.call_based, s) {
                    Ok(c) => json!(c),
                    Err(e) => json!({ "statistic": s, "error": e.to_string() }),
                })
                .collect();
                json!(rows)
            }
        }
    }

    fn per_view(&self, f: impl Fn(&DependencyView) -> Value) -> Value {
        Value::Object(self.views().into_iter().map(|(name, view)| (name.to_owned(), f(view))).collect())
    }

    fn degrees(&self) -> Value {
        let mut out = Vec::new();
        for direction in [Direction::In, Direction::Out] {
            for scope in [Scope::All, Scope::InterPackage] {
                for dispatch in std::iter::once(None).chain(Dispatch::ALL.into_iter().map(Some)) {
                    out.push(degree_distribution_in(&self.index, direction, dispatch, scope));
                }
            }
        }
        json!(out)
    }
}
