//! Small hand-built ecosystems used by tests, benchmarks and examples.

use std::collections::BTreeMap;

use crate::callgraph::{
    CallGraphStore, Dispatch, RawCallGraph, RawEdge, RawFunction, RawImpl, RawInterface, RawMethod, RawSignature,
    RawTypeRef, Visibility,
};
use crate::index::{parse_timestamp, DependencySpec, Index, Release, ReleaseKey, Timestamp};
use crate::semver::{Constraint, Version};

pub fn key(name: &str, version: &str) -> ReleaseKey {
    ReleaseKey::new(name, Version::parse(version).expect("fixture version"))
}

pub fn ts(text: &str) -> Timestamp {
    parse_timestamp(text).expect("fixture timestamp")
}

/// A release with normal dependencies given as `(name, requirement)`.
pub fn release(name: &str, version: &str, created: &str, deps: &[(&str, &str)]) -> Release {
    Release {
        name: name.into(),
        version: Version::parse(version).expect("fixture version"),
        created_at: ts(created),
        deps: deps
            .iter()
            .map(|(n, r)| DependencySpec::normal(*n, Constraint::parse(r).expect("fixture requirement")))
            .collect(),
        features: BTreeMap::new(),
        yanked: false,
    }
}

pub fn ty(package: Option<&str>, path: &str) -> RawTypeRef {
    RawTypeRef {
        package: package.map(str::to_owned),
        version: None,
        path: path.into(),
    }
}

/// Incremental construction of a raw call graph.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    raw: RawCallGraph,
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder::default()
    }

    pub fn func(&mut self, package: &str, path: &str) -> u64 {
        self.func_sig(package, path, vec![], None)
    }

    pub fn func_sig(&mut self, package: &str, path: &str, args: Vec<RawTypeRef>, ret: Option<RawTypeRef>) -> u64 {
        let id = self.raw.functions.len() as u64;
        self.raw.functions.push(RawFunction {
            id,
            package: package.into(),
            version: None,
            path: path.into(),
            visibility: Visibility::Public,
            signature: RawSignature { args, ret },
        });
        id
    }

    pub fn private(&mut self, id: u64) {
        self.raw.functions[id as usize].visibility = Visibility::Private;
    }

    pub fn call(&mut self, caller: u64, callee: u64, dispatch: Dispatch) {
        self.raw.edges.push(RawEdge {
            caller,
            callee,
            dispatch,
        });
    }

    pub fn interface(&mut self, interface: RawTypeRef, methods: &[(&str, u64)]) {
        self.raw.type_hierarchy.interfaces.push(RawInterface {
            interface,
            methods: methods
                .iter()
                .map(|(name, function)| RawMethod {
                    name: (*name).into(),
                    function: *function,
                })
                .collect(),
        });
    }

    pub fn implementation(&mut self, interface: RawTypeRef, implementor: RawTypeRef, method: &str, function: u64) {
        self.raw.type_hierarchy.impls.push(RawImpl {
            interface,
            implementor,
            method: method.into(),
            function,
        });
    }

    pub fn build(self) -> RawCallGraph {
        self.raw
    }
}

/// Index, raw graphs, annotated store and a snapshot time.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub index: Index,
    pub raw: BTreeMap<ReleaseKey, RawCallGraph>,
    pub store: CallGraphStore,
    pub at: Timestamp,
}

impl Fixture {
    pub fn new(releases: Vec<Release>, raw: BTreeMap<ReleaseKey, RawCallGraph>, at: &str) -> Self {
        let index = Index::from_releases(releases).expect("fixture index");
        let (store, issues) = CallGraphStore::annotate_all(&index, raw.clone());
        assert!(issues.is_empty(), "fixture graphs: {issues:?}");
        Fixture {
            index,
            raw,
            store,
            at: ts(at),
        }
    }
}

/// `App 1.0.0 -> Lib1 3.2.0 -> Lib2 0.2.0`, with `Lib2::unused` never
/// called and an `intern` function in both libraries.
pub fn figure2() -> Fixture {
    let releases = vec![
        release("App", "1.0.0", "2020-03-01", &[("Lib1", "3.2")]),
        release("Lib1", "3.2.0", "2020-02-01", &[("Lib2", "0.*")]),
        release("Lib2", "0.1.0", "2019-06-01", &[]),
        release("Lib2", "0.2.0", "2020-01-01", &[]),
    ];
    let mut app = GraphBuilder::new();
    let main = app.func("App", "main");
    let foo = app.func("App", "foo");
    let bar = app.func("Lib1", "bar");
    app.call(main, foo, Dispatch::Static);
    app.call(foo, bar, Dispatch::Static);

    let mut lib1 = GraphBuilder::new();
    let bar = lib1.func("Lib1", "bar");
    let intern = lib1.func("Lib1", "intern");
    let used = lib1.func("Lib2", "used");
    lib1.private(intern);
    lib1.call(bar, intern, Dispatch::Static);
    lib1.call(bar, used, Dispatch::Static);

    let lib2_graph = |with_unused: bool| {
        let mut g = GraphBuilder::new();
        let used = g.func("Lib2", "used");
        if with_unused {
            g.func("Lib2", "unused");
        }
        let intern = g.func("Lib2", "intern");
        g.private(intern);
        g.call(used, intern, Dispatch::Static);
        g.build()
    };

    let raw = BTreeMap::from([
        (key("App", "1.0.0"), app.build()),
        (key("Lib1", "3.2.0"), lib1.build()),
        (key("Lib2", "0.1.0"), lib2_graph(false)),
        (key("Lib2", "0.2.0"), lib2_graph(true)),
    ]);
    Fixture::new(releases, raw, "2021-01-01")
}

/// `A` depends on `B` and `C`, both on `serde`. `B::Foo` implements
/// `serde::Serialize::serialize`; `C::bar` calls it through a trait object.
pub fn serde_scenario() -> Fixture {
    let releases = vec![
        release("A", "1.0.0", "2020-03-01", &[("B", "1"), ("C", "1")]),
        release("B", "1.0.0", "2020-02-01", &[("serde", "1")]),
        release("C", "1.0.0", "2020-02-01", &[("serde", "1")]),
        release("serde", "1.0.0", "2020-01-01", &[]),
    ];
    let serialize_ty = || ty(Some("serde"), "Serialize");

    let mut serde = GraphBuilder::new();
    let decl = serde.func_sig("serde", "Serialize::serialize", vec![ty(None, "Self")], None);
    serde.interface(serialize_ty(), &[("serialize", decl)]);

    let mut b = GraphBuilder::new();
    b.func_sig("B", "Foo::new", vec![], Some(ty(Some("B"), "Foo")));
    let ser = b.func_sig("B", "Foo::serialize", vec![ty(Some("B"), "Foo")], None);
    b.implementation(serialize_ty(), ty(Some("B"), "Foo"), "serialize", ser);

    let mut c = GraphBuilder::new();
    let run = c.func("C", "run");
    let bar = c.func_sig("C", "bar", vec![serialize_ty()], None);
    let decl = c.func_sig("serde", "Serialize::serialize", vec![ty(None, "Self")], None);
    c.call(run, bar, Dispatch::Static);
    c.call(bar, decl, Dispatch::Dynamic);

    let mut a = GraphBuilder::new();
    let main = a.func("A", "main");
    let new = a.func_sig("B", "Foo::new", vec![], Some(ty(Some("B"), "Foo")));
    let run = a.func("C", "run");
    a.call(main, new, Dispatch::Static);
    a.call(main, run, Dispatch::Static);

    let raw = BTreeMap::from([
        (key("A", "1.0.0"), a.build()),
        (key("B", "1.0.0"), b.build()),
        (key("C", "1.0.0"), c.build()),
        (key("serde", "1.0.0"), serde.build()),
    ]);
    Fixture::new(releases, raw, "2021-01-01")
}

/// `A` requires `B 1.*`; `B 1.1.0` appears on 2020-02-01 and `B 1.2.0` on
/// 2020-04-01.
pub fn retroactive() -> Index {
    Index::from_releases([
        release("A", "1.0.0", "2020-01-01", &[("B", "1.*")]),
        release("B", "1.1.0", "2020-02-01", &[]),
        release("B", "1.2.0", "2020-04-01", &[]),
    ])
    .expect("fixture index")
}

/// `app` reaches `log` through `x` (`0.4.*`) and `y` (`second`), each
/// calling `log::info`.
pub fn duplicate_constraints(second: &str) -> Fixture {
    let releases = vec![
        release("app", "1.0.0", "2020-03-01", &[("x", "1"), ("y", "1")]),
        release("x", "1.0.0", "2020-02-01", &[("log", "0.4.*")]),
        release("y", "1.0.0", "2020-02-01", &[("log", second)]),
        release("log", "0.4.4", "2020-01-01", &[]),
        release("log", "0.4.6", "2020-01-02", &[]),
        release("log", "0.5.5", "2020-01-03", &[]),
    ];
    let caller = |name: &str| {
        let mut g = GraphBuilder::new();
        let run = g.func(name, "run");
        let info = g.func("log", "info");
        g.call(run, info, Dispatch::Static);
        g.build()
    };
    let log = || {
        let mut g = GraphBuilder::new();
        g.func("log", "info");
        g.build()
    };
    let mut app = GraphBuilder::new();
    let main = app.func("app", "main");
    let x = app.func("x", "run");
    let y = app.func("y", "run");
    app.call(main, x, Dispatch::Static);
    app.call(main, y, Dispatch::Static);
    let raw = BTreeMap::from([
        (key("app", "1.0.0"), app.build()),
        (key("x", "1.0.0"), caller("x")),
        (key("y", "1.0.0"), caller("y")),
        (key("log", "0.4.4"), log()),
        (key("log", "0.4.6"), log()),
        (key("log", "0.5.5"), log()),
    ]);
    Fixture::new(releases, raw, "2021-01-01")
}
