//! `callnet`: batch driver for call-based dependency networks.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 unparsable input or
//! arguments, 3 index violations under `--strict`, 4 unresolvable roots
//! under `--strict`.

mod report;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use callnet::callgraph::CallGraphStore;
use callnet::export::{
    read_cdn, read_pdn_trees, write_cdn_dot, write_cdn_edges, write_cdn_nodes, write_pdn_dot, write_pdn_edges,
    write_pdn_nodes, write_pdn_trees, write_skipped, ExportError,
};
use callnet::index::format_timestamp;
use callnet::synth::{generate, SynthSpec};
use callnet::unify::build_cdn_in;
use callnet::{
    changed_trees, load_index_files, parse_timestamp, validate, FeatureSelection, Index, IndexError, Snapshot,
    Timestamp, VersionPolicy,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::report::{Analysis, Metric};

#[derive(Parser)]
#[command(name = "callnet", version, about = "Build and analyze call-based dependency networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IndexArgs {
    /// Line-delimited JSON registry index.
    #[arg(long)]
    index: PathBuf,
    /// CSV of `name,version,timestamp` publication times.
    #[arg(long)]
    timestamps: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check every release for unknown dependencies and unsatisfiable requirements.
    Validate {
        #[command(flatten)]
        input: IndexArgs,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 3 when violations are found.
        #[arg(long)]
        strict: bool,
    },
    /// Resolve, unify and write the package and call networks of each snapshot.
    Build {
        #[command(flatten)]
        input: IndexArgs,
        /// Directory of call graphs laid out as `<package>/<version>.json`.
        #[arg(long)]
        cg_store: PathBuf,
        /// Snapshot instant (ISO-8601); repeat for several, in increasing order.
        #[arg(long, required = true)]
        at: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// `default`, `none`, `all`, or a comma-separated feature list.
        #[arg(long, default_value = "default")]
        features: String,
        /// Exit with status 3 on index violations, 4 on skipped roots.
        #[arg(long)]
        strict: bool,
    },
    /// Compute metric reports over snapshots written by `build`.
    Analyze {
        /// Output directory of a previous `build`.
        #[arg(long)]
        out: PathBuf,
        /// Snapshots to analyze; all under `--out` when omitted.
        #[arg(long)]
        at: Vec<String>,
        /// Comma-separated metric names; all when omitted.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<Metric>,
    },
    /// Report which dependency trees change between two instants.
    Diff {
        #[command(flatten)]
        input: IndexArgs,
        /// Baseline then later instant.
        #[arg(long, num_args = 1, required = true)]
        at: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 4 when a baseline root no longer resolves.
        #[arg(long)]
        strict: bool,
    },
    /// Write a seeded synthetic registry with call graphs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the 500-package, five-version scale profile.
        #[arg(long)]
        scale: bool,
        #[arg(long)]
        packages: Option<usize>,
    },
}

#[derive(Debug)]
enum Failure {
    Other(anyhow::Error),
    Parse(anyhow::Error),
    Validation(String),
    Unresolvable(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Unresolvable(_) => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Io(e) => Failure::Other(e.into()),
            e => Failure::Parse(e.into()),
        }
    }
}

impl From<ExportError> for Failure {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::Io(e) => Failure::Other(e.into()),
            e => Failure::Parse(e.into()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { input, out, strict } => cmd_validate(&input, &out, strict),
        Command::Build {
            input,
            cg_store,
            at,
            out,
            features,
            strict,
        } => cmd_build(&input, &cg_store, &at, &out, &features, strict),
        Command::Analyze { out, at, metrics } => cmd_analyze(&out, &at, &metrics),
        Command::Diff { input, at, out, strict } => cmd_diff(&input, &at, &out, strict),
        Command::Synth {
            out,
            seed,
            scale,
            packages,
        } => cmd_synth(&out, seed, scale, packages),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Other(e) | Failure::Parse(e) => log::error!("{e:#}"),
                Failure::Validation(m) | Failure::Unresolvable(m) => log::error!("{m}"),
            }
            ExitCode::from(failure.code())
        }
    }
}

fn require_exists(path: &Path, what: &str) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Other(anyhow!("{what} {} does not exist", path.display())))
    }
}

fn load(input: &IndexArgs) -> Result<Index, Failure> {
    require_exists(&input.index, "index")?;
    require_exists(&input.timestamps, "timestamp file")?;
    let index = load_index_files(&input.index, &input.timestamps)?;
    log::info!("loaded {} releases of {} packages", index.release_count(), index.package_count());
    Ok(index)
}

/// Parses snapshot instants, which must be strictly increasing.
fn parse_instants(texts: &[String]) -> Result<Vec<Timestamp>, Failure> {
    let instants = texts
        .iter()
        .map(|t| parse_timestamp(t).map_err(|e| Failure::Parse(anyhow!(e))))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(w) = instants.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Failure::Parse(anyhow!(
            "snapshot instants must increase: {} then {}",
            format_timestamp(&w[0]),
            format_timestamp(&w[1])
        )));
    }
    Ok(instants)
}

fn parse_features(text: &str) -> FeatureSelection {
    match text {
        "default" => FeatureSelection::Default,
        "none" => FeatureSelection::None,
        "all" => FeatureSelection::All,
        list => FeatureSelection::List(list.split(',').map(|f| f.trim().to_owned()).filter(|f| !f.is_empty()).collect()),
    }
}

/// Directory name of a snapshot.
fn slug(at: &Timestamp) -> String {
    at.format("%Y%m%dT%H%M%SZ").to_string()
}

/// Writes `path` through a temporary file in the same directory and renames
/// it into place.
fn write_atomic<E>(path: &Path, body: impl FnOnce(&mut BufWriter<&File>) -> Result<(), E>) -> Result<(), Failure>
where
    Failure: From<E>,
{
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Failure::Other(e.error.into()))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    write_atomic(path, |w| -> Result<(), Failure> {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Failure::Other(e.into()))?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn cmd_validate(input: &IndexArgs, out: &Path, strict: bool) -> Outcome {
    let index = load(input)?;
    let report = validate(&index);
    write_json(&out.join("validation.json"), &report)?;
    let flagged = report.flagged().len();
    log::info!(
        "{flagged} releases flagged: {} unknown dependencies, {} unsatisfiable requirements",
        report.unknown_dependencies.len(),
        report.unsolvable.len()
    );
    if strict && !report.is_empty() {
        return Err(Failure::Validation(format!("{flagged} releases violate the index rules")));
    }
    Ok(())
}

struct SnapshotOutcome {
    excluded: usize,
    skipped: usize,
}

fn build_snapshot(
    index: &Index,
    store: &CallGraphStore,
    features: &FeatureSelection,
    at: Timestamp,
    dir: &Path,
) -> Result<SnapshotOutcome, Failure> {
    let snapshot = Snapshot::new(index, at);
    let releases = snapshot.mirror.release_count();
    let excluded: Vec<String> = snapshot.excluded().iter().map(ToString::to_string).collect();
    let build = build_cdn_in(&snapshot, store, VersionPolicy::LatestPerPackage, features);
    drop(snapshot);

    let network = &build.network.network;
    let mut skipped = build.network.skipped.clone();
    skipped.extend(build.skipped.iter().cloned());
    skipped.sort();
    for s in &skipped {
        log::warn!("{}: skipped {}: {}", slug(&at), s.root, s.reason);
    }

    write_atomic(&dir.join("pdn_nodes.csv"), |w| write_pdn_nodes(network, w))?;
    write_atomic(&dir.join("pdn_edges.csv"), |w| write_pdn_edges(network, w))?;
    write_atomic(&dir.join("pdn_trees.csv"), |w| write_pdn_trees(&build.network.trees, w))?;
    write_atomic(&dir.join("pdn.dot"), |w| write_pdn_dot(network, w))?;
    write_atomic(&dir.join("cdn_nodes.csv"), |w| write_cdn_nodes(&build.cdn, w))?;
    write_atomic(&dir.join("cdn_edges.csv"), |w| write_cdn_edges(&build.cdn, w))?;
    write_atomic(&dir.join("cdn.dot"), |w| write_cdn_dot(&build.cdn, w))?;
    write_atomic(&dir.join("skipped.csv"), |w| write_skipped(&skipped, w))?;

    let unified: BTreeMap<&String, _> = build
        .unified
        .iter()
        .map(|(root, s)| (root, json!({ "nodes": s.nodes, "edges": s.edges, "dropped": s.dropped })))
        .collect();
    let manifest = json!({
        "at": format_timestamp(&at),
        "releases": releases,
        "excluded": excluded,
        "roots": build.network.trees.len() + build.network.skipped.len(),
        "pdn": { "nodes": network.nodes.len(), "edges": network.edges.len() },
        "cdn": { "nodes": build.cdn.nodes.len(), "edges": build.cdn.edges.len() },
        "skipped": skipped.len(),
        "unified": unified,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    log::info!(
        "{}: {} trees, {} functions, {} calls, {} skipped",
        slug(&at),
        build.network.trees.len(),
        build.cdn.nodes.len(),
        build.cdn.edges.len(),
        skipped.len()
    );
    Ok(SnapshotOutcome {
        excluded: excluded.len(),
        skipped: skipped.len(),
    })
}

fn cmd_build(input: &IndexArgs, cg_store: &Path, at: &[String], out: &Path, features: &str, strict: bool) -> Outcome {
    let instants = parse_instants(at)?;
    let index = load(input)?;
    require_exists(cg_store, "call-graph store")?;
    let (store, issues) = CallGraphStore::load_dir(cg_store, &index)
        .with_context(|| format!("reading call graphs from {}", cg_store.display()))?;
    for issue in &issues {
        log::warn!("call graph {}: {}", issue.path, issue.reason);
    }
    log::info!("loaded {} call graphs", store.len());
    let features = parse_features(features);

    let outcomes: Vec<Result<SnapshotOutcome, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = instants
            .iter()
            .map(|&t| {
                let (index, store, features) = (&index, &store, &features);
                let dir = out.join(slug(&t));
                scope.spawn(move || build_snapshot(index, store, features, t, &dir))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("snapshot thread panicked")).collect()
    });
    let mut excluded = 0;
    let mut skipped = 0;
    for outcome in outcomes {
        let o = outcome?;
        excluded += o.excluded;
        skipped += o.skipped;
    }
    if strict && excluded > 0 {
        return Err(Failure::Validation(format!("{excluded} releases excluded by validation")));
    }
    if strict && skipped > 0 {
        return Err(Failure::Unresolvable(format!("{skipped} roots skipped")));
    }
    Ok(())
}

fn snapshot_dirs(out: &Path, at: &[String]) -> Result<Vec<PathBuf>, Failure> {
    if !at.is_empty() {
        return Ok(parse_instants(at)?.iter().map(|t| out.join(slug(t))).collect());
    }
    require_exists(out, "output directory")?;
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    dirs.retain(|d| d.join("manifest.json").is_file());
    dirs.sort();
    Ok(dirs)
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::Other)
}

fn cmd_analyze(out: &Path, at: &[String], metrics: &[Metric]) -> Outcome {
    let metrics: Vec<Metric> = if metrics.is_empty() { Metric::ALL.to_vec() } else { metrics.to_vec() };
    let dirs = snapshot_dirs(out, at)?;
    if dirs.is_empty() {
        log::warn!("no snapshots under {}", out.display());
    }
    for dir in dirs {
        let manifest: serde_json::Value = serde_json::from_reader(open(&dir.join("manifest.json"))?)
            .map_err(|e| Failure::Parse(anyhow!("{}: {e}", dir.join("manifest.json").display())))?;
        let instant = manifest["at"]
            .as_str()
            .ok_or_else(|| Failure::Parse(anyhow!("{}: manifest has no `at`", dir.display())))
            .and_then(|t| parse_timestamp(t).map_err(|e| Failure::Parse(anyhow!(e))))?;
        let trees = read_pdn_trees(open(&dir.join("pdn_trees.csv"))?)?;
        let cdn = read_cdn(instant, open(&dir.join("cdn_nodes.csv"))?, open(&dir.join("cdn_edges.csv"))?)?;
        let analysis = Analysis::new(&cdn, &trees);
        for &metric in &metrics {
            write_json(&dir.join("metrics").join(format!("{metric}.json")), &analysis.report(metric))?;
        }
        log::info!("{}: wrote {} reports", dir.display(), metrics.len());
    }
    Ok(())
}

fn cmd_diff(input: &IndexArgs, at: &[String], out: &Path, strict: bool) -> Outcome {
    let instants = parse_instants(at)?;
    let &[baseline, later] = instants.as_slice() else {
        return Err(Failure::Parse(anyhow!("diff takes exactly two --at instants")));
    };
    let index = load(input)?;
    let changes = changed_trees(&index, baseline, later);
    let changed = changes.iter().filter(|c| c.changed).count();
    let failed = changes.iter().filter(|c| c.error.is_some()).count();
    let fraction = if changes.is_empty() { 0.0 } else { changed as f64 / changes.len() as f64 };
    let report = json!({
        "baseline": format_timestamp(&baseline),
        "later": format_timestamp(&later),
        "roots": changes.len(),
        "changed": changed,
        "fraction": fraction,
        "trees": changes,
    });
    write_json(&out.join(format!("diff_{}_{}.json", slug(&baseline), slug(&later))), &report)?;
    log::info!("{changed} of {} trees changed", changes.len());
    if strict && failed > 0 {
        return Err(Failure::Unresolvable(format!("{failed} roots no longer resolve")));
    }
    Ok(())
}

fn cmd_synth(out: &Path, seed: u64, scale: bool, packages: Option<usize>) -> Outcome {
    let mut spec = if scale { SynthSpec::scale(seed) } else { SynthSpec::default().with_seed(seed) };
    if let Some(n) = packages {
        spec.packages = n;
    }
    let fixture = generate(&spec).map_err(|e| Failure::Parse(e.into()))?;
    fixture.write_to(out)?;
    let times: Vec<String> = fixture.snapshot_times(3).iter().map(format_timestamp).collect();
    log::info!(
        "wrote {} releases to {}; suggested snapshots: {}",
        fixture.index.release_count(),
        out.display(),
        times.join(" ")
    );
    Ok(())
}
