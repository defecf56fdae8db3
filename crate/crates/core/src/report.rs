//! Full analyses over a labeled graph and their serialized forms.
//!
//! Every run produces one record type per study. Per-cell failures (too few
//! samples, degenerate channels, unknown groups) are stored inline as error
//! strings so a sparse channel never aborts the run.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::correlate::{channel_correlation, group_correlation_suite, ChannelVertices, CorrelationReport, CorrelationSuite};
use crate::decompose::{channel_indegree, channels_into, decompose_indegree, ChannelVector, DecomposeError};
use crate::distfit::{select_best, BestFitSet, Family, FitOptions, FitResult, Sample};
use crate::graph::LabeledDigraph;
use crate::groups::{category_info, subcategory_info, Group, Tier};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("serializing output: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A value or the error that prevented computing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell<T> {
    Value(T),
    Error { error: String },
}

impl<T> Cell<T> {
    pub fn from_result<E: fmt::Display>(r: Result<T, E>) -> Cell<T> {
        match r {
            Ok(v) => Cell::Value(v),
            Err(e) => Cell::Error { error: e.to_string() },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Error { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub fit: FitOptions,
    pub channel_vertices: ChannelVertices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub dest: u8,
    pub source: u8,
    pub edges: u64,
    pub best_fit: Cell<BestFitSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub dest: u8,
    pub source_a: u8,
    pub source_b: u8,
    pub correlation: Cell<CorrelationReport>,
}

/// One destination group: distribution types, external popularity and
/// degree correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub group: u8,
    pub name: String,
    pub vertices: usize,
    pub global: Cell<BestFitSet>,
    pub internal: Cell<BestFitSet>,
    pub external: Cell<BestFitSet>,
    pub external_channels: Vec<ChannelRecord>,
    /// Union of the best-fit sets of all external channels.
    pub external_union: Vec<Family>,
    pub externally_popular_percent: f64,
    pub correlations: Cell<CorrelationSuite>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier1Report {
    pub groups: Vec<GroupRecord>,
    pub channel_pairs: Vec<PairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier2Category {
    pub category: u8,
    pub name: String,
    pub groups: Vec<GroupRecord>,
    pub channel_pairs: Vec<PairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier2Report {
    pub categories: Vec<Tier2Category>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossChannel {
    /// Destination category.
    pub dest: u8,
    /// Source subcategory.
    pub source: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossPair {
    pub dest: u8,
    pub source_a: u8,
    pub source_b: u8,
}

/// Subcategory-to-category combinations to study.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossTierRequest {
    pub channels: Vec<CrossChannel>,
    pub correlations: Vec<CrossPair>,
}

impl CrossTierRequest {
    /// Nine channels into categories 4, 5 and 6 from subcategories of
    /// categories 2, 5 and 6, and nine source pairs over the same channels.
    pub fn standard() -> CrossTierRequest {
        let channels = [(4, 21), (4, 22), (6, 51), (6, 52), (6, 53), (5, 61), (5, 62), (5, 69), (4, 69)]
            .into_iter()
            .map(|(dest, source)| CrossChannel { dest, source })
            .collect();
        let correlations = [
            (4, 21, 22),
            (4, 21, 69),
            (4, 22, 69),
            (5, 61, 62),
            (5, 62, 69),
            (5, 61, 69),
            (6, 51, 52),
            (6, 52, 53),
            (6, 51, 53),
        ]
        .into_iter()
        .map(|(dest, source_a, source_b)| CrossPair {
            dest,
            source_a,
            source_b,
        })
        .collect();
        CrossTierRequest {
            channels,
            correlations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTierReport {
    pub channels: Vec<ChannelRecord>,
    pub correlations: Vec<PairRecord>,
}

fn group_name(tier: Tier, code: u8) -> String {
    match tier {
        Tier::Category => category_info(u32::from(code)).map(|c| c.name),
        Tier::Subcategory => subcategory_info(u32::from(code)).map(|s| s.name),
    }
    .unwrap_or("")
    .to_string()
}

fn best_fit(degrees: &[u32], options: &FitOptions) -> Cell<BestFitSet> {
    Cell::from_result(select_best(&Sample::from_degrees(degrees), options))
}

fn channel_record(channel: &ChannelVector, options: &FitOptions) -> ChannelRecord {
    ChannelRecord {
        dest: channel.dest.code(),
        source: channel.source.code(),
        edges: channel.total(),
        best_fit: best_fit(&channel.counts, options),
    }
}

/// Best-fit sets, popularity and correlations for every group at `tier`
/// inside `scope`, plus the pairwise channel correlations into each group.
fn analyze_groups(
    graph: &LabeledDigraph,
    tier: Tier,
    scope: Option<u8>,
    options: &AnalysisOptions,
) -> Result<(Vec<GroupRecord>, Vec<PairRecord>), ReportError> {
    let d = decompose_indegree(graph, tier, scope)?;
    let codes: Vec<u8> = d.group_codes().collect();
    let per_group: Vec<(GroupRecord, Vec<PairRecord>)> = codes
        .par_iter()
        .map(|&code| {
            let view = d.group(code).expect("code from decomposition");
            let dest = Group::new(tier, code).expect("present groups are valid");
            let channels = channels_into(graph, dest, tier, scope)
                .map(|cs| cs.into_iter().filter(|c| c.source.code() != code).collect::<Vec<_>>());
            let (external_channels, pairs) = match channels {
                Ok(cs) => {
                    let records: Vec<ChannelRecord> = cs.par_iter().map(|c| channel_record(c, &options.fit)).collect();
                    let mut pairs = Vec::new();
                    for (i, a) in cs.iter().enumerate() {
                        for b in &cs[i + 1..] {
                            pairs.push(PairRecord {
                                dest: code,
                                source_a: a.source.code(),
                                source_b: b.source.code(),
                                correlation: Cell::from_result(channel_correlation(a, b, options.channel_vertices)),
                            });
                        }
                    }
                    (records, pairs)
                }
                Err(e) => (Vec::new(), vec![PairRecord {
                    dest: code,
                    source_a: 0,
                    source_b: 0,
                    correlation: Cell::Error { error: e.to_string() },
                }]),
            };
            let external_union: BTreeSet<Family> = external_channels
                .iter()
                .filter_map(|c| c.best_fit.value())
                .flat_map(|set| set.members.iter().copied())
                .collect();
            let record = GroupRecord {
                group: code,
                name: group_name(tier, code),
                vertices: view.len(),
                global: best_fit(view.global_in, &options.fit),
                internal: best_fit(view.internal_in, &options.fit),
                external: best_fit(view.external_in, &options.fit),
                external_channels,
                external_union: external_union.into_iter().collect(),
                externally_popular_percent: 100.0 * view.externally_popular_fraction(),
                correlations: Cell::from_result(group_correlation_suite(&view)),
            };
            (record, pairs)
        })
        .collect();
    let mut groups = Vec::with_capacity(per_group.len());
    let mut pairs = Vec::new();
    for (g, p) in per_group {
        groups.push(g);
        pairs.extend(p);
    }
    Ok((groups, pairs))
}

/// Category-level study over the whole graph.
pub fn run_tier1(graph: &LabeledDigraph, options: &AnalysisOptions) -> Result<Tier1Report, ReportError> {
    let (groups, channel_pairs) = analyze_groups(graph, Tier::Category, None, options)?;
    Ok(Tier1Report { groups, channel_pairs })
}

/// Subcategory-level study, one category at a time, counting only edges
/// whose endpoints share the category.
pub fn run_tier2(graph: &LabeledDigraph, options: &AnalysisOptions) -> Result<Tier2Report, ReportError> {
    let categories: Vec<u8> = graph.group_codes(Tier::Category);
    let categories = categories
        .par_iter()
        .map(|&c| {
            let (groups, channel_pairs) = analyze_groups(graph, Tier::Subcategory, Some(c), options)?;
            Ok(Tier2Category {
                category: c,
                name: group_name(Tier::Category, c),
                groups,
                channel_pairs,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    Ok(Tier2Report { categories })
}

/// Subcategory-to-category channels and their pairwise correlations.
pub fn run_cross_tier(
    graph: &LabeledDigraph,
    request: &CrossTierRequest,
    options: &AnalysisOptions,
) -> CrossTierReport {
    let channel = |dest: u8, source: u8| -> Result<ChannelVector, String> {
        let d = Group::new(Tier::Category, dest).map_err(|e| e.to_string())?;
        let s = Group::new(Tier::Subcategory, source).map_err(|e| e.to_string())?;
        channel_indegree(graph, d, s, None).map_err(|e| e.to_string())
    };
    let channels = request
        .channels
        .par_iter()
        .map(|c| match channel(c.dest, c.source) {
            Ok(v) => channel_record(&v, &options.fit),
            Err(error) => ChannelRecord {
                dest: c.dest,
                source: c.source,
                edges: 0,
                best_fit: Cell::Error { error },
            },
        })
        .collect();
    let correlations = request
        .correlations
        .par_iter()
        .map(|p| {
            let pcc = channel(p.dest, p.source_a).and_then(|a| {
                let b = channel(p.dest, p.source_b)?;
                channel_correlation(&a, &b, options.channel_vertices).map_err(|e| e.to_string())
            });
            PairRecord {
                dest: p.dest,
                source_a: p.source_a,
                source_b: p.source_b,
                correlation: Cell::from_result(pcc),
            }
        })
        .collect();
    CrossTierReport { channels, correlations }
}

/// Writes `x,empirical` plus one fitted column per fit: the empirical
/// `P(X ≥ x)` at each distinct value and each model's tail probability
/// scaled by the fraction of the sample at or above its `xmin`. Fitted
/// columns are empty below the fit's `xmin`.
pub fn emit_ccdf<W: Write>(sample: &Sample, fits: &[FitResult], mut out: W) -> io::Result<()> {
    write!(out, "x,empirical")?;
    for f in fits {
        write!(out, ",{}", f.family)?;
    }
    writeln!(out)?;
    let n = sample.len() as f64;
    let tail_share: Vec<f64> = fits.iter().map(|f| sample.tail(f.xmin).n as f64 / n).collect();
    let models: Vec<_> = fits.iter().map(FitResult::model).collect();
    let mut remaining = sample.len();
    for (x, c) in sample.iter() {
        write!(out, "{x},{}", remaining as f64 / n)?;
        for ((f, m), share) in fits.iter().zip(&models).zip(&tail_share) {
            if x >= f.xmin {
                write!(out, ",{}", share * m.ccdf(x))?;
            } else {
                write!(out, ",")?;
            }
        }
        writeln!(out)?;
        remaining -= c;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<FileDigest, ReportError> {
    let file = File::open(path).map_err(io_error(path))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    let mut bytes = 0u64;
    loop {
        let k = reader.read(&mut buf).map_err(io_error(path))?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
        bytes += k as u64;
    }
    Ok(FileDigest {
        path: path.display().to_string(),
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Settings that produced a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub tier: Option<Tier>,
    pub scope: Option<u8>,
    pub options: AnalysisOptions,
}

/// Outputs of one analysis together with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRun<T> {
    pub toolkit: String,
    pub version: String,
    pub dataset: Vec<FileDigest>,
    pub config: RunConfig,
    pub outputs: T,
}

impl<T> AnalysisRun<T> {
    pub fn new(dataset: Vec<FileDigest>, config: RunConfig, outputs: T) -> AnalysisRun<T> {
        AnalysisRun {
            toolkit: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            dataset,
            config,
            outputs,
        }
    }
}

/// Wall-clock seconds per stage, kept apart from the outputs so those stay
/// byte-identical across runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn record(&mut self, stage: &str, seconds: f64) {
        self.stages.push((stage.to_string(), seconds));
    }
}

/// Pretty JSON with object keys sorted.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, ReportError> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let text = canonical_json(value)?;
    fs::write(path, text).map_err(io_error(path))
}

fn members_text(cell: &Cell<BestFitSet>) -> String {
    match cell {
        Cell::Value(set) => set
            .members
            .iter()
            .map(Family::to_string)
            .collect::<Vec<_>>()
            .join("|"),
        Cell::Error { error } => format!("error: {error}"),
    }
}

fn pcc_text(cell: &Cell<CorrelationReport>) -> (String, String) {
    match cell {
        Cell::Value(r) => (
            r.pcc.map_or_else(|| "undefined".to_string(), |p| p.to_string()),
            r.n.to_string(),
        ),
        Cell::Error { error } => (format!("error: {error}"), String::new()),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, ReportError> {
    let file = File::create(path).map_err(io_error(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |e| ReportError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Per-group CSV rows, with a leading scope column when `scope` is given.
fn write_group_rows(path: &Path, rows: &[(Option<u8>, &GroupRecord)]) -> Result<(), ReportError> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "scope",
        "group",
        "name",
        "vertices",
        "global",
        "internal",
        "external",
        "external_union",
        "externally_popular_percent",
        "pcc_global_internal",
        "pcc_global_external",
        "pcc_internal_external",
    ])
    .map_err(csv_error(path))?;
    for (scope, g) in rows {
        let pcc = |f: fn(&CorrelationSuite) -> &CorrelationReport| match &g.correlations {
            Cell::Value(s) => f(s).pcc.map_or_else(|| "undefined".to_string(), |p| p.to_string()),
            Cell::Error { error } => format!("error: {error}"),
        };
        w.write_record([
            scope.map(|s| s.to_string()).unwrap_or_default(),
            g.group.to_string(),
            g.name.clone(),
            g.vertices.to_string(),
            members_text(&g.global),
            members_text(&g.internal),
            members_text(&g.external),
            g.external_union.iter().map(Family::to_string).collect::<Vec<_>>().join("|"),
            g.externally_popular_percent.to_string(),
            pcc(|s| &s.global_internal),
            pcc(|s| &s.global_external),
            pcc(|s| &s.internal_external),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

fn write_channel_rows(path: &Path, rows: &[&ChannelRecord]) -> Result<(), ReportError> {
    let mut w = csv_writer(path)?;
    w.write_record(["dest", "source", "edges", "best_fit"]).map_err(csv_error(path))?;
    for c in rows {
        w.write_record([
            c.dest.to_string(),
            c.source.to_string(),
            c.edges.to_string(),
            members_text(&c.best_fit),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

fn write_pair_rows(path: &Path, rows: &[&PairRecord]) -> Result<(), ReportError> {
    let mut w = csv_writer(path)?;
    w.write_record(["dest", "source_a", "source_b", "pcc", "n"]).map_err(csv_error(path))?;
    for p in rows {
        let (pcc, n) = pcc_text(&p.correlation);
        w.write_record([
            p.dest.to_string(),
            p.source_a.to_string(),
            p.source_b.to_string(),
            pcc,
            n,
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Reports that can be written as a directory of JSON and CSV tables.
pub trait Tables: Serialize {
    fn write_tables(&self, dir: &Path) -> Result<(), ReportError>;
}

impl Tables for Tier1Report {
    fn write_tables(&self, dir: &Path) -> Result<(), ReportError> {
        let groups: Vec<_> = self.groups.iter().map(|g| (None, g)).collect();
        write_group_rows(&dir.join("groups.csv"), &groups)?;
        let channels: Vec<_> = self.groups.iter().flat_map(|g| &g.external_channels).collect();
        write_channel_rows(&dir.join("channels.csv"), &channels)?;
        let pairs: Vec<_> = self.channel_pairs.iter().collect();
        write_pair_rows(&dir.join("channel_pairs.csv"), &pairs)
    }
}

impl Tables for Tier2Report {
    fn write_tables(&self, dir: &Path) -> Result<(), ReportError> {
        let groups: Vec<_> = self
            .categories
            .iter()
            .flat_map(|c| c.groups.iter().map(move |g| (Some(c.category), g)))
            .collect();
        write_group_rows(&dir.join("groups.csv"), &groups)?;
        let channels: Vec<_> = self
            .categories
            .iter()
            .flat_map(|c| c.groups.iter().flat_map(|g| &g.external_channels))
            .collect();
        write_channel_rows(&dir.join("channels.csv"), &channels)?;
        let pairs: Vec<_> = self.categories.iter().flat_map(|c| &c.channel_pairs).collect();
        write_pair_rows(&dir.join("channel_pairs.csv"), &pairs)
    }
}

impl Tables for CrossTierReport {
    fn write_tables(&self, dir: &Path) -> Result<(), ReportError> {
        let channels: Vec<_> = self.channels.iter().collect();
        write_channel_rows(&dir.join("channels.csv"), &channels)?;
        let pairs: Vec<_> = self.correlations.iter().collect();
        write_pair_rows(&dir.join("channel_pairs.csv"), &pairs)
    }
}

/// Writes `run.json`, the report's CSV tables and `timings.json` into `dir`.
pub fn write_run<T: Tables>(dir: &Path, run: &AnalysisRun<T>, timings: &Timings) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    write_json(&dir.join("run.json"), run)?;
    run.outputs.write_tables(dir)?;
    write_json(&dir.join("timings.json"), timings)
}
