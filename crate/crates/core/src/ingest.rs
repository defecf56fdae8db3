//! Streaming readers for the citation edge file and the patent attribute
//! file.
//!
//! Both files are delimited text. Columns are addressed by header name or by
//! zero-based index. Label rows whose subcategory is blank or outside the
//! known code set are skipped and counted; citations touching an unlabeled
//! patent are dropped and counted, as are self-loops and repeated pairs.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_graph, GraphError, LabeledDigraph};
use crate::groups::{is_known_subcategory, GroupLabel};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("column `{0}` is addressed by name but the file has no header")]
    NamedColumnWithoutHeader(String),
    #[error("line {line}: patent {id} labeled twice with different subcategories")]
    ConflictingLabel { line: u64, id: u64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Column address: header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "{i}"),
            ColumnRef::Name(n) => f.write_str(n),
        }
    }
}

impl ColumnRef {
    fn resolve(&self, headers: Option<&csv::StringRecord>) -> Result<usize, IngestError> {
        match self {
            ColumnRef::Index(i) => Ok(*i),
            ColumnRef::Name(name) => {
                let headers =
                    headers.ok_or_else(|| IngestError::NamedColumnWithoutHeader(name.clone()))?;
                headers
                    .iter()
                    .position(|h| h.eq_ignore_ascii_case(name))
                    .ok_or_else(|| IngestError::MissingColumn(name.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationFormat {
    pub delimiter: u8,
    pub has_header: bool,
    pub citing: ColumnRef,
    pub cited: ColumnRef,
}

impl Default for CitationFormat {
    fn default() -> Self {
        CitationFormat {
            delimiter: b',',
            has_header: true,
            citing: ColumnRef::Name("CITING".into()),
            cited: ColumnRef::Name("CITED".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFormat {
    pub delimiter: u8,
    pub has_header: bool,
    pub id: ColumnRef,
    pub subcategory: ColumnRef,
    /// When set, rows whose category disagrees with `subcategory / 10` are
    /// skipped.
    pub category: Option<ColumnRef>,
}

impl Default for LabelFormat {
    fn default() -> Self {
        LabelFormat {
            delimiter: b',',
            has_header: true,
            id: ColumnRef::Name("PATENT".into()),
            subcategory: ColumnRef::Name("SUBCAT".into()),
            category: Some(ColumnRef::Name("CAT".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    pub rows: u64,
    pub labeled: u64,
    pub skipped_unlabeled: u64,
    pub skipped_inconsistent: u64,
}

#[derive(Debug, Clone, Default)]
pub struct LabelSet {
    pub labels: HashMap<u64, GroupLabel>,
    pub report: LabelReport,
}

/// Counts from one pass over the citation file.
///
/// `raw_edge_count` always equals the sum of retained and dropped counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub raw_edge_count: u64,
    pub retained_edge_count: u64,
    pub dropped_unlabeled_endpoint_count: u64,
    pub dropped_duplicate_count: u64,
    pub dropped_self_loop_count: u64,
    pub labeled_vertex_count: u64,
}

impl IngestReport {
    pub fn is_conserved(&self) -> bool {
        self.raw_edge_count
            == self.retained_edge_count
                + self.dropped_unlabeled_endpoint_count
                + self.dropped_duplicate_count
                + self.dropped_self_loop_count
    }

    /// `key=value` lines in field order.
    pub fn to_key_value(&self) -> String {
        format!(
            "raw_edge_count={}\nretained_edge_count={}\ndropped_unlabeled_endpoint_count={}\n\
             dropped_duplicate_count={}\ndropped_self_loop_count={}\nlabeled_vertex_count={}\n",
            self.raw_edge_count,
            self.retained_edge_count,
            self.dropped_unlabeled_endpoint_count,
            self.dropped_duplicate_count,
            self.dropped_self_loop_count,
            self.labeled_vertex_count
        )
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Open {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_reader<R: Read>(input: R, delimiter: u8, has_header: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::Malformed {
        line,
        message: e.to_string(),
    }
}

fn headers<R: Read>(
    reader: &mut csv::Reader<R>,
    has_header: bool,
) -> Result<Option<csv::StringRecord>, IngestError> {
    if has_header {
        Ok(Some(reader.headers().map_err(csv_error)?.clone()))
    } else {
        Ok(None)
    }
}

fn field(record: &csv::ByteRecord, col: usize, line: u64) -> Result<&str, IngestError> {
    let raw = record.get(col).ok_or_else(|| IngestError::Malformed {
        line,
        message: format!("missing column {col} (row has {} fields)", record.len()),
    })?;
    std::str::from_utf8(raw).map_err(|_| IngestError::Malformed {
        line,
        message: format!("column {col} is not valid UTF-8"),
    })
}

fn parse_id(text: &str, what: &str, line: u64) -> Result<u64, IngestError> {
    text.parse().map_err(|_| IngestError::Malformed {
        line,
        message: format!("{what} `{text}` is not a non-negative integer"),
    })
}

pub fn load_labels(path: impl AsRef<Path>, format: &LabelFormat) -> Result<LabelSet, IngestError> {
    read_labels(io::BufReader::new(open(path.as_ref())?), format)
}

/// Reads patent labels. Tier 1 is derived from the subcategory code.
pub fn read_labels<R: Read>(input: R, format: &LabelFormat) -> Result<LabelSet, IngestError> {
    let mut reader = csv_reader(input, format.delimiter, format.has_header);
    let hdr = headers(&mut reader, format.has_header)?;
    let id_col = format.id.resolve(hdr.as_ref())?;
    let sub_col = format.subcategory.resolve(hdr.as_ref())?;
    let cat_col = format
        .category
        .as_ref()
        .map(|c| c.resolve(hdr.as_ref()))
        .transpose()?;

    let mut set = LabelSet::default();
    let mut record = csv::ByteRecord::new();
    while reader.read_byte_record(&mut record).map_err(csv_error)? {
        let line = record.position().map_or(0, |p| p.line());
        set.report.rows += 1;
        let id = parse_id(field(&record, id_col, line)?, "patent id", line)?;
        let sub_text = field(&record, sub_col, line)?;
        if sub_text.is_empty() {
            set.report.skipped_unlabeled += 1;
            continue;
        }
        let sub: u32 = sub_text.parse().map_err(|_| IngestError::Malformed {
            line,
            message: format!("subcategory `{sub_text}` is not an integer"),
        })?;
        if !is_known_subcategory(sub) {
            set.report.skipped_unlabeled += 1;
            continue;
        }
        if let Some(c) = cat_col {
            let cat_text = field(&record, c, line)?;
            if !cat_text.is_empty() && cat_text.parse::<u32>().ok() != Some(sub / 10) {
                set.report.skipped_inconsistent += 1;
                continue;
            }
        }
        let label = GroupLabel::from_subcategory(sub).expect("code checked above");
        match set.labels.insert(id, label) {
            Some(prev) if prev != label => return Err(IngestError::ConflictingLabel { line, id }),
            Some(_) => {}
            None => set.report.labeled += 1,
        }
    }
    Ok(set)
}

pub fn load_citations(
    path: impl AsRef<Path>,
    labels: &HashMap<u64, GroupLabel>,
    format: &CitationFormat,
) -> Result<(Vec<(u64, u64)>, IngestReport), IngestError> {
    read_citations(io::BufReader::new(open(path.as_ref())?), labels, format)
}

/// Reads citations and applies the filtering rule. The retained edges are
/// returned sorted by (citing, cited), free of duplicates and self-loops.
pub fn read_citations<R: Read>(
    input: R,
    labels: &HashMap<u64, GroupLabel>,
    format: &CitationFormat,
) -> Result<(Vec<(u64, u64)>, IngestReport), IngestError> {
    let mut reader = csv_reader(input, format.delimiter, format.has_header);
    let hdr = headers(&mut reader, format.has_header)?;
    let citing_col = format.citing.resolve(hdr.as_ref())?;
    let cited_col = format.cited.resolve(hdr.as_ref())?;

    let mut report = IngestReport {
        labeled_vertex_count: labels.len() as u64,
        ..IngestReport::default()
    };
    let mut edges = Vec::new();
    let mut record = csv::ByteRecord::new();
    while reader.read_byte_record(&mut record).map_err(csv_error)? {
        let line = record.position().map_or(0, |p| p.line());
        let citing = parse_id(field(&record, citing_col, line)?, "citing id", line)?;
        let cited = parse_id(field(&record, cited_col, line)?, "cited id", line)?;
        report.raw_edge_count += 1;
        if !labels.contains_key(&citing) || !labels.contains_key(&cited) {
            report.dropped_unlabeled_endpoint_count += 1;
        } else if citing == cited {
            report.dropped_self_loop_count += 1;
        } else {
            edges.push((citing, cited));
        }
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    report.dropped_duplicate_count = (before - edges.len()) as u64;
    report.retained_edge_count = edges.len() as u64;
    Ok((edges, report))
}

/// Result of loading both files and building the graph.
#[derive(Debug)]
pub struct Ingested {
    pub graph: LabeledDigraph,
    pub labels: LabelReport,
    pub report: IngestReport,
}

/// Loads labels and citations and builds the graph over the endpoints of
/// the retained edges.
pub fn ingest(
    citations: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    citation_format: &CitationFormat,
    label_format: &LabelFormat,
) -> Result<Ingested, IngestError> {
    let label_set = load_labels(labels, label_format)?;
    let (edges, report) = load_citations(citations, &label_set.labels, citation_format)?;
    let graph = build_graph(edges, &label_set.labels)?;
    Ok(Ingested {
        graph,
        labels: label_set.report,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LABELS: &str = "\
\"PATENT\",\"GYEAR\",\"CAT\",\"SUBCAT\"
3858241,1975,6,69
3858242,1975,6,63
3858243,1975,2,21
3858244,1975,,
3858245,1975,1,11
3858246,1975,1,19
3858247,1975,4,43
3858248,1975,7,70
3858249,1975,5,54
3858250,1975,3,32
";

    fn labels() -> LabelSet {
        read_labels(LABELS.as_bytes(), &LabelFormat::default()).unwrap()
    }

    #[test]
    fn reads_nber_style_labels() {
        let set = labels();
        assert_eq!(set.labels.len(), 8);
        assert_eq!(set.report.rows, 10);
        assert_eq!(set.report.labeled, 8);
        assert_eq!(set.report.skipped_unlabeled, 2);
        let l = set.labels[&3858241];
        assert_eq!((l.category(), l.subcategory()), (6, 69));
        assert!(!set.labels.contains_key(&3858244));
        assert!(!set.labels.contains_key(&3858248));
    }

    #[test]
    fn inconsistent_category_skipped() {
        let text = "PATENT,CAT,SUBCAT\n1,2,11\n2,1,11\n";
        let set = read_labels(text.as_bytes(), &LabelFormat::default()).unwrap();
        assert_eq!(set.labels.len(), 1);
        assert_eq!(set.report.skipped_inconsistent, 1);
    }

    #[test]
    fn malformed_label_row_names_line() {
        let text = "PATENT,CAT,SUBCAT\n1,1,11\nabc,1,11\n";
        match read_labels(text.as_bytes(), &LabelFormat::default()) {
            Err(IngestError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "PATENT,CAT,SUBCAT\n1,1,1x\n";
        assert!(matches!(
            read_labels(text.as_bytes(), &LabelFormat::default()),
            Err(IngestError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn columns_by_index_without_header() {
        let fmt = LabelFormat {
            delimiter: b'\t',
            has_header: false,
            id: ColumnRef::Index(0),
            subcategory: ColumnRef::Index(1),
            category: None,
        };
        let set = read_labels("5\t43\n6\t99\n".as_bytes(), &fmt).unwrap();
        assert_eq!(set.labels.len(), 1);
        assert_eq!(set.labels[&5].category(), 4);

        let bad = LabelFormat {
            id: ColumnRef::Name("PATENT".into()),
            ..fmt
        };
        assert!(matches!(
            read_labels("5\t43\n".as_bytes(), &bad),
            Err(IngestError::NamedColumnWithoutHeader(_))
        ));
    }

    #[test]
    fn citation_filtering_counts() {
        let set = labels();
        let text = "\
\"CITING\",\"CITED\"
3858242,3858241
3858243,3858241
3858243,3858241
3858244,3858241
3858241,3858248
3858245,3858245
3858246,3858245
";
        let (edges, report) =
            read_citations(text.as_bytes(), &set.labels, &CitationFormat::default()).unwrap();
        assert_eq!(
            edges,
            vec![(3858242, 3858241), (3858243, 3858241), (3858246, 3858245)]
        );
        assert_eq!(report.raw_edge_count, 7);
        assert_eq!(report.retained_edge_count, 3);
        assert_eq!(report.dropped_unlabeled_endpoint_count, 2);
        assert_eq!(report.dropped_duplicate_count, 1);
        assert_eq!(report.dropped_self_loop_count, 1);
        assert_eq!(report.labeled_vertex_count, 8);
        assert!(report.is_conserved());
        assert!(report.to_key_value().contains("dropped_duplicate_count=1\n"));
    }

    #[test]
    fn malformed_citation_row() {
        let set = labels();
        let text = "CITING,CITED\n3858242,3858241\n3858242\n";
        assert!(matches!(
            read_citations(text.as_bytes(), &set.labels, &CitationFormat::default()),
            Err(IngestError::Malformed { line: 3, .. })
        ));
        let text = "CITING,CITED\n3858242,-4\n";
        assert!(matches!(
            read_citations(text.as_bytes(), &set.labels, &CitationFormat::default()),
            Err(IngestError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn missing_named_column() {
        let set = labels();
        let fmt = CitationFormat {
            cited: ColumnRef::Name("CITEE".into()),
            ..CitationFormat::default()
        };
        assert!(matches!(
            read_citations("CITING,CITED\n".as_bytes(), &set.labels, &fmt),
            Err(IngestError::MissingColumn(_))
        ));
    }

    #[test]
    fn column_ref_parse() {
        assert_eq!("3".parse::<ColumnRef>().unwrap(), ColumnRef::Index(3));
        assert_eq!(
            "SUBCAT".parse::<ColumnRef>().unwrap(),
            ColumnRef::Name("SUBCAT".into())
        );
    }
}
