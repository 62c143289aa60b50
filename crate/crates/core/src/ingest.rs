//! Log ingestion: row parsing, query normalization, and event selection.
//!
//! Input logs are CSV (with header) or JSONL with the fields
//! `query, product_type, impressions, clicks`. Rows are normalized and kept
//! only when the query matches the event filter.

use std::io::{BufRead, BufReader, Read};

use regex::Regex;
use serde::Deserialize;

use crate::error::{MineError, Result};

/// One aggregated (query, product-type) row from a click log.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RawLogRow {
    pub query: String,
    pub product_type: String,
    pub impressions: u64,
    pub clicks: u64,
}

impl RawLogRow {
    /// Checks the row-level invariants (`clicks <= impressions`, non-empty
    /// product-type id).
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.clicks > self.impressions {
            return Err(format!(
                "clicks {} > impressions {}",
                self.clicks, self.impressions
            ));
        }
        if self.product_type.is_empty() {
            return Err("empty product_type".to_string());
        }
        Ok(())
    }
}

/// Compiled set of event keyword patterns.
#[derive(Debug, Clone)]
pub struct EventFilter {
    event_name: String,
    sources: Vec<String>,
    patterns: Vec<Regex>,
}

impl EventFilter {
    /// Compiles `patterns`; any invalid regex is a configuration error.
    pub fn new(event_name: impl Into<String>, patterns: &[String]) -> Result<Self> {
        if patterns.is_empty() {
            return Err(MineError::Config(
                "event filter needs at least one pattern".to_string(),
            ));
        }
        let compiled = patterns
            .iter()
            .map(|p| {
                Regex::new(p)
                    .map_err(|e| MineError::Config(format!("invalid event pattern {p:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            event_name: event_name.into(),
            sources: patterns.to_vec(),
            patterns: compiled,
        })
    }

    pub fn event_name(&self) -> &str {
        &self.event_name
    }

    /// The original pattern strings, for manifests and reports.
    pub fn pattern_sources(&self) -> &[String] {
        &self.sources
    }
}

/// Lowercases, trims, and collapses internal whitespace runs to one space.
///
/// Idempotent: `normalize_query(normalize_query(x)) == normalize_query(x)`.
pub fn normalize_query(raw: &str) -> String {
    raw.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// True iff any filter pattern matches the (already normalized) query.
///
/// Search semantics: the pattern may match anywhere in the query.
pub fn matches_event(query: &str, filter: &EventFilter) -> bool {
    filter.patterns.iter().any(|re| re.is_match(query))
}

/// Input file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl LogFormat {
    /// Guesses the format from a path extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(LogFormat::Csv),
            "jsonl" | "ndjson" | "json" => Some(LogFormat::Jsonl),
            _ => None,
        }
    }
}

/// What to do with malformed rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// First malformed row aborts the load.
    Strict,
    /// Malformed rows are skipped, counted, and reported.
    Lenient,
}

/// A malformed row and why it was rejected.
#[derive(Debug, Clone)]
pub struct RowIssue {
    pub line: u64,
    pub reason: String,
}

/// Counters describing one load.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub rows_read: u64,
    pub rows_matched: u64,
    pub rows_filtered_out: u64,
    pub malformed: Vec<RowIssue>,
}

/// Parses `reader`, normalizes queries, and keeps rows matching `filter`.
///
/// Returned rows carry the normalized query and preserve source order.
pub fn load_and_filter<R: Read>(
    reader: R,
    format: LogFormat,
    filter: &EventFilter,
    mode: LoadMode,
) -> Result<(Vec<RawLogRow>, LoadReport)> {
    match format {
        LogFormat::Csv => load_csv(reader, filter, mode),
        LogFormat::Jsonl => load_jsonl(reader, filter, mode),
    }
}

fn keep_row(
    mut row: RawLogRow,
    line: u64,
    filter: &EventFilter,
    mode: LoadMode,
    out: &mut Vec<RawLogRow>,
    report: &mut LoadReport,
) -> Result<()> {
    report.rows_read += 1;
    if let Err(reason) = row.check() {
        return reject(line, reason, mode, report);
    }
    row.query = normalize_query(&row.query);
    if matches_event(&row.query, filter) {
        report.rows_matched += 1;
        out.push(row);
    } else {
        report.rows_filtered_out += 1;
    }
    Ok(())
}

fn reject(line: u64, reason: String, mode: LoadMode, report: &mut LoadReport) -> Result<()> {
    match mode {
        LoadMode::Strict => Err(MineError::Validation {
            row: line,
            message: reason,
        }),
        LoadMode::Lenient => {
            log::warn!("skipping row {line}: {reason}");
            report.malformed.push(RowIssue { line, reason });
            Ok(())
        }
    }
}

/// Writes rows in the standard CSV log schema.
pub fn write_rows_csv<W: std::io::Write>(writer: W, rows: &[RawLogRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["query", "product_type", "impressions", "clicks"])?;
    for row in rows {
        w.write_record([
            row.query.as_str(),
            row.product_type.as_str(),
            &row.impressions.to_string(),
            &row.clicks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn load_csv<R: Read>(
    reader: R,
    filter: &EventFilter,
    mode: LoadMode,
) -> Result<(Vec<RawLogRow>, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    for required in ["query", "product_type", "impressions", "clicks"] {
        if !headers.iter().any(|h| h == required) {
            return Err(MineError::Data(format!(
                "csv header is missing required column {required:?}"
            )));
        }
    }

    let mut out = Vec::new();
    let mut report = LoadReport::default();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                match record.deserialize::<RawLogRow>(Some(&headers)) {
                    Ok(row) => keep_row(row, line, filter, mode, &mut out, &mut report)?,
                    Err(e) => {
                        report.rows_read += 1;
                        reject(line, e.to_string(), mode, &mut report)?;
                    }
                }
            }
            Err(e) => {
                // Structural problems (e.g. unequal field counts) are per-row
                // issues in lenient mode; the reader continues past them.
                let line = e
                    .position()
                    .map_or_else(|| rdr.position().line(), |p| p.line());
                report.rows_read += 1;
                reject(line, e.to_string(), mode, &mut report)?;
            }
        }
    }
    Ok((out, report))
}

fn load_jsonl<R: Read>(
    reader: R,
    filter: &EventFilter,
    mode: LoadMode,
) -> Result<(Vec<RawLogRow>, LoadReport)> {
    let buf = BufReader::new(reader);
    let mut out = Vec::new();
    let mut report = LoadReport::default();
    for (idx, line) in buf.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawLogRow>(&text) {
            Ok(row) => keep_row(row, line_no, filter, mode, &mut out, &mut report)?,
            Err(e) => {
                report.rows_read += 1;
                reject(line_no, e.to_string(), mode, &mut report)?;
            }
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn filter(patterns: &[&str]) -> EventFilter {
        let owned: Vec<String> = patterns.iter().map(|s| s.to_string()).collect();
        EventFilter::new("test", &owned).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_query("Valentines Day  Cards "),
            "valentines day cards"
        );
        assert_eq!(normalize_query("gift"), "gift");
        assert_eq!(normalize_query("  SUPER   Bowl TV "), "super bowl tv");
        assert_eq!(normalize_query(""), "");
    }

    #[test]
    fn matches_event_examples() {
        let f = filter(&["valentines? day"]);
        assert!(matches_event("valentines day cards", &f));
        assert!(!matches_event("birthday cards", &f));
        assert!(matches_event("valentine day gift", &f));
    }

    #[test]
    fn invalid_pattern_is_config_error() {
        let err = EventFilter::new("bad", &["(unclosed".to_string()]).unwrap_err();
        assert!(matches!(err, MineError::Config(_)));
        let err = EventFilter::new("empty", &[]).unwrap_err();
        assert!(matches!(err, MineError::Config(_)));
    }

    const CSV_SAMPLE: &str = "\
query,product_type,impressions,clicks
Valentines Day Cards,greeting_cards,100,12
birthday cards,greeting_cards,50,3
valentine day gift,gift_baskets,80,9
";

    #[test]
    fn load_csv_filters_and_normalizes() {
        let f = filter(&["valentines? day"]);
        let (rows, report) =
            load_and_filter(CSV_SAMPLE.as_bytes(), LogFormat::Csv, &f, LoadMode::Strict).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].query, "valentines day cards");
        assert_eq!(rows[1].query, "valentine day gift");
        assert_eq!(report.rows_read, 3);
        assert_eq!(report.rows_matched, 2);
        assert_eq!(report.rows_filtered_out, 1);
        assert!(report.malformed.is_empty());
    }

    #[test]
    fn load_empty_source() {
        let f = filter(&["x"]);
        let (rows, report) = load_and_filter(
            "query,product_type,impressions,clicks\n".as_bytes(),
            LogFormat::Csv,
            &f,
            LoadMode::Strict,
        )
        .unwrap();
        assert!(rows.is_empty());
        assert_eq!(report.rows_read, 0);
    }

    #[test]
    fn clicks_above_impressions_strict_names_row() {
        let data = "query,product_type,impressions,clicks\nvalentines day,cards,3,5\n";
        let f = filter(&["valentines day"]);
        let err =
            load_and_filter(data.as_bytes(), LogFormat::Csv, &f, LoadMode::Strict).unwrap_err();
        match err {
            MineError::Validation { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("clicks 5 > impressions 3"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn clicks_above_impressions_lenient_counts() {
        let data = "query,product_type,impressions,clicks\nvalentines day,cards,3,5\nvalentines day,cards,10,1\n";
        let f = filter(&["valentines day"]);
        let (rows, report) =
            load_and_filter(data.as_bytes(), LogFormat::Csv, &f, LoadMode::Lenient).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(report.malformed.len(), 1);
        assert_eq!(report.malformed[0].line, 2);
    }

    #[test]
    fn missing_column_is_data_error() {
        let data = "query,impressions,clicks\nvalentines day,3,1\n";
        let f = filter(&["valentines day"]);
        let err =
            load_and_filter(data.as_bytes(), LogFormat::Csv, &f, LoadMode::Lenient).unwrap_err();
        assert!(matches!(err, MineError::Data(_)));
    }

    #[test]
    fn load_jsonl() {
        let data = r#"{"query":"Valentines  Day","product_type":"cards","impressions":10,"clicks":2}
{"query":"summer pool","product_type":"floats","impressions":9,"clicks":1}
"#;
        let f = filter(&["valentines? day"]);
        let (rows, report) =
            load_and_filter(data.as_bytes(), LogFormat::Jsonl, &f, LoadMode::Strict).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].query, "valentines day");
        assert_eq!(report.rows_filtered_out, 1);
    }

    #[test]
    fn jsonl_bad_line_lenient() {
        let data = "{\"query\":\"valentines day\",\"product_type\":\"cards\",\"impressions\":10,\"clicks\":2}\nnot json\n";
        let f = filter(&["valentines day"]);
        let (rows, report) =
            load_and_filter(data.as_bytes(), LogFormat::Jsonl, &f, LoadMode::Lenient).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(report.malformed.len(), 1);
        assert_eq!(report.malformed[0].line, 2);
    }

    #[test]
    fn format_from_path() {
        use std::path::Path;
        assert_eq!(
            LogFormat::from_path(Path::new("a/b.csv")),
            Some(LogFormat::Csv)
        );
        assert_eq!(
            LogFormat::from_path(Path::new("a/b.jsonl")),
            Some(LogFormat::Jsonl)
        );
        assert_eq!(LogFormat::from_path(Path::new("a/b.parquet")), None);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize_query(&s);
            prop_assert_eq!(normalize_query(&once), once.clone());
        }

        // Output is the input subsequence restricted to matching rows.
        #[test]
        fn output_is_a_matching_subsequence(picks in proptest::collection::vec(0u8..3, 1..30)) {
            let mut csv = String::from("query,product_type,impressions,clicks\n");
            for (i, pick) in picks.iter().enumerate() {
                let query = match pick {
                    0 => format!("valentines day {i}"),
                    1 => format!("birthday {i}"),
                    _ => format!("Valentine Day  Gift {i}"),
                };
                csv.push_str(&format!("{query},pt{i},10,1\n"));
            }
            let f = filter(&["valentines? day"]);
            let (rows, _) =
                load_and_filter(csv.as_bytes(), LogFormat::Csv, &f, LoadMode::Strict).unwrap();
            let expected: Vec<String> = picks
                .iter()
                .enumerate()
                .filter(|(_, &p)| p != 1)
                .map(|(i, &p)| match p {
                    0 => format!("valentines day {i}"),
                    _ => format!("valentine day gift {i}"),
                })
                .collect();
            let got: Vec<String> = rows.into_iter().map(|r| r.query).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn normalized_matching_is_stable(s in "[a-zA-Z ]{0,30}") {
            let f = filter(&["valentines? day"]);
            let once = normalize_query(&s);
            let twice = normalize_query(&once);
            prop_assert_eq!(matches_event(&once, &f), matches_event(&twice, &f));
        }
    }
}
