//! Patent record ingestion and corpus selection.
//!
//! Records arrive as JSONL (one object per line) or CSV (same column
//! names, `cpc_codes` joined by `|`). Selection keeps mechanical
//! engineering patents (CPC section prefix), a filing-year window, and only
//! the earliest member of each patent family, recognised by
//! `application_id == earliest_filing_id`.

use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatentRecord {
    pub patent_id: String,
    pub application_id: String,
    pub earliest_filing_id: String,
    pub cpc_codes: Vec<String>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub r#abstract: String,
    pub filing_year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusFilter {
    pub cpc_prefix: String,
    pub year_min: i32,
    pub year_max: i32,
    pub require_earliest_in_family: bool,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        Self {
            cpc_prefix: "F".to_string(),
            year_min: 2016,
            year_max: 2021,
            require_earliest_in_family: true,
        }
    }
}

impl CorpusFilter {
    pub fn validate(&self) -> Result<()> {
        if self.cpc_prefix.trim().is_empty() {
            return Err(Error::InvalidFilter("cpc_prefix is empty".into()));
        }
        if self.year_min > self.year_max {
            return Err(Error::InvalidFilter(format!(
                "year_min {} > year_max {}",
                self.year_min, self.year_max
            )));
        }
        Ok(())
    }

    pub fn matches_cpc(&self, record: &PatentRecord) -> bool {
        let prefix = self.cpc_prefix.trim();
        record
            .cpc_codes
            .iter()
            .any(|code| code.trim().starts_with(prefix))
    }

    pub fn matches_year(&self, record: &PatentRecord) -> bool {
        (self.year_min..=self.year_max).contains(&record.filing_year)
    }

    pub fn matches_family(&self, record: &PatentRecord) -> bool {
        !self.require_earliest_in_family || record.application_id == record.earliest_filing_id
    }

    pub fn accepts(&self, record: &PatentRecord) -> bool {
        self.matches_cpc(record) && self.matches_year(record) && self.matches_family(record)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl CorpusFormat {
    /// Guess from a file extension; anything that is not `.csv` is JSONL.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordWarning {
    pub line: usize,
    pub message: String,
}

/// Result of a lenient parse: good records plus per-line diagnostics.
#[derive(Debug, Default)]
pub struct ParsedCorpus {
    pub records: Vec<PatentRecord>,
    pub warnings: Vec<RecordWarning>,
    pub errors: Vec<Error>,
}

// Wire shape with everything optional so that missing fields can be reported
// per record instead of failing the whole stream.
#[derive(Debug, Deserialize)]
struct RawRecord {
    patent_id: Option<String>,
    application_id: Option<String>,
    earliest_filing_id: Option<String>,
    cpc_codes: Option<CpcField>,
    title: Option<String>,
    r#abstract: Option<String>,
    filing_year: Option<YearField>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CpcField {
    List(Vec<String>),
    Joined(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum YearField {
    Int(i64),
    Text(String),
}

impl RawRecord {
    fn into_record(self, line: usize, warnings: &mut Vec<RecordWarning>) -> Result<PatentRecord> {
        let required = |value: Option<String>, name: &str| -> Result<String> {
            match value {
                Some(v) if !v.trim().is_empty() => Ok(v.trim().to_string()),
                _ => Err(Error::Record {
                    line,
                    message: format!("missing or empty `{name}`"),
                }),
            }
        };
        let patent_id = required(self.patent_id, "patent_id")?;
        let application_id = required(self.application_id, "application_id")?;
        let earliest_filing_id = required(self.earliest_filing_id, "earliest_filing_id")?;

        let cpc_codes = match self.cpc_codes {
            Some(CpcField::List(codes)) => codes,
            Some(CpcField::Joined(joined)) => joined
                .split('|')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(String::from)
                .collect(),
            None => {
                return Err(Error::Record {
                    line,
                    message: "missing `cpc_codes`".into(),
                })
            }
        };

        let filing_year = match self.filing_year {
            Some(YearField::Int(y)) => i32::try_from(y).ok(),
            Some(YearField::Text(t)) => t.trim().parse::<i32>().ok(),
            None => None,
        }
        .ok_or_else(|| Error::Record {
            line,
            message: "missing or non-integer `filing_year`".into(),
        })?;

        let r#abstract = match self.r#abstract {
            Some(a) => a,
            None => {
                warnings.push(RecordWarning {
                    line,
                    message: format!("record {patent_id} has no `abstract`; using empty text"),
                });
                String::new()
            }
        };

        Ok(PatentRecord {
            patent_id,
            application_id,
            earliest_filing_id,
            cpc_codes,
            title: self.title.unwrap_or_default(),
            r#abstract,
            filing_year,
        })
    }
}

/// Parses a whole record stream.
///
/// Malformed records are collected in [`ParsedCorpus::errors`] with their
/// line number and parsing continues. With `strict` the first malformed
/// record is returned as the error instead.
pub fn parse_corpus<R: Read>(reader: R, format: CorpusFormat, strict: bool) -> Result<ParsedCorpus> {
    let mut out = ParsedCorpus::default();
    let push = |line: usize, raw: std::result::Result<RawRecord, String>, out: &mut ParsedCorpus| {
        let parsed = raw
            .map_err(|message| Error::Record { line, message })
            .and_then(|raw| raw.into_record(line, &mut out.warnings));
        match parsed {
            Ok(record) => out.records.push(record),
            Err(e) if strict => return Err(e),
            Err(e) => out.errors.push(e),
        }
        Ok(())
    };

    match format {
        CorpusFormat::Jsonl => {
            let reader = std::io::BufReader::new(reader);
            for (idx, line) in reader.lines().enumerate() {
                let line_no = idx + 1;
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw = serde_json::from_str::<RawRecord>(&line).map_err(|e| e.to_string());
                push(line_no, raw, &mut out)?;
            }
        }
        CorpusFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
            let headers = rdr
                .headers()
                .map_err(|e| Error::Record { line: 1, message: e.to_string() })?
                .clone();
            let mut row = csv::StringRecord::new();
            loop {
                let line_no = rdr.position().line() as usize;
                match rdr.read_record(&mut row) {
                    Ok(false) => break,
                    Ok(true) => {
                        let line_no = row.position().map_or(line_no, |p| p.line() as usize);
                        let raw = row
                            .deserialize::<RawRecord>(Some(&headers))
                            .map_err(|e| e.to_string());
                        push(line_no, raw, &mut out)?;
                    }
                    Err(e) => {
                        let line_no = e.position().map_or(line_no, |p| p.line() as usize);
                        push(line_no, Err(e.to_string()), &mut out)?;
                        if !matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. }) {
                            break;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Parses a stream, logging warnings and errors, and returns only the records.
pub fn parse_corpus_file<R: Read>(reader: R, format: CorpusFormat, strict: bool) -> Result<Vec<PatentRecord>> {
    let parsed = parse_corpus(reader, format, strict)?;
    for w in &parsed.warnings {
        log::warn!("line {}: {}", w.line, w.message);
    }
    for e in &parsed.errors {
        log::error!("skipping record: {e}");
    }
    Ok(parsed.records)
}

pub fn filter_corpus(records: &[PatentRecord], filter: &CorpusFilter) -> Vec<PatentRecord> {
    records.iter().filter(|r| filter.accepts(r)).cloned().collect()
}

pub fn write_jsonl<W: Write>(records: &[PatentRecord], mut sink: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut sink, record)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
