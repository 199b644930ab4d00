use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ConditionLabel, CorpusError, CorpusSet, EssayRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guess from the file extension; anything but `.csv` is line-delimited JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    essay_id: String,
    #[serde(default)]
    base_id: Option<String>,
    topic_id: u32,
    condition: String,
    text: String,
}

impl Row {
    fn into_record(self, line: usize) -> Result<EssayRecord, CorpusError> {
        let condition =
            ConditionLabel::from_str(&self.condition).map_err(|_| CorpusError::UnknownCondition {
                line,
                label: self.condition.clone(),
            })?;
        let base_id = match self.base_id.filter(|b| !b.is_empty()) {
            Some(b) => b,
            None if !condition.is_augmented() => self.essay_id.clone(),
            None => {
                return Err(CorpusError::Malformed {
                    line,
                    message: format!("augmented essay `{}` has no base_id", self.essay_id),
                })
            }
        };
        if self.text.is_empty() {
            return Err(CorpusError::Malformed {
                line,
                message: format!("essay `{}` has empty text", self.essay_id),
            });
        }
        EssayRecord::new(self.essay_id, base_id, self.topic_id, condition, self.text)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a corpus file. Line numbers in errors are 1-based physical lines.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<CorpusSet, CorpusError> {
    let records = load_records(path, format)?;
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    CorpusSet::new(records)
}

/// Parses a corpus file without cross-record validation, for callers that
/// assemble one corpus from several files.
pub fn load_records(path: &Path, format: CorpusFormat) -> Result<Vec<EssayRecord>, CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file), path),
        CorpusFormat::Csv => read_csv(file),
    }
}

fn read_jsonl(reader: impl BufRead, path: &Path) -> Result<Vec<EssayRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(row.into_record(line_no)?);
    }
    Ok(out)
}

fn read_csv(file: File) -> Result<Vec<EssayRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| CorpusError::Malformed {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: Row = record
            .deserialize(Some(&headers))
            .map_err(|e| CorpusError::Malformed {
                line,
                message: e.to_string(),
            })?;
        out.push(row.into_record(line)?);
    }
    Ok(out)
}

pub fn write_corpus(corpus: &CorpusSet, path: &Path, format: CorpusFormat) -> Result<(), CorpusError> {
    write_records(corpus.records(), path, format)
}

/// Writes records without validating them as a set, e.g. augmentations
/// whose human originals live in another file.
pub fn write_records(records: &[EssayRecord], path: &Path, format: CorpusFormat) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let rows = records.iter().map(|r| Row {
        essay_id: r.essay_id.clone(),
        base_id: Some(r.base_id.clone()),
        topic_id: r.topic_id,
        condition: r.condition.to_string(),
        text: r.text.clone(),
    });
    match format {
        CorpusFormat::Jsonl => {
            let mut w = BufWriter::new(file);
            for row in rows {
                let line = serde_json::to_string(&row).expect("rows serialize");
                writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))
        }
        CorpusFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            for row in rows {
                w.serialize(row).map_err(|e| io_err(path, e.into()))?;
            }
            w.flush().map_err(|e| io_err(path, e))
        }
    }
}
