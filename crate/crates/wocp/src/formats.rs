//! On-disk formats: the line-delimited comment corpus and the CSV files
//! exchanged between pipeline stages.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use wocp_core::corpus::{Corpus, RawComment};
use wocp_core::evaluation::ScatterRow;
use wocp_core::simulation::SweepRow;
use wocp_core::{FeatureVector, GroundTruth, Label, Login, Origin, Prediction, RepoId, Truth};

pub const PREDICTION_HEADER: [&str; 6] = ["contributor", "repository", "n_comments", "n_patterns", "gini", "prediction"];
pub const AGGREGATED_HEADER: [&str; 4] = ["contributor", "repository", "prediction", "origin"];
pub const TRUTH_HEADER: [&str; 2] = ["contributor", "type"];
pub const SCATTER_HEADER: [&str; 5] = ["contributor", "n_bot", "n_human", "n_unknown", "actual"];
pub const SWEEP_HEADER: [&str; 5] = ["p", "bucket", "raw_accuracy", "wocp_accuracy", "n"];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn row_error(line: u64, message: impl ToString) -> FormatError {
    FormatError::Row {
        line,
        message: message.to_string(),
    }
}

fn reader<R: Read>(r: R, expected: &[&str]) -> Result<csv::Reader<R>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(FormatError::Header {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    Ok(rdr)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Parses each field of a CSV row, tagging failures with the line number.
struct Row<'a> {
    record: &'a csv::StringRecord,
    line: u64,
}

impl<'a> Row<'a> {
    fn new(record: &'a csv::StringRecord) -> Self {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        Self { record, line }
    }

    fn raw(&self, i: usize) -> &'a str {
        self.record.get(i).unwrap_or("")
    }

    fn parse<T>(&self, i: usize) -> Result<T, FormatError>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.raw(i)
            .trim()
            .parse::<T>()
            .map_err(|e| row_error(self.line, format_args!("column {}: {e}", i + 1)))
    }
}

pub fn read_predictions<R: Read>(r: R) -> Result<Vec<Prediction>, FormatError> {
    let mut rdr = reader(r, &PREDICTION_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = Row::new(&record);
        let gini = match row.raw(4).trim() {
            "" => None,
            _ => Some(row.parse::<f64>(4)?),
        };
        out.push(Prediction {
            contributor: row.parse::<Login>(0)?,
            repository: row.parse::<RepoId>(1)?,
            label: row.parse::<Label>(5)?,
            origin: Origin::Observed,
            features: Some(FeatureVector {
                n_comments: row.parse(2)?,
                n_patterns: row.parse(3)?,
                gini,
            }),
        });
    }
    Ok(out)
}

pub fn write_predictions<W: Write>(w: W, predictions: &[Prediction]) -> Result<(), FormatError> {
    let mut wtr = writer(w);
    wtr.write_record(PREDICTION_HEADER)?;
    for p in predictions {
        let f = p.features.unwrap_or_else(FeatureVector::empty);
        let gini = f.gini.map(|g| format!("{g:.4}")).unwrap_or_default();
        wtr.write_record([
            p.contributor.as_str(),
            p.repository.as_str(),
            &f.n_comments.to_string(),
            &f.n_patterns.to_string(),
            &gini,
            p.label.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_aggregated<R: Read>(r: R) -> Result<Vec<Prediction>, FormatError> {
    let mut rdr = reader(r, &AGGREGATED_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = Row::new(&record);
        out.push(Prediction {
            contributor: row.parse(0)?,
            repository: row.parse(1)?,
            label: row.parse(2)?,
            origin: row.parse(3)?,
            features: None,
        });
    }
    Ok(out)
}

pub fn write_aggregated<W: Write>(w: W, predictions: &[Prediction]) -> Result<(), FormatError> {
    let mut wtr = writer(w);
    wtr.write_record(AGGREGATED_HEADER)?;
    for p in predictions {
        wtr.write_record([p.contributor.as_str(), p.repository.as_str(), p.label.as_str(), p.origin.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_truth<R: Read>(r: R) -> Result<GroundTruth, FormatError> {
    let mut rdr = reader(r, &TRUTH_HEADER)?;
    let mut truth = GroundTruth::new();
    for record in rdr.records() {
        let record = record?;
        let row = Row::new(&record);
        let login: Login = row.parse(0)?;
        let kind: Truth = row.parse(1)?;
        truth.insert(login, kind).map_err(|e| row_error(row.line, e))?;
    }
    Ok(truth)
}

pub fn write_truth<W: Write>(w: W, truth: &GroundTruth) -> Result<(), FormatError> {
    let mut wtr = writer(w);
    wtr.write_record(TRUTH_HEADER)?;
    for (login, t) in truth.iter() {
        wtr.write_record([login.as_str(), t.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_scatter<W: Write>(w: W, rows: &[ScatterRow]) -> Result<(), FormatError> {
    let mut wtr = writer(w);
    wtr.write_record(SCATTER_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.contributor.as_str(),
            &r.n_bot.to_string(),
            &r.n_human.to_string(),
            &r.n_unknown.to_string(),
            r.actual.map(Truth::as_str).unwrap_or(""),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn opt_percent(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

pub fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), FormatError> {
    let mut wtr = writer(w);
    wtr.write_record(SWEEP_HEADER)?;
    for r in rows {
        wtr.write_record([
            &r.accuracy.to_string(),
            &r.bucket,
            &opt_percent(r.raw_accuracy),
            &opt_percent(r.wocp_accuracy),
            &r.n.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Comment ids may be written as JSON strings or integers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum CommentId {
    Text(String),
    Number(u64),
}

/// One line of the corpus file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusLine {
    repo: String,
    contributor: String,
    created_at: String,
    body: String,
    source: String,
    id: CommentId,
}

impl From<CorpusLine> for RawComment {
    fn from(l: CorpusLine) -> Self {
        RawComment {
            repo: l.repo,
            contributor: l.contributor,
            created_at: l.created_at,
            body: l.body,
            source: l.source,
            id: match l.id {
                CommentId::Text(s) => s,
                CommentId::Number(n) => n.to_string(),
            },
        }
    }
}

/// A corpus line that could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parsed records, each with its 1-based line number.
pub type NumberedComments = Vec<(usize, RawComment)>;

/// Parses corpus lines, skipping blank ones.
pub fn parse_corpus_lines<R: BufRead>(r: R) -> std::io::Result<(NumberedComments, Vec<LineError>)> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusLine>(&line) {
            Ok(l) => records.push((i + 1, l.into())),
            Err(e) => errors.push(LineError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, errors))
}

pub fn write_corpus<W: Write>(mut w: W, corpus: &Corpus) -> std::io::Result<()> {
    for raw in corpus.to_raw() {
        let line = CorpusLine {
            repo: raw.repo,
            contributor: raw.contributor,
            created_at: raw.created_at,
            body: raw.body,
            source: raw.source,
            id: CommentId::Text(raw.id),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn login(s: &str) -> Login {
        Login::new(s).unwrap()
    }

    #[test]
    fn predictions_round_trip() {
        let preds = vec![
            Prediction {
                contributor: login("alice"),
                repository: RepoId::new("o/r").unwrap(),
                label: Label::Human,
                origin: Origin::Observed,
                features: Some(FeatureVector { n_comments: 24, n_patterns: 10, gini: Some(0.25) }),
            },
            Prediction {
                contributor: login("quiet"),
                repository: RepoId::new("o/r").unwrap(),
                label: Label::Unknown,
                origin: Origin::Observed,
                features: Some(FeatureVector { n_comments: 0, n_patterns: 0, gini: None }),
            },
        ];
        let mut buf = Vec::new();
        write_predictions(&mut buf, &preds).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "contributor,repository,n_comments,n_patterns,gini,prediction\n\
             alice,o/r,24,10,0.2500,human\n\
             quiet,o/r,0,0,,unknown\n"
        );
        assert_eq!(read_predictions(buf.as_slice()).unwrap(), preds);
    }

    #[test]
    fn bad_header_rejected() {
        let err = read_predictions("who,repo\nx,o/r\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::Header { .. }));
    }

    #[test]
    fn bad_row_names_line() {
        let input = "contributor,repository,prediction,origin\nx,o/r,bot,observed\ny,o/r,maybe,observed\n";
        match read_aggregated(input.as_bytes()).unwrap_err() {
            FormatError::Row { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("maybe"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truth_rejects_unknown_and_duplicates() {
        assert!(read_truth("contributor,type\nx,unknown\n".as_bytes()).is_err());
        assert!(read_truth("contributor,type\nx,bot\nX,human\n".as_bytes()).is_err());
        let t = read_truth("contributor,type\nx,bot\ny,human\n".as_bytes()).unwrap();
        assert_eq!(t.get(&login("X")), Some(Truth::Bot));
    }

    #[test]
    fn scatter_rows_render() {
        let rows = vec![
            ScatterRow { contributor: login("x"), n_bot: 3, n_human: 1, n_unknown: 0, actual: Some(Truth::Bot) },
            ScatterRow { contributor: login("y"), n_bot: 2, n_human: 0, n_unknown: 4, actual: Some(Truth::Human) },
        ];
        let mut buf = Vec::new();
        write_scatter(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "contributor,n_bot,n_human,n_unknown,actual\nx,3,1,0,bot\ny,2,0,4,human\n"
        );
        let mut buf = Vec::new();
        write_scatter(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "contributor,n_bot,n_human,n_unknown,actual\n");
    }

    #[test]
    fn corpus_lines() {
        let input = concat!(
            r#"{"repo":"o/r","contributor":"x","created_at":"2017-03-01T12:00:00Z","body":"hi","source":"issue","id":1}"#,
            "\n\n",
            r#"{"repo":"o/r","contributor":"x","created_at":"2017-03-01T12:00:00Z","body":"hi","source":"issue"}"#,
            "\n",
            r#"{"repo":"o/r","contributor":"x","created_at":"2017-03-01T12:00:00Z","body":"hi","source":"issue","id":"2","extra":1}"#,
            "\n",
            "not json\n",
        );
        let (records, errors) = parse_corpus_lines(input.as_bytes()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].0, 1);
        assert_eq!(records[0].1.id, "1");
        assert_eq!(errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![3, 4, 5]);
    }
}
