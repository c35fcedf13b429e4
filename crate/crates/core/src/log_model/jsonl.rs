//! Native line-delimited format: one JSON object per line, discriminated by a
//! `kind` field (`request`, `cookie`, `measurement`, `profile`).

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BrowserProfile, CookieRecord, Corpus, Measurement, RequestRecord};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
enum Line {
    Request(RequestRecord),
    Cookie(CookieRecord),
    Measurement(Measurement),
    Profile(BrowserProfile),
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LineRef<'a> {
    Request(&'a RequestRecord),
    Cookie(&'a CookieRecord),
    Measurement(&'a Measurement),
    Profile(&'a BrowserProfile),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// The first bad line aborts loading.
    #[default]
    Strict,
    /// Bad lines are skipped and reported.
    Lenient,
}

#[derive(Debug, Default)]
pub struct JsonlLoad {
    pub corpus: Corpus,
    /// Errors for skipped lines (lenient mode only).
    pub skipped: Vec<Error>,
}

/// Strict parse of a native corpus.
pub fn parse_jsonl(bytes: &[u8]) -> Result<Corpus> {
    parse_jsonl_with(bytes, Mode::Strict).map(|l| l.corpus)
}

pub fn parse_jsonl_with(bytes: &[u8], mode: Mode) -> Result<JsonlLoad> {
    let mut load = JsonlLoad::default();
    let mut last_seq: HashMap<(String, String), u64> = HashMap::new();
    for (i, raw) in bytes.split(|b| *b == b'\n').enumerate() {
        let line_no = i + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let parsed = serde_json::from_slice::<Line>(raw)
            .map_err(|e| Error::Line {
                line: line_no,
                message: e.to_string(),
            })
            .and_then(|line| check_line(line, line_no, &mut last_seq));
        match (parsed, mode) {
            (Ok(line), _) => match line {
                Line::Request(r) => load.corpus.requests.push(r),
                Line::Cookie(c) => load.corpus.cookies.push(c),
                Line::Measurement(m) => load.corpus.measurements.push(m),
                Line::Profile(p) => load.corpus.profiles.push(p),
            },
            (Err(e), Mode::Strict) => return Err(e),
            (Err(e), Mode::Lenient) => load.skipped.push(e),
        }
    }
    Ok(load)
}

fn check_line(line: Line, line_no: usize, last_seq: &mut HashMap<(String, String), u64>) -> Result<Line> {
    let bad = |message: String| Error::Line { line: line_no, message };
    match &line {
        Line::Request(r) => {
            let key = (r.measurement_id.clone(), r.profile_id.clone());
            if let Some(prev) = last_seq.get(&key) {
                if r.seq <= *prev {
                    return Err(bad(format!("seq {} not greater than {prev}", r.seq)));
                }
            }
            last_seq.insert(key, r.seq);
        }
        Line::Cookie(c) => {
            if c.domain.is_empty() || c.name.is_empty() {
                return Err(bad("cookie domain and name must be non-empty".into()));
            }
        }
        Line::Measurement(_) | Line::Profile(_) => {}
    }
    Ok(line)
}

/// Writes a corpus: measurements, profiles, requests, then cookies.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    let lines = corpus
        .measurements
        .iter()
        .map(LineRef::Measurement)
        .chain(corpus.profiles.iter().map(LineRef::Profile))
        .chain(corpus.requests.iter().map(LineRef::Request))
        .chain(corpus.cookies.iter().map(LineRef::Cookie));
    for line in lines {
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::Invalid(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut buf = Vec::new();
    write_jsonl(corpus, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Writes any serializable records one per line.
pub fn write_records<T: Serialize, W: Write>(records: &[T], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Invalid(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads records written by [`write_records`]; errors carry the line number.
pub fn read_records<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, raw) in bytes.split(|b| *b == b'\n').enumerate() {
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        out.push(serde_json::from_slice(raw).map_err(|e| Error::Line {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
