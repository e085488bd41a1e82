//! Document records: loading, language filtering and day slicing.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveDateTime, Utc};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Files with fewer non-blank lines than this are never rejected for their
/// malformed ratio; a single bad line would otherwise always exceed 10%.
pub const MIN_LINES_FOR_RATIO: usize = 10;
pub const MAX_MALFORMED_RATIO: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(with = "timestamp_format")]
    pub timestamp: DateTime<Utc>,
    pub lang: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    /// Guesses the format from a file extension; anything but `.csv` is
    /// treated as line-delimited JSON.
    pub fn from_path(path: &Path) -> RecordFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => RecordFormat::Csv,
            _ => RecordFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(RecordFormat::Jsonl),
            "csv" => Ok(RecordFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown record format `{other}`"))),
        }
    }
}

/// Outcome of [`load_records`]. `lines == docs.len() + malformed + duplicates`.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub docs: Vec<RawDocument>,
    pub lines: usize,
    pub malformed: usize,
    pub duplicates: usize,
}

#[derive(Debug, Deserialize)]
struct RecordFields {
    id: Option<String>,
    timestamp: Option<String>,
    lang: Option<String>,
    text: Option<String>,
}

impl RecordFields {
    fn into_document(self) -> Option<RawDocument> {
        let id = self.id.filter(|s| !s.trim().is_empty())?;
        let timestamp = parse_timestamp(self.timestamp.as_deref()?)?;
        let lang = self.lang.filter(|s| !s.trim().is_empty())?;
        let text = self.text.filter(|s| !s.is_empty())?;
        Some(RawDocument {
            id,
            timestamp,
            lang,
            text,
        })
    }
}

/// Accepts RFC 3339 (`2020-04-01T10:00:00Z`, `...+10:00`) and offset-less
/// ISO-8601 date-times, the latter read as UTC. Sub-second parts are dropped.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    let parsed = if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        dt.with_timezone(&Utc)
    } else {
        let naive = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
            .iter()
            .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())?;
        naive.and_utc()
    };
    DateTime::from_timestamp(parsed.timestamp(), 0)
}

/// Reads every record from `path`. Unparseable records are skipped and
/// counted; duplicate ids keep the last occurrence.
pub fn load_records(path: &Path, format: RecordFormat) -> Result<LoadReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut parsed: Vec<RawDocument> = Vec::new();
    let mut lines = 0;
    let mut malformed = 0;

    match format {
        RecordFormat::Jsonl => {
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                lines += 1;
                match serde_json::from_str::<RecordFields>(&line)
                    .ok()
                    .and_then(RecordFields::into_document)
                {
                    Some(doc) => parsed.push(doc),
                    None => {
                        warn!("{}:{}: malformed record skipped", path.display(), lineno + 1);
                        malformed += 1;
                    }
                }
            }
        }
        RecordFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
            for (rowno, row) in reader.deserialize::<RecordFields>().enumerate() {
                lines += 1;
                match row.ok().and_then(RecordFields::into_document) {
                    Some(doc) => parsed.push(doc),
                    None => {
                        warn!("{}: row {} malformed, skipped", path.display(), rowno + 1);
                        malformed += 1;
                    }
                }
            }
        }
    }

    if lines >= MIN_LINES_FOR_RATIO && malformed as f64 > MAX_MALFORMED_RATIO * lines as f64 {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed,
            lines,
        });
    }

    let (docs, duplicates) = dedup_keep_last(parsed);
    if duplicates > 0 {
        warn!("{}: {duplicates} duplicate ids, later records kept", path.display());
    }
    Ok(LoadReport {
        docs,
        lines,
        malformed,
        duplicates,
    })
}

fn dedup_keep_last(docs: Vec<RawDocument>) -> (Vec<RawDocument>, usize) {
    let mut last: HashMap<&str, usize> = HashMap::with_capacity(docs.len());
    for (i, doc) in docs.iter().enumerate() {
        last.insert(doc.id.as_str(), i);
    }
    if last.len() == docs.len() {
        return (docs, 0);
    }
    let keep: Vec<bool> = docs.iter().enumerate().map(|(i, d)| last[d.id.as_str()] == i).collect();
    let duplicates = docs.len() - last.len();
    let docs = docs.into_iter().zip(keep).filter_map(|(d, k)| k.then_some(d)).collect();
    (docs, duplicates)
}

fn primary_subtag(tag: &str) -> &str {
    tag.split(['-', '_']).next().unwrap_or("").trim()
}

/// Keeps records whose language tag matches `keep` on the primary subtag,
/// case-insensitively (`en-GB` matches `en`).
pub fn filter_language(docs: Vec<RawDocument>, keep: &str) -> Vec<RawDocument> {
    let want = primary_subtag(keep);
    docs.into_iter()
        .filter(|d| primary_subtag(&d.lang).eq_ignore_ascii_case(want))
        .collect()
}

/// Inclusive range of local calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl StudyWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidWindow {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        Ok(StudyWindow { start, end })
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        let n = (self.end - self.start).num_days();
        (0..=n).map(move |i| self.start + Duration::days(i))
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct DaySlice {
    pub date: NaiveDate,
    pub docs: Vec<RawDocument>,
}

#[derive(Debug, Clone)]
pub struct SlicedCorpus {
    pub slices: Vec<DaySlice>,
    pub tz: FixedOffset,
    /// Documents whose local day fell outside the window.
    pub dropped: usize,
}

impl SlicedCorpus {
    pub fn num_docs(&self) -> usize {
        self.slices.iter().map(|s| s.docs.len()).sum()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.slices.iter().map(|s| s.date).collect()
    }
}

/// Local calendar day of `ts` at the fixed offset `tz`.
pub fn local_day(ts: &DateTime<Utc>, tz: &FixedOffset) -> NaiveDate {
    ts.with_timezone(tz).date_naive()
}

/// Buckets documents into one slice per day of `window`. Out-of-window
/// documents are dropped and counted. Order within a slice follows input order.
pub fn slice_by_day(docs: Vec<RawDocument>, window: StudyWindow, tz: FixedOffset) -> SlicedCorpus {
    let mut slices: Vec<DaySlice> = window.days().map(|date| DaySlice { date, docs: Vec::new() }).collect();
    let mut dropped = 0;
    for doc in docs {
        let day = local_day(&doc.timestamp, &tz);
        if day < window.start || day > window.end {
            dropped += 1;
            continue;
        }
        let idx = (day - window.start).num_days() as usize;
        slices[idx].docs.push(doc);
    }
    if dropped > 0 {
        warn!("{dropped} documents outside the study window dropped");
    }
    SlicedCorpus { slices, tz, dropped }
}

/// Parses `+HH:MM`, `-HH:MM`, `+HHMM`, `Z` or `UTC`.
pub fn parse_offset(raw: &str) -> Result<FixedOffset> {
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("z") || raw.eq_ignore_ascii_case("utc") {
        return Ok(FixedOffset::east_opt(0).expect("zero offset"));
    }
    let bad = || Error::InvalidConfig(format!("bad UTC offset `{raw}`"));
    let (sign, rest) = match raw.as_bytes().first() {
        Some(b'+') => (1, &raw[1..]),
        Some(b'-') => (-1, &raw[1..]),
        _ => return Err(bad()),
    };
    let digits: String = rest.chars().filter(|c| *c != ':').collect();
    if digits.len() != 4 || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let hours: i32 = digits[..2].parse().map_err(|_| bad())?;
    let minutes: i32 = digits[2..].parse().map_err(|_| bad())?;
    if minutes >= 60 {
        return Err(bad());
    }
    FixedOffset::east_opt(sign * (hours * 3600 + minutes * 60)).ok_or_else(bad)
}

pub fn format_offset(tz: &FixedOffset) -> String {
    let secs = tz.local_minus_utc();
    let sign = if secs < 0 { '-' } else { '+' };
    let secs = secs.abs();
    format!("{sign}{:02}:{:02}", secs / 3600, (secs % 3600) / 60)
}

mod timestamp_format {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw).ok_or_else(|| de::Error::custom(format!("bad timestamp `{raw}`")))
    }
}
