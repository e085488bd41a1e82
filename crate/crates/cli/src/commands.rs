//! One function per pipeline command. Each reads earlier stages from the
//! output directory and writes only its own stage directory.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tsdyn_core::analytics::{
    build_cube, daily_overall, topic_sentiment_series, total_tweets, write_series_csv, RatioPoint, Series, SeriesMode,
};
use tsdyn_core::corpus::{
    filter_language, format_offset, load_records, local_day, slice_by_day, RawDocument, RecordFormat, StudyWindow,
};
use tsdyn_core::dtm::{
    fit_dtm, top_topics_per_slice, write_assignments_csv, write_top_topics_csv, write_trajectories_csv, Assignment,
    DtmConfig,
};
use tsdyn_core::lda::{select_k, KSelection, DEFAULT_EPSILON};
use tsdyn_core::preprocess::{prepare_corpus, BowDoc, Lemmatizer, Stopwords, Vocabulary};
use tsdyn_core::sentiment::{load_lexicon, score_corpus, write_polarity_csv, Lexicon, Polarity};

use crate::artifacts::{read_manifest, read_stage_file, Kind, Manifest, StageWriter};
use crate::config::PipelineConfig;
use crate::error::CliError;

pub const INGEST: &str = "ingest";
pub const PREPROCESS: &str = "preprocess";
pub const SELECT_K: &str = "select-k";
pub const FIT: &str = "fit";
pub const SENTIMENT: &str = "sentiment";
pub const REPORT: &str = "report";

fn csv_bytes<F>(write: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn jsonl_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, &row)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<T>, CliError> {
    bytes
        .lines()
        .map(|line| {
            let line = line.map_err(|e| CliError::usage(e.to_string()))?;
            Ok(serde_json::from_str(&line)?)
        })
        .collect()
}

fn read_csv<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<T>, CliError> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(CliError::from)
}

fn details<T: for<'de> Deserialize<'de>>(m: &Manifest) -> Result<T, CliError> {
    serde_json::from_value(m.details.clone())
        .map_err(|e| CliError::usage(format!("{} manifest is malformed: {e}", m.stage)))
}

/// Study window from the config; missing ends are taken from the data.
fn resolve_window(cfg: &PipelineConfig, docs: &[RawDocument]) -> Result<StudyWindow, CliError> {
    let days = || docs.iter().map(|d| local_day(&d.timestamp, &cfg.tz));
    let start = cfg.start.or_else(|| days().min());
    let end = cfg.end.or_else(|| days().max());
    match (start, end) {
        (Some(s), Some(e)) => Ok(StudyWindow::new(s, e)?),
        _ => Err(CliError::usage("no documents")),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IngestCounts {
    raw: usize,
    english: usize,
    kept: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct IngestDetails {
    counts: IngestCounts,
    lines: usize,
    malformed: usize,
    duplicates: usize,
    dropped: usize,
    lang: String,
    tz: String,
    days: Vec<String>,
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<Manifest, CliError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::usage("no input file configured (set `input`)"))?;
    let format = cfg.format.unwrap_or_else(|| RecordFormat::from_path(input));
    let report = load_records(input, format)?;
    if report.docs.is_empty() {
        eprintln!(
            "skipped={} dropped=0 duplicates={}",
            report.malformed, report.duplicates
        );
        return Err(CliError::usage(format!("no documents in {}", input.display())));
    }
    let raw = report.docs.len();
    let english = filter_language(report.docs, &cfg.lang);
    let n_english = english.len();
    let window = resolve_window(cfg, &english);
    let sliced = window.map(|w| slice_by_day(english, w, cfg.tz));
    let dropped = sliced.as_ref().map_or(n_english, |s| s.dropped);
    eprintln!(
        "skipped={} dropped={} duplicates={}",
        report.malformed, dropped, report.duplicates
    );
    let sliced = sliced?;
    let kept = sliced.num_docs();
    if kept == 0 {
        return Err(CliError::usage(format!(
            "no documents left after filtering (lang = {}, window)",
            cfg.lang
        )));
    }

    let mut w = StageWriter::create(&cfg.out, INGEST)?;
    let mut days = Vec::with_capacity(sliced.slices.len());
    for slice in &sliced.slices {
        let day = slice.date.to_string();
        w.write(&format!("{day}.jsonl"), &jsonl_bytes(&slice.docs)?, Kind::Lines)?;
        days.push(day);
    }
    let details = IngestDetails {
        counts: IngestCounts {
            raw,
            english: n_english,
            kept,
        },
        lines: report.lines,
        malformed: report.malformed,
        duplicates: report.duplicates,
        dropped: sliced.dropped,
        lang: cfg.lang.clone(),
        tz: format_offset(&cfg.tz),
        days,
    };
    w.finish(serde_json::to_value(details)?)
}

/// Ingested documents grouped by day, in day order.
pub fn load_ingested(out: &Path) -> Result<Vec<(String, Vec<RawDocument>)>, CliError> {
    let m = read_manifest(out, INGEST, INGEST)?;
    let d: IngestDetails = details(&m)?;
    d.days
        .into_iter()
        .map(|day| {
            let bytes = read_stage_file(out, INGEST, &format!("{day}.jsonl"))?;
            Ok((day, read_jsonl(&bytes)?))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct PreparedDoc {
    doc_id: String,
    day: String,
    counts: Vec<(usize, u32)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PreprocessDetails {
    docs: usize,
    kept: usize,
    rejected: usize,
    vocab_size: usize,
    phrases: usize,
    days: Vec<String>,
}

pub fn cmd_preprocess(cfg: &PipelineConfig) -> Result<Manifest, CliError> {
    let ingested = load_ingested(&cfg.out)?;
    let stopwords = match &cfg.stopwords {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::bundled(),
    };
    let lemmatizer = match &cfg.lemma_exceptions {
        Some(p) => Lemmatizer::with_exception_file(p)?,
        None => Lemmatizer::default(),
    };
    let docs: Vec<(&str, &RawDocument)> = ingested
        .iter()
        .flat_map(|(day, docs)| docs.iter().map(move |d| (day.as_str(), d)))
        .collect();
    let prepared = prepare_corpus(
        docs.iter().map(|(_, d)| (d.id.as_str(), d.text.as_str())),
        &stopwords,
        &lemmatizer,
        &cfg.preprocess,
    )?;

    let mut w = StageWriter::create(&cfg.out, PREPROCESS)?;
    let vocab_csv = csv_bytes(|buf| Ok(prepared.vocab.write_csv(buf)?))?;
    w.write("vocab.csv", &vocab_csv, Kind::Csv)?;
    let rows = docs.iter().zip(&prepared.bows).filter_map(|((day, _), bow)| {
        bow.as_ref().map(|b| PreparedDoc {
            doc_id: b.doc_id.clone(),
            day: day.to_string(),
            counts: b.counts.clone(),
        })
    });
    w.write("corpus.jsonl", &jsonl_bytes(rows)?, Kind::Lines)?;
    let phrases_csv = csv_bytes(|buf| {
        let mut cw = csv::Writer::from_writer(buf);
        cw.write_record(["first", "second", "count", "score"])?;
        for (a, b, s) in prepared.phrases.phrases() {
            cw.write_record([a, b, &s.count.to_string(), &s.score.to_string()])?;
        }
        cw.flush().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(())
    })?;
    w.write("phrases.csv", &phrases_csv, Kind::Csv)?;

    let rejected = prepared.rejected();
    let details = PreprocessDetails {
        docs: docs.len(),
        kept: docs.len() - rejected,
        rejected,
        vocab_size: prepared.vocab.len(),
        phrases: prepared.phrases.phrases().count(),
        days: ingested.into_iter().map(|(day, _)| day).collect(),
    };
    w.finish(serde_json::to_value(details)?)
}

/// Preprocessed corpus as model input: one document list per day.
pub struct Prepared {
    pub days: Vec<String>,
    pub vocab: Vocabulary,
    pub slices: Vec<Vec<BowDoc>>,
}

pub fn load_prepared(out: &Path) -> Result<Prepared, CliError> {
    let m = read_manifest(out, PREPROCESS, PREPROCESS)?;
    let d: PreprocessDetails = details(&m)?;
    let vocab = Vocabulary::read_csv(&read_stage_file(out, PREPROCESS, "vocab.csv")?[..])?;
    let index: BTreeMap<&str, usize> = d.days.iter().enumerate().map(|(i, day)| (day.as_str(), i)).collect();
    let mut slices = vec![Vec::new(); d.days.len()];
    for row in read_jsonl::<PreparedDoc>(&read_stage_file(out, PREPROCESS, "corpus.jsonl")?)? {
        let t = *index
            .get(row.day.as_str())
            .ok_or_else(|| CliError::integrity(format!("document {} has unknown day {}", row.doc_id, row.day)))?;
        slices[t].push(BowDoc {
            doc_id: row.doc_id,
            counts: row.counts,
        });
    }
    Ok(Prepared {
        days: d.days,
        vocab,
        slices,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SelectKDetails {
    best_k: usize,
    day: String,
    topn: usize,
    epsilon: f64,
    failed: Vec<(usize, String)>,
}

pub fn cmd_select_k(cfg: &PipelineConfig) -> Result<KSelection, CliError> {
    if cfg.k_grid.is_empty() {
        return Err(CliError::usage("k-grid is empty"));
    }
    let p = load_prepared(&cfg.out)?;
    let first = p.slices.first().filter(|s| !s.is_empty()).ok_or_else(|| {
        CliError::usage(format!(
            "the first day ({}) has no documents",
            p.days.first().map_or("-", |d| d.as_str())
        ))
    })?;
    let sel = select_k(first, p.vocab.len(), &cfg.k_grid, &cfg.lda, cfg.topn, DEFAULT_EPSILON)?;

    let mut w = StageWriter::create(&cfg.out, SELECT_K)?;
    let curve = csv_bytes(|buf| {
        let mut cw = csv::Writer::from_writer(buf);
        cw.write_record(["k", "mean_coherence"])?;
        for (k, c) in &sel.curve {
            cw.write_record([k.to_string(), c.to_string()])?;
        }
        cw.flush().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(())
    })?;
    w.write("coherence.csv", &curve, Kind::Csv)?;
    let details = SelectKDetails {
        best_k: sel.best_k,
        day: p.days[0].clone(),
        topn: cfg.topn,
        epsilon: DEFAULT_EPSILON,
        failed: sel.failed.clone(),
    };
    w.finish(serde_json::to_value(details)?)?;
    Ok(sel)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelSidecar {
    config: DtmConfig,
    seed: u64,
    vocab_size: usize,
    days: Vec<String>,
    /// Days without documents whose topics were carried over.
    copied_days: Vec<String>,
}

pub fn cmd_fit(cfg: &PipelineConfig) -> Result<Manifest, CliError> {
    let p = load_prepared(&cfg.out)?;
    let k = match cfg.k {
        Some(k) => k,
        None => {
            let m = read_manifest(&cfg.out, SELECT_K, SELECT_K)
                .map_err(|_| CliError::usage("no topic count: set `k` or run `select-k` first"))?;
            details::<SelectKDetails>(&m)?.best_k
        }
    };
    let dcfg = DtmConfig {
        k,
        kappa: cfg.kappa,
        rho: cfg.rho,
        lda: cfg.lda.clone(),
        topn: cfg.topn,
    };
    let model = fit_dtm(&p.slices, p.vocab.len(), &dcfg)?;

    let mut w = StageWriter::create(&cfg.out, FIT)?;
    for (day, slice) in p.days.iter().zip(&model.slices) {
        w.write(
            &format!("phi/{day}.csv"),
            &csv_bytes(|b| Ok(slice.write_phi_csv(b)?))?,
            Kind::Csv,
        )?;
        w.write(
            &format!("theta/{day}.csv"),
            &csv_bytes(|b| Ok(slice.write_theta_csv(b)?))?,
            Kind::Csv,
        )?;
    }
    let assignments = csv_bytes(|b| Ok(write_assignments_csv(&model.assignments, &p.days, b)?))?;
    w.write("assignments.csv", &assignments, Kind::Csv)?;
    let trajectories = csv_bytes(|b| Ok(write_trajectories_csv(&model, &p.vocab, &p.days, cfg.topn, b)?))?;
    w.write("trajectories.csv", &trajectories, Kind::Csv)?;
    let ranking = top_topics_per_slice(&model.assignments, model.num_slices(), cfg.top_topics)?;
    w.write(
        "top_topics.csv",
        &csv_bytes(|b| Ok(write_top_topics_csv(&ranking, &p.days, b)?))?,
        Kind::Csv,
    )?;
    let sidecar = ModelSidecar {
        config: dcfg,
        seed: cfg.lda.seed,
        vocab_size: p.vocab.len(),
        days: p.days.clone(),
        copied_days: p
            .days
            .iter()
            .zip(&model.copied)
            .filter(|(_, &c)| c)
            .map(|(d, _)| d.clone())
            .collect(),
    };
    w.write_json("model.json", &sidecar)?;
    w.finish(json!({ "k": k, "documents": model.assignments.len() }))
}

pub fn cmd_sentiment(cfg: &PipelineConfig) -> Result<Manifest, CliError> {
    let lexicon = match &cfg.lexicon {
        Some(p) => load_lexicon(p)?.lexicon,
        None => Lexicon::mini(),
    };
    let docs: Vec<RawDocument> = load_ingested(&cfg.out)?.into_iter().flat_map(|(_, d)| d).collect();
    let scores = score_corpus(&lexicon, &docs);

    let mut w = StageWriter::create(&cfg.out, SENTIMENT)?;
    w.write(
        "polarity.csv",
        &csv_bytes(|b| Ok(write_polarity_csv(&scores, b)?))?,
        Kind::Csv,
    )?;
    let mut by_label = [0usize; 3];
    for s in scores.values() {
        by_label[s.label.index()] += 1;
    }
    w.finish(json!({
        "documents": scores.len(),
        "positive": by_label[0],
        "negative": by_label[1],
        "neutral": by_label[2],
        "lexicon_entries": lexicon.valence.len(),
    }))
}

#[derive(Debug, Deserialize)]
struct AssignmentRow {
    doc_id: String,
    day: String,
    topic: usize,
}

#[derive(Debug, Deserialize)]
struct PolarityRow {
    doc_id: String,
    label: Polarity,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopTopicRow {
    day: String,
    rank: usize,
    topic: usize,
    volume: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    day: String,
    topic: usize,
    rank: usize,
    word: String,
    prob: f64,
}

#[derive(Serialize)]
struct DayCounts<'a> {
    day: &'a str,
    pos: u64,
    neg: u64,
    neu: u64,
}

#[derive(Serialize)]
struct DayRatios<'a> {
    day: &'a str,
    #[serde(flatten)]
    ratios: RatioPoint,
}

pub fn cmd_report(cfg: &PipelineConfig) -> Result<Manifest, CliError> {
    let out = &cfg.out;
    read_manifest(out, FIT, FIT)?;
    read_manifest(out, SENTIMENT, SENTIMENT)?;
    let sidecar: ModelSidecar = serde_json::from_slice(&read_stage_file(out, FIT, "model.json")?)?;
    let days = sidecar.days;
    let k = sidecar.config.k;
    let day_index: BTreeMap<&str, usize> = days.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();

    let assignments = read_csv::<AssignmentRow>(&read_stage_file(out, FIT, "assignments.csv")?)?
        .into_iter()
        .map(|r| {
            let slice = *day_index.get(r.day.as_str()).ok_or_else(|| {
                CliError::integrity(format!("assignment of {} names unknown day {}", r.doc_id, r.day))
            })?;
            Ok(Assignment {
                doc_id: r.doc_id,
                slice,
                topic: r.topic,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let polarities: BTreeMap<String, Polarity> =
        read_csv::<PolarityRow>(&read_stage_file(out, SENTIMENT, "polarity.csv")?)?
            .into_iter()
            .map(|r| (r.doc_id, r.label))
            .collect();

    let missing: Vec<&str> = assignments
        .iter()
        .filter(|a| !polarities.contains_key(&a.doc_id))
        .map(|a| a.doc_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::integrity(format!(
            "{} assigned documents have no polarity (first: {}); assignments and polarities disagree",
            missing.len(),
            missing[0]
        )));
    }
    let assigned: BTreeSet<&str> = assignments.iter().map(|a| a.doc_id.as_str()).collect();
    let unassigned = polarities.keys().filter(|id| !assigned.contains(id.as_str())).count();

    let topics: Vec<usize> = match cfg.topic {
        Some(j) if j >= k => return Err(CliError::usage(format!("topic {j} out of range (K = {k})"))),
        Some(j) => vec![j],
        None => (0..k).collect(),
    };
    let cube = build_cube(&assignments, &polarities, days.clone(), k)?;
    let overall = daily_overall(&cube);

    let mut w = StageWriter::create(out, REPORT)?;
    w.write("cube.csv", &csv_bytes(|b| Ok(cube.write_csv(b)?))?, Kind::Csv)?;
    w.write(
        "overall.csv",
        &csv_bytes(|b| Ok(write_series_csv(&days, &overall, b)?))?,
        Kind::Csv,
    )?;
    let mut series = Vec::new();
    for &j in &topics {
        let Series::Counts(counts) = topic_sentiment_series(&cube, j, SeriesMode::Counts)? else {
            unreachable!("counts mode")
        };
        let Series::Ratios(ratios) = topic_sentiment_series(&cube, j, SeriesMode::Ratios)? else {
            unreachable!("ratios mode")
        };
        w.write(
            &format!("topic_{j}.csv"),
            &csv_bytes(|b| Ok(write_series_csv(&days, &counts, b)?))?,
            Kind::Csv,
        )?;
        series.push(json!({
            "topic": j,
            "counts": day_counts(&days, &counts),
            "ratios": days.iter().zip(ratios).map(|(day, r)| DayRatios { day, ratios: r }).collect::<Vec<_>>(),
        }));
    }

    let top_topics = read_csv::<TopTopicRow>(&read_stage_file(out, FIT, "top_topics.csv")?)?;
    let trajectories = read_csv::<TrajectoryRow>(&read_stage_file(out, FIT, "trajectories.csv")?)?
        .into_iter()
        .filter(|r| topics.contains(&r.topic))
        .collect::<Vec<_>>();
    w.write_json(
        "report.json",
        &json!({
            "days": days,
            "topics": k,
            "top_topics": top_topics,
            "trajectories": trajectories,
            "overall": day_counts(&days, &overall),
            "series": series,
        }),
    )?;

    let n = total_tweets(&cube);
    let totals = overall
        .iter()
        .fold([0u64; 3], |acc, c| [acc[0] + c[0], acc[1] + c[1], acc[2] + c[2]]);
    let per_day: Vec<Value> = days
        .iter()
        .zip(&overall)
        .map(|(day, c)| json!({ "day": day, "pos": c[0], "neg": c[1], "neu": c[2], "total": c.iter().sum::<u64>() }))
        .collect();
    w.write_json(
        "summary.json",
        &json!({
            "total": n,
            "pos": totals[0],
            "neg": totals[1],
            "neu": totals[2],
            "days": per_day,
            "scored_documents": polarities.len(),
            "unassigned_scored_documents": unassigned,
        }),
    )?;
    w.finish(json!({ "total": n, "topics": topics }))
}

fn day_counts<'a>(days: &'a [String], rows: &[[u64; 3]]) -> Vec<DayCounts<'a>> {
    days.iter()
        .zip(rows)
        .map(|(day, c)| DayCounts {
            day,
            pos: c[0],
            neg: c[1],
            neu: c[2],
        })
        .collect()
}
