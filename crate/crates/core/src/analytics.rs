//! Day × topic × polarity counts and the series derived from them.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::dtm::Assignment;
use crate::sentiment::Polarity;
use crate::{Error, Result};

/// `(positive, negative, neutral)` document counts.
pub type Triple = [u64; 3];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentCube {
    pub days: Vec<String>,
    pub topics: usize,
    /// Row-major `days × topics`.
    counts: Vec<Triple>,
}

impl SentimentCube {
    pub fn zeros(days: Vec<String>, topics: usize) -> Self {
        let n = days.len() * topics;
        SentimentCube {
            days,
            topics,
            counts: vec![[0; 3]; n],
        }
    }

    pub fn num_days(&self) -> usize {
        self.days.len()
    }

    pub fn get(&self, day: usize, topic: usize) -> Triple {
        self.counts[day * self.topics + topic]
    }

    /// Documents under `topic` on `day`: positive + negative + neutral.
    pub fn dt(&self, day: usize, topic: usize) -> u64 {
        self.get(day, topic).iter().sum()
    }

    /// CSV `day,topic,pos,neg,neu`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day", "topic", "pos", "neg", "neu"])?;
        for (i, day) in self.days.iter().enumerate() {
            for j in 0..self.topics {
                let [p, n, o] = self.get(i, j);
                w.write_record([day.clone(), j.to_string(), p.to_string(), n.to_string(), o.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_cube(
    assignments: &[Assignment],
    polarities: &BTreeMap<String, Polarity>,
    days: Vec<String>,
    topics: usize,
) -> Result<SentimentCube> {
    let mut cube = SentimentCube::zeros(days, topics);
    for a in assignments {
        if a.slice >= cube.num_days() || a.topic >= topics {
            return Err(Error::InvalidInput(format!(
                "assignment of {} to day {} topic {} is outside a {}x{} cube",
                a.doc_id,
                a.slice,
                a.topic,
                cube.num_days(),
                topics
            )));
        }
        let label = polarities.get(&a.doc_id).ok_or_else(|| Error::MissingPolarity {
            doc_id: a.doc_id.clone(),
        })?;
        cube.counts[a.slice * topics + a.topic][label.index()] += 1;
    }
    Ok(cube)
}

/// N: every document in the cube.
pub fn total_tweets(cube: &SentimentCube) -> u64 {
    cube.counts.iter().flatten().sum()
}

/// Per-day sums over topics.
pub fn daily_overall(cube: &SentimentCube) -> Vec<Triple> {
    (0..cube.num_days())
        .map(|i| {
            (0..cube.topics).fold([0; 3], |acc, j| {
                let c = cube.get(i, j);
                [acc[0] + c[0], acc[1] + c[1], acc[2] + c[2]]
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMode {
    Counts,
    Ratios,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub pos: f64,
    pub neg: f64,
    pub neu: f64,
    /// No documents that day; the ratios are zeros by convention.
    pub empty: bool,
}

impl RatioPoint {
    pub fn of(counts: Triple) -> Self {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return RatioPoint {
                pos: 0.0,
                neg: 0.0,
                neu: 0.0,
                empty: true,
            };
        }
        let t = total as f64;
        RatioPoint {
            pos: counts[0] as f64 / t,
            neg: counts[1] as f64 / t,
            neu: counts[2] as f64 / t,
            empty: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Counts(Vec<Triple>),
    Ratios(Vec<RatioPoint>),
}

/// Per-day sentiment triples for one topic.
pub fn topic_sentiment_series(cube: &SentimentCube, topic: usize, mode: SeriesMode) -> Result<Series> {
    if topic >= cube.topics {
        return Err(Error::InvalidInput(format!(
            "topic {topic} out of range (K = {})",
            cube.topics
        )));
    }
    let counts: Vec<Triple> = (0..cube.num_days()).map(|i| cube.get(i, topic)).collect();
    Ok(match mode {
        SeriesMode::Counts => Series::Counts(counts),
        SeriesMode::Ratios => Series::Ratios(counts.into_iter().map(RatioPoint::of).collect()),
    })
}

/// CSV `day,pos,neg,neu`.
pub fn write_series_csv<W: Write>(days: &[String], rows: &[Triple], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "pos", "neg", "neu"])?;
    for (day, [p, n, o]) in days.iter().zip(rows) {
        w.write_record([day.clone(), p.to_string(), n.to_string(), o.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
