//! Lexicon and rule based sentiment scoring on raw text.
//!
//! Rule constants follow the published VADER reference implementation and
//! live together in [`RuleConstants`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::{Error, Result};

const MINI_LEXICON: &str = include_str!("../data/mini_lexicon.tsv");

/// Threshold separating neutral from polar compounds.
pub const POLARITY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RuleConstants {
    pub booster_increment: f64,
    pub caps_increment: f64,
    pub negation_scalar: f64,
    /// Booster damping by distance 1, 2, 3.
    pub booster_damping: [f64; 3],
    pub but_before: f64,
    pub but_after: f64,
    pub exclamation_increment: f64,
    pub exclamation_max: usize,
    pub question_increment: f64,
    pub question_max_total: f64,
    pub normalization_alpha: f64,
}

impl Default for RuleConstants {
    fn default() -> Self {
        RuleConstants {
            booster_increment: 0.293,
            caps_increment: 0.733,
            negation_scalar: -0.74,
            booster_damping: [1.0, 0.95, 0.9],
            but_before: 0.5,
            but_after: 1.5,
            exclamation_increment: 0.292,
            exclamation_max: 3,
            question_increment: 0.18,
            question_max_total: 0.96,
            normalization_alpha: 15.0,
        }
    }
}

const BOOSTERS_UP: &[&str] = &[
    "absolutely",
    "amazingly",
    "awfully",
    "completely",
    "considerably",
    "decidedly",
    "deeply",
    "enormously",
    "entirely",
    "especially",
    "exceptionally",
    "extremely",
    "fabulously",
    "fully",
    "greatly",
    "hella",
    "highly",
    "hugely",
    "incredibly",
    "intensely",
    "majorly",
    "more",
    "most",
    "particularly",
    "purely",
    "quite",
    "really",
    "remarkably",
    "so",
    "substantially",
    "thoroughly",
    "totally",
    "tremendously",
    "uber",
    "unbelievably",
    "unusually",
    "utterly",
    "very",
];

const BOOSTERS_DOWN: &[&str] = &[
    "almost",
    "barely",
    "hardly",
    "kinda",
    "less",
    "little",
    "marginally",
    "occasionally",
    "partly",
    "scarcely",
    "slightly",
    "somewhat",
    "sorta",
];

const NEGATORS: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "dont", "hadnt", "hasnt", "havent",
    "isnt", "mightnt", "mustnt", "neither", "neednt", "never", "none", "nope", "nor", "not", "nothing", "nowhere",
    "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent", "without", "wont", "wouldnt", "rarely", "seldom",
    "despite",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub valence: HashMap<String, f64>,
    pub boosters: HashMap<String, f64>,
    pub negators: HashSet<String>,
}

#[derive(Debug, Clone)]
pub struct LexiconLoad {
    pub lexicon: Lexicon,
    pub skipped: usize,
    pub duplicates: usize,
}

impl Lexicon {
    /// Valence table with the built-in booster and negator lists.
    pub fn new(valence: HashMap<String, f64>) -> Self {
        let inc = RuleConstants::default().booster_increment;
        let boosters = BOOSTERS_UP
            .iter()
            .map(|w| (w.to_string(), inc))
            .chain(BOOSTERS_DOWN.iter().map(|w| (w.to_string(), -inc)))
            .collect();
        Lexicon {
            valence,
            boosters,
            negators: NEGATORS.iter().map(|w| w.to_string()).collect(),
        }
    }

    /// The 60-entry lexicon bundled with the crate.
    pub fn mini() -> Self {
        Self::parse(MINI_LEXICON).expect("bundled lexicon").lexicon
    }

    /// `token<TAB>valence[<TAB>...]` lines; extra columns are ignored.
    pub fn parse(text: &str) -> Option<LexiconLoad> {
        let mut valence = HashMap::new();
        let mut skipped = 0;
        let mut duplicates = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty());
            let value = cols
                .next()
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite());
            match (token, value) {
                (Some(token), Some(value)) => {
                    if valence.insert(token, value).is_some() {
                        duplicates += 1;
                    }
                }
                _ => {
                    warn!("lexicon line {} malformed, skipped", lineno + 1);
                    skipped += 1;
                }
            }
        }
        if duplicates > 0 {
            warn!("lexicon has {duplicates} duplicate tokens; later entries kept");
        }
        (!valence.is_empty()).then(|| LexiconLoad {
            lexicon: Lexicon::new(valence),
            skipped,
            duplicates,
        })
    }
}

pub fn load_lexicon(path: &Path) -> Result<LexiconLoad> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::parse(&text).ok_or_else(|| Error::EmptyLexicon {
        path: path.to_path_buf(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];

    /// Position in (positive, negative, neutral) order.
    pub fn index(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
            Polarity::Neutral => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            other => Err(Error::InvalidInput(format!("unknown polarity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub compound: f64,
    pub label: Polarity,
}

/// Positive above 0.05, negative below -0.05, neutral otherwise.
pub fn classify(compound: f64) -> Result<Polarity> {
    if !compound.is_finite() {
        return Err(Error::NonFinite(format!("compound score {compound}")));
    }
    Ok(if compound > POLARITY_THRESHOLD {
        Polarity::Positive
    } else if compound < -POLARITY_THRESHOLD {
        Polarity::Negative
    } else {
        Polarity::Neutral
    })
}

/// Maps a raw sum into (-1, 1) as `s / sqrt(s^2 + alpha)`.
pub fn normalize(sum: f64, alpha: f64) -> f64 {
    sum / (sum * sum + alpha).sqrt()
}

fn lookup_key(item: &str) -> String {
    item.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase()
}

fn is_shouting(item: &str) -> bool {
    let core = item.trim_matches(|c: char| c.is_ascii_punctuation());
    core.chars().count() >= 2 && core.chars().any(char::is_alphabetic) && !core.chars().any(char::is_lowercase)
}

fn has_letters(item: &str) -> bool {
    item.chars().any(char::is_alphabetic)
}

pub struct Scorer<'a> {
    lexicon: &'a Lexicon,
    rules: RuleConstants,
}

impl<'a> Scorer<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Scorer {
            lexicon,
            rules: RuleConstants::default(),
        }
    }

    pub fn with_rules(lexicon: &'a Lexicon, rules: RuleConstants) -> Self {
        Scorer { lexicon, rules }
    }

    fn is_negator(&self, key: &str) -> bool {
        self.lexicon.negators.contains(key) || key.ends_with("n't")
    }

    /// Final raw sum before normalization.
    pub fn raw_sum(&self, text: &str) -> f64 {
        let r = &self.rules;
        let items: Vec<&str> = text.split_whitespace().collect();
        let keys: Vec<String> = items.iter().map(|i| lookup_key(i)).collect();

        let lettered = items.iter().filter(|i| has_letters(i)).count();
        let shouting = items.iter().filter(|i| is_shouting(i)).count();
        let caps_differ = shouting > 0 && shouting < lettered;

        let mut valences = vec![0.0; items.len()];
        for i in 0..items.len() {
            let key = &keys[i];
            if self.lexicon.boosters.contains_key(key) {
                continue;
            }
            // Zero-valence entries stay zero under boosters and caps.
            let Some(&base) = self.lexicon.valence.get(key).filter(|v| **v != 0.0) else {
                continue;
            };
            let mut v = base;
            if caps_differ && is_shouting(items[i]) {
                v += r.caps_increment.copysign(v);
            }
            for dist in 1..=3 {
                if i < dist {
                    break;
                }
                let prev = &keys[i - dist];
                if let Some(&inc) = self.lexicon.boosters.get(prev) {
                    let aligned = if v < 0.0 { -inc } else { inc };
                    v += aligned * r.booster_damping[dist - 1];
                }
                if self.is_negator(prev) {
                    v *= r.negation_scalar;
                }
            }
            valences[i] = v;
        }

        if let Some(pivot) = keys.iter().position(|k| k == "but") {
            for (i, v) in valences.iter_mut().enumerate() {
                if i < pivot {
                    *v *= r.but_before;
                } else if i > pivot {
                    *v *= r.but_after;
                }
            }
        }

        let mut sum: f64 = valences.iter().sum();
        let bangs = text.matches('!').count().min(r.exclamation_max);
        let questions = text.matches('?').count();
        let mut emphasis = bangs as f64 * r.exclamation_increment;
        if questions >= 2 {
            emphasis += (questions as f64 * r.question_increment).min(r.question_max_total);
        }
        if sum > 0.0 {
            sum += emphasis;
        } else if sum < 0.0 {
            sum -= emphasis;
        }
        sum
    }

    pub fn score(&self, text: &str) -> SentimentScore {
        let compound = normalize(self.raw_sum(text), self.rules.normalization_alpha);
        SentimentScore {
            compound,
            label: classify(compound).expect("finite compound"),
        }
    }
}

pub fn score_text(lex: &Lexicon, text: &str) -> SentimentScore {
    Scorer::new(lex).score(text)
}

pub fn score_corpus(lex: &Lexicon, docs: &[RawDocument]) -> BTreeMap<String, SentimentScore> {
    let scorer = Scorer::new(lex);
    docs.par_iter()
        .map(|d| (d.id.clone(), scorer.score(&d.text)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// CSV `doc_id,compound,label`, ordered by doc id.
pub fn write_polarity_csv<W: Write>(scores: &BTreeMap<String, SentimentScore>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["doc_id", "compound", "label"])?;
    for (id, s) in scores {
        w.write_record([id.as_str(), &s.compound.to_string(), s.label.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
