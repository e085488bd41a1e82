//! Flat `key = value` pipeline configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{FixedOffset, NaiveDate};
use tsdyn_core::corpus::{parse_offset, RecordFormat};
use tsdyn_core::lda::LdaTemplate;
use tsdyn_core::preprocess::PreprocessConfig;

use crate::error::CliError;

macro_rules! config_keys {
    ($( $field:ident : $key:literal => $help:literal ),* $(,)?) => {
        /// Every configuration key, as a flag of the same name.
        #[derive(Debug, Default, Clone, clap::Args)]
        pub struct KeyFlags {
            $(
                #[doc = $help]
                #[arg(long = $key, global = true, value_name = "VALUE")]
                pub $field: Option<String>,
            )*
        }

        impl KeyFlags {
            pub fn pairs(&self) -> Vec<(&'static str, Option<&str>)> {
                vec![$( ($key, self.$field.as_deref()) ),*]
            }
        }

        /// `(key, description)` for every recognised key.
        pub const KEYS: &[(&str, &str)] = &[$( ($key, $help) ),*];
    };
}

config_keys! {
    input: "input" => "Record file, .jsonl or .csv",
    format: "format" => "Record format: jsonl or csv (default: from the extension)",
    lang: "lang" => "Language tag to keep (default en)",
    start: "start" => "First day of the study window, YYYY-MM-DD",
    end: "end" => "Last day of the study window, YYYY-MM-DD",
    tz: "tz" => "Fixed UTC offset for day boundaries (default +00:00)",
    stopwords: "stopwords" => "Stopword list, one word per line (default: bundled)",
    lemma_exceptions: "lemma-exceptions" => "Irregular `surface lemma` pairs (default: bundled)",
    phrase_min_count: "phrase-min-count" => "Minimum bigram count for phrase merging (default 20)",
    phrase_threshold: "phrase-threshold" => "Phrase score threshold (default 10)",
    min_df: "min-df" => "Minimum document frequency (default 2)",
    max_df_ratio: "max-df-ratio" => "Maximum document-frequency ratio (default 0.9)",
    min_doc_len: "min-doc-len" => "Minimum in-vocabulary tokens per document (default 6)",
    k: "k" => "Topic count for fit (default: the select-k result)",
    k_grid: "k-grid" => "Comma-separated topic counts for select-k (default 2..10)",
    alpha: "alpha" => "Document-topic prior (default 50/K)",
    eta: "eta" => "Topic-word prior (default 0.01)",
    iterations: "iterations" => "Gibbs sweeps per fit (default 200)",
    burn_in: "burn-in" => "Sweeps discarded before averaging (default 100)",
    seed: "seed" => "Sampler seed (default 0)",
    kappa: "kappa" => "Topic chaining strength (default 1000)",
    rho: "rho" => "Document-prior chaining strength (default 10)",
    topn: "topn" => "Top words per topic for coherence and trajectories (default 10)",
    top_topics: "top-topics" => "Topics ranked per day (default 3)",
    lexicon: "lexicon" => "Sentiment lexicon, token<TAB>valence (default: bundled)",
    out: "out" => "Output directory (default out)",
    topic: "topic" => "Restrict report series to one topic",
}

/// Keys whose values are paths.
const PATH_KEYS: &[&str] = &["input", "stopwords", "lemma-exceptions", "lexicon", "out"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// Directory relative paths resolve against.
    base: PathBuf,
}

/// Raw key values after merging the config file and flags.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    entries: BTreeMap<String, Entry>,
}

impl Settings {
    /// Parses `key = value` lines. `#` starts a comment; blank lines are
    /// ignored. Relative paths are taken relative to the file's directory.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(CliError::usage(format!(
                    "config line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    base: base.to_path_buf(),
                },
            );
        }
        Ok(Settings { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Flag values replace file values; flag paths are relative to the
    /// working directory.
    pub fn apply_flags(&mut self, flags: &KeyFlags) {
        for (key, value) in flags.pairs() {
            if let Some(v) = value {
                self.entries.insert(
                    key.to_string(),
                    Entry {
                        value: v.to_string(),
                        base: PathBuf::new(),
                    },
                );
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        debug_assert!(PATH_KEYS.contains(&key));
        self.entries.get(key).map(|e| e.base.join(&e.value))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::usage(format!("invalid value `{v}` for {key}: {e}")))
            })
            .transpose()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub format: Option<RecordFormat>,
    pub lang: String,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub tz: FixedOffset,
    pub stopwords: Option<PathBuf>,
    pub lemma_exceptions: Option<PathBuf>,
    pub preprocess: PreprocessConfig,
    pub k: Option<usize>,
    pub k_grid: Vec<usize>,
    pub lda: LdaTemplate,
    pub kappa: f64,
    pub rho: f64,
    pub topn: usize,
    pub top_topics: usize,
    pub lexicon: Option<PathBuf>,
    pub out: PathBuf,
    pub topic: Option<usize>,
}

fn parse_grid(raw: &str) -> Result<Vec<usize>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|e| CliError::usage(format!("invalid k-grid entry `{s}`: {e}")))
        })
        .collect()
}

impl PipelineConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let defaults = PreprocessConfig::default();
        let template = LdaTemplate::default();
        let tz = match s.get("tz") {
            Some(raw) => parse_offset(raw)?,
            None => FixedOffset::east_opt(0).expect("zero offset"),
        };
        let lang = s.get("lang").unwrap_or("en").to_string();
        if lang.is_empty() {
            return Err(CliError::usage("lang must not be empty"));
        }
        Ok(PipelineConfig {
            input: s.path("input"),
            format: s.parsed("format")?,
            lang,
            start: s.parsed("start")?,
            end: s.parsed("end")?,
            tz,
            stopwords: s.path("stopwords"),
            lemma_exceptions: s.path("lemma-exceptions"),
            preprocess: PreprocessConfig {
                phrase_min_count: s.parsed("phrase-min-count")?.unwrap_or(defaults.phrase_min_count),
                phrase_threshold: s.parsed("phrase-threshold")?.unwrap_or(defaults.phrase_threshold),
                min_df: s.parsed("min-df")?.unwrap_or(defaults.min_df),
                max_df_ratio: s.parsed("max-df-ratio")?.unwrap_or(defaults.max_df_ratio),
                min_doc_len: s.parsed("min-doc-len")?.unwrap_or(defaults.min_doc_len),
            },
            k: s.parsed("k")?,
            k_grid: match s.get("k-grid") {
                Some(raw) => parse_grid(raw)?,
                None => (2..=10).collect(),
            },
            lda: LdaTemplate {
                alpha: s.parsed("alpha")?,
                eta: s.parsed("eta")?.unwrap_or(template.eta),
                iterations: s.parsed("iterations")?.unwrap_or(template.iterations),
                burn_in: s.parsed("burn-in")?.unwrap_or(template.burn_in),
                seed: s.parsed("seed")?.unwrap_or(template.seed),
            },
            kappa: s.parsed("kappa")?.unwrap_or(1000.0),
            rho: s.parsed("rho")?.unwrap_or(10.0),
            topn: s.parsed("topn")?.unwrap_or(10),
            top_topics: s.parsed("top-topics")?.unwrap_or(3),
            lexicon: s.path("lexicon"),
            out: s.path("out").unwrap_or_else(|| PathBuf::from("out")),
            topic: s.parsed("topic")?,
        })
    }
}

/// Text for `--help` listing every key.
pub fn keys_help() -> String {
    let mut text = String::from(
        "Configuration file: one `key = value` per line, `#` comments. Every key can also be given as `--<key> <value>`, which takes precedence. Relative paths in the file are resolved against its directory.\n\nKeys:\n",
    );
    for (key, help) in KEYS {
        text.push_str(&format!("  {key:<18} {help}\n"));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_overrides() {
        let mut s = Settings::parse(
            "# c\nk = 4\nseed=9 # trailing\ninput = data/x.jsonl\n\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(s.get("k"), Some("4"));
        assert_eq!(s.path("input"), Some(PathBuf::from("/cfg/data/x.jsonl")));
        let flags = KeyFlags {
            k: Some("6".into()),
            input: Some("y.csv".into()),
            ..Default::default()
        };
        s.apply_flags(&flags);
        let cfg = PipelineConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.k, Some(6));
        assert_eq!(cfg.lda.seed, 9);
        assert_eq!(cfg.input, Some(PathBuf::from("y.csv")));
    }

    #[test]
    fn unknown_key_and_bad_line() {
        assert!(Settings::parse("colour = red", Path::new("")).is_err());
        assert!(Settings::parse("just words", Path::new("")).is_err());
    }

    #[test]
    fn defaults() {
        let cfg = PipelineConfig::from_settings(&Settings::default()).unwrap();
        assert_eq!(cfg.lang, "en");
        assert_eq!(cfg.preprocess.min_doc_len, 6);
        assert_eq!(cfg.k_grid, (2..=10).collect::<Vec<_>>());
        assert_eq!(cfg.kappa, 1000.0);
        assert_eq!(cfg.out, PathBuf::from("out"));
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("2, 3,5").unwrap(), vec![2, 3, 5]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("2,x").is_err());
    }

    #[test]
    fn bad_numbers_are_usage_errors() {
        let s = Settings::parse("k = three", Path::new("")).unwrap();
        assert_eq!(PipelineConfig::from_settings(&s).unwrap_err().code, 2);
    }

    #[test]
    fn every_key_is_a_flag() {
        assert_eq!(KeyFlags::default().pairs().len(), KEYS.len());
    }
}
