use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

const BUNDLED_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SuffixAction {
    /// Replace the suffix with a fixed string (possibly itself, which
    /// shields the word from shorter rules).
    Replace(String),
    /// Strip an `-ing` / `-ed` ending, then undo consonant doubling or
    /// restore a silent `e` on the stem.
    Inflection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    pub suffix: String,
    pub action: SuffixAction,
    /// Shortest token the rule may touch.
    pub min_len: usize,
}

impl SuffixRule {
    pub fn replace(suffix: &str, with: &str, min_len: usize) -> Self {
        SuffixRule {
            suffix: suffix.into(),
            action: SuffixAction::Replace(with.into()),
            min_len,
        }
    }

    pub fn inflection(suffix: &str, min_len: usize) -> Self {
        SuffixRule {
            suffix: suffix.into(),
            action: SuffixAction::Inflection,
            min_len,
        }
    }

    fn apply(&self, token: &str) -> Option<String> {
        if token.len() < self.min_len || !token.ends_with(&self.suffix) {
            return None;
        }
        let stem = &token[..token.len() - self.suffix.len()];
        match &self.action {
            SuffixAction::Replace(with) => Some(format!("{stem}{with}")),
            SuffixAction::Inflection => restore_stem(stem),
        }
    }
}

/// Rule-based base-form reduction: exception table first, then the
/// longest applicable suffix rule. At most one rule fires.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
    rules: Vec<SuffixRule>,
}

impl Default for Lemmatizer {
    fn default() -> Self {
        Lemmatizer::new(parse_exceptions(BUNDLED_EXCEPTIONS), default_rules())
    }
}

pub fn default_rules() -> Vec<SuffixRule> {
    vec![
        SuffixRule::replace("sses", "ss", 5),
        SuffixRule::replace("ches", "ch", 5),
        SuffixRule::replace("shes", "sh", 5),
        SuffixRule::replace("ies", "y", 5),
        SuffixRule::replace("ied", "y", 5),
        SuffixRule::replace("xes", "x", 4),
        SuffixRule::replace("eed", "eed", 0),
        SuffixRule::inflection("ing", 5),
        SuffixRule::inflection("ed", 4),
        SuffixRule::replace("ss", "ss", 0),
        SuffixRule::replace("us", "us", 0),
        SuffixRule::replace("is", "is", 0),
        SuffixRule::replace("s", "", 4),
    ]
}

fn parse_exceptions(text: &str) -> HashMap<String, String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .filter_map(|l| {
            let mut cols = l.split_whitespace();
            Some((cols.next()?.to_lowercase(), cols.next()?.to_lowercase()))
        })
        .collect()
}

impl Lemmatizer {
    pub fn new(exceptions: HashMap<String, String>, mut rules: Vec<SuffixRule>) -> Self {
        // Longest suffix first; the sort is stable so equal lengths keep their order.
        rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.len()));
        Lemmatizer { exceptions, rules }
    }

    /// Bundled suffix rules with exceptions read from a `surface lemma` file.
    pub fn with_exception_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Lemmatizer::new(parse_exceptions(&text), default_rules()))
    }

    pub fn lemmatize(&self, token: &str) -> String {
        if let Some(lemma) = self.exceptions.get(token) {
            return lemma.clone();
        }
        self.rules
            .iter()
            .find_map(|r| r.apply(token))
            .unwrap_or_else(|| token.to_owned())
    }
}

pub fn lemmatize(token: &str, rules: &Lemmatizer) -> String {
    rules.lemmatize(token)
}

fn is_consonant(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(word, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant sequences in `word`.
fn measure(word: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..word.len() {
        let cons = is_consonant(word, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn ends_cvc(word: &[u8]) -> bool {
    let n = word.len();
    n >= 3
        && is_consonant(word, n - 3)
        && !is_consonant(word, n - 2)
        && is_consonant(word, n - 1)
        && !matches!(word[n - 1], b'w' | b'x' | b'y')
}

/// Stem endings that take back a final `e` (`distanc` -> `distance`).
const SILENT_E_ENDINGS: &[&str] = &["at", "bl", "iz", "c", "v", "dg", "rg", "eas", "aus", "ous", "uir"];

fn restore_stem(stem: &str) -> Option<String> {
    let b = stem.as_bytes();
    if !(0..b.len()).any(|i| !is_consonant(b, i)) {
        return None;
    }
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && is_consonant(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return Some(stem[..n - 1].to_owned());
    }
    if SILENT_E_ENDINGS.iter().any(|e| stem.ends_with(e)) || (measure(b) == 1 && ends_cvc(b)) {
        return Some(format!("{stem}e"));
    }
    Some(stem.to_owned())
}
