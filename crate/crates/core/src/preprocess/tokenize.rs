use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::{Error, Result};

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)https?://\S*").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@[A-Za-z0-9_]+").unwrap());

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The English list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    /// One token per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Stopwords(words)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Splits raw text into lowercase ASCII-letter tokens.
///
/// URLs and @mentions are removed outright; `#` and every other
/// non-letter character act as separators, so `#COVID19` yields `covid`.
/// Stopwords and one-letter tokens are dropped.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> Vec<String> {
    let text = URL.replace_all(text, " ");
    let text = MENTION.replace_all(&text, " ");
    text.split(|c: char| !c.is_ascii_alphabetic())
        .filter(|t| t.len() > 1)
        .map(str::to_ascii_lowercase)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_urls_and_punctuation() {
        let sw = Stopwords::bundled();
        assert_eq!(
            tokenize("Stay safe HOME!! https://t.co/x", &sw),
            ["stay", "safe", "home"]
        );
    }

    #[test]
    fn drops_mentions_keeps_hashtag_words() {
        let sw = Stopwords::bundled();
        assert_eq!(tokenize("@WHO #COVID19 update", &sw), ["covid", "update"]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", &Stopwords::bundled()).is_empty());
    }

    #[test]
    fn non_ascii_letters_split_words() {
        let sw = Stopwords::default();
        assert_eq!(tokenize("café naïve x", &sw), ["caf", "na", "ve"]);
    }

    #[test]
    fn url_inside_word_run() {
        let sw = Stopwords::default();
        assert_eq!(tokenize("see:HTTPS://example.com/a?b=1 now", &sw), ["see", "now"]);
    }

    #[test]
    fn stopword_file_parsing() {
        let sw = Stopwords::parse("# header\nThe\n  and # trailing\n\n");
        assert_eq!(sw.len(), 2);
        assert!(sw.contains("the") && sw.contains("and"));
        assert!(Stopwords::bundled().len() >= 300);
    }
}
