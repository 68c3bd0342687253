use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SMART_LIST: &str = include_str!("../../data/smart_stopwords.txt");
const CUSTOM_LIST: &str = include_str!("../../data/custom_stopwords.txt");

/// Stopwords removed before stemming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordConfig {
    pub base_list: HashSet<String>,
    pub custom_list: HashSet<String>,
}

impl Default for StopwordConfig {
    /// The vendored SMART list plus the bundled publisher/boilerplate/operator list.
    fn default() -> Self {
        StopwordConfig {
            base_list: parse_list(SMART_LIST),
            custom_list: parse_list(CUSTOM_LIST),
        }
    }
}

fn parse_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

impl StopwordConfig {
    pub fn smart() -> HashSet<String> {
        parse_list(SMART_LIST)
    }

    /// Reads one-word-per-line files; `None` keeps the bundled list.
    pub fn from_files(base: Option<&Path>, custom: Option<&Path>) -> Result<Self> {
        let read = |p: &Path| {
            fs::read_to_string(p)
                .map(|s| parse_list(&s))
                .map_err(|e| Error::io(p, e))
        };
        let defaults = StopwordConfig::default();
        Ok(StopwordConfig {
            base_list: base.map(read).transpose()?.unwrap_or(defaults.base_list),
            custom_list: custom.map(read).transpose()?.unwrap_or(defaults.custom_list),
        })
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.base_list.contains(token) || self.custom_list.contains(token)
    }
}

/// Lowercase ASCII tokens. Characters are folded to ASCII first; anything
/// non-alphabetic splits tokens, except a hyphen with letters on both sides.
pub fn tokenize(text: &str) -> Vec<String> {
    let folded = deunicode::deunicode(text).to_ascii_lowercase();
    let chars: Vec<char> = folded.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_ascii_alphabetic() {
            current.push(c);
        } else if c == '-'
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic())
        {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Tokenize, drop stopwords, Porter-stem; token order is preserved.
pub fn preprocess(text: &str, config: &StopwordConfig) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !config.is_stopword(t))
        .map(|t| porter_stemmer::stem(&t))
        .filter(|s| !s.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vendored_lists_load() {
        let cfg = StopwordConfig::default();
        assert_eq!(cfg.base_list.len(), 570);
        assert!(cfg.base_list.contains("the"));
        assert!(cfg.custom_list.contains("north-holland"));
        assert!(cfg.custom_list.contains("cartels"));
    }

    #[test]
    fn cooperation_among_firms() {
        let cfg = StopwordConfig::default();
        assert_eq!(preprocess("Cooperation among firms.", &cfg), vec!["cooper", "firm"]);
    }

    #[test]
    fn only_stopwords_yield_nothing() {
        assert!(preprocess("The and of", &StopwordConfig::default()).is_empty());
        assert!(preprocess("", &StopwordConfig::default()).is_empty());
    }

    #[test]
    fn custom_stopwords_and_stemming() {
        assert_eq!(
            preprocess("Cartels collude", &StopwordConfig::default()),
            vec!["collud"]
        );
    }

    #[test]
    fn hyphenated_compounds_survive() {
        assert_eq!(
            preprocess("first-price sealed-bid auctions", &StopwordConfig::default()),
            vec!["first-pric", "sealed-bid", "auction"]
        );
        assert_eq!(tokenize("well- known -x a-b"), vec!["well", "known", "x", "a-b"]);
    }

    #[test]
    fn unicode_is_folded() {
        assert_eq!(tokenize("Caf\u{e9} na\u{ef}ve \u{2014} r\u{e9}gime"), vec!["cafe", "naive", "regime"]);
    }

    proptest! {
        // Words made of these stems are Porter fixed points and not stopwords.
        #[test]
        fn preprocess_is_idempotent_on_fixed_points(
            idx in proptest::collection::vec(0usize..8, 0..30)
        ) {
            const WORDS: [&str; 8] = ["firm", "price", "bid", "market", "cartel", "auction", "fine", "cooper"];
            let cfg = StopwordConfig { base_list: StopwordConfig::smart(), custom_list: HashSet::new() };
            let text = idx.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" ");
            let once = preprocess(&text, &cfg);
            let twice = preprocess(&once.join(" "), &cfg);
            prop_assert_eq!(once, twice);
        }
    }
}
