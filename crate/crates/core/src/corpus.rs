//! Fixed reference word-frequency corpus.
//!
//! Word significance is scored against a static table of general-language
//! frequencies instead of statistics of the analyzed collection, so the score
//! of a document never depends on which other documents are processed.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Written-English sample profile bundled with the crate.
pub const WRITTEN_PROFILE: &str = include_str!("../../../data/corpus/written.tsv");
/// Spoken-English sample profile bundled with the crate.
pub const SPOKEN_PROFILE: &str = include_str!("../../../data/corpus/spoken.tsv");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate word {word:?}")]
    Duplicate { line: usize, word: String },
    #[error("corpus is empty")]
    Empty,
}

/// How corpus rarity is derived for a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RarityModel {
    /// `ln((F + 1) / (f(w) + 1))`, with `f(w) = 0` out of vocabulary.
    #[default]
    InverseFrequency,
    /// `ln(1 + rank(w))`, with out-of-vocabulary words ranked `V + 1`.
    Rank,
}

/// Named corpus profile shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusProfile {
    Written,
    Spoken,
}

impl CorpusProfile {
    pub fn bundled_text(self) -> &'static str {
        match self {
            CorpusProfile::Written => WRITTEN_PROFILE,
            CorpusProfile::Spoken => SPOKEN_PROFILE,
        }
    }

    pub fn load(self) -> ReferenceCorpus {
        ReferenceCorpus::parse(self.bundled_text()).expect("bundled corpus profile is valid")
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    frequency: u64,
    rank: u32,
}

/// Immutable word → frequency table with dense ranks.
#[derive(Debug, Clone)]
pub struct ReferenceCorpus {
    entries: HashMap<String, Entry>,
    by_rank: Vec<String>,
    total_tokens: u64,
    content_hash: String,
}

impl ReferenceCorpus {
    /// Reads a `word<TAB>frequency` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let bytes = fs::read(path)?;
        let text = String::from_utf8(bytes).map_err(|e| CorpusError::Malformed {
            line: 0,
            reason: format!("file is not UTF-8: {e}"),
        })?;
        Self::parse(&text)
    }

    /// Parses corpus text. The content hash is taken over the exact bytes.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut raw: Vec<(String, u64)> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.is_empty() {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    reason: "empty line".into(),
                });
            }
            let mut fields = line.split('\t');
            let (word, freq) = match (fields.next(), fields.next(), fields.next()) {
                (Some(w), Some(f), None) => (w, f),
                _ => {
                    return Err(CorpusError::Malformed {
                        line: line_no,
                        reason: "expected exactly `word<TAB>frequency`".into(),
                    })
                }
            };
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    reason: "empty word".into(),
                });
            }
            let frequency: u64 = freq.trim().parse().map_err(|_| CorpusError::Malformed {
                line: line_no,
                reason: format!("frequency {freq:?} is not a positive integer"),
            })?;
            if frequency == 0 {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    reason: "frequency must be positive".into(),
                });
            }
            if seen.insert(word.clone(), line_no).is_some() {
                return Err(CorpusError::Duplicate { line: line_no, word });
            }
            raw.push((word, frequency));
        }
        if raw.is_empty() {
            return Err(CorpusError::Empty);
        }
        let content_hash = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Self::build(raw, content_hash))
    }

    /// Builds a corpus from in-memory pairs. Words are lowercased; the first
    /// occurrence of a duplicate wins.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, u64)>) -> Self {
        let mut seen = HashMap::new();
        let mut raw = Vec::new();
        for (w, f) in pairs {
            let w = w.to_lowercase();
            if f > 0 && seen.insert(w.clone(), ()).is_none() {
                raw.push((w, f));
            }
        }
        assert!(!raw.is_empty(), "corpus needs at least one entry");
        let mut canonical = String::new();
        let mut sorted = raw.clone();
        sorted.sort();
        for (w, f) in &sorted {
            canonical.push_str(&format!("{w}\t{f}\n"));
        }
        let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        Self::build(raw, hash)
    }

    fn build(mut raw: Vec<(String, u64)>, content_hash: String) -> Self {
        raw.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total_tokens = raw.iter().map(|(_, f)| f).sum();
        let mut entries = HashMap::with_capacity(raw.len());
        let mut by_rank = Vec::with_capacity(raw.len());
        for (i, (word, frequency)) in raw.into_iter().enumerate() {
            entries.insert(
                word.clone(),
                Entry {
                    frequency,
                    rank: i as u32 + 1,
                },
            );
            by_rank.push(word);
        }
        Self {
            entries,
            by_rank,
            total_tokens,
            content_hash,
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.by_rank.len()
    }

    /// SHA-256 of the source bytes, hex encoded.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn frequency(&self, word: &str) -> u64 {
        self.entries.get(word).map_or(0, |e| e.frequency)
    }

    pub fn rank(&self, word: &str) -> Option<u32> {
        self.entries.get(word).map(|e| e.rank)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    /// Words in rank order (rank 1 first).
    pub fn words_by_rank(&self) -> &[String] {
        &self.by_rank
    }

    /// Smoothed log inverse frequency of `word` in the reference corpus.
    pub fn rarity(&self, word: &str) -> f64 {
        self.rarity_with(word, RarityModel::InverseFrequency)
    }

    pub fn rarity_with(&self, word: &str, model: RarityModel) -> f64 {
        match model {
            RarityModel::InverseFrequency => {
                let f = self.frequency(word);
                ((self.total_tokens + 1) as f64 / (f + 1) as f64).ln()
            }
            RarityModel::Rank => {
                let rank = self
                    .rank(word)
                    .map_or(self.vocab_size() as u64 + 1, u64::from);
                (1.0 + rank as f64).ln()
            }
        }
    }

    /// A word is a stopword when it ranks within `stop_rank`, is shorter than
    /// two characters, or is all digits.
    pub fn is_stopword(&self, word: &str, stop_rank: u32) -> bool {
        if word.chars().nth(1).is_none() {
            return true;
        }
        if word.chars().all(|c| c.is_ascii_digit()) {
            return true;
        }
        matches!(self.rank(word), Some(r) if r <= stop_rank)
    }
}
