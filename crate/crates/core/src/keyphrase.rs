//! Per-document keyphrase extraction against a fixed reference corpus.
//!
//! The procedure:
//!
//! 1. score single words by document term frequency times corpus rarity and
//!    keep the top `keyword_count` as keywords,
//! 2. grow phrases from every within-sentence window of up to `max_ngram`
//!    words containing a keyword, trimmed of leading/trailing stopwords,
//! 3. score a phrase as `count × Σ word weights × gamma^(len − 1)`,
//! 4. sort by score (ties: longer first, then lexicographic),
//! 5. greedily keep `top_k` phrases that are not contained in an already
//!    kept phrase, and normalize their weights to sum to one.
//!
//! The result depends only on the document, the corpus and the parameters.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RarityModel, ReferenceCorpus};
use crate::textprep::PreparedText;

/// Longest phrase the extractor supports.
pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("max_ngram must be in 1..={MAX_NGRAM}, got {0}")]
    MaxNgram(usize),
    #[error("top_k must be at least 1")]
    TopK,
    #[error("gamma must be a finite number >= 1, got {0}")]
    Gamma(f64),
    #[error("keyword_count must be at least 1")]
    KeywordCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    pub max_ngram: usize,
    pub top_k: usize,
    /// Per-extra-word score multiplier for longer phrases.
    pub gamma: f64,
    /// Number of single keywords that seed phrase formation.
    pub keyword_count: usize,
    pub stop_rank: u32,
    #[serde(default)]
    pub rarity: RarityModel,
}

impl ExtractionParams {
    pub fn nsf() -> Self {
        Self {
            max_ngram: 4,
            top_k: 4,
            gamma: 1.2,
            keyword_count: 8,
            stop_rank: 150,
            rarity: RarityModel::InverseFrequency,
        }
    }

    pub fn twitter() -> Self {
        Self {
            top_k: 3,
            ..Self::nsf()
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(1..=MAX_NGRAM).contains(&self.max_ngram) {
            return Err(ParamError::MaxNgram(self.max_ngram));
        }
        if self.top_k == 0 {
            return Err(ParamError::TopK);
        }
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return Err(ParamError::Gamma(self.gamma));
        }
        if self.keyword_count == 0 {
            return Err(ParamError::KeywordCount);
        }
        Ok(())
    }
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self::nsf()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyphrase {
    pub words: Vec<String>,
    pub weight: f64,
}

impl Keyphrase {
    pub fn display(&self) -> String {
        self.words.join(" ")
    }
}

/// Raw phrase score: `count × Σ weights × gamma^(len − 1)`.
pub fn phrase_score(count: usize, word_weights: &[f64], gamma: f64) -> f64 {
    let sum: f64 = word_weights.iter().fold(0.0, |acc, w| acc + w);
    count as f64 * sum * gamma.powi(word_weights.len() as i32 - 1)
}

/// Document-local vocabulary with ids, counts, weights and stop flags.
struct DocVocab<'a> {
    words: Vec<&'a str>,
    weights: Vec<f64>,
    stop: Vec<bool>,
    sentences: Vec<Vec<u32>>,
}

impl<'a> DocVocab<'a> {
    fn build(prepared: &'a PreparedText, corpus: &ReferenceCorpus, stop_rank: u32, model: RarityModel) -> Self {
        let mut ids: HashMap<&'a str, u32> = HashMap::new();
        let mut words = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let sentences = prepared
            .sentences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|tok| {
                        let id = *ids.entry(tok.as_str()).or_insert_with(|| {
                            words.push(tok.as_str());
                            counts.push(0);
                            words.len() as u32 - 1
                        });
                        counts[id as usize] += 1;
                        id
                    })
                    .collect()
            })
            .collect();
        let total = prepared.total_tokens() as f64;
        let stop: Vec<bool> = words.iter().map(|w| corpus.is_stopword(w, stop_rank)).collect();
        let weights = words
            .iter()
            .zip(&counts)
            .zip(&stop)
            .map(|((w, &c), &is_stop)| {
                if is_stop {
                    0.0
                } else {
                    (c as f64 / total) * corpus.rarity_with(w, model)
                }
            })
            .collect();
        Self {
            words,
            weights,
            stop,
            sentences,
        }
    }

    /// Top `m` positive-weight words, ties broken lexicographically.
    fn keywords(&self, m: usize) -> Vec<bool> {
        let mut order: Vec<u32> = (0..self.words.len() as u32)
            .filter(|&i| self.weights[i as usize] > 0.0)
            .collect();
        order.sort_by(|&a, &b| {
            self.weights[b as usize]
                .total_cmp(&self.weights[a as usize])
                .then_with(|| self.words[a as usize].cmp(self.words[b as usize]))
        });
        let mut is_kw = vec![false; self.words.len()];
        for &i in order.iter().take(m) {
            is_kw[i as usize] = true;
        }
        is_kw
    }

    /// Counts every window of length `1..=n` that contains a keyword and
    /// neither starts nor ends with a stopword. Trimming a keyword-bearing
    /// window leaves such a window, and each occurrence of it is itself one,
    /// so these counts are the occurrence counts of the trimmed phrases.
    fn candidates(&self, is_kw: &[bool], n: usize) -> HashMap<PhraseKey, usize> {
        let mut out: HashMap<PhraseKey, usize> = HashMap::new();
        for sentence in &self.sentences {
            for start in 0..sentence.len() {
                if self.stop[sentence[start] as usize] {
                    continue;
                }
                let mut has_kw = false;
                for len in 1..=n.min(sentence.len() - start) {
                    let last = sentence[start + len - 1] as usize;
                    has_kw |= is_kw[last];
                    if has_kw && !self.stop[last] {
                        *out.entry(PhraseKey::new(&sentence[start..start + len])).or_insert(0) += 1;
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct PhraseKey {
    ids: [u32; MAX_NGRAM],
    len: u8,
}

impl PhraseKey {
    fn new(ids: &[u32]) -> Self {
        let mut buf = [0; MAX_NGRAM];
        buf[..ids.len()].copy_from_slice(ids);
        Self {
            ids: buf,
            len: ids.len() as u8,
        }
    }

    fn ids(&self) -> &[u32] {
        &self.ids[..self.len as usize]
    }
}

/// Per-word weights: `count / total_tokens × rarity`, zero for stopwords.
pub fn word_weights(
    prepared: &PreparedText,
    corpus: &ReferenceCorpus,
    stop_rank: u32,
    model: RarityModel,
) -> HashMap<String, f64> {
    let vocab = DocVocab::build(prepared, corpus, stop_rank, model);
    vocab
        .words
        .iter()
        .zip(vocab.weights)
        .map(|(w, wt)| (w.to_string(), wt))
        .collect()
}

/// Candidate phrases grown around `keywords`, with occurrence counts.
pub fn candidate_phrases(
    prepared: &PreparedText,
    keywords: &HashSet<String>,
    n: usize,
    corpus: &ReferenceCorpus,
    stop_rank: u32,
) -> HashMap<Vec<String>, usize> {
    let vocab = DocVocab::build(prepared, corpus, stop_rank, RarityModel::default());
    let is_kw: Vec<bool> = vocab.words.iter().map(|w| keywords.contains(*w)).collect();
    vocab
        .candidates(&is_kw, n)
        .into_iter()
        .map(|(key, count)| {
            let words = key.ids().iter().map(|&i| vocab.words[i as usize].to_string()).collect();
            (words, count)
        })
        .collect()
}

fn contains_run(haystack: &[u32], needle: &[u32]) -> bool {
    needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Extracts the top keyphrases of one document.
pub fn extract(prepared: &PreparedText, corpus: &ReferenceCorpus, params: &ExtractionParams) -> Vec<Keyphrase> {
    if prepared.total_tokens() == 0 {
        return Vec::new();
    }
    let vocab = DocVocab::build(prepared, corpus, params.stop_rank, params.rarity);
    let is_kw = vocab.keywords(params.keyword_count);
    if !is_kw.iter().any(|&k| k) {
        return Vec::new();
    }
    let n = params.max_ngram.clamp(1, MAX_NGRAM);

    let mut scored: Vec<(PhraseKey, f64)> = vocab
        .candidates(&is_kw, n)
        .into_iter()
        .map(|(key, count)| {
            let weights: Vec<f64> = key.ids().iter().map(|&i| vocab.weights[i as usize]).collect();
            (key, phrase_score(count, &weights, params.gamma))
        })
        .collect();

    let words_of = |key: &PhraseKey| key.ids().iter().map(|&i| vocab.words[i as usize]).collect::<Vec<_>>();
    scored.sort_by(|(ka, wa), (kb, wb)| {
        wb.total_cmp(wa)
            .then_with(|| kb.len.cmp(&ka.len))
            .then_with(|| {
                if ka == kb {
                    Ordering::Equal
                } else {
                    words_of(ka).cmp(&words_of(kb))
                }
            })
    });

    let mut kept: Vec<(PhraseKey, f64)> = Vec::with_capacity(params.top_k);
    for (key, score) in scored {
        if kept.len() == params.top_k {
            break;
        }
        if score <= 0.0 || kept.iter().any(|(k, _)| contains_run(k.ids(), key.ids())) {
            continue;
        }
        kept.push((key, score));
    }

    let total: f64 = kept.iter().map(|(_, s)| s).sum();
    kept.into_iter()
        .map(|(key, score)| Keyphrase {
            words: words_of(&key).into_iter().map(str::to_string).collect(),
            weight: score / total,
        })
        .collect()
}
