//! Run configuration, presets and the dataset fingerprint.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{CorpusError, CorpusProfile, RarityModel, ReferenceCorpus};
use crate::keyphrase::{ExtractionParams, ParamError};
use crate::timebin::Granularity;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset {0:?} (expected nsf, twitter or custom)")]
    UnknownPreset(String),
    #[error("invalid extraction parameters: {0}")]
    Params(#[from] ParamError),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("loading corpus: {0}")]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Nsf,
    Twitter,
    Custom,
}

impl std::str::FromStr for PresetName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nsf" => Ok(PresetName::Nsf),
            "twitter" => Ok(PresetName::Twitter),
            "custom" => Ok(PresetName::Custom),
            _ => Err(ConfigError::UnknownPreset(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Filters {
    /// Drop records that fail the English heuristic.
    pub english: bool,
    /// Keep only records mentioning one of these tokens (empty: keep all).
    pub topic_terms: Vec<String>,
    pub strip_urls: bool,
}

/// Where the reference corpus comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSource {
    pub profile: CorpusProfile,
    /// Overrides the bundled profile with a `word<TAB>frequency` file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl CorpusSource {
    pub fn load(&self) -> Result<ReferenceCorpus, CorpusError> {
        match &self.path {
            Some(p) => ReferenceCorpus::load(p),
            None => Ok(self.profile.load()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub preset: PresetName,
    pub params: ExtractionParams,
    pub granularity: Granularity,
    pub filters: Filters,
    pub corpus: CorpusSource,
}

impl PipelineConfig {
    /// Award abstracts: four phrases of up to four words, yearly bins.
    pub fn nsf() -> Self {
        Self {
            preset: PresetName::Nsf,
            params: ExtractionParams::nsf(),
            granularity: Granularity::Year,
            filters: Filters::default(),
            corpus: CorpusSource {
                profile: CorpusProfile::Written,
                path: None,
            },
        }
    }

    /// Short posts: three phrases, monthly bins, spoken corpus, URL
    /// stripping, English and topic filtering.
    pub fn twitter() -> Self {
        Self {
            preset: PresetName::Twitter,
            params: ExtractionParams::twitter(),
            granularity: Granularity::Month,
            filters: Filters {
                english: true,
                topic_terms: vec!["android".to_string()],
                strip_urls: true,
            },
            corpus: CorpusSource {
                profile: CorpusProfile::Spoken,
                path: None,
            },
        }
    }

    pub fn preset(name: PresetName) -> Self {
        match name {
            PresetName::Twitter => Self::twitter(),
            PresetName::Nsf => Self::nsf(),
            PresetName::Custom => Self {
                preset: PresetName::Custom,
                ..Self::nsf()
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate()?;
        Ok(())
    }

    /// Hash of everything that affects results: extraction parameters,
    /// granularity, filters and the corpus content (not its path or the
    /// preset label).
    pub fn fingerprint(&self, corpus: &ReferenceCorpus) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            params: &'a ExtractionParams,
            granularity: Granularity,
            filters: &'a Filters,
            corpus_sha256: &'a str,
        }
        let mut filters = self.filters.clone();
        filters.topic_terms.sort();
        filters.topic_terms.dedup();
        let canonical = serde_json::to_string(&Canonical {
            params: &self.params,
            granularity: self.granularity,
            filters: &filters,
            corpus_sha256: corpus.content_hash(),
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// On-disk config: a preset name plus optional overrides.
///
/// ```json
/// {"preset": "twitter", "top_k": 2, "granularity": "week", "topic_terms": ["android", "ios"]}
/// ```
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub max_ngram: Option<usize>,
    pub top_k: Option<usize>,
    pub gamma: Option<f64>,
    pub keyword_count: Option<usize>,
    pub stop_rank: Option<u32>,
    pub rarity: Option<RarityModel>,
    pub granularity: Option<Granularity>,
    pub english_filter: Option<bool>,
    pub topic_terms: Option<Vec<String>>,
    pub strip_urls: Option<bool>,
    pub corpus: Option<CorpusProfile>,
    pub corpus_path: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn resolve(&self) -> Result<PipelineConfig, ConfigError> {
        let preset: PresetName = match &self.preset {
            Some(p) => p.parse()?,
            None => PresetName::Custom,
        };
        let mut cfg = PipelineConfig::preset(preset);
        let p = &mut cfg.params;
        if let Some(v) = self.max_ngram {
            p.max_ngram = v;
        }
        if let Some(v) = self.top_k {
            p.top_k = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.keyword_count {
            p.keyword_count = v;
        }
        if let Some(v) = self.stop_rank {
            p.stop_rank = v;
        }
        if let Some(v) = self.rarity {
            p.rarity = v;
        }
        if let Some(v) = self.granularity {
            cfg.granularity = v;
        }
        if let Some(v) = self.english_filter {
            cfg.filters.english = v;
        }
        if let Some(v) = &self.topic_terms {
            cfg.filters.topic_terms = v.iter().map(|t| t.to_lowercase()).collect();
        }
        if let Some(v) = self.strip_urls {
            cfg.filters.strip_urls = v;
        }
        if let Some(v) = self.corpus {
            cfg.corpus.profile = v;
        }
        if let Some(v) = &self.corpus_path {
            cfg.corpus.path = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
