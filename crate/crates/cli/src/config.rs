//! The declarative run configuration read from `--config`.

use std::path::{Path, PathBuf};

use chronovec::corpus::{InputFormat, OnMalformed, PeriodSpec, TokenFilter};
use chronovec::embedding::Method;
use chronovec::eval::SmoothnessConfig;
use chronovec::methods::MethodConfig;
use chronovec::synthetic::SynthConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Floating-point type used for training.
    pub precision: Precision,
    pub corpus: CorpusConfig,
    pub vocab: VocabConfig,
    pub method: MethodConfig,
    pub eval: EvalConfig,
    pub pipeline: PipelineConfig,
    pub synth: SynthConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub inputs: Vec<PathBuf>,
    pub format: InputFormat,
    pub year_start: i32,
    pub year_end: i32,
    pub period_length: i32,
    pub lowercase: bool,
    pub strip_pos_tags: bool,
    pub alphabetic_only: bool,
    pub on_malformed: OnMalformed,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        let f = TokenFilter::default();
        CorpusConfig {
            inputs: Vec::new(),
            format: InputFormat::Ngram,
            year_start: 1900,
            year_end: 2000,
            period_length: 10,
            lowercase: f.lowercase,
            strip_pos_tags: f.strip_pos_tags,
            alphabetic_only: f.alphabetic_only,
            on_malformed: OnMalformed::Skip,
        }
    }
}

impl CorpusConfig {
    pub fn spec(&self) -> chronovec::Result<PeriodSpec> {
        PeriodSpec::new(self.year_start, self.year_end, self.period_length)
    }

    pub fn filter(&self) -> TokenFilter {
        TokenFilter {
            lowercase: self.lowercase,
            strip_pos_tags: self.strip_pos_tags,
            alphabetic_only: self.alphabetic_only,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub min_count: u64,
    pub max_vocab: Option<usize>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_count: 5,
            max_vocab: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub top_k: usize,
    /// Methods compared by `eval smoothness`.
    pub smoothness_methods: Vec<Method>,
    pub smoothness: SmoothnessConfig,
    /// `first`, `last`, `average` or a period label.
    pub similarity_period: String,
    pub similarity_pairs: Option<PathBuf>,
    pub shifted: Option<PathBuf>,
    pub control: Option<PathBuf>,
    /// Words for the norm-frequency correlation; all words when unset.
    pub norm_words: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            top_k: 20,
            smoothness_methods: vec![Method::Ppmi, Method::Tsvd, Method::Sgns, Method::Tsgns],
            smoothness: SmoothnessConfig::default(),
            similarity_period: "average".into(),
            similarity_pairs: None,
            shifted: None,
            control: None,
            norm_words: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub methods: Vec<Method>,
    /// Rotate per-period methods into a common frame before evaluation.
    pub align: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            methods: vec![Method::Tsgns],
            align: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Applies `--seed` to every seeded component.
    pub fn set_seed(&mut self, seed: u64) {
        self.method.train.seed = seed;
        self.method.svd_seed = seed;
        self.method.dw2v.seed = seed;
        self.eval.smoothness.seed = seed;
        self.synth.seed = seed;
    }

    /// The seed recorded in artifacts.
    pub fn seed(&self) -> u64 {
        self.method.train.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[vocab]\nmin_cnt = 3\n").is_err());
        assert!(toml::from_str::<RunConfig>("bogus = 1\n").is_err());
        let c: RunConfig = toml::from_str("[method]\ndim = 8\n[method.train]\nepochs = 2\n").unwrap();
        assert_eq!((c.method.dim, c.method.train.epochs), (8, 2));
    }

    #[test]
    fn seed_changes_the_hash() {
        let mut c = RunConfig::default();
        let h = c.hash();
        c.set_seed(99);
        assert_ne!(c.hash(), h);
    }
}
