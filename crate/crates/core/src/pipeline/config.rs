use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::citation_regression::CitationTransform;
use crate::corpus::{ColumnSchema, InputFormat, JournalType};
use crate::error::{Error, Result};
use crate::multivar::{CointegrationMethod, DetSpec, GrangerMode, IntervalMethod};
use crate::topic_model::InitMode;

/// Whole-run configuration, read from TOML. Relative paths are resolved
/// against the directory holding the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub corpus: CorpusConfig,
    pub topics: Option<TopicConfig>,
    pub trends: Option<TrendConfig>,
    pub regressions: Option<RegressionConfig>,
    pub multivar: Option<MultivarConfig>,
    pub embeddings: Option<EmbeddingConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: PathBuf::from("out"),
            corpus: CorpusConfig::default(),
            topics: None,
            trends: None,
            regressions: None,
            multivar: None,
            embeddings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub delimiter: char,
    pub schema: ColumnSchema,
    pub year_range: (i32, i32),
    /// Journal name → type label, for exports without a type column.
    pub journal_types: HashMap<String, JournalType>,
    pub operators: Vec<String>,
    /// `None` keeps the bundled SMART list.
    pub base_stopwords: Option<PathBuf>,
    /// `None` keeps the bundled custom list.
    pub custom_stopwords: Option<PathBuf>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            input: PathBuf::new(),
            format: InputFormat::Csv,
            delimiter: ',',
            schema: ColumnSchema::default(),
            year_range: (2000, 2021),
            journal_types: HashMap::new(),
            operators: vec!["collus".into(), "cartel".into(), "bidding ring".into()],
            base_stopwords: None,
            custom_stopwords: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicConfig {
    pub k: usize,
    /// Inclusive K range for the coherence/exclusivity scan.
    pub k_range: Option<(usize, usize)>,
    /// Any of "year", "journal_type".
    pub covariates: Vec<String>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub init: InitMode,
    pub top_words: usize,
    pub frex_weight: f64,
}

impl Default for TopicConfig {
    fn default() -> Self {
        TopicConfig {
            k: 21,
            k_range: Some((5, 40)),
            covariates: vec!["year".into(), "journal_type".into()],
            max_iterations: 75,
            tolerance: 1e-5,
            init: InitMode::Spectral,
            top_words: 7,
            frex_weight: crate::topic_model::DEFAULT_FREX_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendConfig {
    /// Topic → category file; without it every topic is its own series.
    pub category_map: Option<PathBuf>,
    /// Test the natural log of the prevalence series.
    pub logs: bool,
    pub unit_root: bool,
    /// PP/KPSS bandwidth; `None` applies the Newey-West rule.
    pub lag: Option<usize>,
    pub quantile_degree: usize,
    /// Split year for the dominance test and density curves (years up to and
    /// including it form the first sample).
    pub split_year: Option<i32>,
    /// Categories summed per document before the split comparison.
    pub split_categories: Vec<String>,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            category_map: None,
            logs: true,
            unit_root: true,
            lag: None,
            quantile_degree: 3,
            split_year: None,
            split_categories: vec![crate::trend_series::UNMAPPED_LABEL.into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    pub transforms: Vec<CitationTransform>,
    pub reference_year: i32,
    pub author_effects: bool,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            transforms: vec![CitationTransform::LogCY, CitationTransform::Log1pCY, CitationTransform::Ihs],
            reference_year: 2021,
            author_effects: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultivarConfig {
    /// Prevalence series labels; empty means all of them.
    pub variables: Vec<String>,
    pub logs: bool,
    pub max_lag: usize,
    pub lag: usize,
    pub d_max: usize,
    pub granger_mode: GrangerMode,
    pub cointegration: Vec<CointegrationMethod>,
    pub deterministic: DetSpec,
    /// Error-correction rank; `None` takes the Johansen selection.
    pub vecm_rank: Option<usize>,
    pub horizon: usize,
    /// Bootstrap replications for IRF/FEVD bands; 0 disables them.
    pub replications: usize,
    pub level: f64,
    pub interval: IntervalMethod,
    pub lm_lags: usize,
}

impl Default for MultivarConfig {
    fn default() -> Self {
        MultivarConfig {
            variables: Vec::new(),
            logs: true,
            max_lag: 4,
            lag: 2,
            d_max: 1,
            granger_mode: GrangerMode::AllLags,
            cointegration: vec![CointegrationMethod::Johansen, CointegrationMethod::EngleGranger],
            deterministic: DetSpec::Constant,
            vecm_rank: None,
            horizon: 10,
            replications: crate::multivar::DEFAULT_BOOTSTRAP_REPLICATIONS,
            level: 0.95,
            interval: IntervalMethod::Normal,
            lm_lags: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub iterations: usize,
    pub negative: usize,
    pub alpha_start: f64,
    pub alpha_end: f64,
    /// Similarity on raw vectors instead of unit-normalised ones.
    pub raw_inner_product: bool,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        let o = crate::embeddings::EmbeddingOptions::default();
        EmbeddingConfig {
            dim: o.dim,
            iterations: o.iterations,
            negative: o.negative,
            alpha_start: o.alpha_start,
            alpha_end: o.alpha_end,
            raw_inner_product: false,
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and resolves relative paths against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        fix(&mut self.corpus.input);
        if let Some(p) = self.corpus.base_stopwords.as_mut() {
            fix(p);
        }
        if let Some(p) = self.corpus.custom_stopwords.as_mut() {
            fix(p);
        }
        if let Some(p) = self.trends.as_mut().and_then(|t| t.category_map.as_mut()) {
            fix(p);
        }
    }

    /// Checks referenced paths and cross-stage requirements.
    pub fn validate(&self) -> Result<()> {
        let mut paths: Vec<(&str, &PathBuf)> = vec![("corpus.input", &self.corpus.input)];
        if let Some(p) = &self.corpus.base_stopwords {
            paths.push(("corpus.base_stopwords", p));
        }
        if let Some(p) = &self.corpus.custom_stopwords {
            paths.push(("corpus.custom_stopwords", p));
        }
        if let Some(p) = self.trends.as_ref().and_then(|t| t.category_map.as_ref()) {
            paths.push(("trends.category_map", p));
        }
        for (key, p) in paths {
            if p.as_os_str().is_empty() {
                return Err(Error::Config(format!("{key} is not set")));
            }
            if !p.is_file() {
                return Err(Error::Config(format!("{key}: file {} does not exist", p.display())));
            }
        }
        if self.corpus.operators.is_empty() {
            return Err(Error::Config("corpus.operators is empty".into()));
        }
        let (lo, hi) = self.corpus.year_range;
        if lo > hi {
            return Err(Error::Config(format!("corpus.year_range [{lo}, {hi}] is empty")));
        }
        if let Some(t) = &self.topics {
            if t.k < 2 {
                return Err(Error::Config("topics.k must be at least 2".into()));
            }
            if let Some((a, b)) = t.k_range {
                if a < 2 || a > b {
                    return Err(Error::Config(format!("topics.k_range [{a}, {b}] is invalid")));
                }
            }
            for c in &t.covariates {
                if c != "year" && c != "journal_type" {
                    return Err(Error::Config(format!("unknown covariate {c:?} (expected year or journal_type)")));
                }
            }
            if t.top_words == 0 || !(0.0..=1.0).contains(&t.frex_weight) {
                return Err(Error::Config("topics.top_words must be positive and frex_weight in [0, 1]".into()));
            }
        }
        let needs_topics = [
            ("trends", self.trends.is_some()),
            ("regressions", self.regressions.is_some()),
            ("multivar", self.multivar.is_some()),
        ];
        for (name, on) in needs_topics {
            if on && self.topics.is_none() {
                return Err(Error::Config(format!("[{name}] needs a [topics] section")));
            }
        }
        if self.multivar.is_some() && self.trends.is_none() {
            return Err(Error::Config("[multivar] needs a [trends] section for its series".into()));
        }
        if let Some(r) = &self.regressions {
            if r.transforms.is_empty() {
                return Err(Error::Config("regressions.transforms is empty".into()));
            }
        }
        if let Some(m) = &self.multivar {
            if m.lag == 0 || m.max_lag == 0 || m.horizon == 0 {
                return Err(Error::Config("multivar lag, max_lag and horizon must be positive".into()));
            }
            if !(m.level > 0.0 && m.level < 1.0) {
                return Err(Error::Config("multivar.level must lie in (0, 1)".into()));
            }
        }
        if let Some(e) = &self.embeddings {
            if e.dim < 2 || e.iterations == 0 || e.negative == 0 {
                return Err(Error::Config("embeddings need dim ≥ 2 and positive iterations and negative samples".into()));
            }
        }
        Ok(())
    }
}
