//! Pipeline configuration: defaults, optional JSON file, flag overrides.

use std::path::{Path, PathBuf};

use cookiesync::graph::{EdgeFilter, DEFAULT_DENSE_LIMIT};
use cookiesync::ids::{DEFAULT_DELIMITERS, DEFAULT_MIN_ID_LENGTH, DEFAULT_SIMILARITY_THRESHOLD};
use cookiesync::log_model::DEFAULT_MAX_POST_BODY;
use cookiesync::longitudinal::XAxis;
use cookiesync::sar::HolidayCalendar;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub ids: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub company_db: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub similarity_threshold: f64,
    pub min_id_length: usize,
    pub delimiters: String,
    pub max_decode_depth: usize,
    pub max_inflate_bytes: usize,
    pub max_post_body: usize,
    pub damping: f64,
    pub pagerank_tolerance: f64,
    pub community_seed: u64,
    pub dense_limit: usize,
    pub edges: EdgeFilter,
    pub holidays: HolidayCalendar,
    pub x_axis: XAxis,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            ids: None,
            events: None,
            company_db: None,
            out_dir: PathBuf::from("out"),
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            min_id_length: DEFAULT_MIN_ID_LENGTH,
            delimiters: DEFAULT_DELIMITERS.iter().collect(),
            max_decode_depth: cookiesync::decode::DEFAULT_MAX_DEPTH,
            max_inflate_bytes: cookiesync::decode::DEFAULT_MAX_INFLATE_BYTES,
            max_post_body: DEFAULT_MAX_POST_BODY,
            damping: 0.85,
            pagerank_tolerance: 1e-10,
            community_seed: 0,
            dense_limit: DEFAULT_DENSE_LIMIT,
            edges: EdgeFilter::Sync,
            holidays: HolidayCalendar::GermanyNational,
            x_axis: XAxis::Ordinal,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let bytes = crate::output::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Input(m.to_string()));
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return bad("similarity threshold must lie in [0, 1]");
        }
        if self.max_decode_depth == 0 {
            return bad("max decode depth must be at least 1");
        }
        if self.delimiters.is_empty() {
            return bad("delimiter set is empty");
        }
        if !(0.0..1.0).contains(&self.damping) {
            return bad("damping must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn delimiter_chars(&self) -> Vec<char> {
        self.delimiters.chars().collect()
    }
}
