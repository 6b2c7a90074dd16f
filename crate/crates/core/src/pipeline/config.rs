use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::quadrature::{Period, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantSelection {
    Abs,
    Relu,
    Both,
}

impl VariantSelection {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            VariantSelection::Abs => vec![Variant::Abs],
            VariantSelection::Relu => vec![Variant::Relu],
            VariantSelection::Both => vec![Variant::Abs, Variant::Relu],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PeriodSelection {
    Full,
    Half,
    Both,
}

impl PeriodSelection {
    pub fn periods(self) -> Vec<Period> {
        match self {
            PeriodSelection::Full => vec![Period::Full],
            PeriodSelection::Half => vec![Period::Half],
            PeriodSelection::Both => vec![Period::Full, Period::Half],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// JSON documents.
    Structured,
    /// Tab-separated tables.
    Tabular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub model: ModelConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Where trained weights are cached; defaults to `<out_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub variant: VariantSelection,
    pub period: PeriodSelection,
    pub formats: Vec<ReportFormat>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: ModelConfig::default(),
            seeds: vec![0],
            out_dir: PathBuf::from("out"),
            cache_dir: None,
            variant: VariantSelection::Both,
            period: PeriodSelection::Both,
            formats: vec![ReportFormat::Structured, ReportFormat::Tabular],
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("seeds must be distinct".into()));
        }
        if self.formats.is_empty() {
            return Err(Error::InvalidConfig("at least one report format is required".into()));
        }
        self.model.validate()
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("cache"))
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("seed-{seed}"))
    }

    pub fn has_format(&self, f: ReportFormat) -> bool {
        self.formats.contains(&f)
    }
}
