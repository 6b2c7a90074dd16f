use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{train, ModelConfig, ModelWeights, TrainHistory};

const CACHE_VERSION: &str = "pizzaquad-weights-v1";

/// Content address of a training run: hash of the full config, seed included.
pub fn config_hash(config: &ModelConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(format!("{CACHE_VERSION}\n{text}").as_bytes());
    hex::encode(digest)[..16].to_string()
}

pub fn weights_path(dir: &Path, config: &ModelConfig) -> PathBuf {
    dir.join(format!("weights-{}.json", config_hash(config)))
}

pub fn history_path(dir: &Path, config: &ModelConfig) -> PathBuf {
    dir.join(format!("history-{}.json", config_hash(config)))
}

/// Writes through a temporary file so readers never see a partial document.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub weights: ModelWeights,
    pub history: Option<TrainHistory>,
    /// False when the weights came from the cache.
    pub trained: bool,
}

/// Cached weights for `config`, if present. A cached file whose header
/// disagrees with `config` is an error rather than a silent retrain.
pub fn load_cached(dir: &Path, config: &ModelConfig) -> Result<Option<TrainedModel>> {
    let path = weights_path(dir, config);
    if !path.exists() {
        return Ok(None);
    }
    let weights = ModelWeights::load(&path)?;
    if &weights.config != config {
        return Err(Error::CacheMismatch { path });
    }
    let hpath = history_path(dir, config);
    let history = match fs::read_to_string(&hpath) {
        Ok(text) => Some(serde_json::from_str(&text)?),
        Err(_) => None,
    };
    Ok(Some(TrainedModel {
        weights,
        history,
        trained: false,
    }))
}

pub fn train_or_load(config: &ModelConfig, dir: &Path) -> Result<TrainedModel> {
    if let Some(hit) = load_cached(dir, config)? {
        info!("seed {}: using cached weights {}", config.seed, weights_path(dir, config).display());
        return Ok(hit);
    }
    let (weights, history) = train(config)?;
    write_atomic(&history_path(dir, config), serde_json::to_string(&history)?.as_bytes())?;
    write_atomic(&weights_path(dir, config), weights.to_json()?.as_bytes())?;
    Ok(TrainedModel {
        weights,
        history: Some(history),
        trained: true,
    })
}
