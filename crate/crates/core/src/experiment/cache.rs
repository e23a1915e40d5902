//! On-disk cache of base-model forecasts, keyed by dataset content,
//! provider, stage, provider settings and seed.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::cache::ForecastTable;
use crate::models::ProviderId;
use crate::rnn::RnnConfig;

/// Environment variable overriding the default cache root.
pub const CACHE_DIR_ENV: &str = "WEEKCAST_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Fitted on training parts, forecasting the validation window.
    Validation,
    /// Fitted on full training series, forecasting the test window.
    Test,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Validation => "validation",
            Stage::Test => "test",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub dataset_hash: String,
    pub provider: ProviderId,
    pub stage: Stage,
    pub provider_config: String,
    pub seed: u64,
}

impl CacheKey {
    pub fn digest(&self) -> String {
        let text = format!(
            "{}\n{}\n{}\n{}\n{}",
            self.dataset_hash,
            self.provider.key(),
            self.stage,
            self.provider_config,
            self.seed
        );
        sha256_hex(text.as_bytes())
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}_{}", self.provider.key(), self.stage, &self.digest()[..16])
    }
}

/// Side information stored next to a cached table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CacheMeta {
    pub provider_config: String,
    /// Series that fell back to repeating the last value, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallbacks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dhr_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rnn_config: Option<RnnConfig>,
}

#[derive(Debug, Clone)]
pub struct ForecastCache {
    root: PathBuf,
}

impl ForecastCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn paths(&self, key: &CacheKey) -> (PathBuf, PathBuf) {
        let stem = key.file_stem();
        (
            self.root.join(format!("{stem}.csv")),
            self.root.join(format!("{stem}.meta.json")),
        )
    }

    /// Returns the cached entry if present; fails if it does not cover
    /// exactly `series_ids` at `horizon`.
    pub fn load(
        &self,
        key: &CacheKey,
        series_ids: &[String],
        horizon: usize,
    ) -> Result<Option<(ForecastTable, CacheMeta)>> {
        let (table_path, meta_path) = self.paths(key);
        if !table_path.exists() || !meta_path.exists() {
            return Ok(None);
        }
        let table = ForecastTable::read(&table_path)?;
        let meta: CacheMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)
            .map_err(|e| Error::CacheMismatch(format!("{}: {e}", meta_path.display())))?;
        let ids_match = table.rows.len() == series_ids.len()
            && table.rows.iter().zip(series_ids).all(|((a, _), b)| a == b);
        if table.horizon != horizon || !ids_match || meta.provider_config != key.provider_config {
            return Err(Error::CacheMismatch(format!(
                "{} does not match the current dataset/config",
                table_path.display()
            )));
        }
        Ok(Some((table, meta)))
    }

    pub fn store(&self, key: &CacheKey, table: &ForecastTable, meta: &CacheMeta) -> Result<()> {
        std::fs::create_dir_all(&self.root)?;
        let (table_path, meta_path) = self.paths(key);
        table.write(&table_path)?;
        let json = serde_json::to_string_pretty(meta).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(meta_path, json + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(stage: Stage) -> CacheKey {
        CacheKey {
            dataset_hash: "abc".into(),
            provider: ProviderId::Theta,
            stage,
            provider_config: "theta".into(),
            seed: 1,
        }
    }

    #[test]
    fn keys_differ_by_stage() {
        assert_ne!(key(Stage::Validation).digest(), key(Stage::Test).digest());
        assert_eq!(key(Stage::Test).digest(), key(Stage::Test).digest());
    }

    #[test]
    fn store_load_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ForecastCache::new(dir.path());
        let k = key(Stage::Test);
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(cache.load(&k, &ids, 2).unwrap().is_none());
        let table = ForecastTable::new(2, vec![("a".into(), vec![1.0, 2.0]), ("b".into(), vec![3.0, 4.0])]).unwrap();
        let meta = CacheMeta {
            provider_config: "theta".into(),
            ..CacheMeta::default()
        };
        cache.store(&k, &table, &meta).unwrap();
        let (t, m) = cache.load(&k, &ids, 2).unwrap().unwrap();
        assert_eq!(t, table);
        assert_eq!(m, meta);
        let other = vec!["a".to_string(), "c".to_string()];
        assert!(matches!(cache.load(&k, &other, 2), Err(Error::CacheMismatch(_))));
    }
}
