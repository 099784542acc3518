//! Versioned JSON container for a fitted recommender and its fitted strategies.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recommenders::RecommenderModel;
use crate::strategy::FittedStrategy;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub seed: u64,
    pub recommender: RecommenderModel,
    pub strategies: Vec<FittedStrategy>,
}

impl ModelBundle {
    pub fn new(seed: u64, recommender: RecommenderModel, strategies: Vec<FittedStrategy>) -> Self {
        ModelBundle { format_version: BUNDLE_FORMAT_VERSION, seed, recommender, strategies }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == BUNDLE_FORMAT_VERSION as u64 => {}
            Some(v) => return Err(Error::Bundle(format!("unsupported bundle version {v}"))),
            None => return Err(Error::Bundle("missing format_version".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Bundle(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
