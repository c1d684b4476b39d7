use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnsembleModel, RewardNet};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialised architecture, normaliser statistics and parameters of the
/// dynamics ensemble and reward net. Floats round-trip bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub ensemble: EnsembleModel,
    pub reward: RewardNet,
}

impl Checkpoint {
    pub fn new(ensemble: EnsembleModel, reward: RewardNet) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            ensemble,
            reward,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
