use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Census, EncoderBank, Network, NetworkError};
use crate::dynamics::RobotModel;

pub const STORE_FORMAT: &str = "cerebellum-weights";
pub const STORE_VERSION: u32 = 1;

/// Hex SHA-256 of a string.
pub fn sha256_hex(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

pub fn layout_hash(bank: &EncoderBank) -> String {
    sha256_hex(&bank.canonical_json())
}

pub fn robot_hash(model: &RobotModel) -> String {
    sha256_hex(&serde_json::to_string(&model.to_config()).expect("robot config serializes"))
}

/// Trained weights on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightStore {
    pub format: String,
    pub version: u32,
    pub layout_hash: String,
    pub robot_hash: String,
    pub census: Census,
    pub network: Network,
}

impl WeightStore {
    pub fn new(network: Network, model: &RobotModel) -> Self {
        WeightStore {
            format: STORE_FORMAT.to_string(),
            version: STORE_VERSION,
            layout_hash: layout_hash(&network.bank),
            robot_hash: robot_hash(model),
            census: network.census(),
            network,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weight store serializes")
    }

    /// Parse and check format, version and that the stored layout hash
    /// matches the stored layout.
    pub fn from_json(s: &str) -> Result<Self, NetworkError> {
        let store: WeightStore = serde_json::from_str(s).map_err(|e| NetworkError::Store(e.to_string()))?;
        if store.format != STORE_FORMAT {
            return Err(NetworkError::Store(format!("unknown format {:?}", store.format)));
        }
        if store.version != STORE_VERSION {
            return Err(NetworkError::Store(format!("unsupported version {}", store.version)));
        }
        let actual = layout_hash(&store.network.bank);
        if actual != store.layout_hash {
            return Err(NetworkError::Store(format!(
                "layout hash mismatch: recorded {}, computed {actual}",
                store.layout_hash
            )));
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), NetworkError> {
        fs::write(path, self.to_json()).map_err(|e| NetworkError::Store(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        let s = fs::read_to_string(path).map_err(|e| NetworkError::Store(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    /// Refuse weights trained for another encoder layout or robot.
    pub fn verify(&self, bank: &EncoderBank, model: &RobotModel) -> Result<(), NetworkError> {
        let expected = layout_hash(bank);
        if expected != self.layout_hash {
            return Err(NetworkError::Store(format!(
                "weights were trained for layout {}, config gives {expected}",
                self.layout_hash
            )));
        }
        let expected = robot_hash(model);
        if expected != self.robot_hash {
            return Err(NetworkError::Store(format!(
                "weights were trained for robot {}, config gives {expected}",
                self.robot_hash
            )));
        }
        Ok(())
    }
}
