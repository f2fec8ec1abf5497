//! Run configuration: a TOML file layered over a named profile, with
//! command-line flags layered over both.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use netr0::dataset::BuildConfig;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 200-node networks, 20 per family.
    Desk,
    /// 1000-node networks, 2552 in total.
    Full,
}

impl Profile {
    pub fn build_config(self) -> BuildConfig {
        match self {
            Profile::Desk => BuildConfig::desk(),
            Profile::Full => BuildConfig::full(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub table: Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::user(format!("cannot read config {}: {e}", path.display())))?;
        let table: Table = text
            .parse()
            .map_err(|e| Failure::user(format!("config {}: {e}", path.display())))?;
        Ok(Self { table })
    }

    pub fn profile(&self) -> Result<Option<Profile>, Failure> {
        self.get("profile")
    }

    pub fn seed(&self) -> Result<Option<u64>, Failure> {
        self.get("seed")
    }

    pub fn jobs(&self) -> Result<Option<usize>, Failure> {
        self.get("jobs")
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, Failure> {
        self.table
            .get(key)
            .map(|v| {
                v.clone()
                    .try_into()
                    .map_err(|e| Failure::user(format!("config key {key:?}: {e}")))
            })
            .transpose()
    }

    /// Deserialises section `name`, or the type's default when absent.
    pub fn section<T: DeserializeOwned + Default>(&self, name: &str) -> Result<T, Failure> {
        Ok(self.get(name)?.unwrap_or_default())
    }

    /// `base` with every key present in section `name` replaced, recursively.
    pub fn overlay<T: Serialize + DeserializeOwned>(&self, name: &str, base: &T) -> Result<T, Failure> {
        let Some(patch) = self.table.get(name) else {
            return serialize_clone(base);
        };
        let mut value = Value::try_from(base)
            .map_err(|e| Failure::internal(format!("cannot represent {name} defaults: {e}")))?;
        merge(&mut value, patch);
        value
            .try_into()
            .map_err(|e| Failure::user(format!("config section [{name}]: {e}")))
    }
}

fn serialize_clone<T: Serialize + DeserializeOwned>(v: &T) -> Result<T, Failure> {
    serde_json::to_value(v)
        .and_then(serde_json::from_value)
        .map_err(|e| Failure::internal(e.to_string()))
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Table(b), Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(existing) => merge(existing, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// SHA-256 of the canonical JSON form of `value`, hex encoded.
pub fn digest(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
