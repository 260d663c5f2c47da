//! Market catalog files (TOML or JSON).
//!
//! ```toml
//! ondemand_rate = "0.24"
//! stage_hours = 1
//!
//! [[contracts]]
//! id = 1
//! upfront = "20.25"
//! duration_stages = 2190
//! usage_rate = "0.108"
//! ```
//!
//! Currency values may be decimal strings or plain numbers and must be
//! exact to a thousandth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MarketConfig, PricingContract};
use crate::money::Millicents;

/// EC2 standard-large pricing with the one- and three-year terms scaled to
/// one and three months of hourly stages.
pub const DEFAULT_CATALOG_TOML: &str = include_str!("../configs/ec2-standard-large.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractEntry {
    pub id: u32,
    pub upfront: Millicents,
    pub duration_stages: u32,
    pub usage_rate: Millicents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    pub ondemand_rate: Millicents,
    #[serde(default = "one")]
    pub stage_hours: u32,
    #[serde(default)]
    pub contracts: Vec<ContractEntry>,
}

fn one() -> u32 {
    1
}

impl CatalogFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a catalog, choosing the parser by extension (`.json`, else TOML).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn into_market(self) -> Result<MarketConfig> {
        let contracts = self
            .contracts
            .into_iter()
            .map(|c| PricingContract::new(c.id, c.upfront, c.duration_stages, c.usage_rate))
            .collect::<Result<Vec<_>>>()?;
        MarketConfig::new(contracts, self.ondemand_rate, self.stage_hours)
    }
}

pub fn load_market(path: &Path) -> Result<MarketConfig> {
    CatalogFile::load(path)?.into_market()
}

pub fn default_market() -> Result<MarketConfig> {
    CatalogFile::from_toml(DEFAULT_CATALOG_TOML)?.into_market()
}
