//! JSON documents for networks and cost models.
//!
//! A network file looks like
//!
//! ```json
//! {"supplies": [10.0, 8.0], "demands": [6.0, 4.0], "allocation": [[6.0, 0.0], [0.0, 4.0]]}
//! ```
//!
//! `allocation` may be omitted, meaning nothing is allocated yet. Reals are
//! written in shortest round-trip form, so reading a written file gives back
//! bit-identical values.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::network::{AllocationMatrix, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub supplies: Vec<f64>,
    pub demands: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Vec<Vec<f64>>>,
}

impl NetworkFile {
    pub fn from_network(network: &Network) -> Self {
        Self {
            supplies: network.resources().to_vec(),
            demands: network.loads().to_vec(),
            allocation: Some(network.allocation().to_rows()),
        }
    }

    pub fn instance(resources: &[f64], loads: &[f64]) -> Self {
        Self {
            supplies: resources.to_vec(),
            demands: loads.to_vec(),
            allocation: None,
        }
    }

    pub fn into_network(self) -> Result<Network> {
        match self.allocation {
            Some(rows) if !rows.is_empty() => {
                let alloc = AllocationMatrix::from_rows(rows)?;
                Network::new(self.supplies, self.demands, alloc)
            }
            _ => Network::unallocated(self.supplies, self.demands),
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_network(path: &Path) -> Result<Network> {
    read_json::<NetworkFile>(path)?.into_network()
}

pub fn write_network(path: &Path, network: &Network) -> Result<()> {
    write_json(path, &NetworkFile::from_network(network))
}

pub fn read_network_file(path: &Path) -> Result<NetworkFile> {
    read_json(path)
}

pub fn write_network_file(path: &Path, file: &NetworkFile) -> Result<()> {
    write_json(path, file)
}

/// Cost model file: `{"alpha": [[..]], "beta": [[..]]}`.
pub fn read_cost_model(path: &Path) -> Result<CostModel> {
    read_json(path)
}

pub fn write_cost_model(path: &Path, model: &CostModel) -> Result<()> {
    write_json(path, model)
}
