//! TOML configuration files for every command.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bounds::CoveringScenario;
use crate::error::{Error, Result};
use crate::md::RegionConstraintSystem;
use crate::prob::{JointPmf, Pmf};

pub use crate::experiments::{CoveringExperimentConfig, PtpConfig, SumsetExperimentConfig};
pub use crate::md::MdExampleParams;

/// Entropy queries: single pmfs, and conditional entropies of a joint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyConfig {
    #[serde(default)]
    pub pmfs: Vec<Pmf>,
    #[serde(default)]
    pub joint: Option<JointPmf>,
    #[serde(default)]
    pub queries: Vec<EntropyQuery>,
}

/// H(targets | given) over component indices of `joint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyQuery {
    pub targets: Vec<usize>,
    #[serde(default)]
    pub given: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub scenario: CoveringScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub system: RegionConstraintSystem,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_caps_and_defaults() {
        let cfg: PtpConfig = parse_toml(
            r#"
            q = 2
            px = [0.5, 0.5]
            channel = [[0.75, 0.25], [0.25, 0.75]]
            n_grid = [8]
            eps = 0.2
            trials = 3
            [caps]
            set = 1000
            "#,
        )
        .unwrap();
        assert_eq!(cfg.caps.set, 1000);
        assert_eq!(cfg.caps.pair_ops, crate::codes::Caps::default().pair_ops);
        assert_eq!(cfg.delta, 0.1);
    }

    #[test]
    fn malformed_is_config_error() {
        assert!(matches!(parse_toml::<BoundsConfig>("scenario = 3"), Err(Error::Config(_))));
    }
}
