//! Run configuration files (TOML or JSON, chosen by extension) and the merge
//! with command-line flags. Flags always win.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use h2sched_core::plant::PlantSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DEFAULT_CONTRACT_FRACTION: f64 = 0.40;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: Option<PlantSpec>,
    pub train_years: Vec<PathBuf>,
    pub test_years: Vec<PathBuf>,
    pub pso: PsoSettings,
    pub output_dir: Option<PathBuf>,
    pub contract_fraction: Option<f64>,
    pub contract_kg: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoSettings {
    pub particles: Option<usize>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
}

/// Contract volume as recorded by `benchmark` for the downstream commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractFile {
    pub hpa_kg: f64,
}

pub const CONTRACT_FILE: &str = "contract.json";

pub fn load_structured<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext.to_ascii_lowercase().as_str() {
        "json" => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())),
        "toml" => toml::from_str(&text).with_context(|| format!("parsing {}", path.display())),
        _ => bail!("{}: expected a .toml or .json file", path.display()),
    }
}

impl RunConfig {
    /// Loads a config file. Relative year paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = load_structured(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.train_years.iter_mut().chain(cfg.test_years.iter_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(dir) = cfg.output_dir.as_mut() {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }
}

pub fn read_contract_file(dir: &Path) -> Result<Option<ContractFile>> {
    let path = dir.join(CONTRACT_FILE);
    if !path.exists() {
        return Ok(None);
    }
    load_structured(&path).map(Some)
}

pub fn write_contract_file(dir: &Path, contract: ContractFile) -> Result<()> {
    let path = dir.join(CONTRACT_FILE);
    let text = serde_json::to_string_pretty(&contract)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
