//! Optional JSON config file shared by every subcommand.
//!
//! Each field mirrors a command-line flag; all are optional. Resolution
//! order everywhere is flag, then config file, then built-in default, so
//! a config file sets project-wide defaults without pinning anything.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use quastim::Error;

use crate::CliResult;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub shots: Option<u64>,
    pub per_class: Option<usize>,
    pub n_max: Option<usize>,
    pub brightness_jitter: Option<(f64, f64)>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub background_threshold: Option<f64>,
    pub grid_step: Option<f64>,
    pub n_fit_max: Option<usize>,
    pub max_modes: Option<usize>,
    pub separations: Option<Vec<f64>>,
    pub repeats: Option<usize>,
    pub grid: Option<usize>,
    pub peak_mean: Option<f64>,
    pub plateau_separation: Option<f64>,
    pub margin: Option<f64>,
    pub max_components: Option<usize>,
    pub shots_list: Option<Vec<u64>>,
    pub per_point: Option<usize>,
}

pub fn load(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Error::InvalidFormat {
            what: "config file".into(),
            why: e.to_string(),
        }
        .into()
    })
}
