//! Optional JSON configuration for the command-line tool.
//!
//! Keys mirror the long flag names with `-` replaced by `_`. Command-line
//! flags take precedence over file values.

use serde::Deserialize;

use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format: Option<String>,
    pub out: Option<String>,
    pub seed: Option<u64>,
    pub state: Option<String>,
    pub tau: Option<f64>,
    pub n: Option<u64>,
    pub l: Option<usize>,
    pub tau_max: Option<f64>,
    pub steps: Option<usize>,
    pub restarts: Option<usize>,
    pub z: Option<Vec<f64>>,
    pub inset: Option<bool>,
    pub range: Option<f64>,
    pub x_range: Option<[f64; 2]>,
    pub p_range: Option<[f64; 2]>,
    pub resolution: Option<usize>,
    pub state_out: Option<String>,
    pub mass_g: Option<f64>,
    pub omega: Option<f64>,
    pub time_s: Option<f64>,
    pub mean_quanta: Option<f64>,
    pub amplitude_m: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    Ok(serde_json::from_str(text)?)
}
