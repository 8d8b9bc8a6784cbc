//! Command layer behind the `wavecoef` binary.
//!
//! Each `cmd_*` function takes a fully resolved [`RunConfig`], writes its
//! outputs into `config.out` together with `config_<command>.json` (the
//! configuration it ran with), and returns the list of files plus a short
//! summary. Outputs carry no timestamps, so equal configs give byte-identical
//! files.
//!
//! Configuration precedence is flags, then the config file, then defaults;
//! the binary applies flags on top of [`RunConfig::from_file`].

mod commands;
mod config;

pub use commands::{
    cmd_compare, cmd_distance, cmd_fit_ls, cmd_infer_mh, cmd_localize, cmd_rir, cmd_simulate, cmd_train_nn,
    CommandOutput,
};
pub use config::{
    CompareConfig, DistanceConfig, FitLsConfig, InferMhConfig, LocalizeConfig, Method, RirConfig, RunConfig,
    SignalFormat, SimulateConfig, TrainNnConfig,
};

/// Dataset manifest written by `simulate` and read by default elsewhere.
pub const MANIFEST: &str = "manifest.json";
/// Anchor manifest written by `simulate` when anchor speakers are configured.
pub const ANCHORS: &str = "anchors.json";
pub const GAMMA_LS: &str = "gamma_ls.json";
pub const GAMMA_MH_MAP: &str = "gamma_mh_map.json";
pub const GAMMA_MH_MEAN: &str = "gamma_mh_mean.json";
pub const GAMMA_NN: &str = "gamma_nn.json";
