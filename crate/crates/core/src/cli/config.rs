use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bayes::{MHConfig, PriorSpec};
use crate::error::{Error, Result};
use crate::neural::{TrainConfig, Variant};
use crate::reloc::{DistanceMode, TrilaterationConfig};
use crate::spectral::Position;
use crate::synth::{GammaProfile, NoiseDomain, SpeakerKind};

/// Everything a command needs. Commands read the global fields plus their own
/// section; unset dataset and estimate paths fall back to files inside `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for every random stream of a run.
    pub seed: u64,
    /// Directory receiving all outputs.
    pub out: PathBuf,
    pub simulate: SimulateConfig,
    pub infer_mh: InferMhConfig,
    pub fit_ls: FitLsConfig,
    pub train_nn: TrainNnConfig,
    pub rir: RirConfig,
    pub distance: DistanceConfig,
    pub localize: LocalizeConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            simulate: SimulateConfig::default(),
            infer_mh: InferMhConfig::default(),
            fit_ls: FitLsConfig::default(),
            train_nn: TrainNnConfig::default(),
            rir: RirConfig::default(),
            distance: DistanceConfig::default(),
            localize: LocalizeConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a `.toml` or `.json` file; missing fields take their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            Some("toml") => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            _ => Err(Error::Config(format!("{}: config must end in .toml or .json", path.display()))),
        }
    }

    pub(crate) fn manifest(&self, explicit: &Option<PathBuf>) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out.join(super::MANIFEST))
    }
}

/// Speaker-receiver layout of the built-in scene: travel distances and
/// in-plane bearings (radians) from the speaker.
const DEFAULT_RANGES: [f64; 9] = [0.943, 1.6, 2.3, 3.1, 3.9, 4.7, 5.6, 6.5, 7.407];
const DEFAULT_SPEAKER: Position = [-9.308, 0.021, -0.270];

fn default_receivers() -> Vec<Position> {
    DEFAULT_RANGES
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let theta = 0.35 * k as f64;
            let dir = [theta.cos(), theta.sin(), 0.05];
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            std::array::from_fn(|c| DEFAULT_SPEAKER[c] + d * dir[c] / norm)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFormat {
    /// Text samples that parse back to the identical values.
    #[default]
    Csv,
    /// 16-bit PCM; quantizes the samples.
    Wav,
}

impl SignalFormat {
    pub(crate) fn extension(self) -> &'static str {
        match self {
            SignalFormat::Csv => "csv",
            SignalFormat::Wav => "wav",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Odd by default: an even length has a Nyquist bin, which a real signal
    /// file cannot give the propagated phase.
    pub n_samples: usize,
    pub sample_rate: u32,
    pub speaker_kind: SpeakerKind,
    pub amplitude: f64,
    pub speaker_position: Position,
    pub receiver_positions: Vec<Position>,
    pub gamma: GammaProfile,
    pub noise_std: f64,
    pub noise_domain: NoiseDomain,
    pub signal_format: SignalFormat,
    /// Extra speakers recorded by one device at `device_position`, for localization.
    pub anchor_speakers: Vec<Position>,
    pub device_position: Position,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n_samples: 65,
            sample_rate: 2000,
            speaker_kind: SpeakerKind::Multisine,
            amplitude: 1.0,
            speaker_position: DEFAULT_SPEAKER,
            receiver_positions: default_receivers(),
            gamma: GammaProfile::Constant { alpha: 0.2, speed_of_sound: crate::synth::SPEED_OF_SOUND },
            noise_std: 0.01,
            noise_domain: NoiseDomain::Frequency,
            signal_format: SignalFormat::Csv,
            anchor_speakers: Vec::new(),
            device_position: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferMhConfig {
    pub dataset: Option<PathBuf>,
    pub prior: PriorSpec,
    /// Its `seed` is replaced by the run seed.
    pub sampler: MHConfig,
}

impl Default for InferMhConfig {
    fn default() -> Self {
        let prior = PriorSpec::default();
        Self { dataset: None, prior, sampler: MHConfig::for_prior(&prior) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitLsConfig {
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainNnConfig {
    pub dataset: Option<PathBuf>,
    pub hidden: Vec<usize>,
    pub variant: Variant,
    /// Its `seed` is replaced by the run seed.
    pub train: TrainConfig,
    /// Train `train.ensemble_k` members on subsets instead of one network.
    pub ensemble: bool,
}

impl Default for TrainNnConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            hidden: vec![128, 128],
            variant: Variant::Mlp,
            train: TrainConfig::default(),
            ensemble: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RirConfig {
    /// When set, the response is built from this coefficient instead of a measured pair.
    pub gamma: Option<PathBuf>,
    /// Travel distance for a coefficient-based response; defaults to the pair's distance.
    pub delta_x: Option<f64>,
    pub dataset: Option<PathBuf>,
    pub pair: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceConfig {
    pub dataset: Option<PathBuf>,
    /// Defaults to the least-squares estimate in `out`.
    pub gamma: Option<PathBuf>,
    pub mode: DistanceMode,
    /// Posterior trace CSV; when set, uncertainty is propagated from it.
    pub trace: Option<PathBuf>,
    pub n_draws: usize,
    /// Pair indices to evaluate; all when unset.
    pub pairs: Option<Vec<usize>>,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self { dataset: None, gamma: None, mode: DistanceMode::MagnitudeOnly, trace: None, n_draws: 200, pairs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizeConfig {
    /// Manifest whose pairs are (anchor speaker, device recording).
    pub anchors: Option<PathBuf>,
    pub gamma: Option<PathBuf>,
    pub mode: DistanceMode,
    /// 2 or 3; 2 uses the first two coordinates of every position.
    pub dims: usize,
    pub solver: TrilaterationConfig,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        Self {
            anchors: None,
            gamma: None,
            mode: DistanceMode::MagnitudeOnly,
            dims: 3,
            solver: TrilaterationConfig::default(),
        }
    }
}

/// Estimator whose coefficient file `compare` reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ls,
    Mh,
    Nn,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ls, Method::Mh, Method::Nn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Mh => "mh",
            Method::Nn => "nn",
        }
    }

    /// Coefficient file written by the matching command.
    pub fn gamma_file(self) -> &'static str {
        match self {
            Method::Ls => super::GAMMA_LS,
            Method::Mh => super::GAMMA_MH_MAP,
            Method::Nn => super::GAMMA_NN,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown method {s:?}; expected ls, mh or nn")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub dataset: Option<PathBuf>,
    /// Directory holding the estimates; defaults to `out`.
    pub estimates: Option<PathBuf>,
    /// Methods to include; every method with an estimate present when unset.
    pub methods: Option<Vec<Method>>,
    pub mode: DistanceMode,
}
