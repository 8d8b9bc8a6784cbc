//! Synthetic ground truth (known `gamma`, controlled noise) and ingestion of
//! recorded speaker/receiver datasets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::rng;
use crate::spectral::{self, dft, idft, Position, Signal, Spectrum};
use crate::wavemodel::{propagate, symmetry_report, PropagationCoefficient};

/// Speed of sound in air used by the built-in profiles (m/s).
pub const SPEED_OF_SOUND: f64 = 343.0;

/// N speaker/receiver spectrum pairs on one shared frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    speaker_spectra: Vec<Spectrum>,
    receiver_spectra: Vec<Spectrum>,
    delta_x: Vec<f64>,
}

fn distance(a: Position, b: Position) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl PairDataset {
    /// Pairs the spectra index by index; travel distances are the Euclidean
    /// distances between the tagged positions.
    pub fn new(speaker_spectra: Vec<Spectrum>, receiver_spectra: Vec<Spectrum>) -> Result<Self> {
        if speaker_spectra.is_empty() {
            return Err(Error::invalid("dataset needs at least one pair"));
        }
        if speaker_spectra.len() != receiver_spectra.len() {
            return Err(Error::invalid(format!(
                "{} speaker spectra but {} receiver spectra",
                speaker_spectra.len(),
                receiver_spectra.len()
            )));
        }
        let grid = speaker_spectra[0].angular_frequencies();
        for (i, (s, r)) in speaker_spectra.iter().zip(&receiver_spectra).enumerate() {
            for spec in [s, r] {
                if !spectral::grids_match(grid, spec.angular_frequencies()) {
                    return Err(Error::GridMismatch(format!(
                        "pair {i}: {} bins at {} Hz vs {} bins at {} Hz",
                        spec.len(),
                        spec.sample_rate(),
                        grid.len(),
                        speaker_spectra[0].sample_rate()
                    )));
                }
            }
        }
        let delta_x = speaker_spectra
            .iter()
            .zip(&receiver_spectra)
            .map(|(s, r)| distance(s.position(), r.position()))
            .collect();
        Ok(Self {
            speaker_spectra,
            receiver_spectra,
            delta_x,
        })
    }

    pub fn len(&self) -> usize {
        self.delta_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_x.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.speaker_spectra[0].len()
    }

    pub fn speaker(&self, i: usize) -> &Spectrum {
        &self.speaker_spectra[i]
    }

    pub fn receiver(&self, i: usize) -> &Spectrum {
        &self.receiver_spectra[i]
    }

    pub fn speakers(&self) -> &[Spectrum] {
        &self.speaker_spectra
    }

    pub fn receivers(&self) -> &[Spectrum] {
        &self.receiver_spectra
    }

    pub fn delta_x(&self) -> &[f64] {
        &self.delta_x
    }

    pub fn angular_frequencies(&self) -> &[f64] {
        self.speaker_spectra[0].angular_frequencies()
    }

    pub fn sample_rate(&self) -> u32 {
        self.speaker_spectra[0].sample_rate()
    }

    /// Dataset restricted to the given pair indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::invalid(format!("pair index {i} out of range (N = {})", self.len())));
        }
        Self::new(
            indices.iter().map(|&i| self.speaker_spectra[i].clone()).collect(),
            indices.iter().map(|&i| self.receiver_spectra[i].clone()).collect(),
        )
    }
}

/// Synthetic oracle configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub gamma_true: PropagationCoefficient,
    pub noise_std: f64,
}

impl GroundTruth {
    pub fn new(gamma_true: PropagationCoefficient, noise_std: f64) -> Result<Self> {
        if let Some(j) = gamma_true.alpha().iter().position(|&a| a < 0.0) {
            return Err(Error::invalid(format!("ground-truth alpha is negative at bin {j}")));
        }
        if !(noise_std >= 0.0) {
            return Err(Error::invalid("noise_std must be >= 0"));
        }
        Ok(Self { gamma_true, noise_std })
    }
}

/// Shape of a ground-truth propagation coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaProfile {
    /// Constant attenuation, non-dispersive wave number `omega / speed`.
    Constant { alpha: f64, speed_of_sound: f64 },
    /// `kappa = omega / 343`, `alpha = 0.001 sqrt(|omega|)` clipped to `[0, 5)`.
    AirLike,
    /// Explicit per-bin table; must be even/odd within `1e-9`.
    Custom { alpha: Vec<f64>, kappa: Vec<f64> },
}

impl Default for GammaProfile {
    fn default() -> Self {
        GammaProfile::Constant {
            alpha: 1.5,
            speed_of_sound: SPEED_OF_SOUND,
        }
    }
}

pub fn make_gamma(profile: &GammaProfile, grid: &[f64]) -> Result<PropagationCoefficient> {
    let gamma = match profile {
        GammaProfile::Constant { alpha, speed_of_sound } => {
            if *speed_of_sound <= 0.0 {
                return Err(Error::invalid("speed of sound must be positive"));
            }
            PropagationCoefficient::new_nonnegative(
                vec![*alpha; grid.len()],
                grid.iter().map(|w| w / speed_of_sound).collect(),
                grid.to_vec(),
            )?
        }
        GammaProfile::AirLike => {
            let cap = 5.0 * (1.0 - f64::EPSILON);
            PropagationCoefficient::new_nonnegative(
                grid.iter().map(|w| (0.001 * w.abs().sqrt()).clamp(0.0, cap)).collect(),
                grid.iter().map(|w| w / SPEED_OF_SOUND).collect(),
                grid.to_vec(),
            )?
        }
        GammaProfile::Custom { alpha, kappa } => {
            if alpha.len() != grid.len() || kappa.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "custom table has {}/{} entries for a {}-bin grid",
                    alpha.len(),
                    kappa.len(),
                    grid.len()
                )));
            }
            PropagationCoefficient::new_nonnegative(alpha.clone(), kappa.clone(), grid.to_vec())?
        }
    };
    let report = symmetry_report(&gamma)?;
    if report.alpha_evenness_error > 1e-9 || report.kappa_oddness_error > 1e-9 {
        return Err(Error::invalid(format!(
            "profile violates symmetry: alpha evenness error {:.3e}, kappa oddness error {:.3e}",
            report.alpha_evenness_error, report.kappa_oddness_error
        )));
    }
    Ok(gamma)
}

/// Where simulated measurement noise is injected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDomain {
    /// Independent complex Gaussian per bin, each component with std `noise_std`.
    #[default]
    Frequency,
    /// Real Gaussian per time sample, added before the transform.
    Time,
}

/// Synthetic speaker excitation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerKind {
    /// Flat magnitude spectrum with random, conjugate-symmetric phases.
    #[default]
    Multisine,
    /// Gaussian white noise in time.
    WhiteNoise,
    /// Unit impulse scaled by the amplitude.
    Impulse,
}

/// Real speaker signal of `n` samples. For `Multisine`, `amplitude` is the
/// magnitude of every DFT bin; otherwise it scales the time samples.
pub fn speaker_signal(
    kind: SpeakerKind,
    n: usize,
    sample_rate: u32,
    amplitude: f64,
    seed: u64,
    position: Position,
) -> Result<Signal> {
    if n == 0 {
        return Err(Error::invalid("speaker signal needs at least one sample"));
    }
    let mut rng = rng::seeded(seed);
    let samples = match kind {
        SpeakerKind::Multisine => {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
            coeffs[0] = Complex64::new(amplitude, 0.0);
            for j in 1..n {
                let m = spectral::mirror_bin(j, n);
                if m == j {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    coeffs[j] = Complex64::new(sign * amplitude, 0.0);
                } else if j < m {
                    let phase = rng.random_range(-PI..PI);
                    coeffs[j] = Complex64::from_polar(amplitude, phase);
                    coeffs[m] = coeffs[j].conj();
                }
            }
            spectral::inverse_dft(&coeffs).iter().map(|c| c.re).collect()
        }
        SpeakerKind::WhiteNoise => (0..n)
            .map(|_| amplitude * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        SpeakerKind::Impulse => {
            let mut v = vec![0.0; n];
            v[0] = amplitude;
            v
        }
    };
    Signal::new(samples, sample_rate, position)
}

/// Propagates `speaker` over `delta_x` meters and adds frequency-domain noise.
/// The receiver is tagged at the speaker position shifted by `delta_x` along x.
pub fn simulate_pair(
    speaker: &Signal,
    gamma: &PropagationCoefficient,
    delta_x: f64,
    noise_std: f64,
    seed: u64,
) -> Result<(Spectrum, Spectrum)> {
    if !(delta_x >= 0.0) {
        return Err(Error::invalid("delta_x must be >= 0"));
    }
    let mut target = speaker.position();
    target[0] += delta_x;
    simulate_pair_at(speaker, gamma, target, noise_std, NoiseDomain::Frequency, seed)
}

/// Like [`simulate_pair`], for an explicit receiver position.
pub fn simulate_pair_at(
    speaker: &Signal,
    gamma: &PropagationCoefficient,
    receiver_position: Position,
    noise_std: f64,
    domain: NoiseDomain,
    seed: u64,
) -> Result<(Spectrum, Spectrum)> {
    if !(noise_std >= 0.0) {
        return Err(Error::invalid("noise_std must be >= 0"));
    }
    let delta_x = distance(speaker.position(), receiver_position);
    let speaker_spec = dft(speaker)?;
    let clean = propagate(&speaker_spec, gamma, delta_x)?;
    let mut rng = rng::seeded(seed);
    let coefficients = match domain {
        NoiseDomain::Frequency => clean
            .coefficients()
            .iter()
            .map(|c| {
                if noise_std == 0.0 {
                    return *c;
                }
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c + Complex64::new(noise_std * re, noise_std * im)
            })
            .collect(),
        NoiseDomain::Time => {
            let time = idft(&clean)?.signal;
            let noisy: Vec<Complex64> = time
                .samples()
                .iter()
                .map(|x| {
                    let e: f64 = rng.sample(StandardNormal);
                    Complex64::new(x + noise_std * e, 0.0)
                })
                .collect();
            spectral::forward_dft(&noisy)
        }
    };
    let receiver = Spectrum::new(coefficients, speaker.sample_rate(), receiver_position)?;
    Ok((speaker_spec, receiver))
}

/// One speaker, many receivers; pair `i` uses the seed stream `i`.
pub fn simulate_dataset(
    speaker: &Signal,
    gamma: &PropagationCoefficient,
    receiver_positions: &[Position],
    noise_std: f64,
    domain: NoiseDomain,
    seed: u64,
) -> Result<PairDataset> {
    let mut speakers = Vec::with_capacity(receiver_positions.len());
    let mut receivers = Vec::with_capacity(receiver_positions.len());
    for (i, &pos) in receiver_positions.iter().enumerate() {
        let (s, r) = simulate_pair_at(speaker, gamma, pos, noise_std, domain, rng::derive_seed(seed, i as u64))?;
        speakers.push(s);
        receivers.push(r);
    }
    PairDataset::new(speakers, receivers)
}

/// Dataset manifest. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub pairs: Vec<ManifestPair>,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPair {
    pub speaker: PathBuf,
    pub receiver: PathBuf,
    pub speaker_pos: Position,
    /// Unknown when the receiver is the device being localized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_pos: Option<Position>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
        if manifest.pairs.is_empty() {
            return Err(Error::MalformedManifest(format!("{}: no pairs listed", path.display())));
        }
        if manifest.sample_rate == 0 {
            return Err(Error::MalformedManifest(format!("{}: sample_rate must be positive", path.display())));
        }
        Ok(manifest)
    }
}

pub(crate) fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads a signal referenced by a manifest and checks its sample rate.
pub(crate) fn load_manifest_signal(base: &Path, file: &Path, pos: Position, sample_rate: u32) -> Result<Signal> {
    let path = resolve(base, file);
    let signal = io::read_signal(&path, pos)?;
    if signal.sample_rate() != sample_rate {
        return Err(Error::GridMismatch(format!(
            "{} is sampled at {} Hz, manifest says {} Hz",
            path.display(),
            signal.sample_rate(),
            sample_rate
        )));
    }
    Ok(signal)
}

/// Reads every listed signal, transforms it and pairs the spectra.
pub fn load_dataset(manifest_path: &Path) -> Result<PairDataset> {
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut speakers = Vec::new();
    let mut receivers = Vec::new();
    for (i, pair) in manifest.pairs.iter().enumerate() {
        let receiver_pos = pair.receiver_pos.ok_or_else(|| {
            Error::MalformedManifest(format!("pair {i} has no receiver_pos"))
        })?;
        let s = load_manifest_signal(base, &pair.speaker, pair.speaker_pos, manifest.sample_rate)?;
        let r = load_manifest_signal(base, &pair.receiver, receiver_pos, manifest.sample_rate)?;
        if s.len() != r.len() {
            return Err(Error::GridMismatch(format!(
                "pair {i}: speaker has {} samples, receiver has {}",
                s.len(),
                r.len()
            )));
        }
        speakers.push(dft(&s)?);
        receivers.push(dft(&r)?);
    }
    PairDataset::new(speakers, receivers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::angular_grid;
    use crate::wavemodel::symmetry_report;

    fn speaker(n: usize) -> Signal {
        speaker_signal(SpeakerKind::Multisine, n, 2000, 1.0, 3, [0.0; 3]).unwrap()
    }

    #[test]
    fn constant_profile_is_even() {
        let g = make_gamma(
            &GammaProfile::Constant { alpha: 1.5, speed_of_sound: 343.0 },
            &angular_grid(32, 2000),
        )
        .unwrap();
        assert_eq!(symmetry_report(&g).unwrap().alpha_evenness_error, 0.0);
    }

    #[test]
    fn air_like_values_and_band() {
        let grid = angular_grid(64, 8000);
        let g = make_gamma(&GammaProfile::AirLike, &grid).unwrap();
        for j in 0..64 {
            let w = grid[j];
            assert_eq!(g.kappa()[j], w / 343.0);
            assert_eq!(g.alpha()[j], 0.001 * w.abs().sqrt());
            assert!(g.alpha()[j] >= 0.0 && g.alpha()[j] < 5.0);
            assert!(g.kappa()[j].abs() < 100.0);
        }
    }

    #[test]
    fn custom_table_must_be_odd_in_kappa() {
        let grid = angular_grid(4, 4);
        let bad = GammaProfile::Custom { alpha: vec![1.0; 4], kappa: vec![0.0, 1.0, 0.0, 1.0] };
        assert!(make_gamma(&bad, &grid).is_err());
        let good = GammaProfile::Custom { alpha: vec![1.0; 4], kappa: vec![0.0, 1.0, 0.0, -1.0] };
        assert!(make_gamma(&good, &grid).is_ok());
    }

    #[test]
    fn multisine_has_flat_magnitude() {
        let s = speaker(32);
        let spec = dft(&s).unwrap();
        for c in spec.coefficients() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_pair_is_exact_propagation() {
        let s = speaker(16);
        let g = make_gamma(&GammaProfile::AirLike, &angular_grid(16, 2000)).unwrap();
        let (sp, rc) = simulate_pair(&s, &g, 1.2, 0.0, 9).unwrap();
        assert_eq!(rc.coefficients(), propagate(&sp, &g, 1.2).unwrap().coefficients());
        let (sp, rc) = simulate_pair(&s, &g, 0.0, 0.0, 9).unwrap();
        assert_eq!(rc.coefficients(), sp.coefficients());
    }

    #[test]
    fn seeded_simulation_is_deterministic() {
        let s = speaker(16);
        let g = make_gamma(&GammaProfile::default(), &angular_grid(16, 2000)).unwrap();
        let a = simulate_pair(&s, &g, 2.0, 0.05, 77).unwrap();
        let b = simulate_pair(&s, &g, 2.0, 0.05, 77).unwrap();
        assert_eq!(a, b);
        let c = simulate_pair(&s, &g, 2.0, 0.05, 78).unwrap();
        assert_ne!(a.1, c.1);
        assert!(simulate_pair(&s, &g, 2.0, -1.0, 77).is_err());
    }

    #[test]
    fn dataset_distances_follow_positions() {
        let s = speaker(8).with_position([1.0, 2.0, 3.0]);
        let g = make_gamma(&GammaProfile::default(), &angular_grid(8, 2000)).unwrap();
        let ds = simulate_dataset(&s, &g, &[[4.0, 6.0, 3.0], [1.0, 2.0, 3.5]], 0.0, NoiseDomain::Frequency, 1).unwrap();
        assert_eq!(ds.len(), 2);
        assert!((ds.delta_x()[0] - 5.0).abs() < 1e-12);
        assert!((ds.delta_x()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = dft(&speaker(8)).unwrap();
        let b = dft(&speaker(10)).unwrap();
        assert!(matches!(PairDataset::new(vec![a], vec![b]), Err(Error::GridMismatch(_))));
    }
}
