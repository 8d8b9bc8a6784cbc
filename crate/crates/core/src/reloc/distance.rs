use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bayes::PosteriorTrace;
use crate::error::{Error, Result};
use crate::lsq::EPS_MAG;
use crate::rng::seeded;
use crate::spectral::{ensure_grids_match, Spectrum};
use crate::stats;
use crate::wavemodel::{PropagationCoefficient, EPS_DIV};

/// How a real distance is read off the per-bin log ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// `-ln(|R| / |S|) / alpha`; free of phase wrapping.
    #[default]
    MagnitudeOnly,
    /// `Re(-ln(R / S) / gamma)` with the principal-branch logarithm.
    ComplexRealPart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    /// Candidate distance per unmasked bin (or per bin and draw when pooled).
    pub per_bin: Vec<f64>,
    pub mean: f64,
    /// Histogram mode of `per_bin`.
    pub mode: f64,
    pub std: f64,
    /// Number of bins that contributed for a single coefficient.
    pub n_bins_used: usize,
    pub mode_flag: DistanceMode,
}

/// The summary written to distance reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub mean: f64,
    pub mode: f64,
    pub std: f64,
    pub n_bins_used: usize,
    pub mode_flag: DistanceMode,
}

impl DistanceEstimate {
    fn from_candidates(per_bin: Vec<f64>, n_bins_used: usize, mode_flag: DistanceMode) -> Result<Self> {
        if per_bin.is_empty() {
            return Err(Error::Degenerate("every bin is masked; no distance information".into()));
        }
        Ok(Self {
            mean: stats::mean(&per_bin),
            mode: stats::histogram_mode(&per_bin),
            std: stats::sample_std(&per_bin),
            per_bin,
            n_bins_used,
            mode_flag,
        })
    }

    pub fn report(&self) -> DistanceReport {
        DistanceReport {
            mean: self.mean,
            mode: self.mode,
            std: self.std,
            n_bins_used: self.n_bins_used,
            mode_flag: self.mode_flag,
        }
    }
}

fn candidates(speaker: &Spectrum, receiver: &Spectrum, gamma: &PropagationCoefficient, mode: DistanceMode) -> Vec<f64> {
    let mut out = Vec::with_capacity(gamma.len());
    for (j, (s, r)) in speaker.coefficients().iter().zip(receiver.coefficients()).enumerate() {
        if s.norm() < EPS_MAG || r.norm() < EPS_MAG {
            continue;
        }
        let candidate = match mode {
            DistanceMode::MagnitudeOnly => {
                let a = gamma.alpha()[j];
                if a.abs() <= EPS_DIV {
                    continue;
                }
                -(r.norm() / s.norm()).ln() / a
            }
            DistanceMode::ComplexRealPart => {
                let g = gamma.gamma(j);
                if g.norm() < EPS_DIV {
                    continue;
                }
                (-(r / s).ln() / g).re
            }
        };
        if candidate.is_finite() {
            out.push(candidate);
        }
    }
    out
}

fn check_inputs(speaker: &Spectrum, receiver: &Spectrum, gamma: &PropagationCoefficient) -> Result<()> {
    ensure_grids_match(speaker.angular_frequencies(), receiver.angular_frequencies(), "distance spectra")?;
    ensure_grids_match(speaker.angular_frequencies(), gamma.angular_frequencies(), "distance coefficient")
}

/// Per-bin inversion of the propagation law for the distance, summarized
/// over the unmasked bins.
pub fn estimate_distance(
    speaker: &Spectrum,
    receiver: &Spectrum,
    gamma: &PropagationCoefficient,
    mode: DistanceMode,
) -> Result<DistanceEstimate> {
    check_inputs(speaker, receiver, gamma)?;
    let c = candidates(speaker, receiver, gamma, mode);
    let used = c.len();
    DistanceEstimate::from_candidates(c, used, mode)
}

/// Pools per-bin candidates over `n_draws` posterior samples picked uniformly
/// (with replacement) from all chains by a generator seeded with `seed`.
pub fn propagate_uncertainty(
    speaker: &Spectrum,
    receiver: &Spectrum,
    posterior: &PosteriorTrace,
    n_draws: usize,
    mode: DistanceMode,
    seed: u64,
) -> Result<DistanceEstimate> {
    if n_draws == 0 {
        return Err(Error::invalid("n_draws must be at least 1"));
    }
    let (chains, kept) = (posterior.n_chains(), posterior.n_kept());
    if chains == 0 || kept == 0 {
        return Err(Error::invalid("posterior trace is empty"));
    }
    let mut rng = seeded(seed);
    let mut pooled = Vec::new();
    let mut used = 0;
    for _ in 0..n_draws {
        let c = rng.random_range(0..chains);
        let t = rng.random_range(0..kept);
        let gamma = posterior.sample_gamma(c, t)?;
        check_inputs(speaker, receiver, &gamma)?;
        let cand = candidates(speaker, receiver, &gamma, mode);
        used = used.max(cand.len());
        pooled.extend(cand);
    }
    DistanceEstimate::from_candidates(pooled, used, mode)
}
