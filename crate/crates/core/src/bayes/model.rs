use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ensure_grids_match;
use crate::synth::PairDataset;
use crate::wavemodel::PropagationCoefficient;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Independent per-bin Gaussian priors on `alpha` and `kappa` and a
/// half-normal prior on the noise scale `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSpec {
    pub alpha_mean: f64,
    pub alpha_std: f64,
    pub kappa_mean: f64,
    pub kappa_std: f64,
    pub sigma_scale: f64,
}

impl Default for PriorSpec {
    /// `alpha ~ N(1, 1)`, `kappa ~ N(0, 10^2)`, `sigma ~ HalfNormal(1)`.
    fn default() -> Self {
        Self {
            alpha_mean: 1.0,
            alpha_std: 1.0,
            kappa_mean: 0.0,
            kappa_std: 10.0,
            sigma_scale: 1.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_std", self.alpha_std),
            ("kappa_std", self.kappa_std),
            ("sigma_scale", self.sigma_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("prior {name} must be positive, got {v}")));
            }
        }
        if !self.alpha_mean.is_finite() || !self.kappa_mean.is_finite() {
            return Err(Error::invalid("prior means must be finite"));
        }
        Ok(())
    }

    pub fn log_alpha(&self, a: f64) -> f64 {
        normal_logpdf(a, self.alpha_mean, self.alpha_std)
    }

    pub fn log_kappa(&self, k: f64) -> f64 {
        normal_logpdf(k, self.kappa_mean, self.kappa_std)
    }

    pub fn log_sigma(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        std::f64::consts::LN_2 + normal_logpdf(s, 0.0, self.sigma_scale)
    }
}

pub(crate) fn normal_logpdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - std.ln() - HALF_LN_2PI
}

/// Log-density of a complex residual whose real and imaginary parts are
/// independent `N(0, sigma^2)`.
pub fn complex_residual_logpdf(r: Complex64, sigma: f64) -> f64 {
    -r.norm_sqr() / (2.0 * sigma * sigma) - 2.0 * (sigma.ln() + HALF_LN_2PI)
}

/// Which propagation directions enter the likelihood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMode {
    /// Speaker-to-receiver and receiver-to-speaker residuals.
    #[default]
    ForwardBackward,
    /// Speaker-to-receiver residual only.
    Forward,
}

impl LikelihoodMode {
    pub(crate) fn residuals_per_cell(self) -> usize {
        match self {
            LikelihoodMode::ForwardBackward => 2,
            LikelihoodMode::Forward => 1,
        }
    }
}

/// Sum over pairs of squared residual magnitudes at one bin.
pub(crate) fn bin_sum_squares(
    dataset: &PairDataset,
    j: usize,
    alpha: f64,
    kappa: f64,
    mode: LikelihoodMode,
) -> f64 {
    let g = Complex64::new(alpha, kappa);
    let mut ss = 0.0;
    for i in 0..dataset.len() {
        let d = dataset.delta_x()[i];
        let s = dataset.speaker(i).coefficients()[j];
        let r = dataset.receiver(i).coefficients()[j];
        ss += (r - s * (-g * d).exp()).norm_sqr();
        if mode == LikelihoodMode::ForwardBackward {
            ss += (s - r * (g * d).exp()).norm_sqr();
        }
    }
    if ss.is_finite() {
        ss
    } else {
        f64::INFINITY
    }
}

/// Gaussian log-likelihood of the forward and backward residuals, each
/// complex residual counting as two real observations with variance `sigma^2`.
pub fn log_likelihood(dataset: &PairDataset, gamma: &PropagationCoefficient, sigma: f64) -> Result<f64> {
    log_likelihood_with(dataset, gamma, sigma, LikelihoodMode::ForwardBackward)
}

pub fn log_likelihood_with(
    dataset: &PairDataset,
    gamma: &PropagationCoefficient,
    sigma: f64,
    mode: LikelihoodMode,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    ensure_grids_match(dataset.angular_frequencies(), gamma.angular_frequencies(), "log_likelihood")?;
    let ss: f64 = (0..gamma.len())
        .map(|j| bin_sum_squares(dataset, j, gamma.alpha()[j], gamma.kappa()[j], mode))
        .sum();
    let m = (2 * mode.residuals_per_cell() * dataset.len() * gamma.len()) as f64;
    Ok(gaussian_ll(ss, m, sigma))
}

/// Log-likelihood of `m` real residuals with total sum of squares `ss`.
pub(crate) fn gaussian_ll(ss: f64, m: f64, sigma: f64) -> f64 {
    if !ss.is_finite() {
        return f64::NEG_INFINITY;
    }
    -ss / (2.0 * sigma * sigma) - m * (sigma.ln() + HALF_LN_2PI)
}
