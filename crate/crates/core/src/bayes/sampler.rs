use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{bin_sum_squares, complex_residual_logpdf, gaussian_ll, LikelihoodMode, PriorSpec};
use super::trace::PosteriorTrace;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};
use crate::synth::PairDataset;
use crate::wavemodel::residual_term;

/// Treatment of the wave-equation residual `(alpha^2 + 2i alpha kappa) S e^{-gamma dx}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LhsMode {
    #[default]
    Off,
    /// Reject any state whose residual magnitude exceeds `tolerance` for some pair.
    Hard { tolerance: f64 },
    /// Add a Gaussian penalty with scale `sigma_prime` on every residual.
    Soft { sigma_prime: f64 },
}

/// How a Metropolis step moves through the parameter vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateScheme {
    /// One scalar proposal per `alpha_j`, then per `kappa_j`, then `sigma`,
    /// each with its own accept/reject.
    #[default]
    Componentwise,
    /// A single proposal that moves every parameter at once.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MHConfig {
    pub n_iterations: usize,
    pub n_chains: usize,
    pub warmup: usize,
    pub proposal_std_alpha: f64,
    pub proposal_std_kappa: f64,
    pub proposal_std_sigma: f64,
    pub lhs_mode: LhsMode,
    pub seed: u64,
    pub scheme: UpdateScheme,
    pub likelihood: LikelihoodMode,
    /// When false the target is the prior alone.
    pub use_likelihood: bool,
    pub enforce_alpha_positive: bool,
    /// Holds `sigma` at this value instead of sampling it.
    pub fixed_sigma: Option<f64>,
}

impl Default for MHConfig {
    fn default() -> Self {
        Self::for_prior(&PriorSpec::default())
    }
}

impl MHConfig {
    /// Two chains of 1000 iterations with 600 warmup, proposal scales at a
    /// tenth of the prior scales.
    pub fn for_prior(prior: &PriorSpec) -> Self {
        Self {
            n_iterations: 1000,
            n_chains: 2,
            warmup: 600,
            proposal_std_alpha: 0.1 * prior.alpha_std,
            proposal_std_kappa: 0.1 * prior.kappa_std,
            proposal_std_sigma: 0.1 * prior.sigma_scale,
            lhs_mode: LhsMode::Off,
            seed: 0,
            scheme: UpdateScheme::Componentwise,
            likelihood: LikelihoodMode::ForwardBackward,
            use_likelihood: true,
            enforce_alpha_positive: true,
            fixed_sigma: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::invalid("n_chains must be at least 1"));
        }
        if self.warmup >= self.n_iterations {
            return Err(Error::invalid(format!(
                "warmup ({}) must be below n_iterations ({})",
                self.warmup, self.n_iterations
            )));
        }
        for (name, v) in [
            ("proposal_std_alpha", self.proposal_std_alpha),
            ("proposal_std_kappa", self.proposal_std_kappa),
            ("proposal_std_sigma", self.proposal_std_sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        match self.lhs_mode {
            LhsMode::Hard { tolerance } if !(tolerance >= 0.0) => {
                return Err(Error::invalid("lhs tolerance must be >= 0"));
            }
            LhsMode::Soft { sigma_prime } if !(sigma_prime > 0.0) => {
                return Err(Error::invalid("lhs sigma_prime must be positive"));
            }
            _ => {}
        }
        if let Some(s) = self.fixed_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("fixed_sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Draws posterior samples of `(alpha, kappa, sigma)` from independent chains.
///
/// Chains run in parallel; chain `c` uses the stream `derive_seed(seed, c)`,
/// so the trace does not depend on thread scheduling.
pub fn mh_sample(dataset: &PairDataset, prior: &PriorSpec, config: &MHConfig) -> Result<PosteriorTrace> {
    if dataset.is_empty() {
        return Err(Error::invalid("dataset has no pairs"));
    }
    prior.validate()?;
    config.validate()?;
    let target = Target::new(dataset, prior, config);
    let chains: Vec<ChainOutput> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(&target, config, derive_seed(config.seed, c as u64)))
        .collect();

    let mut warnings = Vec::new();
    for (c, ch) in chains.iter().enumerate() {
        if ch.accept_rate == 0.0 {
            warnings.push(format!("chain {c} rejected every proposal after warmup"));
        }
    }
    Ok(PosteriorTrace::from_parts(
        chains.iter().map(|c| c.alpha.clone()).collect(),
        chains.iter().map(|c| c.kappa.clone()).collect(),
        chains.iter().map(|c| c.sigma.clone()).collect(),
        chains.iter().map(|c| c.accept_rate).collect(),
        dataset.angular_frequencies().to_vec(),
        config.fixed_sigma.is_some(),
        warnings,
    ))
}

struct Target<'a> {
    dataset: &'a PairDataset,
    prior: &'a PriorSpec,
    config: &'a MHConfig,
    /// Number of real residual terms in the likelihood.
    n_terms: f64,
}

impl<'a> Target<'a> {
    fn new(dataset: &'a PairDataset, prior: &'a PriorSpec, config: &'a MHConfig) -> Self {
        let n_terms = (2 * config.likelihood.residuals_per_cell() * dataset.len() * dataset.n_bins()) as f64;
        Self { dataset, prior, config, n_terms }
    }

    fn n_bins(&self) -> usize {
        self.dataset.n_bins()
    }

    /// Sum of squared residuals at bin `j`; zero when the likelihood is off.
    fn bin_ss(&self, j: usize, a: f64, k: f64) -> f64 {
        if self.config.use_likelihood {
            bin_sum_squares(self.dataset, j, a, k, self.config.likelihood)
        } else {
            0.0
        }
    }

    /// Soft-constraint log density at bin `j`, or `None` when a hard
    /// constraint is violated.
    fn bin_constraint(&self, j: usize, a: f64, k: f64) -> Option<f64> {
        match self.config.lhs_mode {
            LhsMode::Off => Some(0.0),
            LhsMode::Hard { tolerance } => {
                let ok = (0..self.dataset.len()).all(|i| {
                    let s = self.dataset.speaker(i).coefficients()[j];
                    residual_term(a, k, s, self.dataset.delta_x()[i]).norm() <= tolerance
                });
                ok.then_some(0.0)
            }
            LhsMode::Soft { sigma_prime } => {
                if !self.config.use_likelihood {
                    return Some(0.0);
                }
                let lp = (0..self.dataset.len())
                    .map(|i| {
                        let s = self.dataset.speaker(i).coefficients()[j];
                        complex_residual_logpdf(residual_term(a, k, s, self.dataset.delta_x()[i]), sigma_prime)
                    })
                    .sum::<f64>();
                Some(if lp.is_nan() { f64::NEG_INFINITY } else { lp })
            }
        }
    }

    fn alpha_allowed(&self, a: f64) -> bool {
        a.is_finite() && (!self.config.enforce_alpha_positive || a > 0.0)
    }

    /// Per-bin part of the log target that depends on `(alpha_j, kappa_j)`.
    fn bin_log_target(&self, a: f64, k: f64, ss: f64, lc: f64, sigma: f64) -> f64 {
        let ll = if ss.is_finite() { -ss / (2.0 * sigma * sigma) } else { f64::NEG_INFINITY };
        self.prior.log_alpha(a) + self.prior.log_kappa(k) + ll + lc
    }

    /// Part of the log target that depends on `sigma` given the total sum of squares.
    fn sigma_log_target(&self, sigma: f64, ss_total: f64) -> f64 {
        let ll = if self.config.use_likelihood { gaussian_ll(ss_total, self.n_terms, sigma) } else { 0.0 };
        let lp = if self.config.fixed_sigma.is_some() { 0.0 } else { self.prior.log_sigma(sigma) };
        lp + ll
    }
}

struct State {
    alpha: Vec<f64>,
    kappa: Vec<f64>,
    sigma: f64,
    ss: Vec<f64>,
    lc: Vec<f64>,
}

struct ChainOutput {
    alpha: Vec<Vec<f64>>,
    kappa: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    accept_rate: f64,
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Metropolis decision for a log-ratio; an infinite-ratio tie counts as accept
/// only when the current state has zero density.
fn accept(rng: &mut Rng, proposed: f64, current: f64) -> bool {
    if proposed == f64::NEG_INFINITY || proposed.is_nan() {
        return false;
    }
    if current == f64::NEG_INFINITY || current.is_nan() {
        return true;
    }
    let log_r = proposed - current;
    let u: f64 = rng.random();
    log_r >= 0.0 || u <= log_r.exp()
}

fn initial_state(target: &Target, rng: &mut Rng) -> State {
    let n = target.n_bins();
    let prior = target.prior;
    let mut alpha = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    for _ in 0..n {
        let mut a = prior.alpha_mean + prior.alpha_std * normal(rng);
        let mut tries = 0;
        while !target.alpha_allowed(a) && tries < 1000 {
            a = prior.alpha_mean + prior.alpha_std * normal(rng);
            tries += 1;
        }
        if !target.alpha_allowed(a) {
            a = a.abs().max(f64::MIN_POSITIVE);
        }
        alpha.push(a);
        kappa.push(prior.kappa_mean + prior.kappa_std * normal(rng));
    }
    let sigma = match target.config.fixed_sigma {
        Some(s) => s,
        None => (prior.sigma_scale * normal(rng)).abs().max(f64::MIN_POSITIVE),
    };
    let ss: Vec<f64> = (0..n).map(|j| target.bin_ss(j, alpha[j], kappa[j])).collect();
    // An infeasible start under a hard constraint keeps lc = 0 until a feasible move.
    let lc = (0..n).map(|j| target.bin_constraint(j, alpha[j], kappa[j]).unwrap_or(0.0)).collect();
    State { alpha, kappa, sigma, ss, lc }
}

fn run_chain(target: &Target, config: &MHConfig, seed: u64) -> ChainOutput {
    let mut rng = seeded(seed);
    let mut st = initial_state(target, &mut rng);
    let n_kept = config.n_iterations - config.warmup;
    let mut out = ChainOutput {
        alpha: Vec::with_capacity(n_kept),
        kappa: Vec::with_capacity(n_kept),
        sigma: Vec::with_capacity(n_kept),
        accept_rate: 0.0,
    };
    let (mut accepted, mut proposed) = (0usize, 0usize);
    for it in 0..config.n_iterations {
        let (a, p) = match config.scheme {
            UpdateScheme::Componentwise => componentwise_step(target, &mut st, &mut rng),
            UpdateScheme::Joint => joint_step(target, &mut st, &mut rng),
        };
        if it >= config.warmup {
            accepted += a;
            proposed += p;
            out.alpha.push(st.alpha.clone());
            out.kappa.push(st.kappa.clone());
            out.sigma.push(st.sigma);
        }
    }
    out.accept_rate = if proposed > 0 { accepted as f64 / proposed as f64 } else { 0.0 };
    out
}

/// Returns (accepted, proposed) counts for the sweep.
fn componentwise_step(target: &Target, st: &mut State, rng: &mut Rng) -> (usize, usize) {
    let cfg = target.config;
    let (mut acc, mut prop) = (0, 0);
    for j in 0..target.n_bins() {
        for moving_alpha in [true, false] {
            let (a, k) = (st.alpha[j], st.kappa[j]);
            let (a2, k2) = if moving_alpha {
                (a + cfg.proposal_std_alpha * normal(rng), k)
            } else {
                (a, k + cfg.proposal_std_kappa * normal(rng))
            };
            prop += 1;
            if !target.alpha_allowed(a2) {
                continue;
            }
            let Some(lc2) = target.bin_constraint(j, a2, k2) else {
                continue;
            };
            let ss2 = target.bin_ss(j, a2, k2);
            let cur = target.bin_log_target(a, k, st.ss[j], st.lc[j], st.sigma);
            let new = target.bin_log_target(a2, k2, ss2, lc2, st.sigma);
            if accept(rng, new, cur) {
                st.alpha[j] = a2;
                st.kappa[j] = k2;
                st.ss[j] = ss2;
                st.lc[j] = lc2;
                acc += 1;
            }
        }
    }
    if cfg.fixed_sigma.is_none() {
        prop += 1;
        let s2 = st.sigma + cfg.proposal_std_sigma * normal(rng);
        if s2 > 0.0 {
            let total: f64 = st.ss.iter().sum();
            if accept(rng, target.sigma_log_target(s2, total), target.sigma_log_target(st.sigma, total)) {
                st.sigma = s2;
                acc += 1;
            }
        }
    }
    (acc, prop)
}

fn joint_step(target: &Target, st: &mut State, rng: &mut Rng) -> (usize, usize) {
    let cfg = target.config;
    let n = target.n_bins();
    let alpha2: Vec<f64> = st.alpha.iter().map(|a| a + cfg.proposal_std_alpha * normal(rng)).collect();
    let kappa2: Vec<f64> = st.kappa.iter().map(|k| k + cfg.proposal_std_kappa * normal(rng)).collect();
    let sigma2 = match cfg.fixed_sigma {
        Some(s) => s,
        None => st.sigma + cfg.proposal_std_sigma * normal(rng),
    };
    if sigma2 <= 0.0 || !alpha2.iter().all(|&a| target.alpha_allowed(a)) {
        return (0, 1);
    }
    let mut lc2 = Vec::with_capacity(n);
    for j in 0..n {
        match target.bin_constraint(j, alpha2[j], kappa2[j]) {
            Some(v) => lc2.push(v),
            None => return (0, 1),
        }
    }
    let ss2: Vec<f64> = (0..n).map(|j| target.bin_ss(j, alpha2[j], kappa2[j])).collect();
    let total = |a: &[f64], k: &[f64], ss: &[f64], lc: &[f64], s: f64| {
        let prior: f64 = (0..n).map(|j| target.prior.log_alpha(a[j]) + target.prior.log_kappa(k[j]) + lc[j]).sum();
        prior + target.sigma_log_target(s, ss.iter().sum())
    };
    let cur = total(&st.alpha, &st.kappa, &st.ss, &st.lc, st.sigma);
    let new = total(&alpha2, &kappa2, &ss2, &lc2, sigma2);
    if accept(rng, new, cur) {
        st.alpha = alpha2;
        st.kappa = kappa2;
        st.sigma = sigma2;
        st.ss = ss2;
        st.lc = lc2;
        (1, 1)
    } else {
        (0, 1)
    }
}
