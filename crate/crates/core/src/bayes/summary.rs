use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagnostics::{ess_tail_chains, split_rhat, MIN_ESS_LENGTH};
use super::trace::{ParameterIndex, PosteriorTrace};
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub parameter: ParameterIndex,
    pub name: String,
    pub mean: f64,
    /// Histogram mode of the pooled draws.
    pub mode: f64,
    pub std: f64,
    /// `None` with a single chain.
    pub r_hat: Option<f64>,
    /// `None` when the chains are shorter than the estimator allows.
    pub ess_tail: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub parameters: Vec<ParameterSummary>,
    pub n_chains: usize,
    pub n_kept: usize,
    pub accept_rate: Vec<f64>,
}

impl PosteriorSummary {
    pub fn get(&self, p: ParameterIndex) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|s| s.parameter == p)
    }

    /// Fraction of parameters with `r_hat < rhat_max` and `ess_tail > ess_min`.
    pub fn fraction_converged(&self, rhat_max: f64, ess_min: f64) -> f64 {
        if self.parameters.is_empty() {
            return 0.0;
        }
        let ok = self
            .parameters
            .iter()
            .filter(|s| s.r_hat.is_some_and(|r| r < rhat_max) && s.ess_tail.is_some_and(|e| e > ess_min))
            .count();
        ok as f64 / self.parameters.len() as f64
    }

    /// Table with columns `parameter,mean,std,mode,r_hat,ess_tail`; missing
    /// diagnostics are left empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["parameter", "mean", "std", "mode", "r_hat", "ess_tail"])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for s in &self.parameters {
            w.write_record([
                s.name.clone(),
                s.mean.to_string(),
                s.std.to_string(),
                s.mode.to_string(),
                opt(s.r_hat),
                opt(s.ess_tail),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn summarize(trace: &PosteriorTrace) -> Result<PosteriorSummary> {
    if trace.n_chains() == 0 || trace.n_kept() == 0 {
        return Err(Error::invalid("trace has no samples"));
    }
    let parameters = trace
        .parameters()
        .into_iter()
        .map(|p| summarize_parameter(trace, p))
        .collect::<Result<_>>()?;
    Ok(PosteriorSummary {
        parameters,
        n_chains: trace.n_chains(),
        n_kept: trace.n_kept(),
        accept_rate: trace.accept_rate.clone(),
    })
}

fn summarize_parameter(trace: &PosteriorTrace, p: ParameterIndex) -> Result<ParameterSummary> {
    let chains = trace.parameter_chains(p)?;
    let pooled = chains.concat();
    let r_hat = if chains.len() >= 2 && trace.n_kept() >= 4 { Some(split_rhat(&chains)?) } else { None };
    let ess_tail = if trace.n_kept() >= MIN_ESS_LENGTH { Some(ess_tail_chains(&chains)?) } else { None };
    Ok(ParameterSummary {
        parameter: p,
        name: p.to_string(),
        mean: stats::mean(&pooled),
        mode: stats::histogram_mode(&pooled),
        std: stats::sample_std(&pooled),
        r_hat,
        ess_tail,
    })
}
