use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::wavemodel::PropagationCoefficient;

/// One scalar coordinate of the sampled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterIndex {
    Alpha(usize),
    Kappa(usize),
    Sigma,
}

impl fmt::Display for ParameterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterIndex::Alpha(j) => write!(f, "alpha[{j}]"),
            ParameterIndex::Kappa(j) => write!(f, "kappa[{j}]"),
            ParameterIndex::Sigma => write!(f, "sigma"),
        }
    }
}

/// Post-warmup samples, indexed `[chain][iteration][bin]` for `alpha` and
/// `kappa` and `[chain][iteration]` for `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTrace {
    pub alpha_chains: Vec<Vec<Vec<f64>>>,
    pub kappa_chains: Vec<Vec<Vec<f64>>>,
    pub sigma_chain: Vec<Vec<f64>>,
    pub accept_rate: Vec<f64>,
    pub angular_frequencies: Vec<f64>,
    /// `sigma` was held fixed, so it is not a sampled parameter.
    pub sigma_fixed: bool,
    pub warnings: Vec<String>,
}

impl PosteriorTrace {
    pub(crate) fn from_parts(
        alpha_chains: Vec<Vec<Vec<f64>>>,
        kappa_chains: Vec<Vec<Vec<f64>>>,
        sigma_chain: Vec<Vec<f64>>,
        accept_rate: Vec<f64>,
        angular_frequencies: Vec<f64>,
        sigma_fixed: bool,
        warnings: Vec<String>,
    ) -> Self {
        Self { alpha_chains, kappa_chains, sigma_chain, accept_rate, angular_frequencies, sigma_fixed, warnings }
    }

    pub fn n_chains(&self) -> usize {
        self.sigma_chain.len()
    }

    pub fn n_kept(&self) -> usize {
        self.sigma_chain.first().map_or(0, Vec::len)
    }

    pub fn n_bins(&self) -> usize {
        self.angular_frequencies.len()
    }

    /// Sampled parameters in export order: all `alpha`, all `kappa`, then `sigma`
    /// unless it was fixed.
    pub fn parameters(&self) -> Vec<ParameterIndex> {
        let n = self.n_bins();
        let mut v: Vec<ParameterIndex> = (0..n).map(ParameterIndex::Alpha).collect();
        v.extend((0..n).map(ParameterIndex::Kappa));
        if !self.sigma_fixed {
            v.push(ParameterIndex::Sigma);
        }
        v
    }

    /// Per-chain sample sequences of one parameter.
    pub fn parameter_chains(&self, p: ParameterIndex) -> Result<Vec<Vec<f64>>> {
        match p {
            ParameterIndex::Alpha(j) | ParameterIndex::Kappa(j) if j >= self.n_bins() => {
                Err(Error::invalid(format!("bin {j} out of range for {} bins", self.n_bins())))
            }
            ParameterIndex::Alpha(j) => Ok(self.alpha_chains.iter().map(|c| c.iter().map(|s| s[j]).collect()).collect()),
            ParameterIndex::Kappa(j) => Ok(self.kappa_chains.iter().map(|c| c.iter().map(|s| s[j]).collect()).collect()),
            ParameterIndex::Sigma => Ok(self.sigma_chain.clone()),
        }
    }

    /// All chains of one parameter concatenated in chain order.
    pub fn pooled(&self, p: ParameterIndex) -> Result<Vec<f64>> {
        Ok(self.parameter_chains(p)?.concat())
    }

    pub fn sample_gamma(&self, chain: usize, iteration: usize) -> Result<PropagationCoefficient> {
        let a = self
            .alpha_chains
            .get(chain)
            .and_then(|c| c.get(iteration))
            .ok_or_else(|| Error::invalid(format!("no sample at chain {chain}, iteration {iteration}")))?;
        let k = &self.kappa_chains[chain][iteration];
        PropagationCoefficient::new(a.clone(), k.clone(), self.angular_frequencies.clone())
    }

    /// Coefficient assembled from a per-parameter statistic of the pooled samples.
    pub fn gamma_by(&self, stat: impl Fn(&[f64]) -> f64) -> Result<PropagationCoefficient> {
        if self.n_kept() == 0 {
            return Err(Error::invalid("trace has no samples"));
        }
        let n = self.n_bins();
        let alpha = (0..n).map(|j| self.pooled(ParameterIndex::Alpha(j)).map(|v| stat(&v))).collect::<Result<_>>()?;
        let kappa = (0..n).map(|j| self.pooled(ParameterIndex::Kappa(j)).map(|v| stat(&v))).collect::<Result<_>>()?;
        PropagationCoefficient::new(alpha, kappa, self.angular_frequencies.clone())
    }

    pub fn posterior_mean(&self) -> Result<PropagationCoefficient> {
        self.gamma_by(stats::mean)
    }

    /// Histogram-mode point estimate per bin.
    pub fn posterior_mode(&self) -> Result<PropagationCoefficient> {
        self.gamma_by(stats::histogram_mode)
    }

    /// Long-format CSV with columns `chain,iteration,parameter,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["chain", "iteration", "parameter", "value"])?;
        for p in self.parameters() {
            let name = p.to_string();
            for (c, chain) in self.parameter_chains(p)?.iter().enumerate() {
                for (t, v) in chain.iter().enumerate() {
                    w.write_record([c.to_string(), t.to_string(), name.clone(), v.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a trace written by [`PosteriorTrace::write_csv`]. Acceptance rates
    /// are not stored and come back as NaN, as does `sigma` when it was fixed.
    pub fn read_csv(path: &Path, angular_frequencies: &[f64]) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let n = angular_frequencies.len();
        let bad = |msg: String| Error::invalid(format!("{}: {msg}", path.display()));
        let mut cells: Vec<(usize, usize, ParameterIndex, f64)> = Vec::new();
        let mut reader = csv::Reader::from_path(path)?;
        for rec in reader.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("short row {rec:?}")));
            let c: usize = field(0)?.parse().map_err(|_| bad(format!("bad chain in {rec:?}")))?;
            let t: usize = field(1)?.parse().map_err(|_| bad(format!("bad iteration in {rec:?}")))?;
            let p = parse_parameter(field(2)?).ok_or_else(|| bad(format!("unknown parameter in {rec:?}")))?;
            let v: f64 = field(3)?.parse().map_err(|_| bad(format!("bad value in {rec:?}")))?;
            if let ParameterIndex::Alpha(j) | ParameterIndex::Kappa(j) = p {
                if j >= n {
                    return Err(bad(format!("bin {j} beyond the {n}-bin grid")));
                }
            }
            cells.push((c, t, p, v));
        }
        let n_chains = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
        let n_kept = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
        let mut alpha = vec![vec![vec![f64::NAN; n]; n_kept]; n_chains];
        let mut kappa = alpha.clone();
        let mut sigma = vec![vec![f64::NAN; n_kept]; n_chains];
        let mut sigma_seen = false;
        for (c, t, p, v) in cells {
            match p {
                ParameterIndex::Alpha(j) => alpha[c][t][j] = v,
                ParameterIndex::Kappa(j) => kappa[c][t][j] = v,
                ParameterIndex::Sigma => {
                    sigma[c][t] = v;
                    sigma_seen = true;
                }
            }
        }
        if alpha.iter().chain(&kappa).flatten().flatten().any(|v| v.is_nan()) {
            return Err(bad("trace is missing samples".into()));
        }
        Ok(Self::from_parts(
            alpha,
            kappa,
            sigma,
            vec![f64::NAN; n_chains],
            angular_frequencies.to_vec(),
            !sigma_seen,
            Vec::new(),
        ))
    }
}

fn parse_parameter(name: &str) -> Option<ParameterIndex> {
    if name == "sigma" {
        return Some(ParameterIndex::Sigma);
    }
    let (head, rest) = name.split_once('[')?;
    let j: usize = rest.strip_suffix(']')?.parse().ok()?;
    match head {
        "alpha" => Some(ParameterIndex::Alpha(j)),
        "kappa" => Some(ParameterIndex::Kappa(j)),
        _ => None,
    }
}
