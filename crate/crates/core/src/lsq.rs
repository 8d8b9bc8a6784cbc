//! Closed-form log-domain least squares.
//!
//! Taking logs of `P2 = P1 exp(-gamma dx)` gives the linear relation
//! `log P2 - log P1 = -gamma dx` per bin. With one row per pair and the
//! distances on a diagonal, the normal equations decouple and row `i` of the
//! estimate is simply `-(log P2_i - log P1_i) / dx_i`.
//!
//! The complex log is taken on its principal branch and no unwrapping is
//! attempted, so `kappa` is only identified modulo `2 pi / dx`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{ensure_grids_match, Spectrum};
use crate::stats;
use crate::synth::PairDataset;
use crate::wavemodel::PropagationCoefficient;

/// Bins whose speaker or receiver magnitude falls below this are masked.
pub const EPS_MAG: f64 = 1e-12;

/// Principal-branch `log(receiver / speaker)` per bin; `None` marks masked bins.
pub fn log_ratio(speaker: &Spectrum, receiver: &Spectrum) -> Result<Vec<Option<Complex64>>> {
    ensure_grids_match(speaker.angular_frequencies(), receiver.angular_frequencies(), "log_ratio")?;
    let out: Vec<Option<Complex64>> = speaker
        .coefficients()
        .iter()
        .zip(receiver.coefficients())
        .map(|(s, r)| (s.norm() >= EPS_MAG && r.norm() >= EPS_MAG).then(|| (r / s).ln()))
        .collect();
    if out.iter().all(Option::is_none) {
        return Err(Error::Degenerate("every bin is below the magnitude floor".into()));
    }
    Ok(out)
}

/// One row of the per-pair estimate matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsqRow {
    /// Index of the pair in the dataset.
    pub pair: usize,
    /// Masked bins hold zeros; see `valid`.
    pub gamma: PropagationCoefficient,
    pub valid: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsqEstimate {
    pub gamma_rows: Vec<LsqRow>,
    /// Per-bin mean over the rows where the bin is valid.
    pub gamma_mean: PropagationCoefficient,
    /// Per-bin sample standard deviations across rows (0 with a single row).
    pub alpha_std: Vec<f64>,
    pub kappa_std: Vec<f64>,
    /// Pairs skipped because their travel distance is zero.
    pub rejected_pairs: Vec<usize>,
    /// Number of masked (row, bin) cells.
    pub masked_cells: usize,
    /// Bins masked in every row; their mean is reported as zero.
    pub unresolved_bins: Vec<usize>,
    pub warnings: Vec<String>,
}

pub fn fit(dataset: &PairDataset) -> Result<LsqEstimate> {
    let grid = dataset.angular_frequencies().to_vec();
    let n = grid.len();
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    let mut warnings = Vec::new();
    let mut masked_cells = 0;

    for i in 0..dataset.len() {
        let dx = dataset.delta_x()[i];
        if dx == 0.0 {
            warnings.push(format!("pair {i} has zero travel distance and was skipped"));
            rejected.push(i);
            continue;
        }
        let logs = match log_ratio(dataset.speaker(i), dataset.receiver(i)) {
            Ok(l) => l,
            Err(Error::Degenerate(msg)) => {
                warnings.push(format!("pair {i} skipped: {msg}"));
                rejected.push(i);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut alpha = vec![0.0; n];
        let mut kappa = vec![0.0; n];
        let mut valid = vec![false; n];
        for (j, l) in logs.iter().enumerate() {
            match l {
                Some(l) => {
                    let g = -l / dx;
                    alpha[j] = g.re;
                    kappa[j] = g.im;
                    valid[j] = true;
                }
                None => masked_cells += 1,
            }
        }
        rows.push(LsqRow {
            pair: i,
            gamma: PropagationCoefficient::new(alpha, kappa, grid.clone())?,
            valid,
        });
    }
    if rows.is_empty() {
        return Err(Error::Degenerate("no usable pairs for least squares".into()));
    }

    let mut mean_a = vec![0.0; n];
    let mut mean_k = vec![0.0; n];
    let mut std_a = vec![0.0; n];
    let mut std_k = vec![0.0; n];
    let mut unresolved = Vec::new();
    for j in 0..n {
        let a: Vec<f64> = rows.iter().filter(|r| r.valid[j]).map(|r| r.gamma.alpha()[j]).collect();
        let k: Vec<f64> = rows.iter().filter(|r| r.valid[j]).map(|r| r.gamma.kappa()[j]).collect();
        if a.is_empty() {
            unresolved.push(j);
            continue;
        }
        mean_a[j] = stats::mean(&a);
        mean_k[j] = stats::mean(&k);
        std_a[j] = stats::sample_std(&a);
        std_k[j] = stats::sample_std(&k);
    }
    if !unresolved.is_empty() {
        warnings.push(format!("{} bin(s) masked in every pair", unresolved.len()));
    }

    Ok(LsqEstimate {
        gamma_rows: rows,
        gamma_mean: PropagationCoefficient::new(mean_a, mean_k, grid)?,
        alpha_std: std_a,
        kappa_std: std_k,
        rejected_pairs: rejected,
        masked_cells,
        unresolved_bins: unresolved,
        warnings,
    })
}

/// Squared Frobenius norm of `Delta log P + Delta X Gamma` with every row of
/// `Gamma` set to the mean estimate. Masked cells and rejected pairs are skipped.
pub fn residual(dataset: &PairDataset, estimate: &LsqEstimate) -> Result<f64> {
    ensure_grids_match(
        dataset.angular_frequencies(),
        estimate.gamma_mean.angular_frequencies(),
        "lsq residual",
    )?;
    let mut total = 0.0;
    for row in &estimate.gamma_rows {
        let i = row.pair;
        let dx = dataset.delta_x()[i];
        let logs = log_ratio(dataset.speaker(i), dataset.receiver(i))?;
        for (j, l) in logs.iter().enumerate() {
            if let (Some(l), true) = (l, row.valid[j]) {
                total += (l + estimate.gamma_mean.gamma(j) * dx).norm_sqr();
            }
        }
    }
    Ok(total)
}
