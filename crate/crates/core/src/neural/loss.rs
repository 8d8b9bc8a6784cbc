use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::PairDataset;
use crate::wavemodel::PropagationCoefficient;

/// Per-instance predictions, one row `[alpha_0 .. alpha_{n-1}, kappa_0 .. kappa_{n-1}]` per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMatrix {
    pub rows: Vec<Vec<f64>>,
    pub n_bins: usize,
}

impl CoefficientMatrix {
    pub fn new(rows: Vec<Vec<f64>>, n_bins: usize) -> Result<Self> {
        if rows.iter().any(|r| r.len() != 2 * n_bins) {
            return Err(Error::invalid(format!("every row must have {} entries", 2 * n_bins)));
        }
        Ok(Self { rows, n_bins })
    }

    /// Every row equal to `[alpha; kappa]` of `gamma`.
    pub fn repeated(gamma: &PropagationCoefficient, n_rows: usize) -> Self {
        let row: Vec<f64> = gamma.alpha().iter().chain(gamma.kappa()).copied().collect();
        Self { rows: vec![row; n_rows], n_bins: gamma.len() }
    }

    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn kappa(&self, i: usize, j: usize) -> f64 {
        self.rows[i][self.n_bins + j]
    }

    pub fn row_gamma(&self, i: usize, grid: &[f64]) -> Result<PropagationCoefficient> {
        let n = self.n_bins;
        PropagationCoefficient::new(self.rows[i][..n].to_vec(), self.rows[i][n..].to_vec(), grid.to_vec())
    }

    /// Column-wise mean over rows, shifted by the first row so identical rows give it exactly.
    pub fn mean_row(&self) -> Vec<f64> {
        let m = self.rows.len() as f64;
        (0..2 * self.n_bins)
            .map(|c| {
                let base = self.rows[0][c];
                base + self.rows.iter().map(|r| r[c] - base).sum::<f64>() / m
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub forward: f64,
    pub backward: f64,
    pub concentration: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { forward: 1.0, backward: 1.0, concentration: 1.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.forward, self.backward, self.concentration].iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("loss weights must be finite and >= 0"))
        }
    }
}

/// Weighted loss terms; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub forward: f64,
    pub backward: f64,
    pub concentration: f64,
}

/// Forward-backward-concentration loss, normalized by `N * n`:
/// `w_f |R - S e^{-gamma d}|^2 + w_b |S - R e^{gamma d}|^2` per pair and bin,
/// plus `w_c` times the squared deviation of each row from the mean row.
pub fn loss(dataset: &PairDataset, predictions: &CoefficientMatrix, weights: &LossWeights) -> Result<LossBreakdown> {
    Ok(loss_and_output_gradient(dataset, predictions, weights, false)?.0)
}

/// Loss together with `d(loss)/d(predictions)` when `with_grad` is set.
pub(crate) fn loss_and_output_gradient(
    dataset: &PairDataset,
    pred: &CoefficientMatrix,
    w: &LossWeights,
    with_grad: bool,
) -> Result<(LossBreakdown, Vec<Vec<f64>>)> {
    let n_pairs = dataset.len();
    let n = dataset.n_bins();
    if n_pairs == 0 {
        return Err(Error::invalid("dataset has no pairs"));
    }
    if pred.rows.len() != n_pairs || pred.n_bins != n {
        return Err(Error::invalid(format!(
            "predictions are {}x{} but the dataset has {n_pairs} pairs of {n} bins",
            pred.rows.len(),
            2 * pred.n_bins
        )));
    }
    let scale = 1.0 / (n_pairs * n) as f64;
    let mut grad = if with_grad { vec![vec![0.0; 2 * n]; n_pairs] } else { Vec::new() };
    let (mut fwd, mut bwd, mut conc) = (0.0, 0.0, 0.0);

    for i in 0..n_pairs {
        let d = dataset.delta_x()[i];
        let sp = dataset.speaker(i).coefficients();
        let rc = dataset.receiver(i).coefficients();
        for j in 0..n {
            let g = Complex64::new(pred.alpha(i, j), pred.kappa(i, j));
            let e = (-g * d).exp();
            let f = (g * d).exp();
            let (s, r) = (sp[j], rc[j]);
            let rf = r - s * e;
            let rb = s - r * f;
            fwd += rf.norm_sqr();
            bwd += rb.norm_sqr();
            if with_grad {
                // d|res|^2/d(alpha) = 2 Re(conj(res) d(res)/d(alpha)); d/d(kappa) carries an extra i.
                let df = s * d * e;
                let db = -r * d * f;
                let ga = w.forward * 2.0 * (rf.conj() * df).re + w.backward * 2.0 * (rb.conj() * db).re;
                let gk = w.forward * 2.0 * (rf.conj() * df * Complex64::i()).re
                    + w.backward * 2.0 * (rb.conj() * db * Complex64::i()).re;
                grad[i][j] += scale * ga;
                grad[i][n + j] += scale * gk;
            }
        }
    }

    let mean = pred.mean_row();
    for (i, row) in pred.rows.iter().enumerate() {
        for (c, (v, m)) in row.iter().zip(&mean).enumerate() {
            let dev = v - m;
            conc += dev * dev;
            if with_grad {
                // The mean's own dependence cancels because deviations sum to zero.
                grad[i][c] += scale * w.concentration * 2.0 * dev;
            }
        }
    }

    let forward = scale * w.forward * fwd;
    let backward = scale * w.backward * bwd;
    let concentration = scale * w.concentration * conc;
    let total = forward + backward + concentration;
    Ok((LossBreakdown { total, forward, backward, concentration }, grad))
}
