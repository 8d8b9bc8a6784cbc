use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_output_gradient, CoefficientMatrix, LossBreakdown, LossWeights};
use super::network::{input_vector, Gradients, Network, NetworkSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::stats;
use crate::synth::PairDataset;
use crate::wavemodel::PropagationCoefficient;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    /// Squared-gradient average with decay 0.9 and epsilon 1e-8.
    #[default]
    Rmsprop,
}

const RMS_DECAY: f64 = 0.9;
const RMS_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub loss_weights: LossWeights,
    pub ensemble_k: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 1e-4,
            optimizer: Optimizer::Rmsprop,
            loss_weights: LossWeights::default(),
            ensemble_k: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted and leaves the network untouched.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be >= 0, got {}", self.learning_rate)));
        }
        self.loss_weights.validate()
    }
}

/// Predictions of `net` for every pair, from the speaker spectra.
pub fn predict(net: &Network, dataset: &PairDataset) -> Result<CoefficientMatrix> {
    net.spec.validate(Some(dataset.n_bins()))?;
    let rows = dataset
        .speakers()
        .iter()
        .map(|s| net.forward_vector(&input_vector(s)))
        .collect::<Result<Vec<_>>>()?;
    CoefficientMatrix::new(rows, dataset.n_bins())
}

/// Loss of `net` on `dataset` and its gradient with respect to every parameter.
pub fn gradients(net: &Network, dataset: &PairDataset, weights: &LossWeights) -> Result<(LossBreakdown, Gradients)> {
    net.spec.validate(Some(dataset.n_bins()))?;
    let mut rows = Vec::with_capacity(dataset.len());
    let mut tapes = Vec::with_capacity(dataset.len());
    for s in dataset.speakers() {
        let (out, tape) = net.forward_tape(&input_vector(s));
        rows.push(out);
        tapes.push(tape);
    }
    let pred = CoefficientMatrix::new(rows, dataset.n_bins())?;
    let (breakdown, grad_out) = loss_and_output_gradient(dataset, &pred, weights, true)?;
    let mut grads = Gradients::zeros(net);
    for (tape, g) in tapes.iter().zip(&grad_out) {
        net.backward(tape, g, &mut grads);
    }
    Ok((breakdown, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedNetwork {
    pub network: Network,
    /// Loss at the start of each epoch, before that epoch's update.
    pub history: Vec<LossBreakdown>,
    /// Loss after the last update.
    pub final_loss: LossBreakdown,
}

impl TrainedNetwork {
    /// Whether the loss after training is below the first recorded loss.
    pub fn loss_trend_decreasing(&self) -> bool {
        self.history.first().is_some_and(|first| self.final_loss.total < first.total)
    }

    /// CSV with columns `epoch,total,forward,backward,concentration`.
    pub fn write_history_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "total", "forward", "backward", "concentration"])?;
        for (e, l) in self.history.iter().enumerate() {
            w.write_record([
                e.to_string(),
                l.total.to_string(),
                l.forward.to_string(),
                l.backward.to_string(),
                l.concentration.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full-batch training. Deterministic given the spec seed.
pub fn train(dataset: &PairDataset, spec: &NetworkSpec, config: &TrainConfig) -> Result<TrainedNetwork> {
    if dataset.is_empty() {
        return Err(Error::invalid("dataset has no pairs"));
    }
    config.validate()?;
    spec.validate(Some(dataset.n_bins()))?;
    let mut net = Network::new(spec.clone())?;
    let n_params = net.n_parameters();
    let mut second_moment = vec![0.0; n_params];
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let (l, grads) = gradients(&net, dataset, &config.loss_weights)?;
        if !l.total.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss: l.total });
        }
        history.push(l);
        let g = grads.flat();
        for (k, gk) in g.iter().enumerate() {
            let step = match config.optimizer {
                Optimizer::Sgd => config.learning_rate * gk,
                Optimizer::Rmsprop => {
                    let v = &mut second_moment[k];
                    *v = RMS_DECAY * *v + (1.0 - RMS_DECAY) * gk * gk;
                    config.learning_rate * gk / (v.sqrt() + RMS_EPS)
                }
            };
            if step != 0.0 {
                net.set_parameter(k, net.parameter(k) - step);
            }
        }
    }
    let final_loss = gradients(&net, dataset, &config.loss_weights)?.0;
    if !final_loss.total.is_finite() {
        return Err(Error::TrainingDiverged { epoch: config.epochs, loss: final_loss.total });
    }
    Ok(TrainedNetwork { network: net, history, final_loss })
}

/// Training subset and initialization seed of one ensemble member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberPlan {
    pub subset: Vec<usize>,
    pub init_seed: u64,
}

/// `k` members, each on `ceil(0.8 N)` distinct pairs drawn from stream `member`
/// of `seed`, sorted ascending.
pub fn plan_ensemble(n_pairs: usize, k: usize, seed: u64) -> Result<Vec<MemberPlan>> {
    if k < 2 {
        return Err(Error::invalid("an ensemble needs at least two members"));
    }
    if n_pairs < 2 {
        return Err(Error::invalid("an ensemble needs at least two pairs to subset"));
    }
    let size = (0.8 * n_pairs as f64).ceil() as usize;
    Ok((0..k)
        .map(|m| {
            let stream = derive_seed(seed, m as u64);
            let mut rng = seeded(stream);
            let mut subset = sample(&mut rng, n_pairs, size).into_vec();
            subset.sort_unstable();
            MemberPlan { subset, init_seed: derive_seed(stream, u64::MAX) }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub members: Vec<TrainedNetwork>,
    pub plans: Vec<MemberPlan>,
    /// Per-bin mean of the members' predictions averaged over all pairs.
    pub mean: PropagationCoefficient,
    pub alpha_std: Vec<f64>,
    pub kappa_std: Vec<f64>,
}

pub fn train_ensemble(dataset: &PairDataset, spec: &NetworkSpec, config: &TrainConfig) -> Result<EnsembleResult> {
    let plans = plan_ensemble(dataset.len(), config.ensemble_k, config.seed)?;
    train_planned(dataset, spec, config, plans)
}

/// Ensemble training with explicit member plans.
pub fn train_planned(
    dataset: &PairDataset,
    spec: &NetworkSpec,
    config: &TrainConfig,
    plans: Vec<MemberPlan>,
) -> Result<EnsembleResult> {
    if plans.is_empty() {
        return Err(Error::invalid("no ensemble members"));
    }
    let members = plans
        .par_iter()
        .map(|p| {
            let sub = dataset.subset(&p.subset)?;
            train(&sub, &NetworkSpec { seed: p.init_seed, ..spec.clone() }, config)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = dataset.n_bins();
    // Member estimate: its predictions averaged over every pair of the full dataset.
    let estimates = members
        .iter()
        .map(|m| predict(&m.network, dataset).map(|p| p.mean_row()))
        .collect::<Result<Vec<_>>>()?;
    let column = |c: usize| estimates.iter().map(|e| e[c]).collect::<Vec<f64>>();
    let mean_alpha: Vec<f64> = (0..n).map(|j| stats::mean(&column(j))).collect();
    let mean_kappa: Vec<f64> = (0..n).map(|j| stats::mean(&column(n + j))).collect();
    let alpha_std = (0..n).map(|j| stats::sample_std(&column(j))).collect();
    let kappa_std = (0..n).map(|j| stats::sample_std(&column(n + j))).collect();
    let mean = PropagationCoefficient::new(mean_alpha, mean_kappa, dataset.angular_frequencies().to_vec())?;
    Ok(EnsembleResult { members, plans, mean, alpha_std, kappa_std })
}
