use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::spectral::Spectrum;
use crate::wavemodel::PropagationCoefficient;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Layers exactly as listed.
    #[default]
    Mlp,
    /// Listed layers form the encoder; the decoder mirrors them back to the input width.
    Autoencoder,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkSpec {
    /// Fully connected net for `n_bins` bins with the given hidden widths.
    pub fn mlp(n_bins: usize, hidden: &[usize], seed: u64) -> Self {
        let mut layer_sizes = vec![2 * n_bins];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(2 * n_bins);
        Self { layer_sizes, activation: Activation::Relu, variant: Variant::Mlp, seed }
    }

    /// Widths of every layer after expanding the variant.
    pub fn resolved_sizes(&self) -> Vec<usize> {
        match self.variant {
            Variant::Mlp => self.layer_sizes.clone(),
            Variant::Autoencoder => {
                let mut v = self.layer_sizes.clone();
                v.extend(self.layer_sizes.iter().rev().skip(1));
                v
            }
        }
    }

    pub fn validate(&self, n_bins: Option<usize>) -> Result<()> {
        let sizes = self.resolved_sizes();
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid("network needs at least two non-empty layers"));
        }
        let (first, last) = (sizes[0], sizes[sizes.len() - 1]);
        if first % 2 != 0 || first != last {
            return Err(Error::invalid(format!(
                "input and output widths must both equal 2 * n_bins, got {first} and {last}"
            )));
        }
        if let Some(n) = n_bins {
            if first != 2 * n {
                return Err(Error::invalid(format!("network expects {} bins, data has {n}", first / 2)));
            }
        }
        Ok(())
    }
}

/// Dense layer `y = W x + b` with `W` stored row-major (`rows` outputs, `cols` inputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let row = &self.weights[r * self.cols..(r + 1) * self.cols];
                self.bias[r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

/// Feed-forward network: ReLU on hidden layers, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
}

/// Per-layer gradients with the same shapes as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub(crate) fn zeros(net: &Network) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Flattened in the same order as [`Network::parameter`].
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            v.extend_from_slice(w);
            v.extend_from_slice(b);
        }
        v
    }
}

/// Activations kept from a forward pass for back-propagation.
pub(crate) struct Tape {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    pre: Vec<Vec<f64>>,
}

impl Network {
    /// Gaussian weights with std `1/sqrt(fan_in)`, zero biases.
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        spec.validate(None)?;
        let sizes = spec.resolved_sizes();
        let mut rng = seeded(spec.seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let scale = (cols as f64).sqrt().recip();
                let weights = (0..rows * cols)
                    .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect();
                Layer { rows, cols, weights, bias: vec![0.0; rows] }
            })
            .collect();
        Ok(Self { spec, layers })
    }

    pub fn n_bins(&self) -> usize {
        self.layers[0].cols / 2
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn locate(&self, mut k: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if k < l.weights.len() {
                return (li, true, k);
            }
            k -= l.weights.len();
            if k < l.bias.len() {
                return (li, false, k);
            }
            k -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `k` in layer order, weights before biases within a layer.
    pub fn parameter(&self, k: usize) -> f64 {
        let (l, is_w, i) = self.locate(k);
        if is_w {
            self.layers[l].weights[i]
        } else {
            self.layers[l].bias[i]
        }
    }

    pub fn set_parameter(&mut self, k: usize, v: f64) {
        let (l, is_w, i) = self.locate(k);
        if is_w {
            self.layers[l].weights[i] = v;
        } else {
            self.layers[l].bias[i] = v;
        }
    }

    pub(crate) fn forward_tape(&self, x: &[f64]) -> (Vec<f64>, Tape) {
        let mut tape = Tape { inputs: Vec::with_capacity(self.layers.len()), pre: Vec::with_capacity(self.layers.len()) };
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&h);
            tape.inputs.push(h);
            h = if li == last { z.clone() } else { z.iter().map(|v| v.max(0.0)).collect() };
            tape.pre.push(z);
        }
        (h, tape)
    }

    /// Raw output vector `[alpha; kappa]` for an input vector `[Re S; Im S]`.
    pub fn forward_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.layers[0].cols {
            return Err(Error::invalid(format!(
                "network expects {} inputs, got {}",
                self.layers[0].cols,
                x.len()
            )));
        }
        Ok(self.forward_tape(x).0)
    }

    /// Accumulates `d(loss)/d(parameters)` given `d(loss)/d(output)`.
    pub(crate) fn backward(&self, tape: &Tape, grad_out: &[f64], grads: &mut Gradients) {
        let mut delta = grad_out.to_vec();
        let last = self.layers.len() - 1;
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            if li != last {
                for (d, z) in delta.iter_mut().zip(&tape.pre[li]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &tape.inputs[li];
            let gw = &mut grads.weights[li];
            for r in 0..layer.rows {
                let dr = delta[r];
                if dr == 0.0 {
                    continue;
                }
                grads.bias[li][r] += dr;
                for (g, x) in gw[r * layer.cols..(r + 1) * layer.cols].iter_mut().zip(input) {
                    *g += dr * x;
                }
            }
            if li > 0 {
                let mut prev = vec![0.0; layer.cols];
                for r in 0..layer.rows {
                    let dr = delta[r];
                    if dr == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(&layer.weights[r * layer.cols..(r + 1) * layer.cols]) {
                        *p += dr * w;
                    }
                }
                delta = prev;
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let net: Self = crate::io::read_json(path)?;
        net.spec.validate(None)?;
        let sizes = net.spec.resolved_sizes();
        let shapes_ok = net.layers.len() + 1 == sizes.len()
            && net.layers.iter().zip(sizes.windows(2)).all(|(l, w)| {
                l.cols == w[0] && l.rows == w[1] && l.weights.len() == l.rows * l.cols && l.bias.len() == l.rows
            });
        if !shapes_ok {
            return Err(Error::invalid("stored layers do not match the network spec"));
        }
        Ok(net)
    }
}

/// `[Re S_0 .. Re S_{n-1}, Im S_0 .. Im S_{n-1}]`.
pub fn input_vector(spectrum: &Spectrum) -> Vec<f64> {
    let c = spectrum.coefficients();
    c.iter().map(|z| z.re).chain(c.iter().map(|z| z.im)).collect()
}

/// Predicted coefficient for one speaker spectrum.
pub fn forward(net: &Network, speaker: &Spectrum) -> Result<PropagationCoefficient> {
    if 2 * speaker.len() != net.layers[0].cols {
        return Err(Error::invalid(format!(
            "network expects {} bins, spectrum has {}",
            net.n_bins(),
            speaker.len()
        )));
    }
    let out = net.forward_vector(&input_vector(speaker))?;
    let n = speaker.len();
    PropagationCoefficient::new(out[..n].to_vec(), out[n..].to_vec(), speaker.angular_frequencies().to_vec())
}
