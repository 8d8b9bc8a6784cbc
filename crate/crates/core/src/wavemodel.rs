//! The propagation coefficient `gamma(omega) = alpha(omega) + i kappa(omega)`
//! and the single-direction frequency-domain wave solution built on it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ensure_grids_match, mirror_bin, Spectrum};

/// Divisions by `|kappa|` or `|gamma|` below this are treated as undefined.
pub const EPS_DIV: f64 = 1e-12;

/// Largest exponent whose `exp` is still finite in `f64`.
const MAX_EXP: f64 = 709.782_712_893_384;

/// Per-frequency attenuation `alpha` (Np/m) and wave number `kappa` (rad/m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoefficient")]
pub struct PropagationCoefficient {
    alpha: Vec<f64>,
    kappa: Vec<f64>,
    angular_frequencies: Vec<f64>,
}

#[derive(Deserialize)]
struct RawCoefficient {
    alpha: Vec<f64>,
    kappa: Vec<f64>,
    angular_frequencies: Vec<f64>,
}

impl TryFrom<RawCoefficient> for PropagationCoefficient {
    type Error = Error;

    fn try_from(raw: RawCoefficient) -> Result<Self> {
        PropagationCoefficient::new(raw.alpha, raw.kappa, raw.angular_frequencies)
    }
}

impl PropagationCoefficient {
    pub fn new(alpha: Vec<f64>, kappa: Vec<f64>, angular_frequencies: Vec<f64>) -> Result<Self> {
        if alpha.len() != kappa.len() || alpha.len() != angular_frequencies.len() {
            return Err(Error::invalid(format!(
                "alpha, kappa and grid lengths differ ({}, {}, {})",
                alpha.len(),
                kappa.len(),
                angular_frequencies.len()
            )));
        }
        if alpha.is_empty() {
            return Err(Error::invalid("propagation coefficient has no bins"));
        }
        for (name, v) in [("alpha", &alpha), ("kappa", &kappa), ("omega", &angular_frequencies)] {
            if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("{name} at bin {j} is not finite")));
            }
        }
        Ok(Self {
            alpha,
            kappa,
            angular_frequencies,
        })
    }

    /// Like [`new`](Self::new) but additionally requires `alpha >= 0`.
    pub fn new_nonnegative(
        alpha: Vec<f64>,
        kappa: Vec<f64>,
        angular_frequencies: Vec<f64>,
    ) -> Result<Self> {
        if let Some(j) = alpha.iter().position(|&a| a < 0.0) {
            return Err(Error::invalid(format!("alpha at bin {j} is negative ({})", alpha[j])));
        }
        Self::new(alpha, kappa, angular_frequencies)
    }

    pub fn zeros(angular_frequencies: &[f64]) -> Self {
        let n = angular_frequencies.len();
        Self {
            alpha: vec![0.0; n],
            kappa: vec![0.0; n],
            angular_frequencies: angular_frequencies.to_vec(),
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn angular_frequencies(&self) -> &[f64] {
        &self.angular_frequencies
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn gamma(&self, j: usize) -> Complex64 {
        Complex64::new(self.alpha[j], self.kappa[j])
    }
}

/// `exp(sign * gamma_j * delta_x)` for every bin, failing on overflow.
pub(crate) fn exp_factors(
    gamma: &PropagationCoefficient,
    delta_x: f64,
    sign: f64,
) -> Result<Vec<Complex64>> {
    (0..gamma.len())
        .map(|j| {
            let exponent = sign * gamma.gamma(j) * delta_x;
            if exponent.re > MAX_EXP {
                return Err(Error::Overflow {
                    bin: j,
                    detail: format!("exp({:.6e}) exceeds f64 range", exponent.re),
                });
            }
            Ok(exponent.exp())
        })
        .collect()
}

fn apply_factors(input: &Spectrum, factors: &[Complex64], delta_x: f64) -> Result<Spectrum> {
    let mut out = Vec::with_capacity(input.len());
    for (j, (c, f)) in input.coefficients().iter().zip(factors).enumerate() {
        let v = c * f;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Overflow {
                bin: j,
                detail: "propagated coefficient is not finite".into(),
            });
        }
        out.push(v);
    }
    let mut position = input.position();
    position[0] += delta_x;
    Ok(input.replaced(out, position))
}

/// Forward solution: every bin is multiplied by `exp(-gamma_j delta_x)`.
///
/// The output position is the input position with its x coordinate advanced
/// by `delta_x`; only the scalar distance enters the physics.
pub fn propagate(input: &Spectrum, gamma: &PropagationCoefficient, delta_x: f64) -> Result<Spectrum> {
    ensure_grids_match(input.angular_frequencies(), gamma.angular_frequencies(), "propagate")?;
    let factors = exp_factors(gamma, delta_x, -1.0)?;
    apply_factors(input, &factors, delta_x)
}

/// Backward solution: every bin is multiplied by `exp(+gamma_j delta_x)`.
pub fn propagate_inverse(
    output: &Spectrum,
    gamma: &PropagationCoefficient,
    delta_x: f64,
) -> Result<Spectrum> {
    ensure_grids_match(
        output.angular_frequencies(),
        gamma.angular_frequencies(),
        "propagate_inverse",
    )?;
    let factors = exp_factors(gamma, delta_x, 1.0)?;
    apply_factors(output, &factors, -delta_x)
}

/// Left-hand side of the spectral wave equation for a one-direction wave,
/// `(alpha^2 + 2 i alpha kappa) P_j exp(-gamma_j delta_x)` per bin.
pub fn wave_equation_residual(
    spectrum: &Spectrum,
    gamma: &PropagationCoefficient,
    delta_x: f64,
) -> Result<Vec<Complex64>> {
    ensure_grids_match(
        spectrum.angular_frequencies(),
        gamma.angular_frequencies(),
        "wave_equation_residual",
    )?;
    Ok(spectrum
        .coefficients()
        .iter()
        .enumerate()
        .map(|(j, &p)| residual_term(gamma.alpha[j], gamma.kappa[j], p, delta_x))
        .collect())
}

pub(crate) fn residual_term(alpha: f64, kappa: f64, p: Complex64, delta_x: f64) -> Complex64 {
    let factor = Complex64::new(alpha * alpha, 2.0 * alpha * kappa);
    factor * p * (-Complex64::new(alpha, kappa) * delta_x).exp()
}

/// How far `alpha` is from even and `kappa` from odd symmetry in `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub alpha_evenness_error: f64,
    pub kappa_oddness_error: f64,
}

pub fn symmetry_report(gamma: &PropagationCoefficient) -> Result<SymmetryReport> {
    let w = &gamma.angular_frequencies;
    let n = w.len();
    let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for j in 0..n {
        let m = mirror_bin(j, n);
        if m == j {
            continue;
        }
        if (w[j] + w[m]).abs() > 1e-9 * scale {
            return Err(Error::invalid(format!(
                "grid is not symmetric: omega[{j}] = {} but omega[{m}] = {}",
                w[j], w[m]
            )));
        }
    }
    let mut even = 0.0f64;
    let mut odd = 0.0f64;
    for j in 0..n {
        let m = mirror_bin(j, n);
        even = even.max((gamma.alpha[j] - gamma.alpha[m]).abs());
        if m != j {
            odd = odd.max((gamma.kappa[j] + gamma.kappa[m]).abs());
        }
    }
    Ok(SymmetryReport {
        alpha_evenness_error: even,
        kappa_oddness_error: odd,
    })
}

/// Phase speed `|omega| / |kappa|`; `None` where `|kappa| <= EPS_DIV`.
pub fn wave_speed(gamma: &PropagationCoefficient) -> Vec<Option<f64>> {
    gamma
        .angular_frequencies
        .iter()
        .zip(&gamma.kappa)
        .map(|(w, k)| (k.abs() > EPS_DIV).then(|| w.abs() / k.abs()))
        .collect()
}
