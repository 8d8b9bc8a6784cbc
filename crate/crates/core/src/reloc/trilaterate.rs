use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::distance::DistanceEstimate;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Known position with a measured range to the unknown point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// Two or three coordinates, in meters.
    pub position: Vec<f64>,
    pub distance: f64,
    /// Spread of the range measurement, used to weight the covariance proxy.
    #[serde(default)]
    pub distance_std: Option<f64>,
}

impl Anchor {
    pub fn new(position: Vec<f64>, distance: f64) -> Self {
        Self { position, distance, distance_std: None }
    }

    /// Range taken as the estimate's mean, spread as its std.
    pub fn from_estimate(position: Vec<f64>, estimate: &DistanceEstimate) -> Self {
        Self { position, distance: estimate.mean, distance_std: Some(estimate.std) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionFix {
    pub position: Vec<f64>,
    /// Root-mean-square range residual at the fix, in meters.
    pub residual: f64,
    /// Per-axis standard deviation from the linearized range model.
    pub covariance_proxy: Vec<f64>,
    pub iterations: usize,
    /// Whether the multistart fallback produced the fix.
    pub used_multistart: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrilaterationConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the step length relative to the anchor spread.
    pub step_tolerance: f64,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for TrilaterationConfig {
    fn default() -> Self {
        Self { max_iterations: 100, step_tolerance: 1e-12, n_starts: 8, seed: 0 }
    }
}

struct Problem {
    anchors: Vec<DVector<f64>>,
    ranges: Vec<f64>,
    dim: usize,
    scale: f64,
}

impl Problem {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.anchors.len(), self.anchors.iter().zip(&self.ranges).map(|(a, d)| (p - a).norm() - d))
    }

    fn cost(&self, p: &DVector<f64>) -> f64 {
        self.residuals(p).norm_squared()
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.anchors.len(), self.dim);
        for (k, a) in self.anchors.iter().enumerate() {
            let diff = p - a;
            let norm = diff.norm();
            if norm > 0.0 {
                j.row_mut(k).copy_from(&(diff / norm).transpose());
            }
        }
        j
    }
}

enum Outcome {
    Converged(DVector<f64>, usize),
    Stalled(DVector<f64>),
}

/// Damped Gauss-Newton with step halving on cost increase.
fn gauss_newton(problem: &Problem, start: DVector<f64>, cfg: &TrilaterationConfig) -> Outcome {
    let mut p = start;
    let mut cost = problem.cost(&p);
    for it in 0..cfg.max_iterations {
        let r = problem.residuals(&p);
        let j = problem.jacobian(&p);
        let svd = (j.transpose() * &j).svd(true, true);
        let Ok(step) = svd.solve(&(j.transpose() * &r), 1e-14) else {
            return Outcome::Stalled(p);
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand = &p - &step * t;
            let c = problem.cost(&cand);
            if c.is_finite() && c <= cost {
                p = cand;
                cost = c;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        let step_len = step.norm() * t;
        if !moved || step_len <= cfg.step_tolerance * problem.scale {
            // A vanishing step at a point with a nonzero gradient is a stall, not convergence.
            let grad = j.transpose() * problem.residuals(&p);
            let ok = grad.norm() <= 1e-6 * problem.scale.max(1.0) * (1.0 + cost.sqrt());
            return if ok { Outcome::Converged(p, it + 1) } else { Outcome::Stalled(p) };
        }
    }
    Outcome::Stalled(p)
}

/// Least-squares intersection of spheres (circles in 2D) around the anchors.
///
/// Starts from the linearized solution obtained by subtracting the first
/// range equation from the others, refines with Gauss-Newton, and retries
/// from seeded starts in the anchor bounding box if that stalls.
pub fn trilaterate(anchors: &[Anchor], cfg: &TrilaterationConfig) -> Result<PositionFix> {
    let dim = anchors.first().map_or(0, |a| a.position.len());
    if !(dim == 2 || dim == 3) {
        return Err(Error::invalid("anchors must have 2 or 3 coordinates"));
    }
    if anchors.iter().any(|a| a.position.len() != dim) {
        return Err(Error::invalid("anchors mix 2D and 3D positions"));
    }
    if anchors.len() < dim + 1 {
        return Err(Error::invalid(format!(
            "{dim}D trilateration needs at least {} anchors, got {}",
            dim + 1,
            anchors.len()
        )));
    }
    if anchors.iter().any(|a| !(a.distance >= 0.0 && a.distance.is_finite()) || a.position.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("anchor positions and distances must be finite, distances >= 0"));
    }

    let pts: Vec<DVector<f64>> = anchors.iter().map(|a| DVector::from_vec(a.position.clone())).collect();
    let ranges: Vec<f64> = anchors.iter().map(|a| a.distance).collect();
    let origin = pts[0].clone();
    let diffs = DMatrix::from_fn(pts.len() - 1, dim, |r, c| pts[r + 1][c] - origin[c]);
    let scale = diffs.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let sv = diffs.clone().svd(false, false).singular_values;
    if scale == 0.0 || sv.iter().filter(|&&s| s > 1e-9 * scale).count() < dim {
        return Err(Error::invalid(if dim == 2 {
            "anchors are collinear"
        } else {
            "anchors are coplanar"
        }));
    }

    // |p - p_k|^2 - |p - p_0|^2 = d_k^2 - d_0^2, linear in p relative to p_0.
    let rhs = DVector::from_fn(pts.len() - 1, |r, _| {
        0.5 * ((&pts[r + 1] - &origin).norm_squared() - ranges[r + 1].powi(2) + ranges[0].powi(2))
    });
    let start = diffs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Degenerate(format!("linearized solve failed: {e}")))?
        + &origin;

    let problem = Problem { anchors: pts, ranges, dim, scale };
    let finish = |p: DVector<f64>, iterations: usize, used_multistart: bool| {
        let covariance_proxy = covariance_proxy(&problem, &p, anchors);
        let rms = (problem.cost(&p) / problem.anchors.len() as f64).sqrt();
        PositionFix { position: p.iter().copied().collect(), residual: rms, covariance_proxy, iterations, used_multistart }
    };

    let mut best_residual = f64::INFINITY;
    match gauss_newton(&problem, start, cfg) {
        Outcome::Converged(p, it) => return Ok(finish(p, it, false)),
        Outcome::Stalled(p) => best_residual = best_residual.min(problem.cost(&p)),
    }

    let lo: Vec<f64> = (0..dim).map(|c| problem.anchors.iter().map(|a| a[c]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..dim).map(|c| problem.anchors.iter().map(|a| a[c]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut rng = seeded(cfg.seed);
    let mut best: Option<(DVector<f64>, usize, f64)> = None;
    for _ in 0..cfg.n_starts {
        let s = DVector::from_fn(dim, |c, _| if hi[c] > lo[c] { rng.random_range(lo[c]..hi[c]) } else { lo[c] });
        match gauss_newton(&problem, s, cfg) {
            Outcome::Converged(p, it) => {
                let c = problem.cost(&p);
                if best.as_ref().is_none_or(|b| c < b.2) {
                    best = Some((p, it, c));
                }
            }
            Outcome::Stalled(p) => best_residual = best_residual.min(problem.cost(&p)),
        }
    }
    match best {
        Some((p, it, _)) => Ok(finish(p, it, true)),
        None => Err(Error::NoFix { best_residual: (best_residual / problem.anchors.len() as f64).sqrt() }),
    }
}

/// `sqrt(diag((J^T W J)^-1))` with `W` from the anchors' range spreads, or the
/// residual variance when no spreads are given.
fn covariance_proxy(problem: &Problem, p: &DVector<f64>, anchors: &[Anchor]) -> Vec<f64> {
    let j = problem.jacobian(p);
    let m = anchors.len();
    let dof = m.saturating_sub(problem.dim).max(1) as f64;
    let fallback = problem.cost(p) / dof;
    let weights: Vec<f64> = anchors
        .iter()
        .map(|a| match a.distance_std {
            Some(s) if s > 0.0 => 1.0 / (s * s),
            Some(_) => f64::INFINITY,
            None if fallback > 0.0 => 1.0 / fallback,
            None => f64::INFINITY,
        })
        .collect();
    if weights.iter().any(|w| w.is_infinite()) {
        return vec![0.0; problem.dim];
    }
    let w = DMatrix::from_diagonal(&DVector::from_vec(weights));
    let info = j.transpose() * w * &j;
    match info.try_inverse() {
        Some(cov) => (0..problem.dim).map(|c| cov[(c, c)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; problem.dim],
    }
}
