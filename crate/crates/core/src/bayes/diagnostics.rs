//! Convergence diagnostics over multiple chains.
//!
//! Both statistics work on split chains: every chain is cut into a first and
//! a second half (the middle draw of an odd-length chain is dropped), which
//! also exposes drift inside a single chain.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::trace::{ParameterIndex, PosteriorTrace};
use crate::error::{Error, Result};
use crate::stats;

/// Shortest chain accepted by the effective-sample-size estimators.
pub const MIN_ESS_LENGTH: usize = 8;

fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

fn check_rectangular(chains: &[Vec<f64>]) -> Result<usize> {
    let n = chains.first().map_or(0, Vec::len);
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("chains must have equal length"));
    }
    if chains.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("chains contain non-finite values"));
    }
    Ok(n)
}

/// Split potential scale reduction factor.
///
/// With `m` half-chains of length `n`, within-chain variance `W` and
/// between-chain variance `B`, returns `sqrt(((n-1)/n W + B/n) / W)`.
/// When `W = 0` the result is 1 if the chains agree and infinite otherwise.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::invalid("split-Rhat needs at least two chains"));
    }
    let len = check_rectangular(chains)?;
    if len < 4 {
        return Err(Error::invalid("split-Rhat needs chains of length >= 4"));
    }
    let halves = split_chains(chains);
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|c| stats::mean(c)).collect();
    let w = stats::mean(&halves.iter().map(|c| stats::sample_var(c)).collect::<Vec<_>>());
    let b_over_n = stats::sample_var(&means);
    if w == 0.0 {
        return Ok(if b_over_n == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok((((n - 1.0) / n * w + b_over_n) / w).sqrt())
}

/// Biased autocovariance `(1/n) sum_t (x_t - m)(x_{t+k} - m)` for every lag.
fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = stats::mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(v - m, 0.0)).collect();
    buf.resize(size, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    buf[..n].iter().map(|c| c.re / (size as f64 * n as f64)).collect()
}

/// Multi-chain effective sample size of the given chains (no splitting),
/// with Geyer's initial positive and monotone sequence truncation of the
/// summed autocorrelations. Returns 0 when the draws have no variance.
fn ess_chains(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let nf = n as f64;
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c)).collect();
    let means: Vec<f64> = chains.iter().map(|c| stats::mean(c)).collect();
    let mean_var = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).sum::<f64>() / m as f64;
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += stats::sample_var(&means);
    }
    if !(var_plus > 0.0) {
        return 0.0;
    }
    let rho = |t: usize| 1.0 - (mean_var - acov.iter().map(|a| a[t]).sum::<f64>() / m as f64) / var_plus;

    // Pair sums rho_{2k} + rho_{2k+1}, kept while positive and forced non-increasing.
    let total = (m * n) as f64;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / total.log10());
    total / tau
}

fn check_ess_input(chains: &[Vec<f64>]) -> Result<()> {
    if chains.is_empty() {
        return Err(Error::invalid("no chains"));
    }
    let len = check_rectangular(chains)?;
    if len < MIN_ESS_LENGTH {
        return Err(Error::invalid(format!("chains must have at least {MIN_ESS_LENGTH} draws, got {len}")));
    }
    Ok(())
}

/// Effective sample size of the raw draws over split chains.
pub fn ess_bulk(chains: &[Vec<f64>]) -> Result<f64> {
    check_ess_input(chains)?;
    Ok(ess_chains(&split_chains(chains)))
}

/// Minimum effective sample size of the indicator sequences `x <= q05` and
/// `x <= q95`, with quantiles taken over all pooled draws.
pub fn ess_tail_chains(chains: &[Vec<f64>]) -> Result<f64> {
    check_ess_input(chains)?;
    let pooled = chains.concat();
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let split = split_chains(chains);
    let mut best = f64::INFINITY;
    for p in [0.05, 0.95] {
        let q = stats::quantile_sorted(&sorted, p);
        let ind: Vec<Vec<f64>> =
            split.iter().map(|c| c.iter().map(|&x| if x <= q { 1.0 } else { 0.0 }).collect()).collect();
        best = best.min(ess_chains(&ind));
    }
    Ok(best)
}

pub fn gelman_rubin(trace: &PosteriorTrace, p: ParameterIndex) -> Result<f64> {
    split_rhat(&trace.parameter_chains(p)?)
}

pub fn ess_tail(trace: &PosteriorTrace, p: ParameterIndex) -> Result<f64> {
    ess_tail_chains(&trace.parameter_chains(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(seed: u64, n: usize, mean: f64) -> Vec<f64> {
        let mut r = seeded(seed);
        (0..n).map(|_| mean + Distribution::<f64>::sample(&StandardNormal, &mut r)).collect()
    }

    fn ar1(seed: u64, n: usize, rho: f64) -> Vec<f64> {
        let mut r = seeded(seed);
        let z: f64 = StandardNormal.sample(&mut r);
        let mut x = z / (1.0 - rho * rho).sqrt();
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut r);
            x = rho * x + e;
            v.push(x);
        }
        v
    }

    #[test]
    fn autocovariance_matches_direct_sum() {
        let x = gaussian(1, 37, 0.3);
        let m = stats::mean(&x);
        let fast = autocovariance(&x);
        for k in 0..x.len() {
            let direct: f64 = (0..x.len() - k).map(|t| (x[t] - m) * (x[t + k] - m)).sum::<f64>() / x.len() as f64;
            assert!((fast[k] - direct).abs() < 1e-12, "lag {k}");
        }
    }

    #[test]
    fn rhat_constant_chains_is_one() {
        assert_eq!(split_rhat(&[vec![2.0; 100], vec![2.0; 100]]).unwrap(), 1.0);
        assert!(split_rhat(&[vec![1.0; 100], vec![2.0; 100]]).unwrap().is_infinite());
    }

    #[test]
    fn rhat_same_distribution_near_one() {
        let r = split_rhat(&[gaussian(2, 1000, 0.0), gaussian(3, 1000, 0.0)]).unwrap();
        assert!((0.99..=1.05).contains(&r), "rhat {r}");
    }

    #[test]
    fn rhat_separated_chains_large() {
        let r = split_rhat(&[gaussian(4, 1000, 0.0), gaussian(5, 1000, 10.0)]).unwrap();
        assert!(r > 1.2, "rhat {r}");
    }

    #[test]
    fn rhat_oracle_by_hand() {
        // Halves: [0,2] [4,6] [1,1] [3,5]; n=2, means 1,5,1,4; variances 2,2,0,2.
        let chains = vec![vec![0.0, 2.0, 4.0, 6.0], vec![1.0, 1.0, 3.0, 5.0]];
        let w = 1.5;
        let means: [f64; 4] = [1.0, 5.0, 1.0, 4.0];
        let mm = 11.0 / 4.0;
        let b_over_n = means.iter().map(|x| (x - mm) * (x - mm)).sum::<f64>() / 3.0;
        let expected = ((0.5 * w + b_over_n) / w).sqrt();
        assert!((split_rhat(&chains).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn rhat_needs_two_chains() {
        assert!(split_rhat(&[gaussian(6, 100, 0.0)]).is_err());
    }

    #[test]
    fn tail_ess_iid_is_near_length() {
        let e = ess_tail_chains(&[gaussian(7, 1000, 0.0)]).unwrap();
        assert!((500.0..=1500.0).contains(&e), "ess {e}");
    }

    #[test]
    fn tail_ess_constant_is_zero() {
        assert_eq!(ess_tail_chains(&[vec![3.0; 100]]).unwrap(), 0.0);
    }

    #[test]
    fn ar1_bulk_ess_matches_closed_form() {
        let n = 4000;
        let rho = 0.9;
        let expected = n as f64 * (1.0 - rho) / (1.0 + rho);
        let bulk = ess_bulk(&[ar1(8, n, rho)]).unwrap();
        assert!(bulk > expected / 2.0 && bulk < expected * 2.0, "bulk {bulk} vs {expected}");
    }

    /// `P(X <= h, Y <= h)` for standard bivariate normals with correlation `r`,
    /// via Plackett's identity `d/dr Phi2 = phi2` integrated from 0.
    fn orthant(h: f64, r: f64, p: f64) -> f64 {
        let steps = 2000;
        let dens = |t: f64| (-h * h / (1.0 + t)).exp() / (2.0 * std::f64::consts::PI * (1.0 - t * t).sqrt());
        let w = r / steps as f64;
        let mut acc = 0.5 * (dens(0.0) + dens(r));
        for k in 1..steps {
            acc += dens(k as f64 * w);
        }
        p * p + acc * w
    }

    #[test]
    fn ar1_tail_ess_matches_indicator_autocorrelation() {
        let n = 4000;
        let rho: f64 = 0.9;
        // Indicator of the 5% quantile of the stationary N(0, 1/(1-rho^2)) law.
        let h = -1.644_853_626_951_472_2;
        let p = 0.05;
        let mut tau = 1.0;
        for k in 1..400 {
            let c = (orthant(h, rho.powi(k), p) - p * p) / (p * (1.0 - p));
            tau += 2.0 * c;
        }
        let expected = n as f64 / tau;
        let tail = ess_tail_chains(&[ar1(9, n, rho)]).unwrap();
        assert!(tail > expected / 1.5 && tail < expected * 1.5, "tail {tail} vs {expected}");
    }

    #[test]
    fn short_chain_rejected() {
        assert!(ess_tail_chains(&[vec![1.0, 2.0, 3.0]]).is_err());
        assert!(ess_bulk(&[vec![1.0; 7]]).is_err());
    }
}
