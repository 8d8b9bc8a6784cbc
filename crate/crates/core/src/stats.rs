//! Small descriptive-statistics helpers shared by the posterior summaries
//! and the distance estimators.

/// Upper bound on histogram bins, guards against tiny IQR with a wide range.
const MAX_HISTOGRAM_BINS: usize = 10_000;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator; 0 for a single value.
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 || xs.iter().all(|&x| x == xs[0]) {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_var(xs: &[f64]) -> f64 {
    let s = sample_std(xs);
    s * s
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

/// Histogram mode: midpoint of the tallest bin, with bin width chosen by the
/// Freedman-Diaconis rule `2 IQR n^(-1/3)`. Falls back to Sturges' bin count
/// when the IQR vanishes but the range does not. Ties go to the lowest bin.
pub fn histogram_mode(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[0];
    let hi = sorted[n - 1];
    let range = hi - lo;
    if range <= 0.0 {
        return lo;
    }
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let bins = if width > 0.0 {
        ((range / width).ceil() as usize).clamp(1, MAX_HISTOGRAM_BINS)
    } else {
        ((n as f64).log2().ceil() as usize + 1).max(1)
    };
    let width = range / bins as f64;

    let mut counts = vec![0usize; bins];
    for &x in &sorted {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    lo + (best as f64 + 0.5) * width
}
