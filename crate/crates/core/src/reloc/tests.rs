use super::*;
use crate::bayes::PosteriorTrace;
use crate::error::Error;
use crate::spectral::{angular_grid, Spectrum};
use crate::synth::{self, GammaProfile, SpeakerKind};
use crate::wavemodel::PropagationCoefficient;

fn pair(dx: f64, noise: f64, seed: u64) -> (Spectrum, Spectrum, PropagationCoefficient) {
    let (n, fs) = (64, 2000);
    let grid = angular_grid(n, fs);
    let gamma = synth::make_gamma(&GammaProfile::default(), &grid).unwrap();
    let s = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 1.0, 5, [0.0; 3]).unwrap();
    let (sp, rc) = synth::simulate_pair(&s, &gamma, dx, noise, seed).unwrap();
    (sp, rc, gamma)
}

/// Trace whose every sample equals `gamma`, optionally with alpha jittered per draw.
fn trace_around(gamma: &PropagationCoefficient, n_kept: usize, jitter: f64) -> PosteriorTrace {
    let chain = |c: usize| -> Vec<Vec<f64>> {
        (0..n_kept)
            .map(|t| {
                let shift = jitter * (((t * 7 + c * 3) % 11) as f64 - 5.0) / 5.0;
                gamma.alpha().iter().map(|a| a * (1.0 + shift)).collect()
            })
            .collect()
    };
    PosteriorTrace::from_parts(
        vec![chain(0), chain(1)],
        vec![vec![gamma.kappa().to_vec(); n_kept]; 2],
        vec![vec![0.01; n_kept]; 2],
        vec![0.5, 0.5],
        gamma.angular_frequencies().to_vec(),
        true,
        Vec::new(),
    )
}

#[test]
fn noise_free_magnitude_inversion_is_exact() {
    let (sp, rc, gamma) = pair(0.943, 0.0, 1);
    let est = estimate_distance(&sp, &rc, &gamma, DistanceMode::MagnitudeOnly).unwrap();
    assert_eq!(est.n_bins_used, 64);
    assert!(est.per_bin.iter().all(|d| (d - 0.943).abs() < 1e-12));
    assert!(est.std < 1e-12);
    assert!((est.mode - 0.943).abs() < 1e-9);
}

#[test]
fn complex_mode_recovers_short_range() {
    // Short enough that |kappa * dx| < pi on every bin, so no branch is crossed.
    let (sp, rc, gamma) = pair(0.05, 0.0, 1);
    let est = estimate_distance(&sp, &rc, &gamma, DistanceMode::ComplexRealPart).unwrap();
    assert!((est.mean - 0.05).abs() < 1e-12, "{}", est.mean);
}

#[test]
fn identical_spectra_give_zero_distance() {
    let (sp, _, gamma) = pair(1.0, 0.0, 1);
    for mode in [DistanceMode::MagnitudeOnly, DistanceMode::ComplexRealPart] {
        let est = estimate_distance(&sp, &sp, &gamma, mode).unwrap();
        assert_eq!(est.mean, 0.0);
    }
}

#[test]
fn all_masked_is_degenerate() {
    let (sp, rc, gamma) = pair(1.0, 0.0, 1);
    let zero = PropagationCoefficient::zeros(gamma.angular_frequencies());
    let err = estimate_distance(&sp, &rc, &zero, DistanceMode::MagnitudeOnly).unwrap_err();
    assert!(matches!(err, Error::Degenerate(_)));
}

#[test]
fn report_mirrors_estimate() {
    let (sp, rc, gamma) = pair(0.5, 0.01, 2);
    let est = estimate_distance(&sp, &rc, &gamma, DistanceMode::MagnitudeOnly).unwrap();
    let r = est.report();
    assert_eq!((r.mean, r.mode, r.std, r.n_bins_used), (est.mean, est.mode, est.std, est.n_bins_used));
    let json = serde_json::to_value(r).unwrap();
    assert_eq!(json["mode_flag"], "magnitude_only");
}

#[test]
fn degenerate_posterior_matches_point_estimate() {
    let (sp, rc, gamma) = pair(0.943, 0.01, 3);
    let point = estimate_distance(&sp, &rc, &gamma, DistanceMode::MagnitudeOnly).unwrap();
    let trace = trace_around(&gamma, 50, 0.0);
    let pooled = propagate_uncertainty(&sp, &rc, &trace, 20, DistanceMode::MagnitudeOnly, 7).unwrap();
    assert!((pooled.mean - point.mean).abs() < 1e-12);
    // Same values repeated: only the sample-size correction differs.
    let (m, k) = (point.per_bin.len() as f64, 20.0 * point.per_bin.len() as f64);
    let expected = point.std * ((m - 1.0) / m * k / (k - 1.0)).sqrt();
    assert!((pooled.std - expected).abs() < 1e-9 * expected.max(1.0));
}

#[test]
fn wider_posterior_has_larger_spread() {
    let (sp, rc, gamma) = pair(0.943, 0.01, 3);
    let narrow = propagate_uncertainty(&sp, &rc, &trace_around(&gamma, 50, 0.0), 40, DistanceMode::MagnitudeOnly, 1).unwrap();
    let wide = propagate_uncertainty(&sp, &rc, &trace_around(&gamma, 50, 0.2), 40, DistanceMode::MagnitudeOnly, 1).unwrap();
    assert!(wide.std >= narrow.std, "{} < {}", wide.std, narrow.std);
}

#[test]
fn propagation_is_seeded() {
    let (sp, rc, gamma) = pair(0.943, 0.01, 3);
    let trace = trace_around(&gamma, 50, 0.1);
    let a = propagate_uncertainty(&sp, &rc, &trace, 10, DistanceMode::MagnitudeOnly, 4).unwrap();
    let b = propagate_uncertainty(&sp, &rc, &trace, 10, DistanceMode::MagnitudeOnly, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_trace_or_zero_draws_rejected() {
    let (sp, rc, gamma) = pair(0.943, 0.0, 3);
    let empty = trace_around(&gamma, 0, 0.0);
    assert!(matches!(
        propagate_uncertainty(&sp, &rc, &empty, 5, DistanceMode::MagnitudeOnly, 0),
        Err(Error::InvalidInput(_))
    ));
    let trace = trace_around(&gamma, 5, 0.0);
    assert!(propagate_uncertainty(&sp, &rc, &trace, 0, DistanceMode::MagnitudeOnly, 0).is_err());
}

fn exact_anchors(points: &[Vec<f64>], target: &[f64]) -> Vec<Anchor> {
    points
        .iter()
        .map(|p| {
            let d = p.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            Anchor::new(p.clone(), d)
        })
        .collect()
}

#[test]
fn planar_fix_from_three_anchors() {
    let anchors = exact_anchors(&[vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]], &[3.0, 4.0]);
    let fix = trilaterate(&anchors, &TrilaterationConfig::default()).unwrap();
    assert!((fix.position[0] - 3.0).abs() < 1e-6 && (fix.position[1] - 4.0).abs() < 1e-6);
    assert!(fix.residual < 1e-9);
    assert!(!fix.used_multistart);
}

#[test]
fn duplicated_anchor_is_harmless() {
    let mut anchors = exact_anchors(&[vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]], &[3.0, 4.0]);
    anchors.push(anchors[1].clone());
    let fix = trilaterate(&anchors, &TrilaterationConfig::default()).unwrap();
    assert!((fix.position[0] - 3.0).abs() < 1e-6 && (fix.position[1] - 4.0).abs() < 1e-6);
}

#[test]
fn spatial_fix_from_four_anchors() {
    let target = [1.5, -0.5, 2.0];
    let anchors = exact_anchors(
        &[vec![0.0, 0.0, 0.0], vec![5.0, 0.0, 0.0], vec![0.0, 5.0, 0.0], vec![0.0, 0.0, 5.0]],
        &target,
    );
    let fix = trilaterate(&anchors, &TrilaterationConfig::default()).unwrap();
    for (p, t) in fix.position.iter().zip(target) {
        assert!((p - t).abs() < 1e-6);
    }
    assert!(fix.residual < 1e-9);
}

#[test]
fn degenerate_geometry_rejected() {
    let collinear = exact_anchors(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]], &[3.0, 4.0]);
    assert!(matches!(trilaterate(&collinear, &TrilaterationConfig::default()), Err(Error::InvalidInput(_))));
    let coplanar = exact_anchors(
        &[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]],
        &[0.2, 0.3, 1.0],
    );
    assert!(matches!(trilaterate(&coplanar, &TrilaterationConfig::default()), Err(Error::InvalidInput(_))));
    let two = exact_anchors(&[vec![0.0, 0.0], vec![1.0, 0.0]], &[0.5, 0.5]);
    assert!(matches!(trilaterate(&two, &TrilaterationConfig::default()), Err(Error::InvalidInput(_))));
    let mixed = vec![Anchor::new(vec![0.0, 0.0], 1.0), Anchor::new(vec![0.0, 0.0, 1.0], 1.0), Anchor::new(vec![1.0, 0.0], 1.0)];
    assert!(trilaterate(&mixed, &TrilaterationConfig::default()).is_err());
}

#[test]
fn covariance_proxy_scales_with_range_spread() {
    let mut anchors = exact_anchors(&[vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]], &[3.0, 4.0]);
    for a in &mut anchors {
        a.distance_std = Some(0.1);
    }
    let small = trilaterate(&anchors, &TrilaterationConfig::default()).unwrap().covariance_proxy;
    for a in &mut anchors {
        a.distance_std = Some(0.2);
    }
    let large = trilaterate(&anchors, &TrilaterationConfig::default()).unwrap().covariance_proxy;
    for (s, l) in small.iter().zip(&large) {
        assert!(*s > 0.0 && (l / s - 2.0).abs() < 1e-9);
    }
}

#[test]
fn anchor_from_estimate_takes_mean_and_std() {
    let (sp, rc, gamma) = pair(0.943, 0.01, 3);
    let est = estimate_distance(&sp, &rc, &gamma, DistanceMode::MagnitudeOnly).unwrap();
    let a = Anchor::from_estimate(vec![0.0, 0.0], &est);
    assert_eq!((a.distance, a.distance_std), (est.mean, Some(est.std)));
}
