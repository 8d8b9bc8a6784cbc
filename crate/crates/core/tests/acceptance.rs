//! End-to-end acceptance checks. Each test prints one `PASS` or `FAIL` line
//! straight to stdout (visible without `--nocapture`) and then asserts.

use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use wavecoef::bayes::{self, MHConfig, ParameterIndex, PriorSpec};
use wavecoef::cli::{self, RunConfig};
use wavecoef::lsq;
use wavecoef::neural::{self, LossWeights, Network, NetworkSpec, Optimizer, TrainConfig};
use wavecoef::reloc::{estimate_distance, trilaterate, Anchor, DistanceMode, TrilaterationConfig};
use wavecoef::rir::{apply_rir, rir_from_gamma, rir_from_measurements};
use wavecoef::rng::seeded;
use wavecoef::spectral::{self, angular_grid, dft, idft, Signal};
use wavecoef::synth::{self, GammaProfile, NoiseDomain, PairDataset, SpeakerKind};
use wavecoef::wavemodel::{self, symmetry_report, PropagationCoefficient};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

fn verdict(name: &str, ok: bool, detail: String) {
    let line = format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    let _ = writeln!(std::io::stdout(), "{line}");
    assert!(ok, "{line}");
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    let phase = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect()
}

#[test]
fn dft_matches_naive_transform() {
    let start = Instant::now();
    let mut worst_oracle: f64 = 0.0;
    let mut worst_roundtrip: f64 = 0.0;
    let mut worst_parseval: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = seeded(seed);
        for n in 1..=64 {
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let spectrum = dft(&Signal::new(x.clone(), 1000, [0.0; 3]).unwrap()).unwrap();
            let naive = naive_dft(&x);
            let scale = naive.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let err = spectrum.coefficients().iter().zip(&naive).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst_oracle = worst_oracle.max(err / scale);

            let back = idft(&spectrum).unwrap().signal;
            worst_roundtrip = worst_roundtrip.max(max_abs_diff(back.samples(), &x));

            let e_time: f64 = x.iter().map(|v| v * v).sum();
            let e_freq: f64 = spectrum.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
            worst_parseval = worst_parseval.max((e_time - e_freq).abs() / e_time.max(1e-300));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "dft_oracle",
        worst_oracle <= 1e-9 && worst_roundtrip <= 1e-9 && worst_parseval <= 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "relative error vs naive {worst_oracle:.2e}, round trip {worst_roundtrip:.2e}, parseval {worst_parseval:.2e}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn least_squares_recovers_noise_free_coefficient() {
    let start = Instant::now();
    let (n, fs, dx) = (32, 2000, 0.1);
    let truth = synth::make_gamma(&GammaProfile::AirLike, &angular_grid(n, fs)).unwrap();
    let max_phase = truth.kappa().iter().map(|k| (k * dx).abs()).fold(0.0, f64::max);
    assert!(max_phase < std::f64::consts::PI);
    let speaker = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 1.0, 4, [0.0; 3]).unwrap();
    let data = synth::simulate_dataset(&speaker, &truth, &[[dx, 0.0, 0.0]], 0.0, NoiseDomain::Frequency, 0).unwrap();
    let fit = lsq::fit(&data).unwrap();
    let valid = &fit.gamma_rows[0].valid;
    let err = |est: &[f64], tru: &[f64]| {
        (0..n).filter(|&j| valid[j]).map(|j| (est[j] - tru[j]).abs()).fold(0.0, f64::max)
    };
    let (ea, ek) = (err(fit.gamma_mean.alpha(), truth.alpha()), err(fit.gamma_mean.kappa(), truth.kappa()));
    let unmasked = valid.iter().filter(|v| **v).count();
    let elapsed = start.elapsed();
    verdict(
        "least_squares_exact",
        ea <= 1e-9 && ek <= 1e-9 && unmasked > 0 && elapsed < Duration::from_secs(5),
        format!("max alpha error {ea:.2e}, max kappa error {ek:.2e} over {unmasked} bins, {elapsed:.2?}"),
    );
}

#[test]
fn metropolis_hastings_is_calibrated() {
    let start = Instant::now();
    let (n, fs, sigma) = (32, 2000, 0.01);
    let truth = synth::make_gamma(&GammaProfile::default(), &angular_grid(n, fs)).unwrap();
    let speaker = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 1.0, 1, [0.0; 3]).unwrap();
    let data = synth::simulate_dataset(
        &speaker,
        &truth,
        &[[0.05, 0.0, 0.0], [0.0, 0.08, 0.0]],
        0.0,
        NoiseDomain::Frequency,
        2,
    )
    .unwrap();

    // Proposals at 2.4 times the analytic per-bin likelihood width.
    let precision: f64 = data
        .delta_x()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let s2 = data.speaker(i).coefficients()[1].norm_sqr();
            d * d * s2 * ((-2.0 * truth.alpha()[1] * d).exp() + 1.0) / (sigma * sigma)
        })
        .sum();
    let width = precision.sqrt().recip();
    let config = MHConfig {
        proposal_std_alpha: 2.4 * width,
        proposal_std_kappa: 2.4 * width,
        fixed_sigma: Some(sigma),
        seed: 42,
        ..MHConfig::default()
    };
    assert_eq!((config.n_chains, config.n_iterations, config.warmup), (2, 1000, 600));
    let trace = bayes::mh_sample(&data, &PriorSpec::default(), &config).unwrap();
    let summary = bayes::summarize(&trace).unwrap();
    let converged = summary.fraction_converged(1.05, 100.0);
    let covered = (0..n)
        .filter(|&j| {
            let s = summary.get(ParameterIndex::Alpha(j)).unwrap();
            (s.mean - truth.alpha()[j]).abs() <= 3.0 * s.std
        })
        .count() as f64
        / n as f64;
    let elapsed = start.elapsed();
    verdict(
        "mh_calibration",
        converged >= 0.9 && covered >= 0.95 && elapsed < Duration::from_secs(300),
        format!("converged fraction {converged:.3}, alpha coverage {covered:.3}, {elapsed:.2?}"),
    );
}

#[test]
fn neural_gradients_match_finite_differences() {
    let start = Instant::now();
    let (n, fs) = (4, 200);
    let gamma = synth::make_gamma(&GammaProfile::default(), &angular_grid(n, fs)).unwrap();
    let weights = LossWeights { forward: 1.0, backward: 0.7, concentration: 1.3 };
    let h = 1e-5;
    let mut worst_excess = f64::NEG_INFINITY;
    for instance in 0..20u64 {
        let (mut speakers, mut receivers) = (Vec::new(), Vec::new());
        for i in 0..2u64 {
            let s = synth::speaker_signal(SpeakerKind::WhiteNoise, n, fs, 1.0, 100 * instance + i, [0.0; 3]).unwrap();
            let (a, b) = synth::simulate_pair(&s, &gamma, 0.2 + 0.15 * i as f64, 0.05, 7 + 100 * instance + i).unwrap();
            speakers.push(a);
            receivers.push(b);
        }
        let data = PairDataset::new(speakers, receivers).unwrap();
        let net = Network::new(NetworkSpec { layer_sizes: vec![8, 4, 8], ..NetworkSpec::mlp(n, &[], instance) }).unwrap();
        let analytic = neural::gradients(&net, &data, &weights).unwrap().1.flat();
        let mut probe = net.clone();
        for (k, g) in analytic.iter().enumerate() {
            let p = net.parameter(k);
            let total = |probe: &Network| neural::loss(&data, &neural::predict(probe, &data).unwrap(), &weights).unwrap().total;
            probe.set_parameter(k, p + h);
            let up = total(&probe);
            probe.set_parameter(k, p - h);
            let down = total(&probe);
            probe.set_parameter(k, p);
            let numeric = (up - down) / (2.0 * h);
            let tol = f64::max(1e-4, 1e-3 * numeric.abs());
            worst_excess = worst_excess.max((g - numeric).abs() - tol);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "neural_gradient_check",
        worst_excess <= 0.0 && elapsed < Duration::from_secs(30),
        format!("20 instances, worst |analytic - numeric| minus tolerance {worst_excess:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn neural_training_converges_and_generalizes() {
    let start = Instant::now();
    let (n, fs, noise) = (64, 1000, 0.01);
    let truth = synth::make_gamma(&GammaProfile::default(), &angular_grid(n, fs)).unwrap();
    let speaker = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 10.0, 1, [0.0; 3]).unwrap();
    let train_at = [[0.06, 0.0, 0.0], [0.0, 0.09, 0.0], [0.12, 0.0, 0.0], [0.0, 0.0, 0.15]];
    let data = synth::simulate_dataset(&speaker, &truth, &train_at, noise, NoiseDomain::Time, 2).unwrap();
    let config = TrainConfig { epochs: 500, learning_rate: 1e-4, optimizer: Optimizer::Rmsprop, ..TrainConfig::default() };
    let trained = neural::train(&data, &NetworkSpec::mlp(n, &[128, 128], 3), &config).unwrap();
    let ratio = trained.final_loss.total / trained.history[0].total;

    let held_out = [0.0, 0.1, 0.0];
    let clean = synth::simulate_dataset(&speaker, &truth, &[held_out], 0.0, NoiseDomain::Time, 9).unwrap();
    let noisy = synth::simulate_dataset(&speaker, &truth, &[held_out], noise, NoiseDomain::Time, 9).unwrap();
    let gamma = neural::forward(&trained.network, noisy.speaker(0)).unwrap();
    let predicted = wavemodel::propagate(noisy.speaker(0), &gamma, noisy.delta_x()[0]).unwrap();
    let time = |s| idft(s).unwrap().signal;
    let measured = time(noisy.receiver(0));
    let rmse = spectral::rmse(time(&predicted).samples(), measured.samples()).unwrap();
    let floor = spectral::rmse(time(clean.receiver(0)).samples(), measured.samples()).unwrap();
    let elapsed = start.elapsed();
    verdict(
        "neural_training",
        ratio < 0.01 && rmse < 2.0 * floor && elapsed < Duration::from_secs(300),
        format!(
            "final/initial loss {:.3}%, held-out rmse {rmse:.4} vs noise floor {floor:.4} ({:.2}x), {elapsed:.2?}",
            100.0 * ratio,
            rmse / floor
        ),
    );
}

#[test]
fn impulse_response_is_consistent() {
    let (n, fs, dx) = (64, 8000, 0.5);
    let gamma = synth::make_gamma(&GammaProfile::AirLike, &angular_grid(n, fs)).unwrap();
    let mut model_gap: f64 = 0.0;
    let mut conv_gap: f64 = 0.0;
    for seed in 0..5 {
        let speaker = synth::speaker_signal(SpeakerKind::WhiteNoise, n, fs, 1.0, seed, [0.0; 3]).unwrap();
        let (s, r) = synth::simulate_pair(&speaker, &gamma, dx, 0.0, seed).unwrap();
        let model = rir_from_gamma(&gamma, dx).unwrap();
        let measured = rir_from_measurements(&s, &r).unwrap();
        let gap = model
            .frequency_response
            .iter()
            .zip(&measured.frequency_response)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        model_gap = model_gap.max(gap).max(max_abs_diff(&model.time_response, &measured.time_response));
        let rebuilt = apply_rir(&speaker, &measured).unwrap();
        let receiver = idft(&r).unwrap().signal;
        conv_gap = conv_gap.max(max_abs_diff(rebuilt.samples(), receiver.samples()));
    }
    let impulse_exact = (1..=64).all(|m| {
        let g = synth::make_gamma(&GammaProfile::AirLike, &angular_grid(m, fs)).unwrap();
        let h = rir_from_gamma(&g, 0.0).unwrap().time_response;
        h.iter().enumerate().all(|(t, v)| *v == if t == 0 { 1.0 } else { 0.0 })
    });
    verdict(
        "rir_consistency",
        model_gap <= 1e-9 && conv_gap <= 1e-6 && impulse_exact,
        format!("measured vs model {model_gap:.2e}, convolution round trip {conv_gap:.2e}, zero-distance impulse exact: {impulse_exact}"),
    );
}

#[test]
fn distances_in_the_room_scale_regime() {
    let start = Instant::now();
    let (n, fs) = (64, 2000);
    let gamma =
        synth::make_gamma(&GammaProfile::Constant { alpha: 0.2, speed_of_sound: 343.0 }, &angular_grid(n, fs)).unwrap();
    let speaker = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 1.0, 5, [0.0; 3]).unwrap();
    let mut exact = true;
    let mut details = Vec::new();
    let mut noisy_ok = true;
    for truth in [0.943, 7.407] {
        let clean = synth::simulate_dataset(&speaker, &gamma, &[[truth, 0.0, 0.0]], 0.0, NoiseDomain::Frequency, 1).unwrap();
        let est = estimate_distance(clean.speaker(0), clean.receiver(0), &gamma, DistanceMode::MagnitudeOnly).unwrap();
        exact &= (est.mean - truth).abs() <= 1e-9 * truth && est.std < 1e-12;

        let noisy = synth::simulate_dataset(&speaker, &gamma, &[[truth, 0.0, 0.0]], 0.01, NoiseDomain::Frequency, 11).unwrap();
        let est_n = estimate_distance(noisy.speaker(0), noisy.receiver(0), &gamma, DistanceMode::MagnitudeOnly).unwrap();
        let rel = (est_n.mean - truth).abs() / truth;
        noisy_ok &= rel <= 0.05;
        details.push(format!(
            "truth {truth}: noise-free {:.6} (std {:.1e}), noisy {:.4} ({:.2}%)",
            est.mean,
            est.std,
            est_n.mean,
            100.0 * rel
        ));
    }
    let elapsed = start.elapsed();
    verdict(
        "distance_regime",
        exact && noisy_ok && elapsed < Duration::from_secs(60),
        format!("{}; {elapsed:.2?}", details.join("; ")),
    );
}

fn planted_anchors(target: &[f64], anchors: &[Vec<f64>], noise: f64, rng: &mut wavecoef::rng::Rng) -> Vec<Anchor> {
    anchors
        .iter()
        .map(|a| {
            let d = a.iter().zip(target).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let factor = 1.0 + noise * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
            Anchor::new(a.clone(), d * factor)
        })
        .collect()
}

#[test]
fn trilateration_recovers_planted_positions() {
    let cfg = TrilaterationConfig::default();
    let layouts: [(Vec<Vec<f64>>, f64); 2] = [
        (vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 3.0], vec![4.0, 3.0]], 4.0),
        (
            vec![vec![0.0, 0.0, 0.0], vec![4.0, 0.0, 0.0], vec![0.0, 4.0, 0.0], vec![0.0, 0.0, 3.0], vec![4.0, 4.0, 3.0]],
            4.0,
        ),
    ];
    let mut rng = seeded(2024);
    let mut exact_err: f64 = 0.0;
    let mut noisy_worst: f64 = 0.0;
    for (anchors, spacing) in &layouts {
        let dim = anchors[0].len();
        for trial in 0..100 {
            let target: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..2.5)).collect();
            let fix = trilaterate(&planted_anchors(&target, anchors, 0.0, &mut rng), &cfg).unwrap();
            exact_err = exact_err.max(max_abs_diff(&fix.position, &target));

            let noisy = planted_anchors(&target, anchors, 0.01, &mut rng);
            let fix = trilaterate(&noisy, &TrilaterationConfig { seed: trial, ..cfg }).unwrap();
            let err = fix.position.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            noisy_worst = noisy_worst.max(err / spacing);
        }
    }
    verdict(
        "trilateration",
        exact_err <= 1e-6 && noisy_worst <= 0.05,
        format!(
            "exact ranges max error {exact_err:.2e} m, 1% range noise worst error {:.2}% of spacing over 100 trials per layout",
            100.0 * noisy_worst
        ),
    );
}

/// Soft bound for the network's symmetry errors: a tenth of the largest
/// coefficient magnitude it predicts.
fn neural_symmetry_bound(gamma: &PropagationCoefficient) -> f64 {
    0.1 * gamma.alpha().iter().chain(gamma.kappa()).map(|v| v.abs()).fold(0.0, f64::max)
}

#[test]
fn estimates_from_real_signals_are_symmetric() {
    let (n, fs, noise) = (64, 1000, 0.01);
    let truth = synth::make_gamma(&GammaProfile::default(), &angular_grid(n, fs)).unwrap();
    let speaker = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 10.0, 1, [0.0; 3]).unwrap();
    let at = [[0.06, 0.0, 0.0], [0.0, 0.09, 0.0], [0.12, 0.0, 0.0], [0.0, 0.0, 0.15]];
    let data = synth::simulate_dataset(&speaker, &truth, &at, noise, NoiseDomain::Time, 2).unwrap();

    let fit = lsq::fit(&data).unwrap();
    let ls = symmetry_report(&fit.gamma_mean).unwrap();
    let ls_err = ls.alpha_evenness_error.max(ls.kappa_oddness_error);

    let config = TrainConfig { epochs: 500, learning_rate: 1e-4, ..TrainConfig::default() };
    let trained = neural::train(&data, &NetworkSpec::mlp(n, &[128, 128], 3), &config).unwrap();
    let gamma = neural::forward(&trained.network, data.speaker(0)).unwrap();
    let nn = symmetry_report(&gamma).unwrap();
    let nn_err = nn.alpha_evenness_error.max(nn.kappa_oddness_error);
    let bound = neural_symmetry_bound(&gamma);
    verdict(
        "symmetry",
        ls_err <= 1e-9 && nn_err <= bound,
        format!(
            "least squares {ls_err:.2e} (limit 1e-9); network alpha {:.3e}, kappa {:.3e} (soft limit {bound:.3e})",
            nn.alpha_evenness_error, nn.kappa_oddness_error
        ),
    );
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig { seed: 11, out: dir.path().to_path_buf(), ..RunConfig::default() };
    let sim = &mut cfg.simulate;
    sim.n_samples = 33;
    sim.sample_rate = 1000;
    sim.speaker_position = [0.0; 3];
    sim.receiver_positions = vec![[0.05, 0.0, 0.0], [0.0, 0.08, 0.0], [0.1, 0.05, 0.0]];
    sim.gamma = GammaProfile::default();
    cfg.infer_mh.sampler.fixed_sigma = Some(0.01);
    cfg.infer_mh.sampler.proposal_std_alpha = 0.05;
    cfg.infer_mh.sampler.proposal_std_kappa = 0.05;

    let run = |cfg: &RunConfig| {
        cli::cmd_simulate(cfg).unwrap();
        cli::cmd_infer_mh(cfg).unwrap();
        cli::cmd_compare(cfg).unwrap();
        snapshot(&cfg.out)
    };
    let first = run(&cfg);
    let second = run(&cfg);
    let differing: Vec<&str> =
        first.iter().zip(&second).filter(|(a, b)| a.1 != b.1).map(|(a, _)| a.0.as_str()).collect();
    let same_names = first.iter().map(|f| &f.0).eq(second.iter().map(|f| &f.0));
    verdict(
        "determinism",
        same_names && differing.is_empty() && first.len() >= 5,
        format!("{} CSV/JSON files compared, differing: {differing:?}", first.len()),
    );
}
