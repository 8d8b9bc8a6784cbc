//! Train the physics-informed network on four receivers and check it on a fifth.
//!
//! ```bash
//! cargo run --release --example neural_training
//! ```
//!
//! Every pair shares one speaker recording, so the network sees the same
//! input four times and the distances enter only through the loss.

use wavecoef::neural::{self, NetworkSpec, Optimizer, TrainConfig};
use wavecoef::spectral::{self, angular_grid};
use wavecoef::synth::{self, GammaProfile, NoiseDomain, SpeakerKind};
use wavecoef::wavemodel::{self, symmetry_report};

fn main() -> wavecoef::Result<()> {
    let (n, fs, noise) = (64, 1000, 0.01);
    let hidden: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let hidden = if hidden.is_empty() { vec![128, 128] } else { hidden };
    let grid = angular_grid(n, fs);
    let truth = synth::make_gamma(&GammaProfile::default(), &grid)?;
    let speaker = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 10.0, 1, [0.0; 3])?;
    let train_at = [[0.06, 0.0, 0.0], [0.0, 0.09, 0.0], [0.12, 0.0, 0.0], [0.0, 0.0, 0.15]];
    let data = synth::simulate_dataset(&speaker, &truth, &train_at, noise, NoiseDomain::Time, 2)?;

    let config = TrainConfig { epochs: 500, learning_rate: 1e-4, optimizer: Optimizer::Rmsprop, ..TrainConfig::default() };
    let start = std::time::Instant::now();
    let trained = neural::train(&data, &NetworkSpec::mlp(n, &hidden, 3), &config)?;
    let first = trained.history[0].total;
    println!("trained {hidden:?} in {:.2?}", start.elapsed());
    for e in [0, 50, 100, 200, 300, 400, 499] {
        println!("epoch {e:>3}: loss {:.6e}", trained.history[e].total);
    }
    println!("final loss {:.6e} ({:.4}% of epoch 0)", trained.final_loss.total, 100.0 * trained.final_loss.total / first);

    // Held-out receiver at a distance the network never trained on.
    let held_out = [0.0, 0.1, 0.0];
    let clean = synth::simulate_dataset(&speaker, &truth, &[held_out], 0.0, NoiseDomain::Time, 9)?;
    let noisy = synth::simulate_dataset(&speaker, &truth, &[held_out], noise, NoiseDomain::Time, 9)?;
    let gamma = neural::forward(&trained.network, noisy.speaker(0))?;
    let predicted = wavemodel::propagate(noisy.speaker(0), &gamma, noisy.delta_x()[0])?;
    let pred_time = spectral::idft(&predicted)?.signal;
    let meas_time = spectral::idft(noisy.receiver(0))?.signal;
    let clean_time = spectral::idft(clean.receiver(0))?.signal;
    let rmse = spectral::rmse(pred_time.samples(), meas_time.samples())?;
    let floor = spectral::rmse(clean_time.samples(), meas_time.samples())?;
    println!("held-out rmse {rmse:.5}, noise floor {floor:.5}, ratio {:.3}", rmse / floor);

    let sym = symmetry_report(&gamma)?;
    println!("alpha evenness error {:.3e}, kappa oddness error {:.3e}", sym.alpha_evenness_error, sym.kappa_oddness_error);
    for j in [1, 8, 16, 32] {
        println!("bin {j:>2}: alpha {:.4} (true {:.4}), kappa {:.4} (true {:.4})", gamma.alpha()[j], truth.alpha()[j], gamma.kappa()[j], truth.kappa()[j]);
    }
    Ok(())
}
