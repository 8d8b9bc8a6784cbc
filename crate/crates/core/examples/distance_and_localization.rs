//! Distances from recorded pairs, then a 2D position fix from three speakers.
//!
//! ```bash
//! cargo run --example distance_and_localization
//! ```

use wavecoef::reloc::{estimate_distance, trilaterate, Anchor, DistanceMode, TrilaterationConfig};
use wavecoef::spectral::angular_grid;
use wavecoef::synth::{self, GammaProfile, NoiseDomain, SpeakerKind};

fn main() -> wavecoef::Result<()> {
    let (n, fs) = (64, 2000);
    let gamma = synth::make_gamma(&GammaProfile::Constant { alpha: 0.2, speed_of_sound: 343.0 }, &angular_grid(n, fs))?;
    let device = [2.0, 1.5, 0.0];
    let speakers = [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [0.0, 4.0, 0.0]];

    let mut anchors = Vec::new();
    for (k, pos) in speakers.iter().enumerate() {
        let src = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 1.0, 10 + k as u64, *pos)?;
        let (s, r) = synth::simulate_pair_at(&src, &gamma, device, 0.01, NoiseDomain::Frequency, k as u64)?;
        let est = estimate_distance(&s, &r, &gamma, DistanceMode::MagnitudeOnly)?;
        let truth = pos.iter().zip(&device).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        println!("speaker {k}: truth {truth:.3} m, mean {:.3} m, mode {:.3} m, std {:.3} m", est.mean, est.mode, est.std);
        anchors.push(Anchor::from_estimate(pos[..2].to_vec(), &est));
    }

    let fix = trilaterate(&anchors, &TrilaterationConfig::default())?;
    println!(
        "fix ({:.3}, {:.3}) vs truth ({}, {}), rms range residual {:.2e} m, per-axis std ({:.3}, {:.3})",
        fix.position[0], fix.position[1], device[0], device[1], fix.residual, fix.covariance_proxy[0], fix.covariance_proxy[1]
    );
    Ok(())
}
