//! Impulse response from a coefficient and from a measured pair, and the
//! receiver signal rebuilt by convolving the speaker with it.
//!
//! ```bash
//! cargo run --example room_impulse_response
//! ```

use wavecoef::rir::{apply_rir, rir_from_gamma, rir_from_measurements};
use wavecoef::spectral::{angular_grid, idft};
use wavecoef::synth::{self, GammaProfile, SpeakerKind};

fn main() -> wavecoef::Result<()> {
    let (n, fs, dx) = (64, 8000, 0.5);
    let gamma = synth::make_gamma(&GammaProfile::default(), &angular_grid(n, fs))?;
    let speaker = synth::speaker_signal(SpeakerKind::WhiteNoise, n, fs, 1.0, 2, [0.0; 3])?;
    let (s, r) = synth::simulate_pair(&speaker, &gamma, dx, 0.0, 0)?;

    let model = rir_from_gamma(&gamma, dx)?;
    let measured = rir_from_measurements(&s, &r)?;
    let diff = model
        .frequency_response
        .iter()
        .zip(&measured.frequency_response)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("model vs measured response: max difference {diff:.2e}");

    println!("first taps of the time response:");
    for (t, h) in model.time_response.iter().take(8).enumerate() {
        println!("  t = {:>7.5} s  h = {h:>10.6}", t as f64 / fs as f64);
    }

    let rebuilt = apply_rir(&speaker, &measured)?;
    let receiver = idft(&r)?.signal;
    let err = rebuilt.samples().iter().zip(receiver.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("speaker convolved with the response vs receiver: max error {err:.2e}");
    Ok(())
}
