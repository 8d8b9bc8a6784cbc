//! Generate a noisy synthetic dataset, store it as files with a manifest, and
//! load it back.
//!
//! ```bash
//! cargo run --example synthetic_dataset
//! ```

use wavecoef::io;
use wavecoef::spectral::{angular_grid, idft};
use wavecoef::synth::{self, GammaProfile, Manifest, ManifestPair, NoiseDomain, SpeakerKind};

fn main() -> wavecoef::Result<()> {
    let (n, fs) = (33, 1000);
    let gamma = synth::make_gamma(&GammaProfile::default(), &angular_grid(n, fs))?;
    let speaker = synth::speaker_signal(SpeakerKind::Multisine, n, fs, 1.0, 1, [0.0; 3])?;
    let positions = [[0.3, 0.0, 0.0], [0.0, 0.5, 0.0], [0.2, 0.2, 0.4]];
    let data = synth::simulate_dataset(&speaker, &gamma, &positions, 0.01, NoiseDomain::Time, 5)?;

    let dir = tempfile::tempdir()?;
    io::write_signal_csv(&dir.path().join("speaker.csv"), &speaker)?;
    let mut pairs = Vec::new();
    for (i, pos) in positions.iter().enumerate() {
        let name = format!("receiver_{i}.csv");
        io::write_signal_csv(&dir.path().join(&name), &idft(data.receiver(i))?.signal)?;
        pairs.push(ManifestPair { speaker: "speaker.csv".into(), receiver: name.into(), speaker_pos: [0.0; 3], receiver_pos: Some(*pos) });
    }
    let manifest = dir.path().join("manifest.json");
    io::write_json(&manifest, &Manifest { pairs, sample_rate: fs })?;

    let loaded = synth::load_dataset(&manifest)?;
    println!("{} pairs of {} bins, distances {:?}", loaded.len(), loaded.n_bins(), loaded.delta_x());
    let worst = (0..loaded.len())
        .flat_map(|i| {
            let (a, b) = (data.receiver(i).coefficients(), loaded.receiver(i).coefficients());
            a.iter().zip(b).map(|(x, y)| (x - y).norm()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    println!("largest spectral difference after the file round trip: {worst:.2e}");
    Ok(())
}
