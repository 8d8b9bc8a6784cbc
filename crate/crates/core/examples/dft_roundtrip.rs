//! Forward and inverse transforms of a real signal.
//!
//! ```bash
//! cargo run --example dft_roundtrip
//! ```

use wavecoef::spectral::{angular_grid, dft, idft, Signal};

fn main() -> wavecoef::Result<()> {
    let fs = 8;
    let samples: Vec<f64> = (0..8).map(|t| (t as f64 * 0.7).sin() + 0.25).collect();
    let signal = Signal::new(samples.clone(), fs, [0.0; 3])?;
    let spectrum = dft(&signal)?;

    println!("{:>10} {:>12} {:>12}", "omega", "re", "im");
    for (w, c) in angular_grid(8, fs).iter().zip(spectrum.coefficients()) {
        println!("{w:>10.4} {:>12.6} {:>12.6}", c.re, c.im);
    }

    let energy_time: f64 = samples.iter().map(|x| x * x).sum();
    let energy_freq: f64 = spectrum.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>() / 8.0;
    println!("energy: time {energy_time:.12}, frequency / n {energy_freq:.12}");

    let back = idft(&spectrum)?;
    let err = samples.iter().zip(back.signal.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("round-trip max error {err:.2e}, imaginary residue {:.2e}", back.max_imaginary);
    Ok(())
}
