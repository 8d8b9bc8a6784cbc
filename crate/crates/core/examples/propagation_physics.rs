//! Forward and backward propagation of a spectrum, the wave-equation
//! residual, and the symmetry of a physical coefficient.
//!
//! ```bash
//! cargo run --example propagation_physics
//! ```

use wavecoef::spectral::{angular_grid, dft};
use wavecoef::synth::{self, GammaProfile, SpeakerKind};
use wavecoef::wavemodel::{propagate, propagate_inverse, symmetry_report, wave_equation_residual, wave_speed};

fn main() -> wavecoef::Result<()> {
    let (n, fs, dx) = (16, 2000, 0.4);
    let gamma = synth::make_gamma(&GammaProfile::AirLike, &angular_grid(n, fs))?;
    let speaker = dft(&synth::speaker_signal(SpeakerKind::Multisine, n, fs, 1.0, 4, [0.0; 3])?)?;

    let received = propagate(&speaker, &gamma, dx)?;
    let recovered = propagate_inverse(&received, &gamma, dx)?;
    let err = speaker
        .coefficients()
        .iter()
        .zip(recovered.coefficients())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("forward then backward over {dx} m: max deviation {err:.2e}");

    let lhs = wave_equation_residual(&speaker, &gamma, dx)?;
    let speeds = wave_speed(&gamma);
    println!("{:>10} {:>10} {:>10} {:>12} {:>10}", "omega", "alpha", "kappa", "|residual|", "speed");
    for j in 0..n {
        let speed = speeds[j].map_or("-".to_string(), |s| format!("{s:.1}"));
        println!(
            "{:>10.2} {:>10.5} {:>10.5} {:>12.3e} {:>10}",
            gamma.angular_frequencies()[j],
            gamma.alpha()[j],
            gamma.kappa()[j],
            lhs[j].norm(),
            speed
        );
    }
    let sym = symmetry_report(&gamma)?;
    println!("alpha evenness error {:.1e}, kappa oddness error {:.1e}", sym.alpha_evenness_error, sym.kappa_oddness_error);
    Ok(())
}
