use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavecoef::cli::{self, Method, RunConfig};
use wavecoef::reloc::DistanceMode;
use wavecoef::synth::NoiseDomain;
use wavecoef::{Error, Result};

/// Estimate acoustic propagation coefficients and derive impulse responses,
/// distances and positions from them.
#[derive(Parser)]
#[command(name = "wavecoef", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with known coefficients.
    Simulate {
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        sample_rate: Option<u32>,
        #[arg(long)]
        noise_std: Option<f64>,
        #[arg(long, value_parser = parse_noise_domain)]
        noise_domain: Option<NoiseDomain>,
    },
    /// Metropolis-Hastings inference.
    InferMh {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
    },
    /// Closed-form least-squares fit.
    FitLs {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Train the neural estimator.
    TrainNn {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Hidden layer widths, e.g. `64,64`.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long)]
        ensemble: bool,
    },
    /// Room impulse response from a coefficient or a measured pair.
    Rir {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        delta_x: Option<f64>,
        #[arg(long)]
        pair: Option<usize>,
    },
    /// Speaker-receiver distances for every pair of a dataset.
    Distance {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<PathBuf>,
        /// Posterior trace CSV to propagate uncertainty from.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<DistanceMode>,
    },
    /// Position fix from anchor recordings.
    Localize {
        #[arg(long)]
        anchors: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        dims: Option<usize>,
    },
    /// Distance table and coefficient comparison across estimators.
    Compare {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        estimates: Option<PathBuf>,
        /// Subset of `ls,mh,nn`.
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        methods: Option<Vec<Method>>,
    },
}

fn parse_mode(s: &str) -> std::result::Result<DistanceMode, String> {
    match s {
        "magnitude_only" => Ok(DistanceMode::MagnitudeOnly),
        "complex_real_part" => Ok(DistanceMode::ComplexRealPart),
        _ => Err("expected magnitude_only or complex_real_part".into()),
    }
}

fn parse_noise_domain(s: &str) -> std::result::Result<NoiseDomain, String> {
    match s {
        "frequency" => Ok(NoiseDomain::Frequency),
        "time" => Ok(NoiseDomain::Time),
        _ => Err("expected frequency or time".into()),
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_some<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn run(cli: Cli) -> Result<cli::CommandOutput> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.global.seed);
    set(&mut cfg.out, cli.global.out);
    match cli.command {
        Command::Simulate { n_samples, sample_rate, noise_std, noise_domain } => {
            let s = &mut cfg.simulate;
            set(&mut s.n_samples, n_samples);
            set(&mut s.sample_rate, sample_rate);
            set(&mut s.noise_std, noise_std);
            set(&mut s.noise_domain, noise_domain);
            cli::cmd_simulate(&cfg)
        }
        Command::InferMh { dataset, iterations, warmup, chains } => {
            let m = &mut cfg.infer_mh;
            set_some(&mut m.dataset, dataset);
            set(&mut m.sampler.n_iterations, iterations);
            set(&mut m.sampler.warmup, warmup);
            set(&mut m.sampler.n_chains, chains);
            cli::cmd_infer_mh(&cfg)
        }
        Command::FitLs { dataset } => {
            set_some(&mut cfg.fit_ls.dataset, dataset);
            cli::cmd_fit_ls(&cfg)
        }
        Command::TrainNn { dataset, epochs, learning_rate, hidden, ensemble } => {
            let t = &mut cfg.train_nn;
            set_some(&mut t.dataset, dataset);
            set(&mut t.train.epochs, epochs);
            set(&mut t.train.learning_rate, learning_rate);
            set(&mut t.hidden, hidden);
            t.ensemble |= ensemble;
            cli::cmd_train_nn(&cfg)
        }
        Command::Rir { dataset, gamma, delta_x, pair } => {
            let r = &mut cfg.rir;
            set_some(&mut r.dataset, dataset);
            set_some(&mut r.gamma, gamma);
            set_some(&mut r.delta_x, delta_x);
            set(&mut r.pair, pair);
            cli::cmd_rir(&cfg)
        }
        Command::Distance { dataset, gamma, trace, mode } => {
            let d = &mut cfg.distance;
            set_some(&mut d.dataset, dataset);
            set_some(&mut d.gamma, gamma);
            set_some(&mut d.trace, trace);
            set(&mut d.mode, mode);
            cli::cmd_distance(&cfg)
        }
        Command::Localize { anchors, gamma, dims } => {
            let l = &mut cfg.localize;
            set_some(&mut l.anchors, anchors);
            set_some(&mut l.gamma, gamma);
            set(&mut l.dims, dims);
            cli::cmd_localize(&cfg)
        }
        Command::Compare { dataset, estimates, methods } => {
            let c = &mut cfg.compare;
            set_some(&mut c.dataset, dataset);
            set_some(&mut c.estimates, estimates);
            set_some(&mut c.methods, methods);
            cli::cmd_compare(&cfg)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on malformed arguments.
    let cli = Cli::parse();
    match run(cli) {
        Ok(done) => {
            // A closed stdout (e.g. piped into `head`) is not a failure of the command.
            let mut stdout = std::io::stdout().lock();
            for line in &done.lines {
                let _ = writeln!(stdout, "{line}");
            }
            for p in &done.written {
                let _ = writeln!(stdout, "wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
