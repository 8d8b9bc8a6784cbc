use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Method, RunConfig, SignalFormat};
use super::*;
use crate::bayes::{mh_sample, summarize, PosteriorTrace};
use crate::error::{Error, Result};
use crate::io;
use crate::lsq;
use crate::neural::{self, NetworkSpec};
use crate::reloc::{self, Anchor, DistanceReport};
use crate::rir;
use crate::rng::derive_seed;
use crate::spectral::{angular_grid, dft, idft, Position, Signal};
use crate::synth::{self, GroundTruth, Manifest, ManifestPair, PairDataset};
use crate::wavemodel::{symmetry_report, PropagationCoefficient, SymmetryReport};

/// Files a command wrote and a short human-readable summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub written: Vec<PathBuf>,
    pub lines: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    done: CommandOutput,
}

impl Outputs {
    fn new(cfg: &RunConfig, command: &str) -> Result<Self> {
        fs::create_dir_all(&cfg.out)?;
        let mut o = Self { dir: cfg.out.clone(), done: CommandOutput::default() };
        o.json(&format!("config_{command}.json"), cfg)?;
        Ok(o)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.done.written.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        io::write_json(&p, value)
    }

    fn gamma(&mut self, stem: &str, gamma: &PropagationCoefficient) -> Result<()> {
        self.json(&format!("{stem}.json"), gamma)?;
        let p = self.path(&format!("{stem}.csv"));
        io::write_gamma_csv(&p, gamma)
    }

    fn line(&mut self, s: impl Into<String>) {
        self.done.lines.push(s.into());
    }
}

fn write_signal(path: &Path, signal: &Signal, format: SignalFormat) -> Result<()> {
    match format {
        SignalFormat::Csv => io::write_signal_csv(path, signal),
        SignalFormat::Wav => io::write_wav(path, signal.samples(), signal.sample_rate()),
    }
}

fn load(cfg: &RunConfig, explicit: &Option<PathBuf>) -> Result<PairDataset> {
    synth::load_dataset(&cfg.manifest(explicit))
}

fn read_gamma_for(path: &Path, dataset_grid: &[f64]) -> Result<PropagationCoefficient> {
    let g = io::read_gamma(path)?;
    crate::spectral::ensure_grids_match(dataset_grid, g.angular_frequencies(), &path.display().to_string())?;
    Ok(g)
}

/// Writes a synthetic scene: one speaker heard by every receiver, plus an
/// optional anchor set recorded by a single device.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput> {
    let sc = &cfg.simulate;
    if sc.receiver_positions.is_empty() {
        return Err(Error::Usage("simulate needs at least one receiver position".into()));
    }
    let grid = angular_grid(sc.n_samples, sc.sample_rate);
    let truth = GroundTruth::new(synth::make_gamma(&sc.gamma, &grid)?, sc.noise_std)?;
    let speaker = synth::speaker_signal(
        sc.speaker_kind,
        sc.n_samples,
        sc.sample_rate,
        sc.amplitude,
        derive_seed(cfg.seed, u64::MAX),
        sc.speaker_position,
    )?;
    let ds = synth::simulate_dataset(&speaker, &truth.gamma_true, &sc.receiver_positions, sc.noise_std, sc.noise_domain, cfg.seed)?;

    let mut out = Outputs::new(cfg, "simulate")?;
    let ext = sc.signal_format.extension();
    let speaker_file = format!("speaker.{ext}");
    write_signal(&out.path(&speaker_file), &speaker, sc.signal_format)?;
    let mut dropped = 0.0f64;
    let mut pairs = Vec::new();
    for (i, pos) in sc.receiver_positions.iter().enumerate() {
        // Real files keep only the conjugate-symmetric part of a noisy spectrum.
        let synthesis = idft(ds.receiver(i))?;
        dropped = dropped.max(synthesis.max_imaginary);
        let name = format!("receiver_{i:02}.{ext}");
        write_signal(&out.path(&name), &synthesis.signal, sc.signal_format)?;
        pairs.push(ManifestPair {
            speaker: speaker_file.clone().into(),
            receiver: name.into(),
            speaker_pos: sc.speaker_position,
            receiver_pos: Some(*pos),
        });
    }
    out.json(MANIFEST, &Manifest { pairs, sample_rate: sc.sample_rate })?;
    out.gamma("gamma_true", &truth.gamma_true)?;
    out.json("ground_truth.json", &truth)?;
    out.line(format!(
        "{} pairs, {} samples at {} Hz, distances {:?}",
        ds.len(),
        sc.n_samples,
        sc.sample_rate,
        ds.delta_x().iter().map(|d| (d * 1e3).round() / 1e3).collect::<Vec<_>>()
    ));
    if dropped > 0.0 {
        out.line(format!("largest imaginary sample dropped when writing real signals: {dropped:.3e}"));
    }

    if !sc.anchor_speakers.is_empty() {
        let mut anchors = Vec::new();
        for (k, pos) in sc.anchor_speakers.iter().enumerate() {
            let src = speaker.clone().with_position(*pos);
            let (_, rec) = synth::simulate_pair_at(
                &src,
                &truth.gamma_true,
                sc.device_position,
                sc.noise_std,
                sc.noise_domain,
                derive_seed(derive_seed(cfg.seed, u64::MAX - 1), k as u64),
            )?;
            let name = format!("anchor_{k:02}.{ext}");
            write_signal(&out.path(&name), &idft(&rec)?.signal, sc.signal_format)?;
            anchors.push(ManifestPair { speaker: speaker_file.clone().into(), receiver: name.into(), speaker_pos: *pos, receiver_pos: None });
        }
        out.json(ANCHORS, &Manifest { pairs: anchors, sample_rate: sc.sample_rate })?;
        out.json("device_truth.json", &sc.device_position)?;
        out.line(format!("{} anchors recorded at {:?}", sc.anchor_speakers.len(), sc.device_position));
    }
    Ok(out.done)
}

/// Metropolis-Hastings run: long-format trace, per-parameter summary and
/// posterior mean and mode coefficients.
pub fn cmd_infer_mh(cfg: &RunConfig) -> Result<CommandOutput> {
    let mc = &cfg.infer_mh;
    let ds = load(cfg, &mc.dataset)?;
    let sampler = crate::bayes::MHConfig { seed: cfg.seed, ..mc.sampler };
    let trace = mh_sample(&ds, &mc.prior, &sampler)?;
    let summary = summarize(&trace)?;

    let mut out = Outputs::new(cfg, "infer_mh")?;
    trace.write_csv(&out.path("mh_trace.csv"))?;
    summary.write_csv(&out.path("mh_summary.csv"))?;
    out.json("mh_summary.json", &summary)?;
    out.gamma("gamma_mh_mean", &trace.posterior_mean()?)?;
    out.gamma("gamma_mh_map", &trace.posterior_mode()?)?;
    out.line(format!(
        "{} chains x {} kept draws, acceptance {:?}",
        trace.n_chains(),
        trace.n_kept(),
        trace.accept_rate.iter().map(|a| (a * 1e3).round() / 1e3).collect::<Vec<_>>()
    ));
    out.line(format!(
        "fraction with R-hat < 1.05 and tail ESS > 100: {:.3}",
        summary.fraction_converged(1.05, 100.0)
    ));
    for w in &trace.warnings {
        out.line(format!("warning: {w}"));
    }
    Ok(out.done)
}

#[derive(Serialize)]
struct LsReport<'a> {
    n_pairs: usize,
    residual: f64,
    rejected_pairs: &'a [usize],
    masked_cells: usize,
    unresolved_bins: &'a [usize],
    alpha_std: &'a [f64],
    kappa_std: &'a [f64],
    symmetry: SymmetryReport,
    warnings: &'a [String],
}

pub fn cmd_fit_ls(cfg: &RunConfig) -> Result<CommandOutput> {
    let ds = load(cfg, &cfg.fit_ls.dataset)?;
    let est = lsq::fit(&ds)?;
    let residual = lsq::residual(&ds, &est)?;
    let symmetry = symmetry_report(&est.gamma_mean)?;
    let mut out = Outputs::new(cfg, "fit_ls")?;
    out.gamma("gamma_ls", &est.gamma_mean)?;
    out.json(
        "ls_report.json",
        &LsReport {
            n_pairs: ds.len(),
            residual,
            rejected_pairs: &est.rejected_pairs,
            masked_cells: est.masked_cells,
            unresolved_bins: &est.unresolved_bins,
            alpha_std: &est.alpha_std,
            kappa_std: &est.kappa_std,
            symmetry,
            warnings: &est.warnings,
        },
    )?;
    out.line(format!("{} pairs, residual {residual:.3e}, masked cells {}", ds.len(), est.masked_cells));
    out.line(format!(
        "symmetry errors: alpha {:.3e}, kappa {:.3e}",
        symmetry.alpha_evenness_error, symmetry.kappa_oddness_error
    ));
    for w in &est.warnings {
        out.line(format!("warning: {w}"));
    }
    Ok(out.done)
}

#[derive(Serialize)]
struct NnReport {
    initial_loss: f64,
    final_loss: f64,
    loss_trend_decreasing: bool,
    symmetry: SymmetryReport,
    ensemble_members: usize,
}

pub fn cmd_train_nn(cfg: &RunConfig) -> Result<CommandOutput> {
    let nc = &cfg.train_nn;
    let ds = load(cfg, &nc.dataset)?;
    let mut spec = NetworkSpec::mlp(ds.n_bins(), &nc.hidden, cfg.seed);
    spec.variant = nc.variant;
    let train = neural::TrainConfig { seed: cfg.seed, ..nc.train };

    let (members, gamma, spread) = if nc.ensemble {
        let e = neural::train_ensemble(&ds, &spec, &train)?;
        (e.members, e.mean, Some((e.alpha_std, e.kappa_std)))
    } else {
        let t = neural::train(&ds, &spec, &train)?;
        let mean = neural::predict(&t.network, &ds)?.mean_row();
        let n = ds.n_bins();
        let g = PropagationCoefficient::new(mean[..n].to_vec(), mean[n..].to_vec(), ds.angular_frequencies().to_vec())?;
        (vec![t], g, None)
    };

    let mut out = Outputs::new(cfg, "train_nn")?;
    for (k, m) in members.iter().enumerate() {
        let suffix = if members.len() == 1 { String::new() } else { format!("_{k}") };
        m.network.save(&out.path(&format!("network{suffix}.json")))?;
        m.write_history_csv(&out.path(&format!("nn_loss_history{suffix}.csv")))?;
    }
    out.gamma("gamma_nn", &gamma)?;
    if let Some((a, k)) = &spread {
        let rows: Vec<Vec<f64>> =
            (0..gamma.len()).map(|j| vec![gamma.angular_frequencies()[j], a[j], k[j]]).collect();
        io::write_matrix_csv(&out.path("nn_ensemble_std.csv"), &rows)?;
    }
    let first = &members[0];
    let report = NnReport {
        initial_loss: first.history.first().map_or(f64::NAN, |l| l.total),
        final_loss: first.final_loss.total,
        loss_trend_decreasing: members.iter().all(|m| m.loss_trend_decreasing()),
        symmetry: symmetry_report(&gamma)?,
        ensemble_members: members.len(),
    };
    out.json("nn_report.json", &report)?;
    out.line(format!(
        "loss {:.4e} -> {:.4e} ({} epochs), decreasing: {}",
        report.initial_loss, report.final_loss, train.epochs, report.loss_trend_decreasing
    ));
    out.line(format!(
        "symmetry errors: alpha {:.3e}, kappa {:.3e}",
        report.symmetry.alpha_evenness_error, report.symmetry.kappa_oddness_error
    ));
    Ok(out.done)
}

#[derive(Serialize)]
struct RirReport<'a> {
    source: &'a str,
    delta_x: f64,
    sample_rate: u32,
    masked_bins: &'a [usize],
    /// `rir.wav` holds `wav_scale * time_response`.
    wav_scale: f64,
}

/// Sample rate implied by a symmetric angular grid in DFT order.
fn grid_sample_rate(grid: &[f64]) -> Result<u32> {
    if grid.len() < 2 {
        return Err(Error::invalid("need at least two bins to infer the sample rate"));
    }
    Ok((grid[1] * grid.len() as f64 / (2.0 * std::f64::consts::PI)).round() as u32)
}

pub fn cmd_rir(cfg: &RunConfig) -> Result<CommandOutput> {
    let rc = &cfg.rir;
    let dataset = || -> Result<PairDataset> {
        let ds = load(cfg, &rc.dataset)?;
        if rc.pair >= ds.len() {
            return Err(Error::Usage(format!("pair {} out of range for {} pairs", rc.pair, ds.len())));
        }
        Ok(ds)
    };
    let (est, source, fs) = match &rc.gamma {
        Some(path) => {
            let g = io::read_gamma(path)?;
            let (dx, fs) = match rc.delta_x {
                Some(dx) => (dx, grid_sample_rate(g.angular_frequencies())?),
                None => {
                    let ds = dataset()?;
                    (ds.delta_x()[rc.pair], ds.sample_rate())
                }
            };
            (rir::rir_from_gamma(&g, dx)?, "gamma", fs)
        }
        None => {
            let ds = dataset()?;
            (rir::rir_from_measurements(ds.speaker(rc.pair), ds.receiver(rc.pair))?, "measurements", ds.sample_rate())
        }
    };
    let (scaled, wav_scale) = rir::normalized_for_wav(&est, 0.9);

    let mut out = Outputs::new(cfg, "rir")?;
    io::write_wav(&out.path("rir.wav"), &scaled, fs)?;
    let time: Vec<Vec<f64>> = est.time_response.iter().enumerate().map(|(t, v)| vec![t as f64 / fs as f64, *v]).collect();
    io::write_matrix_csv(&out.path("rir_time.csv"), &time)?;
    let freq: Vec<Vec<f64>> = est
        .frequency_response
        .iter()
        .zip(&est.angular_frequencies)
        .map(|(h, w)| vec![*w, h.re, h.im, h.norm()])
        .collect();
    io::write_matrix_csv(&out.path("rir_frequency.csv"), &freq)?;
    out.json(
        "rir_report.json",
        &RirReport { source, delta_x: est.delta_x, sample_rate: fs, masked_bins: &est.masked_bins, wav_scale },
    )?;
    let peak = est.time_response.iter().enumerate().fold((0, 0.0f64), |b, (t, v)| if v.abs() > b.1.abs() { (t, *v) } else { b });
    out.line(format!("response from {source}, delta_x {:.4} m, peak {:.4e} at sample {}", est.delta_x, peak.1, peak.0));
    Ok(out.done)
}

#[derive(Serialize)]
struct PairDistance {
    pair: usize,
    ground_truth: f64,
    estimate: DistanceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    posterior: Option<DistanceReport>,
}

pub fn cmd_distance(cfg: &RunConfig) -> Result<CommandOutput> {
    let dc = &cfg.distance;
    let ds = load(cfg, &dc.dataset)?;
    let gamma_path = dc.gamma.clone().unwrap_or_else(|| cfg.out.join(GAMMA_LS));
    let gamma = read_gamma_for(&gamma_path, ds.angular_frequencies())?;
    let trace = dc.trace.as_ref().map(|p| PosteriorTrace::read_csv(p, ds.angular_frequencies())).transpose()?;
    let pairs: Vec<usize> = dc.pairs.clone().unwrap_or_else(|| (0..ds.len()).collect());
    if let Some(&bad) = pairs.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::Usage(format!("pair {bad} out of range for {} pairs", ds.len())));
    }
    let mut rows = Vec::new();
    for (k, &i) in pairs.iter().enumerate() {
        let (s, r) = (ds.speaker(i), ds.receiver(i));
        let estimate = reloc::estimate_distance(s, r, &gamma, dc.mode)?.report();
        let posterior = match &trace {
            Some(t) => Some(reloc::propagate_uncertainty(s, r, t, dc.n_draws, dc.mode, derive_seed(cfg.seed, k as u64))?.report()),
            None => None,
        };
        rows.push(PairDistance { pair: i, ground_truth: ds.delta_x()[i], estimate, posterior });
    }

    let mut out = Outputs::new(cfg, "distance")?;
    out.json("distance.json", &rows)?;
    let mut w = csv::Writer::from_path(out.path("distance.csv"))?;
    w.write_record(["pair", "ground_truth", "source", "mean", "mode", "std", "n_bins_used"])?;
    for row in &rows {
        let sources = [Some(("point", row.estimate)), row.posterior.map(|p| ("posterior", p))];
        for (label, r) in sources.into_iter().flatten() {
            w.write_record([
                row.pair.to_string(),
                row.ground_truth.to_string(),
                label.to_string(),
                r.mean.to_string(),
                r.mode.to_string(),
                r.std.to_string(),
                r.n_bins_used.to_string(),
            ])?;
        }
        out.line(format!(
            "pair {}: truth {:.3} m, mean {:.3} m, mode {:.3} m, std {:.3} m",
            row.pair, row.ground_truth, row.estimate.mean, row.estimate.mode, row.estimate.std
        ));
    }
    w.flush()?;
    Ok(out.done)
}

#[derive(Serialize)]
struct LocalizeReport {
    fix: reloc::PositionFix,
    anchors: Vec<Anchor>,
}

pub fn cmd_localize(cfg: &RunConfig) -> Result<CommandOutput> {
    let lc = &cfg.localize;
    if !(lc.dims == 2 || lc.dims == 3) {
        return Err(Error::Usage(format!("dims must be 2 or 3, got {}", lc.dims)));
    }
    let manifest_path = lc.anchors.clone().unwrap_or_else(|| cfg.out.join(ANCHORS));
    let manifest = Manifest::read(&manifest_path)?;
    let need = lc.dims + 1;
    if manifest.pairs.len() < need {
        return Err(Error::Usage(format!(
            "{}D localization needs at least {need} anchor recordings, {} has {}; record the device from more speakers at distinct known positions",
            lc.dims,
            manifest_path.display(),
            manifest.pairs.len()
        )));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let gamma_path = lc.gamma.clone().unwrap_or_else(|| cfg.out.join(GAMMA_LS));
    let gamma = io::read_gamma(&gamma_path)?;
    let mut anchors = Vec::new();
    for pair in &manifest.pairs {
        let s = dft(&synth::load_manifest_signal(base, &pair.speaker, pair.speaker_pos, manifest.sample_rate)?)?;
        let r = dft(&synth::load_manifest_signal(base, &pair.receiver, pair.speaker_pos, manifest.sample_rate)?)?;
        let est = reloc::estimate_distance(&s, &r, &gamma, lc.mode)?;
        anchors.push(Anchor::from_estimate(pair.speaker_pos[..lc.dims].to_vec(), &est));
    }
    let solver = reloc::TrilaterationConfig { seed: cfg.seed, ..lc.solver };
    let fix = reloc::trilaterate(&anchors, &solver)?;

    let mut out = Outputs::new(cfg, "localize")?;
    out.line(format!(
        "fix {:?}, rms range residual {:.3e} m, per-axis std {:?}",
        fix.position, fix.residual, fix.covariance_proxy
    ));
    out.json("fix.json", &LocalizeReport { fix, anchors })?;
    Ok(out.done)
}

#[derive(Serialize)]
struct MethodDistance {
    method: &'static str,
    #[serde(flatten)]
    report: DistanceReport,
}

#[derive(Serialize)]
struct ReceiverComparison {
    receiver: usize,
    position: Position,
    ground_truth: f64,
    methods: Vec<MethodDistance>,
}

/// Per-receiver distance table for every available estimator, plus a
/// per-bin coefficient table for plotting.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CommandOutput> {
    let cc = &cfg.compare;
    let ds = load(cfg, &cc.dataset)?;
    let dir = cc.estimates.clone().unwrap_or_else(|| cfg.out.clone());
    let methods: Vec<Method> = match &cc.methods {
        Some(m) if m.is_empty() => return Err(Error::Usage("compare needs at least one method".into())),
        Some(m) => m.clone(),
        None => Method::ALL.into_iter().filter(|m| dir.join(m.gamma_file()).is_file()).collect(),
    };
    let missing: Vec<String> = methods
        .iter()
        .map(|m| dir.join(m.gamma_file()))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() || methods.is_empty() {
        let listing = if missing.is_empty() {
            Method::ALL.iter().map(|m| dir.join(m.gamma_file()).display().to_string()).collect::<Vec<_>>().join(", ")
        } else {
            missing.join(", ")
        };
        return Err(Error::invalid(format!("missing estimator outputs: {listing}")));
    }
    let gammas = methods
        .iter()
        .map(|m| read_gamma_for(&dir.join(m.gamma_file()), ds.angular_frequencies()))
        .collect::<Result<Vec<_>>>()?;
    let truth_path = dir.join("gamma_true.json");
    let truth = if truth_path.is_file() { Some(read_gamma_for(&truth_path, ds.angular_frequencies())?) } else { None };

    let mut table = Vec::new();
    for i in 0..ds.len() {
        let mut rows = Vec::new();
        for (m, g) in methods.iter().zip(&gammas) {
            let report = reloc::estimate_distance(ds.speaker(i), ds.receiver(i), g, cc.mode)?.report();
            rows.push(MethodDistance { method: m.name(), report });
        }
        table.push(ReceiverComparison { receiver: i, position: ds.receiver(i).position(), ground_truth: ds.delta_x()[i], methods: rows });
    }

    let mut out = Outputs::new(cfg, "compare")?;
    out.json("comparison.json", &table)?;
    let mut w = csv::Writer::from_path(out.path("comparison.csv"))?;
    w.write_record(["receiver", "method", "mean", "mode", "std", "n_bins_used"])?;
    for rc in &table {
        w.write_record([rc.receiver.to_string(), "ground_truth".into(), rc.ground_truth.to_string(), String::new(), String::new(), String::new()])?;
        for m in &rc.methods {
            w.write_record([
                rc.receiver.to_string(),
                m.method.to_string(),
                m.report.mean.to_string(),
                m.report.mode.to_string(),
                m.report.std.to_string(),
                m.report.n_bins_used.to_string(),
            ])?;
        }
        let worst = rc.methods.iter().map(|m| ((m.report.mean - rc.ground_truth) / rc.ground_truth).abs()).fold(0.0, f64::max);
        out.line(format!("receiver {}: truth {:.3} m, largest relative mean error {:.2}%", rc.receiver, rc.ground_truth, 100.0 * worst));
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.path("gamma_comparison.csv"))?;
    let mut header = vec!["omega".to_string()];
    let sources: Vec<(&str, &PropagationCoefficient)> =
        truth.iter().map(|t| ("true", t)).chain(methods.iter().map(|m| m.name()).zip(&gammas)).collect();
    for (name, _) in &sources {
        header.push(format!("alpha_{name}"));
        header.push(format!("kappa_{name}"));
    }
    w.write_record(&header)?;
    for j in 0..ds.n_bins() {
        let mut rec = vec![ds.angular_frequencies()[j].to_string()];
        for (_, g) in &sources {
            rec.push(g.alpha()[j].to_string());
            rec.push(g.kappa()[j].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(out.done)
}
