//! File formats: signal files (16-bit PCM WAV, CSV), propagation-coefficient
//! tables, matrices and JSON documents.
//!
//! Floating-point values are written with the shortest representation that
//! parses back to the identical `f64`, so CSV and JSON round trips are exact.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Position, Signal};
use crate::wavemodel::PropagationCoefficient;

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingFile(path.to_path_buf()))
    }
}

/// Reads a signal file, dispatching on the extension (`.wav` or `.csv`).
pub fn read_signal(path: &Path, position: Position) -> Result<Signal> {
    require_file(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "wav" => read_wav(path, position),
        Some(ext) if ext == "csv" => read_signal_csv(path, position),
        _ => Err(Error::invalid(format!(
            "unsupported signal file {} (expected .wav or .csv)",
            path.display()
        ))),
    }
}

/// 16-bit PCM mono WAV; samples are scaled to `[-1, 1)`.
pub fn read_wav(path: &Path, position: Position) -> Result<Signal> {
    require_file(path)?;
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::invalid(format!(
            "{}: expected 16-bit PCM mono, found {} channel(s), {} bits, {:?}",
            path.display(),
            spec.channels,
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<Result<Vec<_>, _>>()?;
    Signal::new(samples, spec.sample_rate, position)
}

/// Writes samples as 16-bit PCM mono, clipping to `[-1, 1]`.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &x in samples {
        writer.write_sample((x.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

/// CSV signal: a header row `sample_rate,<value>` followed by one sample per line.
pub fn read_signal_csv(path: &Path, position: Position) -> Result<Signal> {
    require_file(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| Error::invalid(format!("{}: empty signal file", path.display())))??;
    if header.len() != 2 || header[0].trim() != "sample_rate" {
        return Err(Error::invalid(format!(
            "{}: first row must be `sample_rate,<value>`",
            path.display()
        )));
    }
    let sample_rate: u32 = header[1]
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{}: bad sample rate {:?}", path.display(), &header[1])))?;
    let mut samples = Vec::new();
    for (line, rec) in records.enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        samples.push(field.parse::<f64>().map_err(|_| {
            Error::invalid(format!("{}: bad sample on line {}: {field:?}", path.display(), line + 2))
        })?);
    }
    Signal::new(samples, sample_rate, position)
}

pub fn write_signal_csv(path: &Path, signal: &Signal) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "sample_rate,{}", signal.sample_rate())?;
    for x in signal.samples() {
        writeln!(w, "{x}")?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `omega,alpha,kappa`, one row per bin.
pub fn write_gamma_csv(path: &Path, gamma: &PropagationCoefficient) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["omega", "alpha", "kappa"])?;
    for j in 0..gamma.len() {
        w.write_record([
            gamma.angular_frequencies()[j].to_string(),
            gamma.alpha()[j].to_string(),
            gamma.kappa()[j].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_gamma_csv(path: &Path) -> Result<PropagationCoefficient> {
    require_file(path)?;
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::invalid(format!("{}: missing column {name}", path.display())))
    };
    let (iw, ia, ik) = (col("omega")?, col("alpha")?, col("kappa")?);
    let (mut w, mut a, mut k) = (Vec::new(), Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::invalid(format!("{}: bad number in row {rec:?}", path.display())))
        };
        w.push(parse(iw)?);
        a.push(parse(ia)?);
        k.push(parse(ik)?);
    }
    PropagationCoefficient::new(a, k, w)
}

/// Rows of a real matrix, no header.
pub fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    require_file(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            rec.iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("{}: bad number {s:?}", path.display())))
                })
                .collect()
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    require_file(path)?;
    let reader = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}

/// Reads a propagation coefficient from `.json` or `.csv`.
pub fn read_gamma(path: &Path) -> Result<PropagationCoefficient> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_gamma_csv(path),
        _ => read_json(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::angular_grid;

    #[test]
    fn csv_signal_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = Signal::new(vec![0.1, -1.0 / 3.0, 2.5e-17, 7.0], 16000, [1.0, 2.0, 3.0]).unwrap();
        write_signal_csv(&path, &s).unwrap();
        let back = read_signal(&path, [1.0, 2.0, 3.0]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn wav_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let samples = vec![0.0, 0.5, -0.5, 0.25, -0.999];
        write_wav(&path, &samples, 8000).unwrap();
        let back = read_signal(&path, [0.0; 3]).unwrap();
        assert_eq!(back.sample_rate(), 8000);
        for (a, b) in back.samples().iter().zip(&samples) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn missing_file_is_reported() {
        let err = read_signal(Path::new("/nonexistent/x.csv"), [0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn malformed_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "1.0\n2.0\n").unwrap();
        assert!(matches!(read_signal(&path, [0.0; 3]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gamma_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let grid = angular_grid(6, 1000);
        let kappa = grid.iter().map(|w| w / 343.0).collect();
        let g = PropagationCoefficient::new(vec![0.1, 0.2, 0.3, 0.4, 0.3, 0.2], kappa, grid).unwrap();
        write_gamma_csv(&path, &g).unwrap();
        assert_eq!(read_gamma(&path).unwrap(), g);
    }
}
