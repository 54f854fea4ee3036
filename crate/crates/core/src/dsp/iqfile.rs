//! IQ capture files and event logs.
//!
//! `cf32`: interleaved little-endian `f32` I, Q. `cu8`: interleaved unsigned
//! bytes, `(x − 127.5) / 127.5`. Both carry a sidecar `<stem>.meta.json`
//! with `sample_rate_hz`, `center_freq_hz` and `start_unix_s`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::detect::TagEvent;
use super::IqStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IqFormat {
    Cf32,
    Cu8,
}

impl IqFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("cf32") => Ok(IqFormat::Cf32),
            Some("cu8") => Ok(IqFormat::Cu8),
            _ => Err(Error::invalid(format!(
                "cannot infer IQ format of {}; use a .cf32 or .cu8 extension",
                path.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqMeta {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub start_unix_s: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn read_meta(path: &Path) -> Result<IqMeta> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)
        .map_err(|e| Error::invalid(format!("missing sidecar {}: {e}", side.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_iq(path: &Path, format: Option<IqFormat>) -> Result<IqStream> {
    let format = match format {
        Some(f) => f,
        None => IqFormat::from_path(path)?,
    };
    let meta = read_meta(path)?;
    let bytes = fs::read(path)?;
    let samples: Vec<Complex64> = match format {
        IqFormat::Cf32 => {
            if bytes.len() % 8 != 0 {
                return Err(Error::invalid("cf32 file length is not a multiple of 8 bytes"));
            }
            bytes
                .chunks_exact(8)
                .map(|c| {
                    let i = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                    let q = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                    Complex64::new(i as f64, q as f64)
                })
                .collect()
        }
        IqFormat::Cu8 => {
            if bytes.len() % 2 != 0 {
                return Err(Error::invalid("cu8 file length is odd"));
            }
            let f = |x: u8| (x as f64 - 127.5) / 127.5;
            bytes.chunks_exact(2).map(|c| Complex64::new(f(c[0]), f(c[1]))).collect()
        }
    };
    let mut stream = IqStream::new(meta.sample_rate_hz, meta.center_freq_hz, samples)?;
    stream.start_time = meta.start_unix_s;
    Ok(stream)
}

pub fn write_iq(path: &Path, stream: &IqStream, format: IqFormat) -> Result<()> {
    let mut buf = Vec::with_capacity(stream.samples.len() * 8);
    match format {
        IqFormat::Cf32 => {
            for s in &stream.samples {
                buf.extend_from_slice(&(s.re as f32).to_le_bytes());
                buf.extend_from_slice(&(s.im as f32).to_le_bytes());
            }
        }
        IqFormat::Cu8 => {
            let q = |x: f64| (x * 127.5 + 127.5).round().clamp(0.0, 255.0) as u8;
            for s in &stream.samples {
                buf.push(q(s.re));
                buf.push(q(s.im));
            }
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    let meta = IqMeta {
        sample_rate_hz: stream.sample_rate,
        center_freq_hz: stream.center_freq,
        start_unix_s: stream.start_time + stream.first_sample as f64 / stream.sample_rate,
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// One row of the event log CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub tag_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub mean_freq_hz: f64,
    pub peak_snr_db: f64,
}

impl From<&TagEvent> for EventRow {
    fn from(e: &TagEvent) -> Self {
        Self {
            tag_id: e.tag_id.clone(),
            start_s: e.start_s,
            end_s: e.end_s,
            mean_freq_hz: e.mean_freq_hz,
            peak_snr_db: e.peak_snr_db,
        }
    }
}

pub fn write_events<W: std::io::Write>(w: W, events: &[TagEvent]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for e in events {
        wr.serialize(EventRow::from(e))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_events(path: &Path) -> Result<Vec<EventRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}
