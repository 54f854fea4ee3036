//! Receiver pipeline: IQ samples → spectrogram → SNR → tag events.

pub mod detect;
pub mod iqfile;
pub mod snr;
pub mod spectral;
pub mod stft;
pub mod synth;
pub mod window;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use detect::{detect_events, overlap_analysis, Band, DetectConfig, Overlap, TagEvent};
pub use snr::{estimate_snr, SnrEstimate};
pub use spectral::{synthesize_spectrogram, synthesize_spectrogram_capture};
pub use stft::{stft, Spectrogram};
pub use synth::{synthesize_iq, synthesize_iq_capture, Tone};
pub use window::{window_coefficients, WindowKind};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 2.56e6;
pub const DEFAULT_FFT_SIZE: usize = 4096;
/// Frames averaged per detection frame.
pub const DEFAULT_AVERAGES: usize = 16;
/// Power values are floored here so every bin stays finite.
pub const DB_FLOOR: f64 = -300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IqStream {
    pub sample_rate: f64,
    pub center_freq: f64,
    /// Time origin of the sample clock (wall clock for recorded files).
    pub start_time: f64,
    /// Index of the first sample on that clock; sample `n` of `samples`
    /// sits at `start_time + (first_sample + n) / sample_rate`.
    pub first_sample: u64,
    pub samples: Vec<Complex64>,
}

impl IqStream {
    pub fn new(sample_rate: f64, center_freq: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::invalid("IQ stream contains non-finite samples"));
        }
        Ok(Self {
            sample_rate,
            center_freq,
            start_time: 0.0,
            first_sample: 0,
            samples,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// A window `[start_sample, start_sample + len)` of an absolute sample timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capture {
    pub start_sample: u64,
    pub len: usize,
}

impl Capture {
    pub fn start_s(&self, rate: f64) -> f64 {
        self.start_sample as f64 / rate
    }

    pub fn end_sample(&self) -> u64 {
        self.start_sample + self.len as u64
    }
}

/// Everything the receiver needs besides the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverConfig {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub fft_size: usize,
    /// Raw STFT hop in samples; defaults to half the FFT size.
    pub hop: usize,
    pub window: WindowKind,
    pub averages: usize,
    /// Mean per-bin noise level in dB.
    pub noise_floor_db: f64,
    pub detect: DetectConfig,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            center_freq_hz: 580e6,
            fft_size: DEFAULT_FFT_SIZE,
            hop: DEFAULT_FFT_SIZE / 2,
            window: WindowKind::BlackmanHarris4,
            averages: DEFAULT_AVERAGES,
            noise_floor_db: -100.0,
            detect: DetectConfig::default(),
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::invalid("receiver sample rate must be positive"));
        }
        if self.fft_size < 16 || self.hop == 0 || self.averages == 0 {
            return Err(Error::invalid("fft_size ≥ 16, hop ≥ 1 and averages ≥ 1 are required"));
        }
        Ok(())
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_size as f64
    }

    /// Hop of the averaged detection frames, in seconds.
    pub fn detection_hop_s(&self) -> f64 {
        (self.hop * self.averages) as f64 / self.sample_rate_hz
    }

    pub fn span_hz(&self) -> (f64, f64) {
        (
            self.center_freq_hz - self.sample_rate_hz / 2.0,
            self.center_freq_hz + self.sample_rate_hz / 2.0,
        )
    }

    /// Samples per averaged detection frame.
    pub fn block_len(&self) -> usize {
        self.hop * self.averages
    }

    /// IQ synthesis → STFT → block averaging.
    pub fn spectrogram_from_iq(&self, stream: &IqStream) -> Result<Spectrogram> {
        Ok(stft(stream, self.fft_size, self.hop, self.window)?.averaged(self.averages))
    }
}
