use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::window::{window_coefficients, WindowKind};
use super::{IqStream, DB_FLOOR};
use crate::error::{Error, Result};

/// Time-ordered power spectra, bins in ascending frequency (DC in the middle).
///
/// Bin power is `|X_k|² / (Σw)²`, so a complex exponential of amplitude `A`
/// centred on a bin reads `A²` regardless of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub fft_size: usize,
    /// Samples between consecutive frames.
    pub hop: usize,
    /// Samples covered by one frame.
    pub span: usize,
    pub sample_rate: f64,
    pub center_freq: f64,
    pub start_time: f64,
    /// Sample index of the first frame's first sample, from `start_time`.
    pub first_sample: u64,
    /// Raw periodograms averaged into each frame.
    pub averages: usize,
    pub frames: Vec<Vec<f64>>,
}

pub fn to_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Spectrogram {
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    /// Absolute frequency of bin `k` (may be fractional).
    pub fn bin_freq(&self, k: f64) -> f64 {
        self.center_freq + (k - (self.fft_size / 2) as f64) * self.bin_hz()
    }

    /// Fractional bin position of an absolute frequency.
    pub fn freq_bin(&self, f: f64) -> f64 {
        (f - self.center_freq) / self.bin_hz() + (self.fft_size / 2) as f64
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_time(&self, i: usize) -> f64 {
        // integer sample index first, so a frame's time does not depend on
        // where the capture started
        self.start_time + (self.first_sample + (i * self.hop) as u64) as f64 / self.sample_rate
    }

    pub fn hop_s(&self) -> f64 {
        self.hop as f64 / self.sample_rate
    }

    pub fn span_s(&self) -> f64 {
        self.span as f64 / self.sample_rate
    }

    pub fn frame_linear(&self, i: usize) -> Vec<f64> {
        self.frames[i].iter().map(|&d| from_db(d)).collect()
    }

    /// Average consecutive blocks of `k` frames in linear power; a trailing
    /// partial block is dropped.
    pub fn averaged(&self, k: usize) -> Spectrogram {
        let k = k.max(1);
        if k == 1 {
            return self.clone();
        }
        let n = self.fft_size;
        let frames = self
            .frames
            .par_chunks_exact(k)
            .map(|block| {
                (0..n)
                    .map(|b| to_db(block.iter().map(|f| from_db(f[b])).sum::<f64>() / k as f64))
                    .collect()
            })
            .collect();
        Spectrogram {
            fft_size: n,
            hop: self.hop * k,
            span: self.span + (k - 1) * self.hop,
            sample_rate: self.sample_rate,
            center_freq: self.center_freq,
            start_time: self.start_time,
            first_sample: self.first_sample,
            averages: self.averages * k,
            frames,
        }
    }
}

/// Windowed short-time Fourier transform of `stream`.
pub fn stft(stream: &IqStream, fft_size: usize, hop: usize, window: WindowKind) -> Result<Spectrogram> {
    if fft_size == 0 || hop == 0 {
        return Err(Error::invalid("fft_size and hop must be positive"));
    }
    if stream.samples.len() < fft_size {
        return Err(Error::invalid(format!(
            "stream has {} samples, fewer than one {fft_size}-point frame",
            stream.samples.len()
        )));
    }
    let w = window_coefficients(window, fft_size)?;
    let sum_w: f64 = w.iter().sum();
    let norm = 1.0 / (sum_w * sum_w);
    let n_frames = (stream.samples.len() - fft_size) / hop + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let half = fft_size / 2;
    let frames = (0..n_frames)
        .into_par_iter()
        .map_init(
            || (vec![Complex64::new(0.0, 0.0); fft_size], vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()]),
            |(buf, scratch), i| {
                let s = &stream.samples[i * hop..i * hop + fft_size];
                for ((b, &x), &wk) in buf.iter_mut().zip(s).zip(&w) {
                    *b = x * wk;
                }
                fft.process_with_scratch(buf, scratch);
                (0..fft_size).map(|k| to_db(buf[(k + half) % fft_size].norm_sqr() * norm)).collect()
            },
        )
        .collect();
    Ok(Spectrogram {
        fft_size,
        hop,
        span: fft_size,
        sample_rate: stream.sample_rate,
        center_freq: stream.center_freq,
        start_time: stream.start_time,
        first_sample: stream.first_sample,
        averages: 1,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::window::window_sums;

    fn tone_stream(off_hz: f64, n: usize) -> IqStream {
        let rate = 2.56e6;
        let s = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * off_hz * i as f64 / rate))
            .collect();
        IqStream::new(rate, 580e6, s).unwrap()
    }

    #[test]
    fn bin_layout_puts_dc_in_the_middle() {
        let sp = stft(&tone_stream(0.0, 4096), 4096, 2048, WindowKind::BlackmanHarris4).unwrap();
        let f = &sp.frames[0];
        let peak = (0..4096).max_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap();
        assert_eq!(peak, 2048);
        assert!(f[peak].abs() < 1e-9, "{}", f[peak]);
        assert_eq!(sp.bin_hz(), 625.0);
    }

    #[test]
    fn parseval_holds_per_frame() {
        let st = tone_stream(100e3, 8192);
        let sp = stft(&st, 4096, 4096, WindowKind::BlackmanHarris4).unwrap();
        let w = window_coefficients(WindowKind::BlackmanHarris4, 4096).unwrap();
        let (sw, _) = window_sums(&w);
        for (i, _) in sp.frames.iter().enumerate() {
            let freq: f64 = sp.frame_linear(i).iter().sum::<f64>() * sw * sw / 4096.0;
            let time: f64 = st.samples[i * 4096..(i + 1) * 4096]
                .iter()
                .zip(&w)
                .map(|(x, wk)| (x * wk).norm_sqr())
                .sum();
            assert!((freq - time).abs() / time < 1e-9);
        }
    }

    #[test]
    fn short_stream_is_rejected() {
        assert!(stft(&tone_stream(0.0, 100), 4096, 2048, WindowKind::Rectangular).is_err());
    }

    #[test]
    fn averaging_tracks_hop_and_span() {
        let sp = stft(&tone_stream(0.0, 4096 * 9), 4096, 2048, WindowKind::Rectangular).unwrap();
        let av = sp.averaged(4);
        assert_eq!(av.len(), sp.len() / 4);
        assert_eq!(av.hop, 8192);
        assert_eq!(av.span, 4096 + 3 * 2048);
        assert_eq!(av.averages, 4);
    }
}
