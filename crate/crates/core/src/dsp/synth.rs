//! Ground-truth IQ generator.
//!
//! Levels are referenced to the receiver's spectrogram: a tone of
//! `power_db` centred on a bin reads `power_db`, and noise bins average
//! `noise_floor_db`, whatever window and FFT size the receiver uses.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::window::{window_coefficients, window_sums};
use super::{Capture, IqStream, ReceiverConfig};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub freq_hz: f64,
    pub power_db: f64,
    pub start_s: f64,
    pub end_s: f64,
}

const CHUNK: usize = 1 << 16;

/// Sample indices `[a, b)` whose time `n / rate` falls in `[start, end)`.
pub fn tone_sample_range(start_s: f64, end_s: f64, rate: f64, len: usize) -> (usize, usize) {
    let (a, b) = tone_span(start_s, end_s, rate);
    let a = (a.min(len as u64)) as usize;
    let b = (b.min(len as u64)) as usize;
    (a, b.max(a))
}

/// Absolute sample span `[a, b)` of a tone.
pub fn tone_span(start_s: f64, end_s: f64, rate: f64) -> (u64, u64) {
    let idx = |t: f64| (t * rate).ceil().max(0.0) as u64;
    let a = idx(start_s);
    (a, idx(end_s).max(a))
}

/// Complex noise variance that reads `noise_floor_db` per bin.
pub fn noise_variance(noise_floor_db: f64, w: &[f64]) -> f64 {
    let (s1, s2) = window_sums(w);
    10f64.powf(noise_floor_db / 10.0) * s1 * s1 / s2
}

pub(crate) fn check_tones(tones: &[Tone], rx: &ReceiverConfig) -> Result<()> {
    let rate = rx.sample_rate_hz;
    for t in tones {
        let off = t.freq_hz - rx.center_freq_hz;
        if off.abs() >= rate / 2.0 {
            return Err(Error::invalid(format!(
                "tone at {} Hz lies outside the ±{} Hz capture span",
                t.freq_hz,
                rate / 2.0
            )));
        }
    }
    Ok(())
}

pub fn synthesize_iq(
    tones: &[Tone],
    noise_floor_db: f64,
    duration_s: f64,
    rx: &ReceiverConfig,
    seed: u64,
) -> Result<IqStream> {
    if !(duration_s > 0.0) {
        return Err(Error::invalid("duration must be positive"));
    }
    let len = (duration_s * rx.sample_rate_hz).round() as usize;
    synthesize_iq_capture(tones, noise_floor_db, Capture { start_sample: 0, len }, rx, seed)
}

/// IQ samples for one capture window of a longer timeline. Noise and tone
/// phase depend only on absolute sample indices, so any capture equals the
/// matching slice of a capture that starts at zero.
pub fn synthesize_iq_capture(
    tones: &[Tone],
    noise_floor_db: f64,
    capture: Capture,
    rx: &ReceiverConfig,
    seed: u64,
) -> Result<IqStream> {
    rx.validate()?;
    check_tones(tones, rx)?;
    if capture.len == 0 {
        return Err(Error::invalid("capture is empty"));
    }
    let rate = rx.sample_rate_hz;
    let s0 = capture.start_sample;
    let w = window_coefficients(rx.window, rx.fft_size)?;
    let sigma = (noise_variance(noise_floor_db, &w) / 2.0).sqrt();
    let mut samples = vec![Complex64::new(0.0, 0.0); capture.len];
    let mut pieces: Vec<(u64, &mut [Complex64])> = Vec::new();
    let mut rest: &mut [Complex64] = &mut samples;
    let mut pos = s0;
    while !rest.is_empty() {
        let room = (CHUNK as u64 - pos % CHUNK as u64) as usize;
        let (head, tail) = rest.split_at_mut(room.min(rest.len()));
        let l = head.len() as u64;
        pieces.push((pos, head));
        pos += l;
        rest = tail;
    }
    pieces.into_par_iter().for_each(|(abs, piece)| {
        let chunk = abs / CHUNK as u64;
        let mut r = rng::stream(seed, &[chunk]);
        for _ in 0..(abs % CHUNK as u64) * 2 {
            let _: f64 = StandardNormal.sample(&mut r);
        }
        for s in piece.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            *s = Complex64::new(re * sigma, im * sigma);
        }
    });
    let end = s0 + capture.len as u64;
    for t in tones {
        let amp = 10f64.powf(t.power_db / 20.0);
        let cycles_per_sample = (t.freq_hz - rx.center_freq_hz) / rate;
        let (ta, tb) = tone_span(t.start_s, t.end_s, rate);
        let (a, b) = (ta.max(s0), tb.min(end));
        if a >= b {
            continue;
        }
        samples[(a - s0) as usize..(b - s0) as usize]
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, s)| {
                let m = (a - ta) as f64 + i as f64;
                let phase = (cycles_per_sample * m).fract();
                *s += Complex64::from_polar(amp, TAU * phase);
            });
    }
    Ok(IqStream {
        sample_rate: rate,
        center_freq: rx.center_freq_hz,
        start_time: 0.0,
        first_sample: s0,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft::stft;

    #[test]
    fn deterministic_for_a_seed() {
        let rx = ReceiverConfig::default();
        let a = synthesize_iq(&[], -50.0, 0.01, &rx, 3).unwrap();
        let b = synthesize_iq(&[], -50.0, 0.01, &rx, 3).unwrap();
        let c = synthesize_iq(&[], -50.0, 0.01, &rx, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pure_noise_is_flat_within_3_db() {
        let rx = ReceiverConfig::default();
        let st = synthesize_iq(&[], -60.0, 0.5, &rx, 11).unwrap();
        let sp = stft(&st, rx.fft_size, rx.hop, rx.window).unwrap();
        let n = sp.len() as f64;
        // mean over frames per bin, then check the spread of the means in 64-bin groups
        let means: Vec<f64> = (0..rx.fft_size)
            .map(|k| (0..sp.len()).map(|i| 10f64.powf(sp.frames[i][k] / 10.0)).sum::<f64>() / n)
            .collect();
        for g in means.chunks(64) {
            let db = 10.0 * (g.iter().sum::<f64>() / 64.0).log10();
            assert!((db + 60.0).abs() < 3.0, "{db}");
        }
    }

    #[test]
    fn capture_equals_slice_of_full_run() {
        let rx = ReceiverConfig::default();
        let t = Tone {
            freq_hz: rx.center_freq_hz + 50e3,
            power_db: -40.0,
            start_s: 0.01,
            end_s: 0.05,
        };
        let full = synthesize_iq(&[t], -60.0, 0.06, &rx, 9).unwrap();
        let cap = Capture {
            start_sample: 70_001,
            len: 40_000,
        };
        let part = synthesize_iq_capture(&[t], -60.0, cap, &rx, 9).unwrap();
        assert_eq!(&full.samples[70_001..110_001], &part.samples[..]);
        assert_eq!(part.first_sample, 70_001);
    }

    #[test]
    fn out_of_span_tone_is_rejected() {
        let rx = ReceiverConfig::default();
        let t = Tone {
            freq_hz: rx.center_freq_hz + 2e6,
            power_db: 0.0,
            start_s: 0.0,
            end_s: 1.0,
        };
        assert!(synthesize_iq(&[t], -50.0, 0.01, &rx, 1).is_err());
    }
}
