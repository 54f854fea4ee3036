//! Spectral mode: build the averaged detection spectrogram directly from a
//! tone list, skipping IQ synthesis.
//!
//! The noise floor is flat at its mean level. Each tone adds the window's
//! power kernel around its fractional bin, scaled by how much of each raw
//! frame the tone covers (coherent partial-window gain, squared, averaged
//! over the frames of a block).

use rayon::prelude::*;

use super::stft::{to_db, Spectrogram};
use super::synth::{check_tones, tone_span, Tone};
use super::window::{kernel_power, window_coefficients};
use super::{Capture, ReceiverConfig};
use crate::error::{Error, Result};

/// Bins on each side of a tone that receive kernel power.
pub const KERNEL_HALFWIDTH: i64 = 8;

struct Prepared {
    /// Kernel power for bins `floor(pos) − H ..= floor(pos) + H + 1`.
    kernel: Vec<(i64, f64)>,
    amp2: f64,
    a: u64,
    b: u64,
}

pub fn synthesize_spectrogram(
    tones: &[Tone],
    noise_floor_db: f64,
    duration_s: f64,
    rx: &ReceiverConfig,
) -> Result<Spectrogram> {
    let len = (duration_s * rx.sample_rate_hz).round() as usize;
    synthesize_spectrogram_capture(tones, noise_floor_db, Capture { start_sample: 0, len }, rx)
}

/// Averaged spectrogram of one capture window; frame `i` starts at sample
/// `start_sample + i·hop·averages`.
pub fn synthesize_spectrogram_capture(
    tones: &[Tone],
    noise_floor_db: f64,
    capture: Capture,
    rx: &ReceiverConfig,
) -> Result<Spectrogram> {
    rx.validate()?;
    check_tones(tones, rx)?;
    let rate = rx.sample_rate_hz;
    let n = rx.fft_size;
    let len = capture.len;
    if len < n {
        return Err(Error::invalid("capture is shorter than one FFT frame"));
    }
    let s0 = capture.start_sample;
    let w = window_coefficients(rx.window, n)?;
    let sum_w: f64 = w.iter().sum();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for &x in &w {
        cum.push(cum.last().unwrap() + x);
    }
    let bin_hz = rate / n as f64;
    let prepared: Vec<Prepared> = tones
        .iter()
        .filter_map(|t| {
            let (a, b) = tone_span(t.start_s, t.end_s, rate);
            if b <= s0 || a >= capture.end_sample() || a == b {
                return None;
            }
            let pos = (t.freq_hz - rx.center_freq_hz) / bin_hz + (n / 2) as f64;
            let base = pos.floor() as i64;
            let kernel = (base - KERNEL_HALFWIDTH..=base + KERNEL_HALFWIDTH + 1)
                .filter(|&k| k >= 0 && (k as usize) < n)
                .map(|k| (k, kernel_power(&w, pos - k as f64)))
                .collect();
            Some(Prepared {
                kernel,
                amp2: 10f64.powf(t.power_db / 10.0),
                a,
                b,
            })
        })
        .collect();
    let raw_frames = (len - n) / rx.hop + 1;
    let k_avg = rx.averages.max(1);
    let blocks = raw_frames / k_avg;
    let floor = 10f64.powf(noise_floor_db / 10.0);
    let frames = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut lin = vec![floor; n];
            for p in &prepared {
                let mut gain = 0.0;
                for j in blk * k_avg..(blk + 1) * k_avg {
                    let s = s0 + (j * rx.hop) as u64;
                    let lo = p.a.max(s);
                    let hi = p.b.min(s + n as u64);
                    if lo < hi {
                        let c = (cum[(hi - s) as usize] - cum[(lo - s) as usize]) / sum_w;
                        gain += c * c;
                    }
                }
                if gain > 0.0 {
                    let scale = p.amp2 * gain / k_avg as f64;
                    for &(k, kp) in &p.kernel {
                        lin[k as usize] += scale * kp;
                    }
                }
            }
            lin.into_iter().map(to_db).collect()
        })
        .collect();
    Ok(Spectrogram {
        fft_size: n,
        hop: rx.hop * k_avg,
        span: n + (k_avg - 1) * rx.hop,
        sample_rate: rate,
        center_freq: rx.center_freq_hz,
        start_time: 0.0,
        first_sample: capture.start_sample,
        averages: k_avg,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_tone_reads_its_level() {
        let rx = ReceiverConfig::default();
        let bin = rx.bin_hz();
        let t = Tone {
            freq_hz: rx.center_freq_hz + 160.0 * bin,
            power_db: -60.0,
            start_s: 0.0,
            end_s: 1.0,
        };
        let sp = synthesize_spectrogram(&[t], -100.0, 0.5, &rx).unwrap();
        let k = rx.fft_size / 2 + 160;
        for f in &sp.frames {
            assert!((f[k] + 60.0).abs() < 1e-3, "{}", f[k]);
            assert!((f[10] + 100.0).abs() < 1e-9);
        }
    }
}
