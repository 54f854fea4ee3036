//! Peak-versus-neighbourhood SNR of one spectrogram frame.

use statrs::distribution::{ContinuousCDF, Gamma};

use super::stft::{from_db, to_db};
use super::DB_FLOOR;
use crate::error::{Error, Result};

/// Default half-width (bins) excluded around a peak.
pub const DEFAULT_GUARD: usize = 8;
/// Default half-width (bins) of the noise neighbourhood.
pub const DEFAULT_NEIGHBORHOOD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate {
    pub peak_bin: usize,
    /// Interpolated peak position in fractional bins.
    pub peak_pos: f64,
    pub peak_power: f64,
    pub noise_power: f64,
    pub snr: f64,
}

/// Ratio of median to mean for the power in a noise bin averaged over
/// `averages` independent periodograms (Gamma with shape `averages`).
pub fn median_to_mean(averages: usize) -> f64 {
    let k = averages.max(1) as f64;
    match Gamma::new(k, k) {
        Ok(g) => g.inverse_cdf(0.5),
        Err(_) => std::f64::consts::LN_2,
    }
}

/// Parabolic refinement in dB: (offset in bins, peak level).
pub fn refine_peak(frame_db: &[f64], k: usize) -> (f64, f64) {
    if k == 0 || k + 1 >= frame_db.len() {
        return (0.0, frame_db[k]);
    }
    let (a, b, c) = (frame_db[k - 1], frame_db[k], frame_db[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return (0.0, b);
    }
    let p = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (p, b - 0.25 * (a - c) * p)
}

/// Noise is the median of the bins within `neighborhood` of the peak but
/// outside `±guard`, scaled from median to mean for `averages`-frame data.
/// The peak bin holds signal plus noise, so the noise mean is subtracted
/// before taking the ratio.
pub fn estimate_snr(
    frame_db: &[f64],
    peak_bin: usize,
    guard: usize,
    neighborhood: usize,
    averages: usize,
) -> Result<SnrEstimate> {
    estimate_with_factor(frame_db, peak_bin, guard, neighborhood, median_to_mean(averages))
}

pub(crate) fn estimate_with_factor(
    frame_db: &[f64],
    peak_bin: usize,
    guard: usize,
    neighborhood: usize,
    median_factor: f64,
) -> Result<SnrEstimate> {
    let n = frame_db.len();
    if peak_bin >= n {
        return Err(Error::invalid(format!("peak bin {peak_bin} outside a {n}-bin frame")));
    }
    if guard >= n / 4 {
        return Err(Error::invalid(format!("guard {guard} must be below fft_size/4 = {}", n / 4)));
    }
    let lo = peak_bin.saturating_sub(neighborhood);
    let hi = (peak_bin + neighborhood + 1).min(n);
    let mut noise: Vec<f64> = (lo..hi)
        .filter(|&k| k.abs_diff(peak_bin) > guard)
        .map(|k| from_db(frame_db[k]))
        .collect();
    if noise.is_empty() {
        return Err(Error::invalid("noise neighbourhood is empty; widen it or shrink the guard"));
    }
    let mid = noise.len() / 2;
    let (_, m, _) = noise.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *m;
    let noise_lin = median / median_factor;
    let noise_power = to_db(noise_lin);
    let (pos, peak_power) = refine_peak(frame_db, peak_bin);
    let excess = from_db(peak_power) - noise_lin;
    let snr = if excess > 0.0 && noise_lin > 0.0 {
        to_db(excess / noise_lin)
    } else {
        DB_FLOOR
    };
    Ok(SnrEstimate {
        peak_bin,
        peak_pos: peak_bin as f64 + pos,
        peak_power,
        noise_power,
        snr,
    })
}

/// Index of the strongest bin in `[lo, hi)`.
pub fn find_peak(frame_db: &[f64], lo: usize, hi: usize) -> Option<usize> {
    (lo..hi.min(frame_db.len())).max_by(|&a, &b| frame_db[a].total_cmp(&frame_db[b]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_factor_for_single_frames_is_ln2() {
        assert!((median_to_mean(1) - std::f64::consts::LN_2).abs() < 1e-9);
        let f16 = median_to_mean(16);
        assert!(f16 < 1.0 && f16 > 0.95, "{f16}");
    }

    #[test]
    fn flat_frame_with_a_spike() {
        let mut f = vec![-50.0; 1024];
        f[500] = -10.0;
        let e = estimate_with_factor(&f, 500, 8, 256, 1.0).unwrap();
        // (S + N)/N = 10^4, so S/N = 10^4 − 1
        assert!((e.snr - 10.0 * 9999f64.log10()).abs() < 1e-9, "{e:?}");
        let single = estimate_snr(&f, 500, 8, 256, 1).unwrap();
        let n = 1e-5 / std::f64::consts::LN_2;
        assert!((single.snr - 10.0 * ((0.1 - n) / n).log10()).abs() < 1e-6);
        assert!(estimate_snr(&f, 500, 300, 256, 1).is_err());
    }

    #[test]
    fn second_tone_outside_guard_does_not_move_the_floor() {
        let mut f = vec![-50.0; 1024];
        f[500] = -10.0;
        let base = estimate_snr(&f, 500, 8, 256, 16).unwrap();
        f[600] = -10.0;
        let with = estimate_snr(&f, 500, 8, 256, 16).unwrap();
        assert!((base.snr - with.snr).abs() < 1e-9);
    }
}
