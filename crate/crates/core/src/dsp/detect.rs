//! Band-assigned peak tracking with debounced open/close.

use serde::{Deserialize, Serialize};

use super::snr::{estimate_with_factor, median_to_mean, DEFAULT_GUARD, DEFAULT_NEIGHBORHOOD};
use super::stft::Spectrogram;
use crate::error::{Error, Result};

/// Frequency band owned by one tag, half-open `[lo_hz, hi_hz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub tag_id: String,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl Band {
    pub fn new(tag_id: impl Into<String>, lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if !(lo_hz < hi_hz) {
            return Err(Error::invalid(format!("band [{lo_hz}, {hi_hz}) is empty")));
        }
        Ok(Self {
            tag_id: tag_id.into(),
            lo_hz,
            hi_hz,
        })
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo_hz && f < self.hi_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub threshold_db: f64,
    /// Consecutive frames needed to open and to close an event.
    pub debounce: usize,
    pub guard_bins: usize,
    pub neighborhood_bins: usize,
    /// A candidate peak must be the maximum within this many bins.
    pub peak_halfwidth: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            threshold_db: 5.0,
            debounce: 3,
            guard_bins: DEFAULT_GUARD,
            neighborhood_bins: DEFAULT_NEIGHBORHOOD,
            peak_halfwidth: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagEvent {
    pub tag_id: String,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub start_s: f64,
    pub end_s: f64,
    pub mean_freq_hz: f64,
    pub peak_snr_db: f64,
    /// Time at which the open decision became available.
    pub detected_at_s: f64,
}

impl TagEvent {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    frame: usize,
    snr: f64,
    freq: f64,
}

/// Strongest qualifying peak of `band` in one frame.
fn band_peak(sp: &Spectrogram, frame: &[f64], band: &Band, cfg: &DetectConfig, factor: f64) -> Result<Option<Hit>> {
    let n = frame.len();
    let lo = sp.freq_bin(band.lo_hz).floor().max(1.0) as usize - 1;
    let hi = ((sp.freq_bin(band.hi_hz).ceil() + 2.0) as usize).min(n);
    let hw = cfg.peak_halfwidth;
    let mut best: Option<(usize, f64)> = None;
    for k in lo.max(1)..hi.min(n - 1) {
        let v = frame[k];
        if !(v > frame[k - 1] && v >= frame[k + 1]) {
            continue;
        }
        let a = k.saturating_sub(hw);
        let b = (k + hw + 1).min(n);
        if frame[a..b].iter().any(|&x| x > v) {
            continue;
        }
        let (off, _) = super::snr::refine_peak(frame, k);
        if !band.contains(sp.bin_freq(k as f64 + off)) {
            continue;
        }
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    let Some((k, _)) = best else { return Ok(None) };
    let est = estimate_with_factor(frame, k, cfg.guard_bins, cfg.neighborhood_bins, factor)?;
    Ok(Some(Hit {
        frame: 0,
        snr: est.snr,
        freq: sp.bin_freq(est.peak_pos),
    }))
}

struct Tracker<'a> {
    band: &'a Band,
    run: Vec<Hit>,
    open: Option<Open>,
}

struct Open {
    hits: Vec<Hit>,
    below: usize,
    detected_at: f64,
}

impl Tracker<'_> {
    fn close(&mut self, sp: &Spectrogram, out: &mut Vec<TagEvent>) {
        if let Some(o) = self.open.take() {
            let first = o.hits[0];
            let last = o.hits[o.hits.len() - 1];
            out.push(TagEvent {
                tag_id: self.band.tag_id.clone(),
                band_lo_hz: self.band.lo_hz,
                band_hi_hz: self.band.hi_hz,
                start_s: sp.frame_time(first.frame),
                end_s: sp.frame_time(last.frame) + sp.hop_s(),
                mean_freq_hz: o.hits.iter().map(|h| h.freq).sum::<f64>() / o.hits.len() as f64,
                peak_snr_db: o.hits.iter().map(|h| h.snr).fold(f64::NEG_INFINITY, f64::max),
                detected_at_s: o.detected_at,
            });
        }
    }
}

/// Events per band. A band opens after `debounce` consecutive frames at or
/// above the threshold (start = first of those frames) and closes after
/// `debounce` consecutive frames below it (end = one hop past the last
/// frame above).
pub fn detect_events(sp: &Spectrogram, bands: &[Band], cfg: &DetectConfig) -> Result<Vec<TagEvent>> {
    if bands.is_empty() {
        return Err(Error::invalid("at least one band is required"));
    }
    let lo = sp.bin_freq(0.0);
    let hi = sp.bin_freq(sp.fft_size as f64);
    for b in bands {
        if b.lo_hz < lo || b.hi_hz > hi || !(b.lo_hz < b.hi_hz) {
            return Err(Error::invalid(format!(
                "band `{}` [{}, {}) is not inside the spectrogram span [{lo}, {hi})",
                b.tag_id, b.lo_hz, b.hi_hz
            )));
        }
    }
    let debounce = cfg.debounce.max(1);
    let factor = median_to_mean(sp.averages);
    let mut trackers: Vec<Tracker> = bands
        .iter()
        .map(|band| Tracker {
            band,
            run: Vec::new(),
            open: None,
        })
        .collect();
    let mut out = Vec::new();
    for (i, frame) in sp.frames.iter().enumerate() {
        for tr in trackers.iter_mut() {
            let hit = band_peak(sp, frame, tr.band, cfg, factor)?
                .filter(|h| h.snr >= cfg.threshold_db)
                .map(|h| Hit { frame: i, ..h });
            match (&mut tr.open, hit) {
                (Some(o), Some(h)) => {
                    o.below = 0;
                    o.hits.push(h);
                }
                (Some(o), None) => {
                    o.below += 1;
                    if o.below >= debounce {
                        tr.close(sp, &mut out);
                    }
                }
                (None, Some(h)) => {
                    tr.run.push(h);
                    if tr.run.len() >= debounce {
                        tr.open = Some(Open {
                            hits: std::mem::take(&mut tr.run),
                            below: 0,
                            detected_at: sp.frame_time(i) + sp.span_s(),
                        });
                    }
                }
                (None, None) => tr.run.clear(),
            }
        }
    }
    for tr in trackers.iter_mut() {
        tr.close(sp, &mut out);
    }
    out.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then_with(|| a.tag_id.cmp(&b.tag_id)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overlap {
    pub a: String,
    pub b: String,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

/// Non-empty pairwise intersections under half-open semantics.
pub fn overlap_analysis(bands: &[Band]) -> Vec<Overlap> {
    let mut out = Vec::new();
    for (i, x) in bands.iter().enumerate() {
        for y in &bands[i + 1..] {
            let lo = x.lo_hz.max(y.lo_hz);
            let hi = x.hi_hz.min(y.hi_hz);
            if lo < hi {
                out.push(Overlap {
                    a: x.tag_id.clone(),
                    b: y.tag_id.clone(),
                    lo_hz: lo,
                    hi_hz: hi,
                });
            }
        }
    }
    out
}
