//! Deployment statistics: ground-truth matching, frequency statistics,
//! correlation, regression and per-interaction energy.

use std::collections::BTreeMap;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::iqfile::EventRow;
use crate::dsp::TagEvent;
use crate::error::{Error, Result};
use crate::harvest::Supercapacitor;
use crate::rng;

pub const DEFAULT_MATCH_WINDOW_S: f64 = 5.0;
/// Allowed gap between a modelled and a published energy percentage.
pub const ENERGY_TOLERANCE_PP: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub tag_id: String,
    pub timestamp_s: f64,
    pub stimulus: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct GroundTruthLog {
    pub entries: Vec<TruthEntry>,
    /// `(timestamp_s, lux)`.
    pub lux_trace: Vec<(f64, f64)>,
}

impl GroundTruthLog {
    pub fn new(entries: Vec<TruthEntry>, lux_trace: Vec<(f64, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[1].timestamp_s < w[0].timestamp_s) {
            return Err(Error::invalid("ground-truth timestamps must be non-decreasing"));
        }
        if lux_trace.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::invalid("lux trace timestamps must be non-decreasing"));
        }
        if lux_trace.iter().any(|&(_, l)| !(l >= 0.0)) {
            return Err(Error::invalid("lux values must be non-negative"));
        }
        Ok(Self { entries, lux_trace })
    }

    pub fn read(truth_csv: &Path, lux_csv: Option<&Path>) -> Result<Self> {
        let mut rd = csv::Reader::from_path(truth_csv)?;
        let entries: Vec<TruthEntry> = rd.deserialize().collect::<std::result::Result<_, _>>()?;
        let lux = match lux_csv {
            Some(p) => {
                #[derive(Deserialize)]
                struct Row {
                    timestamp_s: f64,
                    lux: f64,
                }
                let mut rd = csv::Reader::from_path(p)?;
                let rows: Vec<Row> = rd.deserialize().collect::<std::result::Result<_, _>>()?;
                rows.into_iter().map(|r| (r.timestamp_s, r.lux)).collect()
            }
            None => Vec::new(),
        };
        Self::new(entries, lux)
    }

    pub fn write_truth<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for e in &self.entries {
            wr.serialize(e)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn count(&self, tag_id: &str) -> usize {
        self.entries.iter().filter(|e| e.tag_id == tag_id).count()
    }
}

/// Anything with a tag and a start/end time.
pub trait Timed {
    fn tag_id(&self) -> &str;
    fn start_s(&self) -> f64;
    fn end_s(&self) -> f64;
}

impl Timed for TagEvent {
    fn tag_id(&self) -> &str {
        &self.tag_id
    }
    fn start_s(&self) -> f64 {
        self.start_s
    }
    fn end_s(&self) -> f64 {
        self.end_s
    }
}

impl Timed for EventRow {
    fn tag_id(&self) -> &str {
        &self.tag_id
    }
    fn start_s(&self) -> f64 {
        self.start_s
    }
    fn end_s(&self) -> f64 {
        self.end_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Match {
    pub truth: usize,
    pub detection: usize,
    /// Detection start minus interaction time.
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TagSummary {
    pub events_true: usize,
    pub events_detected: usize,
    pub misses: usize,
    pub false_positives: usize,
    pub mean_activation_s: Option<f64>,
    pub mean_on_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DetectionReport {
    pub per_tag: BTreeMap<String, TagSummary>,
    pub events_true: usize,
    pub events_detected: usize,
    pub misses: usize,
    pub false_positives: usize,
    /// Misses over true events, in percent; 0 when there is no truth.
    pub failure_rate_pct: f64,
    pub rate_defined: bool,
    pub matches: Vec<Match>,
}

/// Greedy one-to-one matching: candidate pairs share a tag and lie within
/// `window_s`; the globally closest pair is taken first.
pub fn match_events<E: Timed>(detected: &[E], truth: &GroundTruthLog, window_s: f64) -> Result<DetectionReport> {
    if !(window_s > 0.0) {
        return Err(Error::invalid("match window must be positive"));
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in truth.entries.iter().enumerate() {
        for (di, d) in detected.iter().enumerate() {
            let dt = d.start_s() - t.timestamp_s;
            if d.tag_id() == t.tag_id && dt.abs() <= window_s {
                pairs.push((dt.abs(), ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut t_used = vec![false; truth.entries.len()];
    let mut d_used = vec![false; detected.len()];
    let mut matches = Vec::new();
    for (_, ti, di) in pairs {
        if !t_used[ti] && !d_used[di] {
            t_used[ti] = true;
            d_used[di] = true;
            matches.push(Match {
                truth: ti,
                detection: di,
                delay_s: detected[di].start_s() - truth.entries[ti].timestamp_s,
            });
        }
    }
    matches.sort_by_key(|m| m.truth);

    let mut per_tag: BTreeMap<String, TagSummary> = BTreeMap::new();
    for t in &truth.entries {
        per_tag.entry(t.tag_id.clone()).or_default().events_true += 1;
    }
    for (di, d) in detected.iter().enumerate() {
        if !d_used[di] {
            per_tag.entry(d.tag_id().to_string()).or_default().false_positives += 1;
        }
    }
    let mut acc: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for m in &matches {
        let d = &detected[m.detection];
        let e = acc.entry(truth.entries[m.truth].tag_id.as_str()).or_default();
        e.0 += m.delay_s;
        e.1 += d.end_s() - d.start_s();
        e.2 += 1;
    }
    for (tag, s) in per_tag.iter_mut() {
        if let Some(&(act, on, n)) = acc.get(tag.as_str()) {
            s.events_detected = n;
            s.mean_activation_s = Some(act / n as f64);
            s.mean_on_time_s = Some(on / n as f64);
        }
        s.misses = s.events_true - s.events_detected;
    }
    let events_true = truth.entries.len();
    let events_detected = matches.len();
    let misses = events_true - events_detected;
    let rate_defined = events_true > 0;
    Ok(DetectionReport {
        events_true,
        events_detected,
        misses,
        false_positives: detected.len() - events_detected,
        failure_rate_pct: if rate_defined {
            misses as f64 / events_true as f64 * 100.0
        } else {
            0.0
        },
        rate_defined,
        per_tag,
        matches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// `max − min`.
    pub bandwidth: f64,
    /// `sd / mean · 100`.
    pub cv: f64,
}

pub fn frequency_stats(series: &[f64]) -> Result<FrequencyStats> {
    if series.is_empty() {
        return Err(Error::invalid("frequency series is empty"));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FrequencyStats {
        n,
        mean,
        sd,
        min,
        max,
        bandwidth: max - min,
        cv: if mean != 0.0 { sd / mean.abs() * 100.0 } else { 0.0 },
    })
}

fn centered(x: &[f64]) -> (Vec<f64>, f64) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let ss = c.iter().map(|v| v * v).sum();
    (c, ss)
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("series must have equal length ≥ 2"));
    }
    let (cx, sx) = centered(x);
    let (cy, sy) = centered(y);
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::invalid("both series need non-zero variance"));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sx * sy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares with `R² = 1 − SS_res / SS_tot`.
pub fn regression_fit(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("series must have equal length ≥ 2"));
    }
    let (cx, sxx) = centered(x);
    let (cy, syy) = centered(y);
    if sxx == 0.0 {
        return Err(Error::invalid("x has zero variance"));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - (intercept + slope * a)).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyInput {
    pub tag_id: String,
    pub on_time_s: f64,
    pub published_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub tag_id: String,
    pub on_time_s: f64,
    pub percent: f64,
    pub published_pct: Option<f64>,
    /// The published figure is not reproduced by `½CV²` accounting.
    pub model_mismatch: bool,
}

/// `P·t_on / (½CV²) · 100` per tag.
pub fn energy_report(inputs: &[EnergyInput], cap: &Supercapacitor, tdo_power_w: f64) -> Result<Vec<EnergyRow>> {
    if !(cap.energy() > 0.0) {
        return Err(Error::invalid("capacitor holds no energy"));
    }
    Ok(inputs
        .iter()
        .map(|i| {
            let percent = cap.energy_percent(tdo_power_w, i.on_time_s);
            EnergyRow {
                tag_id: i.tag_id.clone(),
                on_time_s: i.on_time_s,
                percent,
                published_pct: i.published_pct,
                model_mismatch: i.published_pct.is_some_and(|p| (p - percent).abs() > ENERGY_TOLERANCE_PP),
            }
        })
        .collect())
}

/// Seed of the shipped paired-series fixture.
pub const CORRELATION_SEED: u64 = 20_250_612;
pub const CORRELATION_TARGET_R: f64 = 0.12;

/// Two series of length `n` with sample correlation exactly `r`, built by
/// Gram-Schmidt from seeded Gaussian draws and then scaled to the requested
/// means and sample SDs.
pub fn synthesize_correlated(
    n: usize,
    r: f64,
    seed: u64,
    (mean_a, sd_a): (f64, f64),
    (mean_b, sd_b): (f64, f64),
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 3 || !(-1.0..=1.0).contains(&r) {
        return Err(Error::invalid("need n ≥ 3 and r in [-1, 1]"));
    }
    let mut g = rng::stream(seed, &[]);
    let mut draw = || -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut g)).collect() };
    let (a, saa) = centered(&draw());
    let (z, _) = centered(&draw());
    let az: f64 = a.iter().zip(&z).map(|(x, y)| x * y).sum();
    let e: Vec<f64> = z.iter().zip(&a).map(|(zi, ai)| zi - az / saa * ai).collect();
    let see: f64 = e.iter().map(|v| v * v).sum();
    let ua: Vec<f64> = a.iter().map(|v| v / saa.sqrt()).collect();
    let ue: Vec<f64> = e.iter().map(|v| v / see.sqrt()).collect();
    let b: Vec<f64> = ua.iter().zip(&ue).map(|(x, y)| r * x + (1.0 - r * r).sqrt() * y).collect();
    let scale = ((n - 1) as f64).sqrt();
    Ok((
        ua.iter().map(|v| mean_a + sd_a * scale * v).collect(),
        b.iter().map(|v| mean_b + sd_b * scale * v).collect(),
    ))
}

/// The shipped paired series: `(series_a_mhz, series_b_mhz)`.
pub fn load_correlation_series() -> Result<(Vec<f64>, Vec<f64>)> {
    #[derive(Deserialize)]
    struct Row {
        #[allow(dead_code)]
        pair: usize,
        series_a_mhz: f64,
        series_b_mhz: f64,
    }
    let rows: Vec<Row> = crate::fixtures::load_csv(crate::fixtures::CORRELATION_SERIES)?;
    Ok(rows.into_iter().map(|r| (r.series_a_mhz, r.series_b_mhz)).unzip())
}

/// CSV text of the paired-series fixture, regenerated from [`CORRELATION_SEED`].
pub fn correlation_fixture_text() -> Result<String> {
    let (a, b) = synthesize_correlated(19, CORRELATION_TARGET_R, CORRELATION_SEED, (511.71, 0.30), (512.52, 0.27))?;
    let mut s = format!(
        "# Synthesized paired tag-frequency series (not measured data): trash-can (a) and soap-dispenser (b)\n\
         # frequencies in MHz with sample correlation 0.12, generated by Gram-Schmidt from seed {CORRELATION_SEED}.\n\
         pair,series_a_mhz,series_b_mhz\n"
    );
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        s.push_str(&format!("{i},{x:.6},{y:.6}\n"));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev(tag: &str, start: f64) -> EventRow {
        EventRow {
            tag_id: tag.into(),
            start_s: start,
            end_s: start + 2.0,
            mean_freq_hz: 5e8,
            peak_snr_db: 20.0,
        }
    }

    fn truth(items: &[(&str, f64)]) -> GroundTruthLog {
        GroundTruthLog::new(
            items
                .iter()
                .map(|&(t, ts)| TruthEntry {
                    tag_id: t.into(),
                    timestamp_s: ts,
                    stimulus: "press".into(),
                })
                .collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn matching_counts_misses_and_false_positives() {
        let t = truth(&[("soap", 10.0), ("oven", 50.0), ("soap", 100.0)]);
        let d = vec![ev("soap", 10.5), ev("oven", 50.9), ev("oven", 500.0)];
        let r = match_events(&d, &t, 5.0).unwrap();
        assert_eq!(r.events_detected, 2);
        assert_eq!(r.misses, 1);
        assert_eq!(r.false_positives, 1);
        assert_relative_eq!(r.failure_rate_pct, 100.0 / 3.0);
        assert_eq!(r.per_tag["soap"].misses, 1);
        assert_relative_eq!(r.per_tag["oven"].mean_activation_s.unwrap(), 0.9, max_relative = 1e-9);
    }

    #[test]
    fn empty_truth_flags_undefined_rate() {
        let r = match_events::<EventRow>(&[], &GroundTruthLog::default(), 5.0).unwrap();
        assert!(!r.rate_defined);
        assert_eq!(r.failure_rate_pct, 0.0);
    }

    #[test]
    fn stats_basics() {
        let s = frequency_stats(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((s.sd, s.cv, s.bandwidth), (0.0, 0.0, 0.0));
        let s = frequency_stats(&[1.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.bandwidth, 4.0);
        assert!(frequency_stats(&[]).is_err());
    }

    #[test]
    fn pearson_extremes() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_relative_eq!(pearson_correlation(&x, &x).unwrap(), 1.0);
        assert_relative_eq!(pearson_correlation(&x, &neg).unwrap(), -1.0);
        assert!(pearson_correlation(&x, &[1.0; 4]).is_err());
    }

    #[test]
    fn regression_on_a_line() {
        let x = [500.0, 600.0, 700.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = regression_fit(&x, &y).unwrap();
        assert_relative_eq!(f.slope, -0.5, max_relative = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0);
        assert!(regression_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn energy_rows_and_mismatch_flag() {
        let cap = Supercapacitor::switch(1.0).unwrap();
        let rows = energy_report(
            &[
                EnergyInput {
                    tag_id: "soap".into(),
                    on_time_s: 2.0,
                    published_pct: Some(0.43),
                },
                EnergyInput {
                    tag_id: "trash".into(),
                    on_time_s: 3.0,
                    published_pct: Some(1.07),
                },
                EnergyInput {
                    tag_id: "idle".into(),
                    on_time_s: 0.0,
                    published_pct: None,
                },
            ],
            &cap,
            50e-6,
        )
        .unwrap();
        assert!(!rows[0].model_mismatch);
        assert!(rows[1].model_mismatch);
        assert_eq!(rows[2].percent, 0.0);
    }

    #[test]
    fn correlated_synthesis_hits_r_exactly() {
        let (a, b) = synthesize_correlated(19, 0.12, 7, (511.71, 0.3), (512.52, 0.27)).unwrap();
        assert_relative_eq!(pearson_correlation(&a, &b).unwrap(), 0.12, max_relative = 1e-9);
        let s = frequency_stats(&b).unwrap();
        assert_relative_eq!(s.sd, 0.27, max_relative = 1e-9);
    }

    #[test]
    fn shipped_fixture_matches_its_generator() {
        let shipped = crate::fixtures::read(crate::fixtures::CORRELATION_SERIES).unwrap();
        assert_eq!(shipped, correlation_fixture_text().unwrap());
    }
}
