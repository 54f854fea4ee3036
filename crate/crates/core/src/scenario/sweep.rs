//! Parameter sweeps: one run per value of a JSON-pointer-addressed field.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::config::Scenario;
use super::engine::run;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: String,
    pub events_true: usize,
    pub events_detected: usize,
    pub false_positives: usize,
    pub failure_rate_pct: f64,
    pub mean_peak_snr_db: Option<f64>,
    pub mean_freq_hz: Option<f64>,
}

/// Copy of `template` with the field at `pointer` (RFC 6901, e.g.
/// `/tags/0/placement/distance_m`) set to `value`.
pub fn with_parameter(template: &Scenario, pointer: &str, value: &Value) -> Result<Scenario> {
    let mut doc = serde_json::to_value(template)?;
    let slot = doc
        .pointer_mut(pointer)
        .ok_or_else(|| Error::invalid(format!("parameter `{pointer}` is not addressable in the scenario")))?;
    *slot = value.clone();
    let sc: Scenario = serde_json::from_value(doc)?;
    sc.validate()?;
    Ok(sc)
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Runs are independent and spread over the rayon pool; rows keep the
/// order of `values`.
pub fn sweep(template: &Scenario, pointer: &str, values: &[Value]) -> Result<Vec<SweepRow>> {
    let scenarios = values
        .iter()
        .map(|v| with_parameter(template, pointer, v))
        .collect::<Result<Vec<_>>>()?;
    scenarios
        .par_iter()
        .zip(values)
        .map(|(sc, v)| {
            let out = run(sc)?;
            Ok(SweepRow {
                parameter: pointer.to_string(),
                value: match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                },
                events_true: out.report.events_true,
                events_detected: out.report.events_detected,
                false_positives: out.report.false_positives,
                failure_rate_pct: out.report.failure_rate_pct,
                mean_peak_snr_db: mean(out.events.iter().map(|e| e.peak_snr_db)),
                mean_freq_hz: mean(out.events.iter().map(|e| e.mean_freq_hz)),
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}
