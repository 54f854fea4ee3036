//! Link budget: SNR, log-distance path loss, multi-floor lookup and the
//! band/power compliance check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;

pub const DEFAULT_THRESHOLD_DB: f64 = 5.0;
/// Reference distance of the path-loss model.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

/// `10·log10(p_signal / p_noise)`.
pub fn snr_db(p_signal: f64, p_noise: f64) -> Result<f64> {
    if !(p_signal > 0.0 && p_noise > 0.0) {
        return Err(Error::invalid("signal and noise power must be positive"));
    }
    Ok(10.0 * (p_signal / p_noise).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    /// SNR at 1 m.
    pub snr0_db: f64,
    pub exponent: f64,
    pub threshold_db: f64,
}

impl PathLossModel {
    pub fn new(snr0_db: f64, exponent: f64, threshold_db: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::invalid(format!("path-loss exponent {exponent} must be positive")));
        }
        if !(threshold_db > 0.0) {
            return Err(Error::invalid("detection threshold must be positive"));
        }
        Ok(Self {
            snr0_db,
            exponent,
            threshold_db,
        })
    }

    /// Two-point fit of `SNR(d) = snr0 − 10·n·log10(d)`.
    pub fn fit(near: (f64, f64), far: (f64, f64)) -> Result<Self> {
        let (d1, s1) = near;
        let (d2, s2) = far;
        if !(d1 > 0.0 && d2 > 0.0) || d1 == d2 {
            return Err(Error::invalid("anchor distances must be positive and distinct"));
        }
        let n = (s1 - s2) / (10.0 * (d2.log10() - d1.log10()));
        let snr0 = s1 + 10.0 * n * d1.log10();
        Self::new(snr0, n, DEFAULT_THRESHOLD_DB)
    }

    /// 25-photodiode hallway fit: 45.3 dB near the receiver, 5 dB at 45.73 m.
    pub fn pd25() -> Self {
        Self::fit((1.0, 45.3), (45.73, 5.0)).expect("valid anchors")
    }

    /// 11-photodiode hallway fit: 34.9 dB near the receiver, 5 dB at 27.44 m.
    pub fn pd11() -> Self {
        Self::fit((1.0, 34.9), (27.44, 5.0)).expect("valid anchors")
    }

    pub fn snr_at(&self, d_m: f64) -> Result<f64> {
        if !(d_m >= REFERENCE_DISTANCE_M) || !d_m.is_finite() {
            return Err(Error::domain("distance (m)", d_m, REFERENCE_DISTANCE_M, f64::INFINITY));
        }
        Ok(self.snr0_db - 10.0 * self.exponent * d_m.log10())
    }

    /// Distance where the SNR falls to the threshold.
    pub fn max_range(&self) -> Result<f64> {
        if self.snr0_db < self.threshold_db {
            return Err(Error::Unreachable(format!(
                "SNR at 1 m ({} dB) is already below the {} dB threshold",
                self.snr0_db, self.threshold_db
            )));
        }
        Ok(10f64.powf((self.snr0_db - self.threshold_db) / (10.0 * self.exponent)))
    }
}

pub fn fit_path_loss(near: (f64, f64), far: (f64, f64)) -> Result<PathLossModel> {
    PathLossModel::fit(near, far)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorReading {
    pub snr_db: f64,
    pub detectable: bool,
}

/// Measured SNR by floor offset from the tag.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorModel {
    pub per_floor_snr: Vec<(i32, f64)>,
    pub threshold_db: f64,
}

impl FloorModel {
    pub fn new(per_floor_snr: Vec<(i32, f64)>) -> Result<Self> {
        let own = per_floor_snr
            .iter()
            .find(|(o, _)| *o == 0)
            .ok_or_else(|| Error::invalid("floor table needs offset 0"))?
            .1;
        if per_floor_snr.iter().any(|&(_, s)| s > own) {
            return Err(Error::invalid("SNR at offset 0 must be the maximum"));
        }
        Ok(Self {
            per_floor_snr,
            threshold_db: DEFAULT_THRESHOLD_DB,
        })
    }

    pub fn load() -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            floor_offset: i32,
            snr_db: f64,
        }
        let rows: Vec<Row> = fixtures::load_csv(fixtures::FLOORS)?;
        Self::new(rows.into_iter().map(|r| (r.floor_offset, r.snr_db)).collect())
    }

    /// SNR at `offset`; detectable only strictly above the threshold.
    pub fn floor_snr(&self, offset: i32) -> Result<FloorReading> {
        let snr = self
            .per_floor_snr
            .iter()
            .find(|(o, _)| *o == offset)
            .map(|&(_, s)| s)
            .ok_or_else(|| Error::invalid(format!("no floor measurement at offset {offset}")))?;
        Ok(FloorReading {
            snr_db: snr,
            detectable: snr > self.threshold_db,
        })
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompliancePolicy {
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub max_eirp_w: f64,
    /// Transmit power measured on the bench.
    pub measured_tx_dbm: f64,
}

impl Default for CompliancePolicy {
    fn default() -> Self {
        Self {
            band_lo_hz: 575e6,
            band_hi_hz: 600e6,
            max_eirp_w: 40e-3,
            measured_tx_dbm: -50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    OutOfBand,
    OverPower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceVerdict {
    pub violations: Vec<Violation>,
    pub tx_w: f64,
}

impl ComplianceVerdict {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

impl CompliancePolicy {
    pub fn new(band_lo_hz: f64, band_hi_hz: f64, max_eirp_w: f64) -> Result<Self> {
        if !(band_lo_hz < band_hi_hz) {
            return Err(Error::invalid("band lower edge must be below the upper edge"));
        }
        Ok(Self {
            band_lo_hz,
            band_hi_hz,
            max_eirp_w,
            ..Self::default()
        })
    }

    pub fn check(&self, freq_hz: f64, tx_dbm: f64) -> ComplianceVerdict {
        let tx_w = dbm_to_watts(tx_dbm);
        let mut violations = Vec::new();
        if !(self.band_lo_hz..=self.band_hi_hz).contains(&freq_hz) {
            violations.push(Violation::OutOfBand);
        }
        if tx_w > self.max_eirp_w {
            violations.push(Violation::OverPower);
        }
        ComplianceVerdict { violations, tx_w }
    }
}

pub fn compliance_check(policy: &CompliancePolicy, freq_hz: f64, tx_dbm: f64) -> ComplianceVerdict {
    policy.check(freq_hz, tx_dbm)
}
