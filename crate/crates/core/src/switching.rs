//! Timer-gated power switching and the light-dependent frequency drift.
//!
//! Clock and duty formulas follow the astable timer equations as written:
//! `f = 0.455 / ((R3 + 2·R4)·C_T)` and `D = R3 / (R3 + 2·R4)`, with the usual
//! bypass-diode variant `D = R3 / (R3 + R4)`. Evaluating them on the
//! published component values does not give the published clock and duty,
//! so [`consistency_warnings`] reports the gap instead of hiding it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLOCK_CONSTANT: f64 = 0.455;
pub const DEFAULT_MIN_SUPPLY_V: f64 = 0.6;
/// 7 µA at 1 V.
pub const DEFAULT_SWITCH_OVERHEAD_W: f64 = 7e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimerConfig {
    pub r3: f64,
    pub r4: f64,
    pub ct: f64,
    pub bypass_diode: bool,
    pub min_supply: f64,
}

impl TimerConfig {
    pub fn new(r3: f64, r4: f64, ct: f64, bypass_diode: bool) -> Result<Self> {
        if !(r3 > 0.0 && r4 > 0.0 && ct > 0.0) {
            return Err(Error::invalid("R3, R4 and C_T must be positive"));
        }
        Ok(Self {
            r3,
            r4,
            ct,
            bypass_diode,
            min_supply: DEFAULT_MIN_SUPPLY_V,
        })
    }

    pub fn clock_frequency(&self) -> f64 {
        CLOCK_CONSTANT / ((self.r3 + 2.0 * self.r4) * self.ct)
    }

    pub fn duty_cycle(&self) -> f64 {
        if self.bypass_diode {
            self.r3 / (self.r3 + self.r4)
        } else {
            self.r3 / (self.r3 + 2.0 * self.r4)
        }
    }

    /// The timer runs only while its supply is at least `min_supply`.
    pub fn is_powered(&self, supply_v: f64) -> bool {
        supply_v >= self.min_supply
    }
}

pub fn clock_frequency(cfg: &TimerConfig) -> f64 {
    cfg.clock_frequency()
}

pub fn duty_cycle(cfg: &TimerConfig) -> f64 {
    cfg.duty_cycle()
}

/// Solve for `R3`, `R4` giving `target_duty` and `target_clock` without a
/// bypass diode.
pub fn design_timer(target_duty: f64, target_clock: f64, ct: f64) -> Result<TimerConfig> {
    design_timer_with(target_duty, target_clock, ct, false)
}

pub fn design_timer_with(
    target_duty: f64,
    target_clock: f64,
    ct: f64,
    bypass_diode: bool,
) -> Result<TimerConfig> {
    if !(target_duty > 0.0) {
        return Err(Error::InfeasibleTimer(format!("duty {target_duty} must be > 0")));
    }
    if !(target_duty < 1.0) {
        return Err(Error::InfeasibleTimer(format!("duty {target_duty} must be < 1")));
    }
    if !(target_clock > 0.0) || !target_clock.is_finite() {
        return Err(Error::InfeasibleTimer(format!("clock {target_clock} Hz must be > 0")));
    }
    if !(ct > 0.0) {
        return Err(Error::InfeasibleTimer(format!("C_T {ct} F must be > 0")));
    }
    // S = R3 + 2·R4 is fixed by the clock equation.
    let s = CLOCK_CONSTANT / (target_clock * ct);
    let (r3, r4) = if bypass_diode {
        let r3 = s * target_duty / (2.0 - target_duty);
        (r3, r3 * (1.0 - target_duty) / target_duty)
    } else {
        let r3 = target_duty * s;
        (r3, (s - r3) / 2.0)
    };
    if !(r3 > 0.0 && r4 > 0.0) || !r3.is_finite() || !r4.is_finite() {
        return Err(Error::InfeasibleTimer(format!(
            "resistances out of range (R3 = {r3}, R4 = {r4})"
        )));
    }
    TimerConfig::new(r3, r4, ct, bypass_diode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingProfile {
    pub clock: f64,
    pub duty: f64,
    pub switch_overhead: f64,
}

impl SwitchingProfile {
    pub fn new(clock: f64, duty: f64) -> Result<Self> {
        if !(clock > 0.0) {
            return Err(Error::invalid("clock must be positive"));
        }
        if !(0.0..=1.0).contains(&duty) {
            return Err(Error::domain("duty", duty, 0.0, 1.0));
        }
        Ok(Self {
            clock,
            duty,
            switch_overhead: DEFAULT_SWITCH_OVERHEAD_W,
        })
    }

    pub fn from_timer(cfg: &TimerConfig) -> Self {
        Self {
            clock: cfg.clock_frequency(),
            duty: cfg.duty_cycle(),
            switch_overhead: DEFAULT_SWITCH_OVERHEAD_W,
        }
    }
}

/// `duty·P_tdo`, plus the switch overhead when a switch is fitted.
pub fn average_power(duty: f64, tdo_power: f64, has_switch: bool, profile: &SwitchingProfile) -> Result<f64> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(Error::domain("duty", duty, 0.0, 1.0));
    }
    let overhead = if has_switch { profile.switch_overhead } else { 0.0 };
    Ok(duty * tdo_power + overhead)
}

/// A computed timer quantity that disagrees with a stated one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyWarning {
    pub quantity: &'static str,
    pub computed: f64,
    pub stated: f64,
}

impl fmt::Display for ConsistencyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "timer {}: component values give {:.6e}, stated value is {:.6e}; using the stated value",
            self.quantity, self.computed, self.stated
        )
    }
}

/// Compare the timer equations against a stated clock and duty.
pub fn consistency_warnings(
    cfg: &TimerConfig,
    stated_clock: Option<f64>,
    stated_duty: Option<f64>,
    rel_tol: f64,
) -> Vec<ConsistencyWarning> {
    let mut out = Vec::new();
    let mut check = |quantity, computed: f64, stated: Option<f64>| {
        if let Some(stated) = stated {
            if (computed - stated).abs() > rel_tol * stated.abs() {
                out.push(ConsistencyWarning {
                    quantity,
                    computed,
                    stated,
                });
            }
        }
    };
    check("clock_hz", cfg.clock_frequency(), stated_clock);
    check("duty", cfg.duty_cycle(), stated_duty);
    out
}

/// Oscillation frequency versus illuminance, with a hard shutdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightResponseModel {
    pub anchor_lux: f64,
    #[serde(rename = "anchor_freq_hz")]
    pub anchor_freq: f64,
    /// Hz per lux; negative.
    #[serde(rename = "slope_hz_per_lux")]
    pub slope: f64,
    pub shutdown_lux: f64,
}

/// The drift rate quoted in prose (0.05 MHz per 100 lux), kept for
/// comparison with the regression slope used by default.
pub const ALTERNATE_SLOPE_HZ_PER_LUX: f64 = -500.0;

impl Default for LightResponseModel {
    fn default() -> Self {
        Self {
            anchor_lux: 1000.0,
            anchor_freq: 580.054e6,
            slope: -600.0,
            shutdown_lux: 500.0,
        }
    }
}

impl LightResponseModel {
    pub fn new(anchor_lux: f64, anchor_freq: f64, slope: f64, shutdown_lux: f64) -> Result<Self> {
        if !(slope < 0.0) {
            return Err(Error::invalid("light response slope must be negative"));
        }
        if !(shutdown_lux < anchor_lux) {
            return Err(Error::invalid("shutdown lux must be below the anchor lux"));
        }
        Ok(Self {
            anchor_lux,
            anchor_freq,
            slope,
            shutdown_lux,
        })
    }

    /// Frequency offset from the anchor at `lux`; `None` below shutdown.
    pub fn drift(&self, lux: f64) -> Option<f64> {
        (lux >= self.shutdown_lux).then(|| self.slope * (lux - self.anchor_lux))
    }

    pub fn frequency_under_light(&self, lux: f64) -> Option<f64> {
        self.drift(lux).map(|d| self.anchor_freq + d)
    }
}

pub fn frequency_under_light(model: &LightResponseModel, lux: f64) -> Option<f64> {
    model.frequency_under_light(lux)
}
