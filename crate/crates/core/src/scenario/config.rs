//! Scenario files: JSON with `schema: 1` and unit-suffixed keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{FloorModel, PathLossModel};
use crate::dsp::{overlap_analysis, Band, ReceiverConfig};
use crate::error::{Error, Result};
use crate::harvest::{C_BIAS_F, C_SWITCH_F};
use crate::switching::{LightResponseModel, DEFAULT_MIN_SUPPLY_V, DEFAULT_SWITCH_OVERHEAD_W};
use crate::transducer::{ActivationProfile, TransducerKind, TriggerSwitch};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TIME_STEP_S: f64 = 0.01;
/// Step used while no tag can change state.
pub const COARSE_STEP_S: f64 = 1.0;
/// Silence kept on each side of an emission when time compression is on.
pub const CAPTURE_PAD_S: f64 = 1.0;
pub const DEFAULT_MIN_BIAS_V: f64 = 0.25;
pub const DEFAULT_TDO_POWER_W: f64 = 50e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Tones straight to the averaged spectrogram.
    #[default]
    Spectral,
    /// Full IQ synthesis and STFT.
    Iq,
}

impl std::str::FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(SimMode::Spectral),
            "iq" => Ok(SimMode::Iq),
            other => Err(Error::invalid(format!("unknown mode `{other}` (expected spectral or iq)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_time_step")]
    pub time_step_s: f64,
    #[serde(default)]
    pub mode: SimMode,
    /// Only capture the spans around emissions.
    #[serde(default = "yes")]
    pub time_compression: bool,
    /// Bands may overlap on purpose.
    #[serde(default)]
    pub allow_overlap: bool,
    #[serde(default = "default_match_window")]
    pub match_window_s: f64,
    /// Spacing of recorded trace points while nothing changes.
    #[serde(default = "one")]
    pub trace_interval_s: f64,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub environment: Environment,
    pub tags: Vec<TagConfig>,
}

fn default_seed() -> u64 {
    crate::DEFAULT_SEED
}
fn default_time_step() -> f64 {
    DEFAULT_TIME_STEP_S
}
fn default_match_window() -> f64 {
    crate::analytics::DEFAULT_MATCH_WINDOW_S
}
fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default = "PathLossModel::pd25")]
    pub path_loss: PathLossModel,
    /// Per-floor SNR table; the shipped one when absent.
    #[serde(default)]
    pub floors_snr_db: Option<Vec<(i32, f64)>>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            path_loss: PathLossModel::pd25(),
            floors_snr_db: None,
        }
    }
}

impl ChannelConfig {
    pub fn floor_model(&self) -> Result<FloorModel> {
        match &self.floors_snr_db {
            Some(t) => {
                let mut m = FloorModel::new(t.clone())?;
                m.threshold_db = self.path_loss.threshold_db;
                Ok(m)
            }
            None => FloorModel::load(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    #[serde(default)]
    pub lux: LuxSource,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LuxSource {
    Constant {
        lux: f64,
    },
    /// Piecewise constant: each `(time_s, lux)` holds until the next.
    Steps {
        points: Vec<(f64, f64)>,
    },
    /// Smooth day/night cycle sampled once per second.
    Diurnal {
        min_lux: f64,
        max_lux: f64,
        period_s: f64,
        /// Time of the daily maximum.
        peak_s: f64,
    },
}

impl Default for LuxSource {
    fn default() -> Self {
        LuxSource::Constant { lux: 800.0 }
    }
}

impl LuxSource {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            LuxSource::Constant { lux } => *lux,
            LuxSource::Steps { points } => {
                let i = points.partition_point(|&(ts, _)| ts <= t);
                if i == 0 {
                    points.first().map_or(0.0, |p| p.1)
                } else {
                    points[i - 1].1
                }
            }
            LuxSource::Diurnal {
                min_lux,
                max_lux,
                period_s,
                peak_s,
            } => {
                let ts = t.floor();
                let phase = std::f64::consts::TAU * (ts - peak_s) / period_s;
                min_lux + (max_lux - min_lux) * 0.5 * (1.0 + phase.cos())
            }
        }
    }

    /// Times in `(0, duration)` where the level may change.
    pub fn changes(&self, duration_s: f64) -> Vec<f64> {
        match self {
            LuxSource::Constant { .. } => Vec::new(),
            LuxSource::Steps { points } => points.iter().map(|p| p.0).filter(|&t| t > 0.0 && t < duration_s).collect(),
            LuxSource::Diurnal { .. } => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            LuxSource::Constant { lux } => *lux >= 0.0,
            LuxSource::Steps { points } => {
                !points.is_empty()
                    && points.iter().all(|p| p.1 >= 0.0 && p.0.is_finite())
                    && points.windows(2).all(|w| w[0].0 < w[1].0)
            }
            LuxSource::Diurnal {
                min_lux,
                max_lux,
                period_s,
                ..
            } => *min_lux >= 0.0 && max_lux >= min_lux && *period_s > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("invalid lux source (levels ≥ 0, step times increasing)"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    pub tag_id: String,
    pub time_s: f64,
    /// Trigger stimulus in the switch's unit (mm for reed, degrees for tilt).
    pub stimulus: f64,
    #[serde(default)]
    pub label: String,
    /// Emitted frequency for this event; otherwise the tag's own model.
    #[serde(default)]
    pub freq_hz: Option<f64>,
    /// Force the trigger switch to miss this interaction.
    #[serde(default)]
    pub fail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapConfig {
    pub capacitance_f: f64,
    pub initial_v: f64,
    pub max_v: f64,
}

impl CapConfig {
    pub fn bias() -> Self {
        Self {
            capacitance_f: C_BIAS_F,
            initial_v: 0.30,
            max_v: 0.30,
        }
    }

    pub fn switch() -> Self {
        Self {
            capacitance_f: C_SWITCH_F,
            initial_v: 1.0,
            max_v: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingConfig {
    pub duty: f64,
    pub clock_hz: f64,
    #[serde(default = "default_overhead")]
    pub overhead_w: f64,
    /// Timer supply needed on the switch capacitor.
    #[serde(default = "default_gate")]
    pub min_supply_v: f64,
}

fn default_overhead() -> f64 {
    DEFAULT_SWITCH_OVERHEAD_W
}
fn default_gate() -> f64 {
    DEFAULT_MIN_SUPPLY_V
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum TagMode {
    /// Emits whenever powered.
    Continuous {
        #[serde(default)]
        switching: Option<SwitchingConfig>,
    },
    /// Dormant until its trigger switch closes.
    Triggered {
        trigger: TriggerSwitch,
        profile: ActivationProfile,
        /// Half-width of the uniform activation-delay jitter, as a fraction.
        #[serde(default = "default_jitter")]
        activation_jitter: f64,
        /// Switch-capacitor voltage needed to start an emission.
        #[serde(default = "default_gate")]
        min_switch_v: f64,
    },
}

fn default_jitter() -> f64 {
    0.2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransducerConfig {
    pub kind: TransducerKind,
    /// Stimulus in the kind's unit (deg, mm, cm, −1/0/1, torn fraction).
    pub stimulus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Placement {
    Distance { distance_m: f64 },
    Floor { floor_offset: i32 },
}

impl Default for Placement {
    fn default() -> Self {
        Placement::Distance { distance_m: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagConfig {
    pub id: String,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub base_freq_hz: f64,
    pub mode: TagMode,
    #[serde(default)]
    pub transducer: Option<TransducerConfig>,
    /// Gaussian spread of per-event frequencies.
    #[serde(default)]
    pub freq_sd_hz: f64,
    #[serde(default = "default_photodiodes")]
    pub photodiodes: u32,
    #[serde(default = "CapConfig::bias")]
    pub bias_cap: CapConfig,
    #[serde(default = "CapConfig::switch")]
    pub switch_cap: CapConfig,
    #[serde(default = "default_min_bias")]
    pub min_bias_v: f64,
    #[serde(default = "default_tdo_power")]
    pub tdo_power_w: f64,
    #[serde(default)]
    pub placement: Placement,
    /// Lux-dependent drift and shutdown; off when absent.
    #[serde(default)]
    pub light_model: Option<LightResponseModel>,
}

fn default_photodiodes() -> u32 {
    25
}
fn default_min_bias() -> f64 {
    DEFAULT_MIN_BIAS_V
}
fn default_tdo_power() -> f64 {
    DEFAULT_TDO_POWER_W
}

impl TagConfig {
    pub fn band(&self) -> Result<Band> {
        Band::new(self.id.clone(), self.band_lo_hz, self.band_hi_hz)
    }

    pub fn is_triggered(&self) -> bool {
        matches!(self.mode, TagMode::Triggered { .. })
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn bands(&self) -> Result<Vec<Band>> {
        self.tags.iter().map(TagConfig::band).collect()
    }

    pub fn tag_index(&self, id: &str) -> Option<usize> {
        self.tags.iter().position(|t| t.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported scenario schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::invalid("duration_s must be positive"));
        }
        if !(self.time_step_s > 0.0) || self.time_step_s > COARSE_STEP_S {
            return Err(Error::invalid(format!("time_step_s must be in (0, {COARSE_STEP_S}]")));
        }
        if !(self.match_window_s > 0.0) || !(self.trace_interval_s > 0.0) {
            return Err(Error::invalid("match_window_s and trace_interval_s must be positive"));
        }
        self.receiver.validate()?;
        self.environment.lux.validate()?;
        if self.tags.is_empty() {
            return Err(Error::invalid("a scenario needs at least one tag"));
        }
        let (lo, hi) = self.receiver.span_hz();
        for (i, t) in self.tags.iter().enumerate() {
            if self.tags[..i].iter().any(|u| u.id == t.id) {
                return Err(Error::invalid(format!("duplicate tag id `{}`", t.id)));
            }
            let b = t.band()?;
            if b.lo_hz < lo || b.hi_hz > hi {
                return Err(Error::invalid(format!(
                    "band of `{}` [{}, {}) Hz is outside the receiver span [{lo}, {hi})",
                    t.id, b.lo_hz, b.hi_hz
                )));
            }
            if !(t.tdo_power_w >= 0.0) || !(t.freq_sd_hz >= 0.0) || t.photodiodes == 0 {
                return Err(Error::invalid(format!(
                    "`{}` needs tdo_power_w ≥ 0, freq_sd_hz ≥ 0 and at least one photodiode",
                    t.id
                )));
            }
            for c in [&t.bias_cap, &t.switch_cap] {
                if !(c.capacitance_f > 0.0 && c.initial_v >= 0.0 && c.max_v >= c.initial_v) {
                    return Err(Error::invalid(format!("`{}` has an invalid capacitor", t.id)));
                }
            }
            match &t.mode {
                TagMode::Continuous { switching: Some(s) } => {
                    if !(s.duty > 0.0 && s.duty <= 1.0 && s.clock_hz > 0.0) {
                        return Err(Error::invalid(format!("`{}` switching needs duty in (0, 1]", t.id)));
                    }
                }
                TagMode::Triggered {
                    activation_jitter,
                    profile,
                    ..
                } => {
                    if !(0.0..1.0).contains(activation_jitter) {
                        return Err(Error::invalid("activation_jitter must be in [0, 1)"));
                    }
                    if !(profile.activation_time_s >= 0.0 && profile.on_time_s >= 0.0) {
                        return Err(Error::invalid("activation profile times must be ≥ 0"));
                    }
                }
                _ => {}
            }
        }
        if !self.allow_overlap {
            let bands = self.bands()?;
            if let Some(o) = overlap_analysis(&bands).first() {
                return Err(Error::invalid(format!(
                    "bands of `{}` and `{}` overlap on [{}, {}) Hz; set allow_overlap to keep them",
                    o.a, o.b, o.lo_hz, o.hi_hz
                )));
            }
        }
        let mut last = f64::NEG_INFINITY;
        for it in &self.environment.interactions {
            let Some(i) = self.tag_index(&it.tag_id) else {
                return Err(Error::invalid(format!("interaction for unknown tag `{}`", it.tag_id)));
            };
            if !self.tags[i].is_triggered() {
                return Err(Error::invalid(format!("tag `{}` is not interaction-activated", it.tag_id)));
            }
            if !(0.0..self.duration_s).contains(&it.time_s) {
                return Err(Error::invalid(format!("interaction at {} s is outside the run", it.time_s)));
            }
            if it.time_s < last {
                return Err(Error::invalid("interactions must be sorted by time_s"));
            }
            last = it.time_s;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_hold_their_level() {
        let l = LuxSource::Steps {
            points: vec![(0.0, 1000.0), (5.0, 499.0)],
        };
        assert_eq!(l.at(4.99), 1000.0);
        assert_eq!(l.at(5.0), 499.0);
        assert_eq!(l.changes(10.0), vec![5.0]);
    }

    #[test]
    fn diurnal_spans_its_range() {
        let l = LuxSource::Diurnal {
            min_lux: 30.0,
            max_lux: 350.0,
            period_s: 86_400.0,
            peak_s: 43_200.0,
        };
        assert!((l.at(43_200.0) - 350.0).abs() < 1e-9);
        assert!((l.at(0.0) - 30.0).abs() < 1e-9);
        assert_eq!(l.at(100.2), l.at(100.9));
    }

    #[test]
    fn sim_mode_parses() {
        assert_eq!("iq".parse::<SimMode>().unwrap(), SimMode::Iq);
        assert!("fast".parse::<SimMode>().is_err());
    }
}
