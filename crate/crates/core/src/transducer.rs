//! Interaction transducers and trigger switches.
//!
//! Each transducer maps a physical stimulus to an emitted frequency using
//! calibration anchors from `transducer_anchors.csv`. Tilt and deformation
//! anchors are offsets from the tag's base frequency; the other kinds are
//! absolute frequencies measured on a reference tag and are shifted so that
//! their rest state lands on the configured base frequency.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::harvest::Supercapacitor;
use crate::rng;

pub const TAG_BAND_HZ: (f64, f64) = (450e6, 600e6);
/// Tilt at or beyond this angle leaves the photodiodes below shutdown light.
pub const TILT_CUTOFF_DEG: f64 = 90.0;
pub const DEFORMATION_STEP_MM: f64 = 0.125;
/// Highest deformation that still oscillates (26 steps).
pub const DEFORMATION_CUTOFF_MM: f64 = 3.25;
pub const ROTARY_DETENTS_DEG: [f64; 3] = [0.0, 60.0, 120.0];
pub const ROTARY_MAX_DEG: f64 = 150.0;
pub const SLIDER_RANGE_CM: (f64, f64) = (2.5, 15.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransducerKind {
    Tilt,
    Deformation,
    Rotary,
    Slider,
    Miura,
    Kresling,
    Tear,
}

impl TransducerKind {
    pub const ALL: [TransducerKind; 7] = [
        TransducerKind::Tilt,
        TransducerKind::Deformation,
        TransducerKind::Rotary,
        TransducerKind::Slider,
        TransducerKind::Miura,
        TransducerKind::Kresling,
        TransducerKind::Tear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransducerKind::Tilt => "tilt",
            TransducerKind::Deformation => "deformation",
            TransducerKind::Rotary => "rotary",
            TransducerKind::Slider => "slider",
            TransducerKind::Miura => "miura",
            TransducerKind::Kresling => "kresling",
            TransducerKind::Tear => "tear",
        }
    }

    /// Anchors are offsets from the base frequency rather than absolute.
    pub fn is_relative(self) -> bool {
        matches!(self, TransducerKind::Tilt | TransducerKind::Deformation)
    }

    /// Stimulus value of the rest state.
    pub fn rest_stimulus(self) -> f64 {
        match self {
            TransducerKind::Slider => SLIDER_RANGE_CM.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for TransducerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransducerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown transducer kind `{s}`")))
    }
}

/// Surface state of an origami transducer; encoded as stimulus −1/0/+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrigamiState {
    Compressed,
    Normal,
    Expanded,
}

impl OrigamiState {
    pub const ALL: [OrigamiState; 3] = [OrigamiState::Compressed, OrigamiState::Normal, OrigamiState::Expanded];

    pub fn stimulus(self) -> f64 {
        match self {
            OrigamiState::Compressed => -1.0,
            OrigamiState::Normal => 0.0,
            OrigamiState::Expanded => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrigamiState::Compressed => "compressed",
            OrigamiState::Normal => "normal",
            OrigamiState::Expanded => "expanded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
pub struct Anchor {
    pub stimulus: f64,
    pub freq_hz: f64,
    pub sd_hz: f64,
}

/// Noiseless response at one stimulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    /// Offset (relative kinds) or absolute frequency, in Hz.
    pub value: f64,
    pub sd_hz: f64,
}

/// Calibration anchors for every transducer kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    anchors: BTreeMap<TransducerKind, Vec<Anchor>>,
}

impl Calibration {
    pub fn new(anchors: BTreeMap<TransducerKind, Vec<Anchor>>) -> Result<Self> {
        for kind in TransducerKind::ALL {
            let a = anchors
                .get(&kind)
                .ok_or_else(|| Error::invalid(format!("no anchors for `{kind}`")))?;
            let needed = match kind {
                TransducerKind::Rotary | TransducerKind::Miura | TransducerKind::Kresling => 3,
                _ => 2,
            };
            if a.len() != needed {
                return Err(Error::invalid(format!("`{kind}` needs {needed} anchors, got {}", a.len())));
            }
            if a.windows(2).any(|w| w[1].stimulus <= w[0].stimulus || w[1].freq_hz <= w[0].freq_hz) {
                return Err(Error::invalid(format!("`{kind}` anchors must increase in stimulus and frequency")));
            }
            if a.iter().any(|x| !(x.sd_hz >= 0.0)) {
                return Err(Error::invalid(format!("`{kind}` has a negative SD")));
            }
        }
        Ok(Self { anchors })
    }

    /// Anchors shipped with the crate.
    pub fn published() -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            kind: String,
            stimulus: f64,
            freq_hz: f64,
            sd_hz: f64,
        }
        let rows: Vec<Row> = fixtures::load_csv(fixtures::TRANSDUCER_ANCHORS)?;
        let mut map: BTreeMap<TransducerKind, Vec<Anchor>> = BTreeMap::new();
        for r in rows {
            map.entry(r.kind.parse()?).or_default().push(Anchor {
                stimulus: r.stimulus,
                freq_hz: r.freq_hz,
                sd_hz: r.sd_hz,
            });
        }
        for a in map.values_mut() {
            a.sort_by(|x, y| x.stimulus.total_cmp(&y.stimulus));
        }
        Self::new(map)
    }

    pub fn anchors(&self, kind: TransducerKind) -> &[Anchor] {
        &self.anchors[&kind]
    }

    /// Anchor at the rest stimulus.
    pub fn rest(&self, kind: TransducerKind) -> Anchor {
        let rest = kind.rest_stimulus();
        *self
            .anchors(kind)
            .iter()
            .find(|a| a.stimulus == rest)
            .unwrap_or(&self.anchors(kind)[0])
    }

    /// Per-step response of a relative kind: (offset per step, step size, SD).
    fn step(&self, kind: TransducerKind) -> (f64, f64, f64) {
        let a = self.anchors(kind);
        let (lo, hi) = (a[0], a[a.len() - 1]);
        (hi.freq_hz - lo.freq_hz, hi.stimulus - lo.stimulus, hi.sd_hz)
    }

    /// Offset for a tilt angle in degrees; `None` at the cutoff.
    pub fn offset_tilt(&self, angle_deg: f64) -> Result<Option<Response>> {
        if !(0.0..=TILT_CUTOFF_DEG).contains(&angle_deg) {
            return Err(Error::domain("tilt angle (deg)", angle_deg, 0.0, TILT_CUTOFF_DEG));
        }
        if angle_deg >= TILT_CUTOFF_DEG {
            return Ok(None);
        }
        let (df, ds, sd) = self.step(TransducerKind::Tilt);
        Ok(Some(Response {
            value: df * angle_deg / ds,
            sd_hz: sd,
        }))
    }

    /// Offset for a deformation height in mm; `None` beyond the cutoff.
    pub fn offset_deformation(&self, height_mm: f64) -> Result<Option<Response>> {
        if !(height_mm >= 0.0) || !height_mm.is_finite() {
            return Err(Error::domain("deformation height (mm)", height_mm, 0.0, f64::INFINITY));
        }
        if height_mm > DEFORMATION_CUTOFF_MM {
            return Ok(None);
        }
        let (df, ds, sd) = self.step(TransducerKind::Deformation);
        Ok(Some(Response {
            value: df * height_mm / ds,
            sd_hz: sd,
        }))
    }

    /// Absolute frequency at the nearest rotary detent.
    pub fn offset_rotary(&self, angle_deg: f64) -> Result<Response> {
        if !(0.0..ROTARY_MAX_DEG).contains(&angle_deg) {
            return Err(Error::domain("rotary angle (deg)", angle_deg, 0.0, ROTARY_MAX_DEG));
        }
        let snapped = snap_detent(angle_deg);
        let a = self
            .anchors(TransducerKind::Rotary)
            .iter()
            .min_by(|x, y| (x.stimulus - snapped).abs().total_cmp(&(y.stimulus - snapped).abs()))
            .unwrap();
        Ok(Response {
            value: a.freq_hz,
            sd_hz: a.sd_hz,
        })
    }

    /// Absolute frequency at a slider length in cm.
    pub fn offset_slider(&self, length_cm: f64) -> Result<Response> {
        let (lo, hi) = SLIDER_RANGE_CM;
        if !(lo..=hi).contains(&length_cm) {
            return Err(Error::domain("slider length (cm)", length_cm, lo, hi));
        }
        let a = self.anchors(TransducerKind::Slider);
        let t = (length_cm - a[0].stimulus) / (a[1].stimulus - a[0].stimulus);
        Ok(Response {
            value: lerp(a[0].freq_hz, a[1].freq_hz, t),
            sd_hz: lerp(a[0].sd_hz, a[1].sd_hz, t),
        })
    }

    pub fn offset_origami(&self, kind: TransducerKind, state: OrigamiState) -> Result<Response> {
        if !matches!(kind, TransducerKind::Miura | TransducerKind::Kresling) {
            return Err(Error::invalid(format!("`{kind}` is not an origami transducer")));
        }
        let a = self
            .anchors(kind)
            .iter()
            .find(|a| a.stimulus == state.stimulus())
            .ok_or_else(|| Error::invalid(format!("no `{kind}` anchor for {}", state.name())))?;
        Ok(Response {
            value: a.freq_hz,
            sd_hz: a.sd_hz,
        })
    }

    /// Absolute frequency for a torn fraction in [0, 1].
    pub fn offset_tear(&self, torn: f64) -> Result<Response> {
        if !(0.0..=1.0).contains(&torn) {
            return Err(Error::domain("torn fraction", torn, 0.0, 1.0));
        }
        let a = self.anchors(TransducerKind::Tear);
        Ok(Response {
            value: lerp(a[0].freq_hz, a[1].freq_hz, torn),
            sd_hz: lerp(a[0].sd_hz, a[1].sd_hz, torn),
        })
    }

    /// Response of `kind` at a numeric stimulus in the kind's unit
    /// (origami states as −1/0/+1). `None` means the tag is off.
    pub fn response(&self, kind: TransducerKind, stimulus: f64) -> Result<Option<Response>> {
        match kind {
            TransducerKind::Tilt => self.offset_tilt(stimulus),
            TransducerKind::Deformation => self.offset_deformation(stimulus),
            TransducerKind::Rotary => self.offset_rotary(stimulus).map(Some),
            TransducerKind::Slider => self.offset_slider(stimulus).map(Some),
            TransducerKind::Miura | TransducerKind::Kresling => {
                let state = match stimulus {
                    s if s == -1.0 => OrigamiState::Compressed,
                    s if s == 0.0 => OrigamiState::Normal,
                    s if s == 1.0 => OrigamiState::Expanded,
                    s => return Err(Error::invalid(format!("origami stimulus {s} is not -1, 0 or 1"))),
                };
                self.offset_origami(kind, state).map(Some)
            }
            TransducerKind::Tear => self.offset_tear(stimulus).map(Some),
        }
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Nearest rotary detent; ties go to the lower detent.
pub fn snap_detent(angle_deg: f64) -> f64 {
    ROTARY_DETENTS_DEG
        .into_iter()
        .min_by(|a, b| (a - angle_deg).abs().total_cmp(&(b - angle_deg).abs()))
        .unwrap()
}

/// A calibrated transducer on a tag tuned to `base_freq`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transducer {
    pub kind: TransducerKind,
    pub base_freq: f64,
    pub calibration: Calibration,
    /// Multiplies every anchor SD; 0 gives noiseless output.
    pub noise_scale: f64,
}

impl Transducer {
    pub fn new(kind: TransducerKind, base_freq: f64, calibration: Calibration) -> Result<Self> {
        if !(TAG_BAND_HZ.0..=TAG_BAND_HZ.1).contains(&base_freq) {
            return Err(Error::domain("base frequency (Hz)", base_freq, TAG_BAND_HZ.0, TAG_BAND_HZ.1));
        }
        Ok(Self {
            kind,
            base_freq,
            calibration,
            noise_scale: 1.0,
        })
    }

    /// Transducer whose base frequency is the rest anchor of the reference tag.
    pub fn reference(kind: TransducerKind) -> Result<Self> {
        let cal = Calibration::published()?;
        let base = if kind.is_relative() {
            580.054e6
        } else {
            cal.rest(kind).freq_hz
        };
        Self::new(kind, base, cal)
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_scale = 0.0;
        self
    }

    /// Noiseless frequency and its SD; `None` when the tag is off.
    pub fn response(&self, stimulus: f64) -> Result<Option<Response>> {
        let Some(r) = self.calibration.response(self.kind, stimulus)? else {
            return Ok(None);
        };
        let value = if self.kind.is_relative() {
            self.base_freq + r.value
        } else {
            self.base_freq + (r.value - self.calibration.rest(self.kind).freq_hz)
        };
        Ok(Some(Response {
            value,
            sd_hz: r.sd_hz * self.noise_scale,
        }))
    }

    /// One noisy frequency draw.
    pub fn sample<R: Rng + ?Sized>(&self, stimulus: f64, rng: &mut R) -> Result<Option<f64>> {
        let Some(r) = self.response(stimulus)? else {
            return Ok(None);
        };
        if r.sd_hz == 0.0 {
            return Ok(Some(r.value));
        }
        let n = Normal::new(r.value, r.sd_hz).map_err(|e| Error::Model(e.to_string()))?;
        Ok(Some(n.sample(rng)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    /// Fires when a magnet comes within `threshold` mm.
    Reed,
    /// Fires when tilted beyond `threshold` degrees.
    TiltBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerSwitch {
    pub kind: TriggerKind,
    pub threshold: f64,
    pub failure_prob: f64,
}

impl TriggerSwitch {
    pub fn new(kind: TriggerKind, threshold: f64, failure_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&failure_prob) {
            return Err(Error::domain("failure probability", failure_prob, 0.0, 1.0));
        }
        Ok(Self {
            kind,
            threshold,
            failure_prob,
        })
    }

    pub fn reed() -> Self {
        Self::new(TriggerKind::Reed, 5.0, 0.0).unwrap()
    }

    pub fn tilt_ball() -> Self {
        Self::new(TriggerKind::TiltBall, 60.0, 0.0).unwrap()
    }

    pub fn crossed(&self, stimulus: f64) -> bool {
        match self.kind {
            TriggerKind::Reed => stimulus <= self.threshold,
            TriggerKind::TiltBall => stimulus > self.threshold,
        }
    }

    /// Whether the switch closes; one Bernoulli draw when the threshold is crossed.
    pub fn evaluate<R: Rng + ?Sized>(&self, stimulus: f64, rng: &mut R) -> bool {
        self.crossed(stimulus) && rng.random::<f64>() >= self.failure_prob
    }
}

pub fn trigger_evaluate(sw: &TriggerSwitch, stimulus: f64, seed: u64) -> bool {
    sw.evaluate(stimulus, &mut rng::stream(seed, &[]))
}

/// Activation delay and on-time of an interaction-activated tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationProfile {
    pub activation_time_s: f64,
    pub on_time_s: f64,
}

impl ActivationProfile {
    pub const TRASH: Self = Self {
        activation_time_s: 0.68,
        on_time_s: 3.0,
    };
    pub const SOAP: Self = Self {
        activation_time_s: 0.53,
        on_time_s: 2.0,
    };
    pub const OVEN: Self = Self {
        activation_time_s: 0.9,
        on_time_s: 6.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagState {
    pub active: bool,
    pub emitted_freq: Option<f64>,
    pub on_time: f64,
    pub activation_time: f64,
}

impl TagState {
    pub fn idle() -> Self {
        Self {
            active: false,
            emitted_freq: None,
            on_time: 0.0,
            activation_time: 0.0,
        }
    }
}

/// Inactive for `activation_time`, emitting for `on_time`, then inactive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationTimeline {
    pub triggered_at: f64,
    pub profile: ActivationProfile,
    pub freq: f64,
}

impl ActivationTimeline {
    pub fn emission_window(&self) -> Option<(f64, f64)> {
        let start = self.triggered_at + self.profile.activation_time_s;
        (self.profile.on_time_s > 0.0).then(|| (start, start + self.profile.on_time_s))
    }

    pub fn state_at(&self, t: f64) -> TagState {
        let active = self.emission_window().is_some_and(|(a, b)| (a..b).contains(&t));
        TagState {
            active,
            emitted_freq: active.then_some(self.freq),
            on_time: self.profile.on_time_s,
            activation_time: self.profile.activation_time_s,
        }
    }

    /// Percent of `cap`'s stored energy drawn by one activation.
    pub fn energy_percent(&self, tdo_power_w: f64, cap: &Supercapacitor) -> f64 {
        cap.energy_percent(tdo_power_w, self.profile.on_time_s)
    }
}

pub fn activate(state: TagState, profile: ActivationProfile, triggered_at: f64, freq: f64) -> Result<ActivationTimeline> {
    if state.active {
        return Err(Error::invalid("tag is already active"));
    }
    Ok(ActivationTimeline {
        triggered_at,
        profile,
        freq,
    })
}
