//! The simulation loop: harvest, store, gate, trigger, emit, receive.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::config::{LuxSource, Placement, Scenario, SimMode, TagConfig, TagMode, CAPTURE_PAD_S, COARSE_STEP_S};
use crate::analytics::{match_events, DetectionReport, GroundTruthLog, TruthEntry};
use crate::dsp::{
    detect_events, synthesize_iq_capture, synthesize_spectrogram_capture, Band, Capture, ReceiverConfig, TagEvent,
    Tone,
};
use crate::error::{Error, Result};
use crate::harvest::{PhotodiodeArray, Supercapacitor};
use crate::rng;
use crate::transducer::{Calibration, Transducer};

/// Seed path component for receiver noise.
const NOISE_STREAM: u64 = 0x6e6f_6973_65;

/// One stretch of constant emission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Emission {
    pub tag_id: String,
    /// Ground-truth entry that caused it, for the first piece of a run.
    pub truth_index: Option<usize>,
    pub start_s: f64,
    pub end_s: f64,
    pub freq_hz: f64,
    /// Tone level at the receiver (dB, spectrogram scale).
    pub power_db: f64,
}

impl Emission {
    pub fn tone(&self) -> Tone {
        Tone {
            freq_hz: self.freq_hz,
            power_db: self.power_db,
            start_s: self.start_s,
            end_s: self.end_s,
        }
    }
}

/// State of one tag over one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagStep {
    pub tag_id: String,
    pub active: bool,
    pub freq_hz: Option<f64>,
    pub power_db: Option<f64>,
    pub bias_v: f64,
    pub switch_v: f64,
    pub harvest_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub t_s: f64,
    pub tag_id: String,
    pub active: bool,
    pub freq_hz: Option<f64>,
    pub bias_v: f64,
    pub switch_v: f64,
    pub harvest_w: f64,
    pub lux: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SimTrace {
    pub points: Vec<TracePoint>,
    pub emissions: Vec<Emission>,
}

impl SimTrace {
    pub fn tones(&self) -> Vec<Tone> {
        self.emissions.iter().map(Emission::tone).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for p in &self.points {
            wr.serialize(p)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Window {
    start: u64,
    end: u64,
    freq: f64,
    emission: usize,
}

struct TagRt {
    array: PhotodiodeArray,
    bias: Supercapacitor,
    switch: Supercapacitor,
    transducer: Option<Transducer>,
    link_db: f64,
    window: Option<Window>,
    /// Emission index of the continuous run in progress.
    open: Option<usize>,
    events: u64,
    last: TagStep,
}

/// Step-by-step simulation of every tag.
pub struct Engine<'a> {
    sc: &'a Scenario,
    tags: Vec<TagRt>,
    dt: f64,
    tick: u64,
    end_tick: u64,
    next_interaction: usize,
    lux_changes: Vec<u64>,
    truth: Vec<TruthEntry>,
    emissions: Vec<Emission>,
    trace: Vec<TracePoint>,
    next_trace_s: f64,
}

fn cap(label: &str, c: &super::config::CapConfig) -> Result<Supercapacitor> {
    Supercapacitor::new(label, c.capacitance_f, c.initial_v)
}

fn set_energy(c: &mut Supercapacitor, e: f64, max_v: f64) {
    let e = e.clamp(0.0, c.energy_at(max_v));
    c.voltage = (2.0 * e / c.capacitance).sqrt();
}

impl<'a> Engine<'a> {
    pub fn new(sc: &'a Scenario) -> Result<Self> {
        sc.validate()?;
        let floors = if sc.tags.iter().any(|t| matches!(t.placement, Placement::Floor { .. })) {
            Some(sc.channel.floor_model()?)
        } else {
            None
        };
        let cal = if sc.tags.iter().any(|t| t.transducer.is_some()) {
            Some(Calibration::published()?)
        } else {
            None
        };
        let tags = sc
            .tags
            .iter()
            .map(|t| {
                let snr = match t.placement {
                    Placement::Distance { distance_m } => sc.channel.path_loss.snr_at(distance_m)?,
                    Placement::Floor { floor_offset } => floors.as_ref().unwrap().floor_snr(floor_offset)?.snr_db,
                };
                let duty = match &t.mode {
                    TagMode::Continuous { switching: Some(s) } => s.duty,
                    _ => 1.0,
                };
                let transducer = match (&t.transducer, &cal) {
                    (Some(tc), Some(c)) => Some(Transducer::new(tc.kind, t.base_freq_hz, c.clone())?),
                    _ => None,
                };
                let bias = cap("C_bias", &t.bias_cap)?;
                let switch = cap("C_switch", &t.switch_cap)?;
                Ok(TagRt {
                    array: PhotodiodeArray::with_count(t.photodiodes)?,
                    last: TagStep {
                        tag_id: t.id.clone(),
                        active: false,
                        freq_hz: None,
                        power_db: None,
                        bias_v: bias.voltage,
                        switch_v: switch.voltage,
                        harvest_w: 0.0,
                    },
                    bias,
                    switch,
                    transducer,
                    link_db: sc.receiver.noise_floor_db + snr + 10.0 * duty.log10(),
                    window: None,
                    open: None,
                    events: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dt = sc.time_step_s;
        let lux_changes = sc
            .environment
            .lux
            .changes(sc.duration_s)
            .into_iter()
            .map(|t| (t / dt - 1e-9).ceil() as u64)
            .collect();
        Ok(Self {
            sc,
            tags,
            dt,
            tick: 0,
            end_tick: (sc.duration_s / dt).round() as u64,
            next_interaction: 0,
            lux_changes,
            truth: Vec::new(),
            emissions: Vec::new(),
            trace: Vec::new(),
            next_trace_s: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn is_done(&self) -> bool {
        self.tick >= self.end_tick
    }

    /// Tag states over the most recent step.
    pub fn state(&self) -> Vec<TagStep> {
        self.tags.iter().map(|t| t.last.clone()).collect()
    }

    fn tick_of(&self, t: f64) -> u64 {
        (t / self.dt + 1e-9).floor() as u64
    }

    fn tick_ceil(&self, t: f64) -> u64 {
        (t / self.dt - 1e-9).ceil().max(0.0) as u64
    }

    /// Ticks the next step may cover without skipping a state change.
    fn step_len(&self) -> u64 {
        let coarse = ((COARSE_STEP_S / self.dt).round() as u64).max(1);
        let busy = self.tags.iter().zip(&self.sc.tags).any(|(rt, cfg)| {
            !cfg.is_triggered() || rt.window.is_some_and(|w| w.end > self.tick)
        });
        if busy {
            return 1;
        }
        let mut n = coarse.min(self.end_tick - self.tick);
        if let Some(it) = self.sc.environment.interactions.get(self.next_interaction) {
            n = n.min(self.tick_of(it.time_s).saturating_sub(self.tick));
        }
        if let Some(&c) = self.lux_changes.iter().find(|&&c| c > self.tick) {
            n = n.min(c - self.tick);
        }
        if let LuxSource::Diurnal { .. } = self.sc.environment.lux {
            let per_s = ((1.0 / self.dt).round() as u64).max(1);
            n = n.min(per_s - self.tick % per_s);
        }
        n.max(1)
    }

    fn interact(&mut self, k: usize) -> Result<()> {
        let sc = self.sc;
        let it = &sc.environment.interactions[k];
        let ti = sc.tag_index(&it.tag_id).expect("validated");
        let cfg = &sc.tags[ti];
        let TagMode::Triggered {
            trigger,
            profile,
            activation_jitter,
            min_switch_v,
        } = &cfg.mode
        else {
            unreachable!("validated");
        };
        let truth_index = self.truth.len();
        self.truth.push(TruthEntry {
            tag_id: cfg.id.clone(),
            timestamp_s: it.time_s,
            stimulus: if it.label.is_empty() {
                format!("{}", it.stimulus)
            } else {
                it.label.clone()
            },
        });
        let rt = &mut self.tags[ti];
        let mut r = rng::stream(self.sc.seed, &[rng::label(&cfg.id), rt.events]);
        rt.events += 1;
        // Draw order is fixed: trigger, delay jitter, frequency.
        let fired = trigger.evaluate(it.stimulus, &mut r) && !it.fail;
        let u = if *activation_jitter > 0.0 {
            r.random_range(1.0 - activation_jitter..=1.0 + activation_jitter)
        } else {
            1.0
        };
        let mut freq = match (it.freq_hz, &rt.transducer, cfg.transducer) {
            (Some(f), _, _) => Some(f),
            (None, Some(tr), Some(tc)) => tr.response(tc.stimulus)?.map(|r| r.value),
            _ => Some(cfg.base_freq_hz),
        };
        if cfg.freq_sd_hz > 0.0 {
            let n = Normal::new(0.0, cfg.freq_sd_hz).map_err(|e| Error::Model(e.to_string()))?;
            let d: f64 = n.sample(&mut r);
            freq = freq.map(|f| f + d);
        }
        let busy = rt.window.is_some_and(|w| w.end > self.tick);
        let powered = rt.bias.voltage >= cfg.min_bias_v && rt.switch.voltage >= *min_switch_v;
        let Some(freq) = freq else { return Ok(()) };
        if !fired || busy || !powered || profile.on_time_s <= 0.0 {
            return Ok(());
        }
        let start_s = it.time_s + profile.activation_time_s * u;
        let start = self.tick_ceil(start_s).max(self.tick);
        let end = (start + (profile.on_time_s / self.dt).round() as u64).min(self.end_tick);
        if end <= start {
            return Ok(());
        }
        let rt = &mut self.tags[ti];
        rt.window = Some(Window {
            start,
            end,
            freq,
            emission: self.emissions.len(),
        });
        self.emissions.push(Emission {
            tag_id: cfg.id.clone(),
            truth_index: Some(truth_index),
            start_s: start as f64 * self.dt,
            end_s: end as f64 * self.dt,
            freq_hz: freq,
            power_db: rt.link_db,
        });
        Ok(())
    }

    fn continuous_freq(&self, ti: usize, lux: f64) -> Result<Option<f64>> {
        let cfg = &self.sc.tags[ti];
        let base = match (&self.tags[ti].transducer, cfg.transducer) {
            (Some(tr), Some(tc)) => match tr.response(tc.stimulus)? {
                Some(r) => r.value,
                None => return Ok(None),
            },
            _ => cfg.base_freq_hz,
        };
        Ok(match &cfg.light_model {
            Some(m) => m.drift(lux).map(|d| base + d),
            None => Some(base),
        })
    }

    /// Advance by one step.
    pub fn step(&mut self) -> Result<()> {
        if self.is_done() {
            return Err(Error::invalid("the run is already complete"));
        }
        let n = self.step_len();
        let t = self.time();
        let dt_s = n as f64 * self.dt;
        let lux = self.sc.environment.lux.at(t);
        while let Some(it) = self.sc.environment.interactions.get(self.next_interaction) {
            if self.tick_of(it.time_s) >= self.tick + n {
                break;
            }
            self.interact(self.next_interaction)?;
            self.next_interaction += 1;
        }
        let sc = self.sc;
        let mut changed = false;
        for ti in 0..self.tags.len() {
            let cfg: &TagConfig = &sc.tags[ti];
            let harvest = self.tags[ti].array.harvest_power(lux);
            let (mut load_b, mut load_s) = (0.0, 0.0);
            let mut emitting: Option<f64> = None;
            match &cfg.mode {
                TagMode::Triggered { .. } => {
                    let rt = &mut self.tags[ti];
                    if let Some(w) = rt.window {
                        if self.tick >= w.start && self.tick < w.end {
                            if rt.bias.voltage >= cfg.min_bias_v && rt.switch.voltage > 0.0 {
                                emitting = Some(w.freq);
                                load_s = cfg.tdo_power_w;
                            } else {
                                // Energy ran out mid-emission.
                                self.emissions[w.emission].end_s = t;
                                rt.window = None;
                            }
                        }
                    }
                }
                TagMode::Continuous { switching } => {
                    let rt = &self.tags[ti];
                    let timer_ok = switching.is_none_or(|s| rt.switch.voltage >= s.min_supply_v);
                    if let Some(s) = switching {
                        if timer_ok {
                            load_s = s.overhead_w;
                        }
                    }
                    if rt.bias.voltage >= cfg.min_bias_v && timer_ok {
                        if let Some(f) = self.continuous_freq(ti, lux)? {
                            emitting = Some(f);
                            load_b = cfg.tdo_power_w * switching.map_or(1.0, |s| s.duty);
                        }
                    }
                }
            }
            let rt = &mut self.tags[ti];
            if !cfg.is_triggered() {
                let t_end = t + dt_s;
                match (emitting, rt.open) {
                    (Some(f), Some(e)) if self.emissions[e].freq_hz == f => self.emissions[e].end_s = t_end,
                    (Some(f), open) => {
                        let truth_index = if open.is_none() {
                            self.truth.push(TruthEntry {
                                tag_id: cfg.id.clone(),
                                timestamp_s: t,
                                stimulus: "emission".into(),
                            });
                            Some(self.truth.len() - 1)
                        } else {
                            None
                        };
                        rt.open = Some(self.emissions.len());
                        self.emissions.push(Emission {
                            tag_id: cfg.id.clone(),
                            truth_index,
                            start_s: t,
                            end_s: t_end,
                            freq_hz: f,
                            power_db: rt.link_db,
                        });
                    }
                    (None, _) => rt.open = None,
                }
            }
            let mut e_b = rt.bias.energy() + (harvest - load_b) * dt_s;
            let e_bmax = rt.bias.energy_at(cfg.bias_cap.max_v);
            let surplus = (e_b - e_bmax).max(0.0);
            e_b = e_b.min(e_bmax);
            let e_s = rt.switch.energy() + surplus - load_s * dt_s;
            set_energy(&mut rt.bias, e_b, cfg.bias_cap.max_v);
            set_energy(&mut rt.switch, e_s, cfg.switch_cap.max_v);
            changed |= rt.last.active != emitting.is_some();
            rt.last = TagStep {
                tag_id: cfg.id.clone(),
                active: emitting.is_some(),
                freq_hz: emitting,
                power_db: emitting.map(|_| rt.link_db),
                bias_v: rt.bias.voltage,
                switch_v: rt.switch.voltage,
                harvest_w: harvest,
            };
            if rt.window.is_some_and(|w| w.end <= self.tick + n) {
                rt.window = None;
            }
        }
        if changed || t >= self.next_trace_s {
            for rt in &self.tags {
                self.trace.push(TracePoint {
                    t_s: t,
                    tag_id: rt.last.tag_id.clone(),
                    active: rt.last.active,
                    freq_hz: rt.last.freq_hz,
                    bias_v: rt.last.bias_v,
                    switch_v: rt.last.switch_v,
                    harvest_w: rt.last.harvest_w,
                    lux,
                });
            }
            while self.next_trace_s <= t {
                self.next_trace_s += self.sc.trace_interval_s;
            }
        }
        self.tick += n;
        Ok(())
    }

    /// Step until the step covering `t` has run.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        while !self.is_done() && self.time() <= t {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(SimTrace, GroundTruthLog)> {
        while !self.is_done() {
            self.step()?;
        }
        let truth = GroundTruthLog::new(self.truth, Vec::new())?;
        Ok((
            SimTrace {
                points: self.trace,
                emissions: self.emissions,
            },
            truth,
        ))
    }
}

/// Per-tag state over the step that covers time `t`.
pub fn step(scenario: &Scenario, t: f64) -> Result<Vec<TagStep>> {
    if !(0.0..=scenario.duration_s).contains(&t) {
        return Err(Error::domain("time (s)", t, 0.0, scenario.duration_s));
    }
    let mut e = Engine::new(scenario)?;
    e.advance_to(t.min(scenario.duration_s - scenario.time_step_s * 0.5))?;
    Ok(e.state())
}

/// Capture windows covering every tone with `pad_s` of silence on each
/// side, aligned to the detection-frame grid so compressed and full runs
/// see the same frames.
pub fn plan_captures(tones: &[Tone], duration_s: f64, rx: &ReceiverConfig, compress: bool, pad_s: f64) -> Vec<Capture> {
    let rate = rx.sample_rate_hz;
    let total = (duration_s * rate).round() as u64;
    let span = (rx.fft_size + (rx.averages.max(1) - 1) * rx.hop) as u64;
    if total < span {
        return Vec::new();
    }
    if !compress {
        return vec![Capture {
            start_sample: 0,
            len: total as usize,
        }];
    }
    let block = rx.block_len() as u64;
    let mut iv: Vec<(u64, u64)> = tones
        .iter()
        .map(|t| {
            let a = (((t.start_s - pad_s).max(0.0) * rate) as u64 / block) * block;
            let b = (((t.end_s + pad_s) * rate).ceil() as u64).div_ceil(block) * block + span;
            (a, b.min(total))
        })
        .collect();
    iv.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out.into_iter()
        .filter(|(a, b)| b - a >= span)
        .map(|(a, b)| Capture {
            start_sample: a,
            len: (b - a) as usize,
        })
        .collect()
}

/// Everything a run produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub name: String,
    pub seed: u64,
    pub mode: SimMode,
    pub trace: SimTrace,
    pub truth: GroundTruthLog,
    pub captures: Vec<Capture>,
    pub events: Vec<TagEvent>,
    pub report: DetectionReport,
    /// Emission onset to detection, per matched event.
    pub latencies_s: Vec<f64>,
}

impl RunOutput {
    pub fn max_latency_s(&self) -> Option<f64> {
        self.latencies_s.iter().copied().reduce(f64::max)
    }

    /// Mean frequencies of detected events of one tag, in Hz.
    pub fn frequency_series(&self, tag_id: &str) -> Vec<f64> {
        self.events.iter().filter(|e| e.tag_id == tag_id).map(|e| e.mean_freq_hz).collect()
    }
}

/// Receiver side of a run: captures → spectrograms → events.
pub fn receive(
    tones: &[Tone],
    captures: &[Capture],
    bands: &[Band],
    rx: &ReceiverConfig,
    mode: SimMode,
    seed: u64,
) -> Result<Vec<TagEvent>> {
    let mut events = Vec::new();
    let noise_seed = rng::derive_seed(seed, &[NOISE_STREAM]);
    for &c in captures {
        let sp = match mode {
            SimMode::Spectral => synthesize_spectrogram_capture(tones, rx.noise_floor_db, c, rx)?,
            SimMode::Iq => {
                let iq = synthesize_iq_capture(tones, rx.noise_floor_db, c, rx, noise_seed)?;
                rx.spectrogram_from_iq(&iq)?
            }
        };
        if sp.is_empty() {
            continue;
        }
        events.extend(detect_events(&sp, bands, &rx.detect)?);
    }
    events.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then_with(|| a.tag_id.cmp(&b.tag_id)));
    Ok(events)
}

pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let (trace, truth) = Engine::new(scenario)?.finish()?;
    let tones = trace.tones();
    let rx = &scenario.receiver;
    let captures = plan_captures(&tones, scenario.duration_s, rx, scenario.time_compression, CAPTURE_PAD_S);
    let events = receive(&tones, &captures, &scenario.bands()?, rx, scenario.mode, scenario.seed)?;
    let report = match_events(&events, &truth, scenario.match_window_s)?;
    let latencies_s = report
        .matches
        .iter()
        .filter_map(|m| {
            let em = trace.emissions.iter().find(|e| e.truth_index == Some(m.truth))?;
            Some(events[m.detection].detected_at_s - em.start_s)
        })
        .collect();
    Ok(RunOutput {
        name: scenario.name.clone(),
        seed: scenario.seed,
        mode: scenario.mode,
        trace,
        truth,
        captures,
        events,
        report,
        latencies_s,
    })
}
