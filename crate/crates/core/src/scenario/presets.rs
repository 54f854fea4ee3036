//! Ready-made scenarios: the 60-hour three-tag deployment, light steps,
//! range points, and the Monte-Carlo light sweep.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::config::*;
use crate::channel::PathLossModel;
use crate::dsp::{DetectConfig, ReceiverConfig, WindowKind};
use crate::error::{Error, Result};
use crate::rng;
use crate::switching::LightResponseModel;
use crate::transducer::{ActivationProfile, TriggerSwitch};

pub const DEPLOYMENT_HOURS: f64 = 60.0;
pub const DEPLOYMENT_CENTER_HZ: f64 = 512.5e6;
/// Wide enough for all three bands.
pub const DEPLOYMENT_SAMPLE_RATE_HZ: f64 = 3.2e6;
/// Schedule and frequency-series seed of the deployment preset.
pub const DEPLOYMENT_SEED: u64 = 0x00de_9107;
/// Minimum gap between two interactions with the same object.
pub const MIN_EVENT_SPACING_S: f64 = 60.0;

/// Per-object script of the deployment preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeploymentTag {
    pub id: &'static str,
    pub band_hz: (f64, f64),
    pub events: usize,
    /// Interactions the trigger switch misses.
    pub misses: usize,
    pub profile: ActivationProfile,
    pub reed: bool,
    pub stimulus: f64,
    pub distance_m: f64,
    /// Target mean, SD, min and max of the emitted frequencies (MHz).
    pub freq_mhz: (f64, f64, f64, f64),
}

pub const DEPLOYMENT_TAGS: [DeploymentTag; 3] = [
    DeploymentTag {
        id: "trash",
        band_hz: (510.9e6, 512.2e6),
        events: 25,
        misses: 0,
        profile: ActivationProfile::TRASH,
        reed: false,
        stimulus: 75.0,
        distance_m: 6.0,
        freq_mhz: (511.71, 0.30, 511.0, 512.19),
    },
    DeploymentTag {
        id: "soap",
        band_hz: (512.2e6, 513.1e6),
        events: 19,
        misses: 0,
        profile: ActivationProfile::SOAP,
        reed: true,
        stimulus: 2.0,
        distance_m: 4.0,
        freq_mhz: (512.52, 0.27, 512.21, 513.0),
    },
    DeploymentTag {
        id: "oven",
        band_hz: (513.1e6, 514.1e6),
        events: 14,
        misses: 3,
        profile: ActivationProfile::OVEN,
        reed: false,
        stimulus: 80.0,
        distance_m: 9.0,
        freq_mhz: (513.50, 0.21, 513.2, 514.0),
    },
];

/// `n` values in `[lo, hi]` with sample mean `mean`, sample SD `sd`, and
/// both `lo` and `hi` present. Interior values are seeded Gaussian draws
/// rescaled to hit the moments; seeds are tried in order from `seed` until
/// the rescaled draws fit the range.
pub fn constrained_series(n: usize, mean: f64, sd: f64, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>> {
    if n < 4 || !(lo < mean && mean < hi) || !(sd > 0.0) {
        return Err(Error::invalid("need n ≥ 4, lo < mean < hi and sd > 0"));
    }
    let m = (n - 2) as f64;
    let mu = (n as f64 * mean - lo - hi) / m;
    let q = (n - 1) as f64 * sd * sd - (lo - mean).powi(2) - (hi - mean).powi(2) - m * (mu - mean).powi(2);
    if !(q > 0.0) || !(lo < mu && mu < hi) {
        return Err(Error::Unreachable(format!(
            "no series of {n} values in [{lo}, {hi}] has mean {mean} and SD {sd}"
        )));
    }
    for attempt in 0..10_000u64 {
        let mut r = rng::stream(seed, &[attempt]);
        let z: Vec<f64> = (0..n - 2).map(|_| StandardNormal.sample(&mut r)).collect();
        let zm = z.iter().sum::<f64>() / m;
        let ss: f64 = z.iter().map(|v| (v - zm).powi(2)).sum();
        let scale = (q / ss).sqrt();
        let inner: Vec<f64> = z.iter().map(|v| mu + (v - zm) * scale).collect();
        if inner.iter().all(|&v| v > lo && v < hi) {
            let mut out = Vec::with_capacity(n);
            out.push(lo);
            out.extend(inner);
            out.push(hi);
            // deterministic shuffle so the extremes are not first and last
            for i in (1..n).rev() {
                let j = r.random_range(0..=i);
                out.swap(i, j);
            }
            return Ok(out);
        }
    }
    Err(Error::Unreachable("no feasible draw found for the constrained series".into()))
}

fn event_times(n: usize, duration_s: f64, seed: u64, tag: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, &[tag, 1]);
    let slot = (duration_s - 1200.0) / n as f64;
    (0..n)
        .map(|k| {
            let t = 600.0 + slot * k as f64 + r.random_range(0.0..0.6) * slot;
            (t * 100.0).round() / 100.0
        })
        .collect()
}

/// Receiver settings shared by the deployment preset.
pub fn deployment_receiver() -> ReceiverConfig {
    ReceiverConfig {
        sample_rate_hz: DEPLOYMENT_SAMPLE_RATE_HZ,
        center_freq_hz: DEPLOYMENT_CENTER_HZ,
        fft_size: 4096,
        hop: 2048,
        window: WindowKind::BlackmanHarris4,
        averages: 16,
        noise_floor_db: -100.0,
        detect: DetectConfig::default(),
    }
}

/// The 60-hour replay: trash can, soap dispenser and oven, with scripted
/// interaction times and per-event frequencies. Three oven interactions
/// are scripted trigger misses. A few trash-can interactions are moved next
/// to soap-dispenser ones so the two tags are sometimes on together.
pub fn deployment(seed: u64) -> Result<Scenario> {
    let duration_s = DEPLOYMENT_HOURS * 3600.0;
    let mut tags = Vec::new();
    let mut per_tag: Vec<Vec<Interaction>> = Vec::new();
    for (ti, d) in DEPLOYMENT_TAGS.iter().enumerate() {
        let fired = d.events - d.misses;
        let (mean, sd, lo, hi) = d.freq_mhz;
        let series = constrained_series(fired, mean, sd, lo, hi, rng::derive_seed(seed, &[ti as u64, 2]))?;
        let times = event_times(d.events, duration_s, seed, ti as u64);
        // misses spread over the run
        let miss_at: Vec<usize> = (0..d.misses).map(|k| (2 * k + 1) * d.events / (2 * d.misses.max(1))).collect();
        let mut f = series.into_iter();
        let ints = times
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let fail = miss_at.contains(&k);
                Interaction {
                    tag_id: d.id.into(),
                    time_s: t,
                    stimulus: d.stimulus,
                    label: if d.reed { "press" } else { "tilt" }.into(),
                    freq_hz: if fail { Some(mean * 1e6) } else { f.next().map(|v| v * 1e6) },
                    fail,
                }
            })
            .collect();
        per_tag.push(ints);
        let trigger = if d.reed {
            TriggerSwitch::reed()
        } else {
            TriggerSwitch::tilt_ball()
        };
        tags.push(TagConfig {
            id: d.id.into(),
            band_lo_hz: d.band_hz.0,
            band_hi_hz: d.band_hz.1,
            base_freq_hz: mean * 1e6,
            mode: TagMode::Triggered {
                trigger,
                profile: d.profile,
                activation_jitter: 0.2,
                min_switch_v: crate::switching::DEFAULT_MIN_SUPPLY_V,
            },
            transducer: None,
            freq_sd_hz: 0.0,
            photodiodes: 25,
            bias_cap: CapConfig::bias(),
            switch_cap: CapConfig::switch(),
            min_bias_v: DEFAULT_MIN_BIAS_V,
            tdo_power_w: DEFAULT_TDO_POWER_W,
            placement: Placement::Distance {
                distance_m: d.distance_m,
            },
            light_model: None,
        });
    }
    // put some trash-can events right after soap-dispenser events
    for k in [3usize, 9, 15] {
        let soap_t = per_tag[1][k].time_s;
        let trash = &per_tag[0];
        let j = (0..trash.len())
            .min_by(|&a, &b| (trash[a].time_s - soap_t).abs().total_cmp(&(trash[b].time_s - soap_t).abs()))
            .unwrap();
        let new_t = soap_t + 0.4;
        let prev_ok = j == 0 || new_t - trash[j - 1].time_s >= MIN_EVENT_SPACING_S;
        let next_ok = j + 1 == trash.len() || trash[j + 1].time_s - new_t >= MIN_EVENT_SPACING_S;
        if prev_ok && next_ok {
            per_tag[0][j].time_s = new_t;
        }
    }
    let mut interactions: Vec<Interaction> = per_tag.into_iter().flatten().collect();
    interactions.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    let sc = Scenario {
        schema: SCHEMA_VERSION,
        name: "deployment-60h".into(),
        seed,
        duration_s,
        time_step_s: DEFAULT_TIME_STEP_S,
        mode: SimMode::Spectral,
        time_compression: true,
        allow_overlap: false,
        match_window_s: crate::analytics::DEFAULT_MATCH_WINDOW_S,
        trace_interval_s: 60.0,
        receiver: deployment_receiver(),
        channel: ChannelConfig::default(),
        environment: Environment {
            lux: LuxSource::Diurnal {
                min_lux: 30.0,
                max_lux: 350.0,
                period_s: 86_400.0,
                peak_s: 13.0 * 3600.0,
            },
            interactions,
        },
        tags,
    };
    sc.validate()?;
    Ok(sc)
}

/// One continuous tag with the light-response model under a lux schedule.
pub fn light_steps(points: Vec<(f64, f64)>, duration_s: f64) -> Result<Scenario> {
    let model = LightResponseModel::default();
    let sc = Scenario {
        schema: SCHEMA_VERSION,
        name: "light-steps".into(),
        seed: crate::DEFAULT_SEED,
        duration_s,
        time_step_s: DEFAULT_TIME_STEP_S,
        mode: SimMode::Spectral,
        time_compression: false,
        allow_overlap: false,
        match_window_s: crate::analytics::DEFAULT_MATCH_WINDOW_S,
        trace_interval_s: 0.1,
        receiver: ReceiverConfig {
            center_freq_hz: 580e6,
            ..ReceiverConfig::default()
        },
        channel: ChannelConfig::default(),
        environment: Environment {
            lux: LuxSource::Steps { points },
            interactions: Vec::new(),
        },
        tags: vec![continuous_tag("tag", model.anchor_freq, 579.5e6, 580.6e6, 5.0, Some(model))],
    };
    sc.validate()?;
    Ok(sc)
}

fn continuous_tag(id: &str, base: f64, lo: f64, hi: f64, distance_m: f64, light: Option<LightResponseModel>) -> TagConfig {
    TagConfig {
        id: id.into(),
        band_lo_hz: lo,
        band_hi_hz: hi,
        base_freq_hz: base,
        mode: TagMode::Continuous { switching: None },
        transducer: None,
        freq_sd_hz: 0.0,
        photodiodes: 25,
        bias_cap: CapConfig::bias(),
        switch_cap: CapConfig::switch(),
        min_bias_v: DEFAULT_MIN_BIAS_V,
        tdo_power_w: DEFAULT_TDO_POWER_W,
        placement: Placement::Distance { distance_m },
        light_model: light,
    }
}

/// A continuous tag `distance_m` from the receiver, for range sweeps.
pub fn range_point(path_loss: PathLossModel, distance_m: f64, duration_s: f64) -> Result<Scenario> {
    let sc = Scenario {
        schema: SCHEMA_VERSION,
        name: "range".into(),
        seed: crate::DEFAULT_SEED,
        duration_s,
        time_step_s: DEFAULT_TIME_STEP_S,
        mode: SimMode::Spectral,
        time_compression: false,
        allow_overlap: false,
        match_window_s: crate::analytics::DEFAULT_MATCH_WINDOW_S,
        trace_interval_s: 0.1,
        receiver: ReceiverConfig::default(),
        channel: ChannelConfig {
            path_loss,
            floors_snr_db: None,
        },
        environment: Environment {
            lux: LuxSource::Constant { lux: 1000.0 },
            interactions: Vec::new(),
        },
        tags: vec![continuous_tag("tag", 580.3e6, 579.5e6, 580.6e6, distance_m, None)],
    };
    sc.validate()?;
    Ok(sc)
}

/// Lux levels 500, 550, ..., 1000.
pub fn light_sweep_levels() -> Vec<f64> {
    (0..=10).map(|i| 500.0 + 50.0 * i as f64).collect()
}

/// One simulated light sweep: at each level, the mean of `draws` noisy
/// frequency readings. Returns `(lux, MHz)` pairs.
pub fn light_sweep(
    model: &LightResponseModel,
    levels: &[f64],
    draws: usize,
    sd_hz: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if draws == 0 {
        return Err(Error::invalid("at least one draw per level is needed"));
    }
    let mut freqs = Vec::with_capacity(levels.len());
    for (i, &lux) in levels.iter().enumerate() {
        let f = model
            .frequency_under_light(lux)
            .ok_or_else(|| Error::domain("lux", lux, model.shutdown_lux, f64::INFINITY))?;
        let mean = if sd_hz > 0.0 {
            let n = Normal::new(f, sd_hz).map_err(|e| Error::Model(e.to_string()))?;
            let mut r = rng::stream(seed, &[i as u64]);
            (0..draws).map(|_| n.sample(&mut r)).sum::<f64>() / draws as f64
        } else {
            f
        };
        freqs.push(mean / 1e6);
    }
    Ok((levels.to_vec(), freqs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::frequency_stats;
    use approx::assert_relative_eq;

    #[test]
    fn constrained_series_hits_its_targets() {
        for d in DEPLOYMENT_TAGS {
            let (mean, sd, lo, hi) = d.freq_mhz;
            let s = constrained_series(d.events - d.misses, mean, sd, lo, hi, 5).unwrap();
            let st = frequency_stats(&s).unwrap();
            assert_relative_eq!(st.mean, mean, max_relative = 1e-12);
            assert_relative_eq!(st.sd, sd, max_relative = 1e-9);
            assert_eq!((st.min, st.max), (lo, hi));
        }
    }

    #[test]
    fn infeasible_moments_are_reported() {
        assert!(constrained_series(5, 1.0, 10.0, 0.0, 2.0, 1).is_err());
    }

    #[test]
    fn deployment_script_has_58_interactions() {
        let sc = deployment(DEPLOYMENT_SEED).unwrap();
        assert_eq!(sc.environment.interactions.len(), 58);
        assert_eq!(sc.environment.interactions.iter().filter(|i| i.fail).count(), 3);
        for d in DEPLOYMENT_TAGS {
            let t: Vec<f64> = sc
                .environment
                .interactions
                .iter()
                .filter(|i| i.tag_id == d.id)
                .map(|i| i.time_s)
                .collect();
            assert!(t.windows(2).all(|w| w[1] - w[0] >= MIN_EVENT_SPACING_S));
        }
    }

    #[test]
    fn noiseless_light_sweep_is_the_line() {
        let m = LightResponseModel::default();
        let (x, y) = light_sweep(&m, &light_sweep_levels(), 1, 0.0, 0).unwrap();
        assert_eq!(x.len(), 11);
        assert_relative_eq!(y[10], 580.054, max_relative = 1e-15);
        assert_relative_eq!(y[0], 580.354, max_relative = 1e-12);
    }
}
