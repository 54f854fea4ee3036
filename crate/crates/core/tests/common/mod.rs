//! Shared oracles, scenario builders and property suites. The property
//! suites run under `tests/properties.rs` and again from the acceptance
//! harness, each with at least [`CASES`] cases.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use tdotag::analytics::{
    energy_report, frequency_stats, match_events, pearson_correlation, EnergyInput, GroundTruthLog, TruthEntry,
};
use tdotag::channel::PathLossModel;
use tdotag::dsp::iqfile::{read_events, write_events, EventRow};
use tdotag::dsp::{synthesize_iq, Band, DetectConfig, ReceiverConfig, TagEvent, WindowKind};
use tdotag::harvest::{PhotodiodeArray, Supercapacitor};
use tdotag::rng;
use tdotag::scenario::{presets, run, Engine, Interaction, LuxSource, Scenario};
use tdotag::switching::{average_power, SwitchingProfile};

pub const CASES: u32 = 1000;

/// A property: name and a runner taking the case count.
pub type Property = (&'static str, fn(u32) -> Result<(), String>);

pub const PROPERTIES: &[Property] = &[
    ("path_loss_snr_decreases_with_distance", path_loss_monotone),
    ("harvest_non_decreasing_in_lux_and_count", harvest_monotone),
    ("average_power_monotone_in_duty", power_monotone),
    ("energy_percent_is_linear_in_on_time", energy_linear),
    ("iq_synthesis_is_deterministic_per_seed", iq_deterministic),
    ("pearson_bounded_and_affine_invariant", pearson_invariance),
    ("cv_is_unit_invariant", cv_units),
    ("bands_are_half_open", bands_half_open),
    ("match_events_assigns_at_most_once", matching_one_to_one),
    ("event_csv_round_trips", events_round_trip),
    ("scenario_json_round_trips", scenario_round_trip),
    ("time_compression_does_not_change_events", compression_identity),
    ("emissions_never_precede_their_interaction", energy_causality),
];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn go<S: Strategy>(
    cases: u32,
    s: S,
    f: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&s, f).map_err(|e| e.to_string())
}

fn err(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

fn path_loss_monotone(cases: u32) -> Result<(), String> {
    go(
        cases,
        (20.0..60.0f64, 1.5..4.0f64, 1.0..100.0f64, 1.0001..3.0f64),
        |(snr0, n, d, k)| {
            let m = PathLossModel::new(snr0, n, 5.0).map_err(err)?;
            let (a, b) = (m.snr_at(d).map_err(err)?, m.snr_at(d * k).map_err(err)?);
            prop_assert!(b < a, "snr({}) = {b} ≥ snr({d}) = {a}", d * k);
            // max_range is where the threshold is crossed
            let r = m.max_range().map_err(err)?;
            prop_assert!((m.snr_at(r).map_err(err)? - 5.0).abs() < 1e-9);
            Ok(())
        },
    )
}

fn harvest_monotone(cases: u32) -> Result<(), String> {
    let arrays: Vec<PhotodiodeArray> = [11, 25, 40]
        .iter()
        .map(|&n| PhotodiodeArray::with_count(n).unwrap())
        .collect();
    go(cases, (0.0..1500.0f64, 0.0..500.0f64), |(lux, dl)| {
        for a in &arrays {
            prop_assert!(a.harvest_power(lux + dl) >= a.harvest_power(lux) - 1e-15);
            prop_assert!(a.harvest_power(lux) >= 0.0);
        }
        for w in arrays.windows(2) {
            prop_assert!(w[1].harvest_power(lux) >= w[0].harvest_power(lux) - 1e-15);
        }
        Ok(())
    })
}

fn power_monotone(cases: u32) -> Result<(), String> {
    go(
        cases,
        (0.0..=1.0f64, 0.0..=1.0f64, 1e-6..1e-3f64, any::<bool>()),
        |(d1, d2, p, switched)| {
            let prof = SwitchingProfile::new(60.0, 0.5).map_err(err)?;
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let a = average_power(lo, p, switched, &prof).map_err(err)?;
            let b = average_power(hi, p, switched, &prof).map_err(err)?;
            prop_assert!(a <= b);
            // oracle: duty·P plus overhead when switched
            let want = hi * p + if switched { prof.switch_overhead } else { 0.0 };
            prop_assert!((b - want).abs() <= 1e-12 * want.max(1e-12));
            Ok(())
        },
    )
}

fn energy_linear(cases: u32) -> Result<(), String> {
    go(cases, (0.01..20.0f64, 0.01..20.0f64, 1e-6..1e-4f64, 0.5..2.0f64), |(t1, t2, p, v)| {
        let cap = Supercapacitor::switch(v).map_err(err)?;
        let rows = energy_report(
            &[
                EnergyInput { tag_id: "a".into(), on_time_s: t1, published_pct: None },
                EnergyInput { tag_id: "b".into(), on_time_s: t2, published_pct: None },
                EnergyInput { tag_id: "ab".into(), on_time_s: t1 + t2, published_pct: None },
            ],
            &cap,
            p,
        )
        .map_err(err)?;
        let sum = rows[0].percent + rows[1].percent;
        prop_assert!((rows[2].percent - sum).abs() <= 1e-9 * sum);
        // oracle: P·t / (½·C·V²) · 100
        let want = p * t1 / (0.5 * cap.capacitance * v * v) * 100.0;
        prop_assert!((rows[0].percent - want).abs() <= 1e-9 * want);
        Ok(())
    })
}

fn iq_deterministic(cases: u32) -> Result<(), String> {
    let rx = ReceiverConfig {
        fft_size: 64,
        hop: 32,
        averages: 1,
        ..ReceiverConfig::default()
    };
    go(cases, (any::<u64>(), 64usize..512), |(seed, n)| {
        let d = n as f64 / rx.sample_rate_hz;
        let a = synthesize_iq(&[], -80.0, d, &rx, seed).map_err(err)?;
        let b = synthesize_iq(&[], -80.0, d, &rx, seed).map_err(err)?;
        prop_assert_eq!(&a.samples, &b.samples);
        let c = synthesize_iq(&[], -80.0, d, &rx, seed.wrapping_add(1)).map_err(err)?;
        prop_assert_ne!(&a.samples, &c.samples);
        Ok(())
    })
}

fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-1e3..1e3f64, n),
            prop::collection::vec(-1e3..1e3f64, n),
        )
    })
}

fn pearson_invariance(cases: u32) -> Result<(), String> {
    go(cases, (series(), 0.01..100.0f64, -1e3..1e3f64), |((x, y), a, b)| {
        let Ok(r) = pearson_correlation(&x, &y) else {
            return Ok(());
        };
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r), "r = {r}");
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r2 = pearson_correlation(&xs, &y).map_err(err)?;
        prop_assert!((r - r2).abs() < 1e-9, "{r} vs {r2}");
        let neg: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        let r3 = pearson_correlation(&neg, &y).map_err(err)?;
        prop_assert!((r + r3).abs() < 1e-9);
        Ok(())
    })
}

fn cv_units(cases: u32) -> Result<(), String> {
    go(
        cases,
        (prop::collection::vec(400.0..600.0f64, 2..50), prop::sample::select(vec![1e-3, 1.0, 1e3, 1e6])),
        |(mhz, k)| {
            let a = frequency_stats(&mhz).map_err(err)?;
            let scaled: Vec<f64> = mhz.iter().map(|v| v * k).collect();
            let b = frequency_stats(&scaled).map_err(err)?;
            prop_assert!((a.cv - b.cv).abs() <= 1e-9 * a.cv.max(1e-12));
            prop_assert!(a.min <= a.mean && a.mean <= a.max);
            prop_assert!((a.bandwidth - (a.max - a.min)).abs() < 1e-12);
            Ok(())
        },
    )
}

fn bands_half_open(cases: u32) -> Result<(), String> {
    go(cases, (400e6..600e6f64, 1e3..5e6f64, 0.0..1.0f64), |(lo, w, t)| {
        let b = Band::new("x", lo, lo + w).map_err(err)?;
        prop_assert!(b.contains(lo));
        prop_assert!(!b.contains(lo + w));
        let f = lo + t * w;
        prop_assert_eq!(b.contains(f), f >= lo && f < lo + w);
        // adjacent bands never both claim a frequency
        let next = Band::new("y", lo + w, lo + 2.0 * w).map_err(err)?;
        prop_assert!(!(b.contains(f) && next.contains(f)));
        prop_assert!(next.contains(lo + w));
        Ok(())
    })
}

fn event(tag: &str, start: f64, dur: f64) -> EventRow {
    EventRow {
        tag_id: tag.into(),
        start_s: start,
        end_s: start + dur,
        mean_freq_hz: 512e6,
        peak_snr_db: 20.0,
    }
}

fn timeline() -> impl Strategy<Value = (Vec<(u8, f64)>, Vec<(u8, f64)>, f64)> {
    (
        prop::collection::vec((0u8..3, 0.0..500.0f64), 0..25),
        prop::collection::vec((0u8..3, 0.0..500.0f64), 0..25),
        0.1..30.0f64,
    )
}

const TAGS: [&str; 3] = ["a", "b", "c"];

fn matching_one_to_one(cases: u32) -> Result<(), String> {
    go(cases, timeline(), |(truth, det, window)| {
        let mut truth = truth;
        truth.sort_by(|a, b| a.1.total_cmp(&b.1));
        let log = GroundTruthLog::new(
            truth
                .iter()
                .map(|&(k, t)| TruthEntry {
                    tag_id: TAGS[k as usize].into(),
                    timestamp_s: t,
                    stimulus: "x".into(),
                })
                .collect(),
            Vec::new(),
        )
        .map_err(err)?;
        let det: Vec<EventRow> = det.iter().map(|&(k, t)| event(TAGS[k as usize], t, 1.0)).collect();
        let r = match_events(&det, &log, window).map_err(err)?;
        let mut tu = vec![false; truth.len()];
        let mut du = vec![false; det.len()];
        for m in &r.matches {
            prop_assert!(!tu[m.truth] && !du[m.detection], "double assignment");
            tu[m.truth] = true;
            du[m.detection] = true;
            prop_assert_eq!(&log.entries[m.truth].tag_id, &det[m.detection].tag_id);
            prop_assert!(m.delay_s.abs() <= window);
        }
        prop_assert_eq!(r.events_detected + r.misses, r.events_true);
        prop_assert_eq!(r.events_detected + r.false_positives, det.len());
        let per: usize = r.per_tag.values().map(|s| s.misses).sum();
        prop_assert_eq!(per, r.misses);
        Ok(())
    })
}

fn events_round_trip(cases: u32) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("events.csv");
    go(
        cases,
        prop::collection::vec((0u8..3, 0.0..1e5f64, 0.0..10.0f64, 400e6..600e6f64, -10.0..60.0f64), 0..10),
        |rows| {
            let evs: Vec<TagEvent> = rows
                .iter()
                .map(|&(k, s, d, f, snr)| TagEvent {
                    tag_id: TAGS[k as usize].into(),
                    band_lo_hz: 400e6,
                    band_hi_hz: 600e6,
                    start_s: s,
                    end_s: s + d,
                    mean_freq_hz: f,
                    peak_snr_db: snr,
                    detected_at_s: s,
                })
                .collect();
            write_events(std::fs::File::create(&path).map_err(err)?, &evs).map_err(err)?;
            let back = read_events(&path).map_err(err)?;
            prop_assert_eq!(back.len(), evs.len());
            for (b, e) in back.iter().zip(&evs) {
                prop_assert_eq!(b, &EventRow::from(e));
            }
            Ok(())
        },
    )
}

fn scenario_round_trip(cases: u32) -> Result<(), String> {
    let base = presets::deployment(presets::DEPLOYMENT_SEED).map_err(|e| e.to_string())?;
    go(cases, (any::<u64>(), 1.0..1e4f64, 0.001..1.0f64, any::<bool>()), |(seed, lux, step, compress)| {
        let mut sc = base.clone();
        sc.seed = seed;
        sc.time_step_s = step;
        sc.time_compression = compress;
        sc.environment.lux = LuxSource::Constant { lux };
        let text = sc.to_json().map_err(err)?;
        let back = Scenario::from_json(&text).map_err(err)?;
        prop_assert_eq!(back, sc);
        Ok(())
    })
}

/// A short three-tag triggered scenario with a small receiver, for
/// properties that run the full pipeline.
pub fn mini_scenario(seed: u64, interactions: &[(usize, f64)], duration_s: f64) -> Scenario {
    let mut sc = presets::deployment(presets::DEPLOYMENT_SEED).expect("preset");
    sc.name = "mini".into();
    sc.seed = seed;
    sc.duration_s = duration_s;
    sc.trace_interval_s = duration_s;
    sc.receiver = ReceiverConfig {
        fft_size: 256,
        hop: 256,
        averages: 64,
        window: WindowKind::BlackmanHarris4,
        detect: DetectConfig {
            neighborhood_bins: 48,
            ..DetectConfig::default()
        },
        ..presets::deployment_receiver()
    };
    sc.environment.lux = LuxSource::Constant { lux: 200.0 };
    let mut ints: Vec<Interaction> = interactions
        .iter()
        .map(|&(k, t)| {
            let tag = &presets::DEPLOYMENT_TAGS[k];
            Interaction {
                tag_id: tag.id.into(),
                time_s: t,
                stimulus: tag.stimulus,
                label: "x".into(),
                freq_hz: None,
                fail: false,
            }
        })
        .collect();
    ints.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    sc.environment.interactions = ints;
    sc
}

fn interactions(max_t: f64) -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0usize..3, 0.0..max_t), 0..4)
}

fn compression_identity(cases: u32) -> Result<(), String> {
    go(cases, (any::<u64>(), interactions(8.0)), |(seed, ints)| {
        let mut sc = mini_scenario(seed, &ints, 16.0);
        sc.time_compression = true;
        let a = run(&sc).map_err(err)?;
        sc.time_compression = false;
        let b = run(&sc).map_err(err)?;
        prop_assert_eq!(&a.events, &b.events);
        prop_assert_eq!(&a.report, &b.report);
        Ok(())
    })
}

fn energy_causality(cases: u32) -> Result<(), String> {
    go(cases, (any::<u64>(), interactions(50.0), any::<bool>()), |(seed, ints, starved)| {
        let mut sc = mini_scenario(seed, &ints, 60.0);
        if starved {
            sc.environment.lux = LuxSource::Constant { lux: 0.0 };
            for t in &mut sc.tags {
                t.switch_cap.initial_v = 0.0;
            }
        }
        let (trace, truth) = Engine::new(&sc).map_err(err)?.finish().map_err(err)?;
        if starved {
            prop_assert!(trace.emissions.is_empty(), "emitted with no stored energy");
        }
        prop_assert!(trace.emissions.len() <= ints.len());
        for e in &trace.emissions {
            let i = e.truth_index.ok_or_else(|| err("triggered emission without a cause"))?;
            let t = &truth.entries[i];
            prop_assert_eq!(&t.tag_id, &e.tag_id);
            prop_assert!(e.start_s >= t.timestamp_s, "emission at {} before interaction at {}", e.start_s, t.timestamp_s);
            prop_assert!(e.end_s > e.start_s);
        }
        Ok(())
    })
}

/// Seeded stream helper for oracles that need raw draws.
pub fn draws(seed: u64, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng::stream(seed, &[]);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}
