//! Command-line front end. The `tdotag` binary only parses arguments and
//! maps the result of [`execute`] to an exit code.
//!
//! Exit codes: 0 success, 1 a reproduced value is outside tolerance,
//! 2 bad input (arguments, files, configs).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytics::{frequency_stats, match_events, regression_fit, GroundTruthLog, DEFAULT_MATCH_WINDOW_S};
use crate::channel::{FloorModel, PathLossModel};
use crate::dsp::iqfile::{read_events, read_iq, write_events, IqFormat};
use crate::dsp::{detect_events, Band, ReceiverConfig};
use crate::error::{Error, Result};
use crate::harvest::PhotodiodeArray;
use crate::repro::{self, REGISTRY};
use crate::scenario::{presets, run, sweep, Scenario, SimMode};
use crate::switching::{
    average_power, consistency_warnings, LightResponseModel, SwitchingProfile, TimerConfig, DEFAULT_SWITCH_OVERHEAD_W,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_TOLERANCE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "tdotag", version, about = "Batteryless tunnel-diode tag simulator and receiver")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory for files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the scenario or default seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of tables printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Spectral,
    Iq,
}

impl From<ModeArg> for SimMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Spectral => SimMode::Spectral,
            ModeArg::Iq => SimMode::Iq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathLossArg {
    Pd25,
    Pd11,
}

impl PathLossArg {
    fn model(self) -> PathLossModel {
        match self {
            PathLossArg::Pd25 => PathLossModel::pd25(),
            PathLossArg::Pd11 => PathLossModel::pd11(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace, truth, events and a report.
    Simulate {
        /// Scenario JSON. Without it the 60-hour deployment preset runs.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// SNR versus distance, or per-floor SNR.
    Range {
        #[arg(long, value_enum, default_value_t = PathLossArg::Pd25)]
        path_loss: PathLossArg,
        /// Distances in metres.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0])]
        distance: Vec<f64>,
        /// Print the per-floor table instead.
        #[arg(long)]
        floors: bool,
    },
    /// Average power draw of a (switched) tag, and harvest feasibility.
    Power {
        #[arg(long, default_value_t = 1.0)]
        duty: f64,
        #[arg(long, default_value_t = 49.0)]
        tdo_power_uw: f64,
        /// Clock of the power switch in Hz; omit for an unswitched tag.
        #[arg(long)]
        clock: Option<f64>,
        /// Timer parts, for the consistency check: R3, R4 (MΩ), CT (µF).
        #[arg(long, num_args = 3, value_names = ["R3", "R4", "CT"])]
        timer: Option<Vec<f64>>,
        #[arg(long)]
        bypass: bool,
        #[arg(long, default_value_t = 25)]
        photodiodes: u32,
        #[arg(long, value_delimiter = ',')]
        lux: Vec<f64>,
    },
    /// Light-dependent frequency drift, or a regression over a sweep.
    Light {
        #[arg(long, value_delimiter = ',')]
        lux: Vec<f64>,
        /// Simulate a noisy sweep and fit it.
        #[arg(long)]
        fit: bool,
    },
    /// Detect tag events in an IQ capture (`.cf32`/`.cu8` with sidecar).
    Detect {
        input: PathBuf,
        /// Bands as `id:lo_mhz:hi_mhz`, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        bands: Vec<String>,
        #[arg(long, default_value_t = crate::dsp::DEFAULT_FFT_SIZE)]
        fft_size: usize,
        #[arg(long, default_value_t = crate::dsp::DEFAULT_AVERAGES)]
        averages: usize,
        #[arg(long)]
        threshold_db: Option<f64>,
    },
    /// Match detected events against a ground-truth log.
    Analyze {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        lux: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MATCH_WINDOW_S)]
        window: f64,
    },
    /// Vary one scenario field over a list of values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// JSON pointer, e.g. `/tags/0/placement/distance_m`.
        #[arg(long)]
        param: String,
        /// JSON values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Reproduce a published table or figure (`all` for every target).
    Repro { id: String },
}

/// Whether an error is the caller's fault (exit 2) rather than a failed
/// reproduction.
pub fn exit_code_for(_e: &Error) -> u8 {
    EXIT_INPUT
}

fn emit<T: Serialize, W: Write>(w: &mut W, format: Format, rows: &[T]) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut *w);
            for r in rows {
                c.serialize(r)?;
            }
            c.flush()?;
        }
    }
    Ok(())
}

fn load_scenario(path: &Path, seed: Option<u64>, mode: Option<ModeArg>) -> Result<Scenario> {
    let mut sc = Scenario::load(path)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(m) = mode {
        sc.mode = m.into();
    }
    sc.validate()?;
    Ok(sc)
}

fn parse_band(s: &str) -> Result<Band> {
    let parts: Vec<&str> = s.split(':').collect();
    let [id, lo, hi] = parts[..] else {
        return Err(Error::invalid(format!("band `{s}` is not id:lo_mhz:hi_mhz")));
    };
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::invalid(format!("band `{s}`: `{v}` is not a number")))
    };
    Band::new(id, num(lo)? * 1e6, num(hi)? * 1e6)
}

/// Run one command, writing tables to `stdout` and notes to `stderr`.
pub fn execute<W: Write, E: Write>(cli: Cli, stdout: &mut W, stderr: &mut E) -> Result<u8> {
    let Common { out, seed, format } = cli.common;
    match cli.command {
        Command::Simulate { config, mode } => {
            let sc = match config {
                Some(p) => load_scenario(&p, seed, mode)?,
                None => {
                    let mut sc = presets::deployment(seed.unwrap_or(presets::DEPLOYMENT_SEED))?;
                    if let Some(m) = mode {
                        sc.mode = m.into();
                    }
                    sc
                }
            };
            let o = run(&sc)?;
            std::fs::create_dir_all(&out)?;
            o.trace.write_csv(std::fs::File::create(out.join("trace.csv"))?)?;
            o.truth.write_truth(std::fs::File::create(out.join("truth.csv"))?)?;
            write_events(std::fs::File::create(out.join("events.csv"))?, &o.events)?;
            serde_json::to_writer_pretty(std::fs::File::create(out.join("report.json"))?, &o.report)?;
            #[derive(Serialize)]
            struct Summary<'a> {
                scenario: &'a str,
                seed: u64,
                events_true: usize,
                events_detected: usize,
                misses: usize,
                false_positives: usize,
                failure_rate_pct: f64,
                max_latency_s: Option<f64>,
            }
            let r = &o.report;
            emit(
                stdout,
                format,
                &[Summary {
                    scenario: &o.name,
                    seed: o.seed,
                    events_true: r.events_true,
                    events_detected: r.events_detected,
                    misses: r.misses,
                    false_positives: r.false_positives,
                    failure_rate_pct: r.failure_rate_pct,
                    max_latency_s: o.max_latency_s(),
                }],
            )?;
            writeln!(stderr, "wrote trace.csv, truth.csv, events.csv, report.json to {}", out.display())?;
            Ok(EXIT_OK)
        }
        Command::Range {
            path_loss,
            distance,
            floors,
        } => {
            if floors {
                #[derive(Serialize)]
                struct Row {
                    floor: i32,
                    snr_db: f64,
                    detectable: bool,
                }
                let m = FloorModel::load()?;
                let rows = m
                    .per_floor_snr
                    .iter()
                    .map(|&(f, _)| {
                        let r = m.floor_snr(f)?;
                        Ok(Row {
                            floor: f,
                            snr_db: r.snr_db,
                            detectable: r.detectable,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                emit(stdout, format, &rows)?;
            } else {
                #[derive(Serialize)]
                struct Row {
                    distance_m: f64,
                    snr_db: f64,
                    detectable: bool,
                }
                let m = path_loss.model();
                let rows = distance
                    .iter()
                    .map(|&d| {
                        let snr = m.snr_at(d)?;
                        Ok(Row {
                            distance_m: d,
                            snr_db: snr,
                            detectable: snr >= m.threshold_db,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                emit(stdout, format, &rows)?;
                writeln!(stderr, "max range {:.2} m", m.max_range()?)?;
            }
            Ok(EXIT_OK)
        }
        Command::Power {
            duty,
            tdo_power_uw,
            clock,
            timer,
            bypass,
            photodiodes,
            lux,
        } => {
            let profile = SwitchingProfile::new(clock.unwrap_or(1.0), duty)?;
            let p = average_power(duty, tdo_power_uw * 1e-6, clock.is_some(), &profile)?;
            if let Some(t) = timer {
                let cfg = TimerConfig::new(t[0] * 1e6, t[1] * 1e6, t[2] * 1e-6, bypass)?;
                for w in consistency_warnings(&cfg, clock, Some(duty), repro::CONSISTENCY_REL_TOL) {
                    writeln!(stderr, "warning: {w}")?;
                }
            }
            #[derive(Serialize)]
            struct Row {
                duty: f64,
                switched: bool,
                overhead_uw: f64,
                average_power_uw: f64,
                lux: Option<f64>,
                harvest_uw: Option<f64>,
                sustainable: Option<bool>,
            }
            let base = Row {
                duty,
                switched: clock.is_some(),
                overhead_uw: if clock.is_some() { DEFAULT_SWITCH_OVERHEAD_W * 1e6 } else { 0.0 },
                average_power_uw: p * 1e6,
                lux: None,
                harvest_uw: None,
                sustainable: None,
            };
            let rows = if lux.is_empty() {
                vec![base]
            } else {
                let array = PhotodiodeArray::with_count(photodiodes)?;
                lux.iter()
                    .map(|&l| {
                        if !(l >= 0.0) {
                            return Err(Error::domain("lux", l, 0.0, f64::INFINITY));
                        }
                        Ok(Row {
                            lux: Some(l),
                            harvest_uw: Some(array.harvest_power(l) * 1e6),
                            sustainable: Some(array.feasibility(l, p).is_sustainable()),
                            ..base
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            emit(stdout, format, &rows)?;
            Ok(EXIT_OK)
        }
        Command::Light { lux, fit } => {
            let model = LightResponseModel::default();
            if fit {
                #[derive(Serialize)]
                struct Row {
                    trial: usize,
                    slope_mhz_per_100lux: f64,
                    intercept_mhz: f64,
                    r_squared: f64,
                }
                let fits = repro::light_trials(seed.unwrap_or(crate::DEFAULT_SEED))?;
                let rows: Vec<Row> = fits
                    .iter()
                    .enumerate()
                    .map(|(k, f)| Row {
                        trial: k,
                        slope_mhz_per_100lux: f.slope * 100.0,
                        intercept_mhz: f.intercept,
                        r_squared: f.r_squared,
                    })
                    .collect();
                emit(stdout, format, &rows)?;
                return Ok(EXIT_OK);
            }
            let levels = if lux.is_empty() { presets::light_sweep_levels() } else { lux };
            #[derive(Serialize)]
            struct Row {
                lux: f64,
                freq_mhz: Option<f64>,
            }
            let rows: Vec<Row> = levels
                .iter()
                .map(|&l| Row {
                    lux: l,
                    freq_mhz: model.frequency_under_light(l).map(|f| f / 1e6),
                })
                .collect();
            emit(stdout, format, &rows)?;
            let emitting: Vec<&Row> = rows.iter().filter(|r| r.freq_mhz.is_some()).collect();
            if emitting.len() >= 2 {
                let x: Vec<f64> = emitting.iter().map(|r| r.lux).collect();
                let y: Vec<f64> = emitting.iter().filter_map(|r| r.freq_mhz).collect();
                if let Ok(f) = regression_fit(&x, &y) {
                    writeln!(stderr, "slope {:.4} MHz/100 lux, R² {:.4}", f.slope * 100.0, f.r_squared)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Detect {
            input,
            bands,
            fft_size,
            averages,
            threshold_db,
        } => {
            let stream = read_iq(&input, None::<IqFormat>)?;
            let bands = bands.iter().map(|b| parse_band(b)).collect::<Result<Vec<_>>>()?;
            let mut rx = ReceiverConfig {
                sample_rate_hz: stream.sample_rate,
                center_freq_hz: stream.center_freq,
                fft_size,
                hop: fft_size / 2,
                averages,
                ..ReceiverConfig::default()
            };
            if let Some(t) = threshold_db {
                rx.detect.threshold_db = t;
            }
            rx.validate()?;
            let sp = rx.spectrogram_from_iq(&stream)?;
            let events = detect_events(&sp, &bands, &rx.detect)?;
            let rows: Vec<crate::dsp::iqfile::EventRow> = events.iter().map(Into::into).collect();
            emit(stdout, format, &rows)?;
            std::fs::create_dir_all(&out)?;
            write_events(std::fs::File::create(out.join("events.csv"))?, &events)?;
            Ok(EXIT_OK)
        }
        Command::Analyze {
            events,
            truth,
            lux,
            window,
        } => {
            let det = read_events(&events)?;
            let log = GroundTruthLog::read(&truth, lux.as_deref())?;
            let report = match_events(&det, &log, window)?;
            #[derive(Serialize)]
            struct Row {
                tag_id: String,
                events_true: usize,
                events_detected: usize,
                misses: usize,
                false_positives: usize,
                mean_activation_s: Option<f64>,
                mean_freq_mhz: Option<f64>,
                sd_freq_mhz: Option<f64>,
                cv_pct: Option<f64>,
            }
            let mut rows = Vec::new();
            for (tag, s) in &report.per_tag {
                let series: Vec<f64> = det.iter().filter(|e| &e.tag_id == tag).map(|e| e.mean_freq_hz / 1e6).collect();
                let st = frequency_stats(&series).ok();
                rows.push(Row {
                    tag_id: tag.clone(),
                    events_true: s.events_true,
                    events_detected: s.events_detected,
                    misses: s.misses,
                    false_positives: s.false_positives,
                    mean_activation_s: s.mean_activation_s,
                    mean_freq_mhz: st.map(|s| s.mean),
                    sd_freq_mhz: st.map(|s| s.sd),
                    cv_pct: st.map(|s| s.cv),
                });
            }
            emit(stdout, format, &rows)?;
            if report.rate_defined {
                writeln!(stderr, "failure rate {:.2}%", report.failure_rate_pct)?;
            } else {
                writeln!(stderr, "failure rate undefined: no ground-truth events")?;
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            config,
            param,
            values,
            mode,
        } => {
            let sc = load_scenario(&config, seed, mode)?;
            let values = values
                .iter()
                .map(|v| serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.clone())))
                .collect::<Vec<_>>();
            let rows = sweep(&sc, &param, &values)?;
            emit(stdout, format, &rows)?;
            Ok(EXIT_OK)
        }
        Command::Repro { id } => {
            let seed = seed.unwrap_or(crate::DEFAULT_SEED);
            let reports = if id == "all" {
                repro::repro_all(seed)?
            } else {
                vec![repro::repro(&id, seed)?]
            };
            let dir = out;
            let mut ok = true;
            for r in &reports {
                for w in &r.warnings {
                    writeln!(stderr, "warning: {w}")?;
                }
                for d in r.diff.iter().filter(|d| d.verdict != repro::Verdict::Pass) {
                    writeln!(
                        stderr,
                        "  {} {}.{}: model {:.6} vs {} (±{}) {}",
                        d.verdict, d.row, d.column, d.model, d.paper, d.tolerance, d.note
                    )?;
                }
                r.write(&dir)?;
                writeln!(stdout, "{}", r.summary())?;
                ok &= r.passed();
            }
            if id == "all" {
                writeln!(stderr, "registry: {}", REGISTRY.join(", "))?;
            }
            Ok(if ok { EXIT_OK } else { EXIT_TOLERANCE })
        }
    }
}
