//! Replay the 60-hour, three-tag household deployment: interaction-activated
//! tags under a diurnal light cycle, received in 3.2 MHz around 512.5 MHz,
//! matched against the ground-truth log.
//!
//! cargo run --release --example deployment_replay [seed]

use std::time::Instant;

use anyhow::Result;
use tdotag::analytics::{frequency_stats, pearson_correlation, load_correlation_series};
use tdotag::scenario::{presets, run};

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(presets::DEPLOYMENT_SEED);
    let sc = presets::deployment(seed)?;
    println!(
        "{}: {} tags, {} interactions over {:.0} h",
        sc.name,
        sc.tags.len(),
        sc.environment.interactions.len(),
        sc.duration_s / 3600.0
    );

    let t0 = Instant::now();
    let out = run(&sc)?;
    println!(
        "simulated in {:.2} s using {} captures",
        t0.elapsed().as_secs_f64(),
        out.captures.len()
    );

    let r = &out.report;
    println!("\n{:>6} {:>5} {:>5} {:>5} {:>8} {:>8}", "tag", "true", "det", "miss", "act s", "on s");
    for (tag, s) in &r.per_tag {
        println!(
            "{tag:>6} {:>5} {:>5} {:>5} {:>8.3} {:>8.3}",
            s.events_true,
            s.events_detected,
            s.misses,
            s.mean_activation_s.unwrap_or(f64::NAN),
            s.mean_on_time_s.unwrap_or(f64::NAN)
        );
    }
    println!(
        "failure rate {:.2}%, {} false positives, worst latency {:.0} ms",
        r.failure_rate_pct,
        r.false_positives,
        out.max_latency_s().unwrap_or(0.0) * 1e3
    );

    println!("\n{:>6} {:>9} {:>7} {:>9} {:>9} {:>7}", "tag", "mean", "sd", "min", "max", "cv %");
    for tag in ["trash", "soap", "oven"] {
        let mhz: Vec<f64> = out.frequency_series(tag).iter().map(|f| f / 1e6).collect();
        let s = frequency_stats(&mhz)?;
        println!(
            "{tag:>6} {:>9.3} {:>7.3} {:>9.3} {:>9.3} {:>7.4}",
            s.mean, s.sd, s.min, s.max, s.cv
        );
    }
    let (a, b) = load_correlation_series()?;
    println!("trash/soap paired-series correlation r = {:.3}", pearson_correlation(&a, &b)?);
    Ok(())
}
