//! Timer-gated power switching: design a timer for a duty cycle, check a
//! stated design against the timer equations, and see the saving.
//!
//! cargo run --example power_switching

use anyhow::Result;
use tdotag::switching::{
    average_power, consistency_warnings, design_timer, design_timer_with, SwitchingProfile, TimerConfig,
};

fn main() -> Result<()> {
    let p_tdo = 49e-6;
    println!("{:>6} {:>12} {:>12}", "duty", "avg µW", "saving µW");
    for duty in [1.0, 0.6, 0.3, 0.1] {
        let prof = SwitchingProfile::new(60.0, duty)?;
        let p = average_power(duty, p_tdo, duty < 1.0, &prof)?;
        println!("{duty:>6.2} {:>12.1} {:>12.1}", p * 1e6, (p_tdo - p) * 1e6);
    }

    // Without a bypass diode the duty cannot go below one half.
    for (duty, bypass) in [(0.6, false), (0.1, false), (0.1, true)] {
        match design_timer_with(duty, 60.0, 10e-6, bypass) {
            Ok(t) => println!(
                "\nduty {duty} bypass={bypass}: R3 {:.0} Ω, R4 {:.0} Ω -> {:.2} Hz, {:.3}",
                t.r3,
                t.r4,
                t.clock_frequency(),
                t.duty_cycle()
            ),
            Err(e) => println!("\nduty {duty} bypass={bypass}: {e}"),
        }
    }
    let t = design_timer(0.6, 60.0, 10e-6)?;
    assert!((t.duty_cycle() - 0.6).abs() < 1e-9);

    // A stated design whose parts do not give the stated clock.
    let stated = TimerConfig::new(1e6, 33e6, 10e-6, false)?;
    for w in consistency_warnings(&stated, Some(60.0), Some(0.6), 0.05) {
        println!("warning: {w}");
    }
    Ok(())
}
