//! Every interaction transducer: noiseless calibration curves, noisy
//! readings, and the trigger switches of interaction-activated tags.
//!
//! cargo run --example sensor_transducers

use anyhow::Result;
use tdotag::rng;
use tdotag::transducer::{trigger_evaluate, OrigamiState, Transducer, TransducerKind, TriggerSwitch};

fn main() -> Result<()> {
    let tilt = Transducer::reference(TransducerKind::Tilt)?;
    println!("tilt (base {:.3} MHz)", tilt.base_freq / 1e6);
    for a in (0..=90).step_by(15) {
        match tilt.response(a as f64)? {
            Some(r) => println!("  {a:>3}°  {:.4} MHz ± {:.1} kHz", r.value / 1e6, r.sd_hz / 1e3),
            None => println!("  {a:>3}°  off"),
        }
    }

    let def = Transducer::reference(TransducerKind::Deformation)?.noiseless();
    let last = (0..40).take_while(|&k| matches!(def.response(k as f64 * 0.125), Ok(Some(_)))).last();
    println!("deformation emits up to step {last:?}");

    let mut r = rng::stream(7, &[1]);
    let rotary = Transducer::reference(TransducerKind::Rotary)?;
    for deg in [0.0, 55.0, 118.0] {
        let draws: Vec<String> = (0..3)
            .map(|_| rotary.sample(deg, &mut r).map(|f| format!("{:.3}", f.unwrap_or(f64::NAN) / 1e6)))
            .collect::<Result<_, _>>()?;
        println!("rotary {deg:>5}° -> {}", draws.join(", "));
    }

    for kind in [TransducerKind::Miura, TransducerKind::Kresling] {
        let t = Transducer::reference(kind)?.noiseless();
        let states: Vec<String> = OrigamiState::ALL
            .iter()
            .map(|s| Ok(format!("{}={:.3}", s.name(), t.response(s.stimulus())?.unwrap().value / 1e6)))
            .collect::<Result<_, tdotag::Error>>()?;
        println!("{kind}: {}", states.join("  "));
    }

    let slider = Transducer::reference(TransducerKind::Slider)?.noiseless();
    let tear = Transducer::reference(TransducerKind::Tear)?.noiseless();
    println!(
        "slider 2.5 -> 15 cm: {:.3} -> {:.3} MHz; tear intact -> torn: {:.3} -> {:.3} MHz",
        slider.response(2.5)?.unwrap().value / 1e6,
        slider.response(15.0)?.unwrap().value / 1e6,
        tear.response(0.0)?.unwrap().value / 1e6,
        tear.response(1.0)?.unwrap().value / 1e6,
    );

    let reed = TriggerSwitch::reed();
    let ball = TriggerSwitch::tilt_ball();
    println!(
        "reed at 2 mm: {}, tilt ball at 30°: {}, at 80°: {}",
        trigger_evaluate(&reed, 2.0, 1),
        trigger_evaluate(&ball, 30.0, 1),
        trigger_evaluate(&ball, 80.0, 1)
    );
    Ok(())
}
