//! Harvest budget of a photodiode array, capacitor charge times and the
//! per-event energy cost of interaction-activated tags.
//!
//! cargo run --example energy_budget

use anyhow::Result;
use tdotag::analytics::{energy_report, EnergyInput};
use tdotag::harvest::{PhotodiodeArray, Supercapacitor, BIAS_TARGET_V};
use tdotag::transducer::ActivationProfile;

fn main() -> Result<()> {
    let demand_w = 35e-6;
    println!("{:>6} {:>10} {:>10} {:>10}", "lux", "11 PD µW", "25 PD µW", "40 PD µW");
    for lux in [30.0, 100.0, 350.0, 500.0, 800.0, 1000.0] {
        let p: Vec<f64> = [11, 25, 40]
            .iter()
            .map(|&n| PhotodiodeArray::with_count(n).map(|a| a.harvest_power(lux) * 1e6))
            .collect::<Result<_, _>>()?;
        println!("{lux:>6} {:>10.2} {:>10.2} {:>10.2}", p[0], p[1], p[2]);
    }

    let array = PhotodiodeArray::with_count(25)?;
    for lux in [350.0, 1000.0] {
        println!("25 PD at {lux} lux vs {:.0} µW: {:?}", demand_w * 1e6, array.feasibility(lux, demand_w));
    }

    let bias = Supercapacitor::bias(0.0)?;
    let p = array.harvest_power(1000.0);
    println!(
        "\n0.47 F bias cap to {BIAS_TARGET_V} V at 1000 lux: {:.0} s",
        bias.time_to_voltage(p, BIAS_TARGET_V)?
    );

    // One emission burst drawn from a full 0.047 F switch capacitor.
    let cap = Supercapacitor::switch(1.0)?;
    let inputs: Vec<EnergyInput> = [("trash", ActivationProfile::TRASH), ("soap", ActivationProfile::SOAP), ("oven", ActivationProfile::OVEN)]
        .into_iter()
        .map(|(id, p)| EnergyInput {
            tag_id: id.into(),
            on_time_s: p.on_time_s,
            published_pct: None,
        })
        .collect();
    println!("\n{:>6} {:>8} {:>8}", "tag", "t_on s", "% cap");
    for row in energy_report(&inputs, &cap, 50e-6)? {
        println!("{:>6} {:>8.1} {:>8.3}", row.tag_id, row.on_time_s, row.percent);
    }
    Ok(())
}
