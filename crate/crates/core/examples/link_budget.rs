//! Log-distance link budget: fit from two measurements, range for a
//! detection threshold, floors of a building and spectrum compliance.
//!
//! cargo run --example link_budget

use anyhow::Result;
use tdotag::channel::{fit_path_loss, CompliancePolicy, FloorModel, PathLossModel};

fn main() -> Result<()> {
    for (name, m) in [("25 PD", PathLossModel::pd25()), ("11 PD", PathLossModel::pd11())] {
        println!("{name}: n = {:.3}, max range {:.2} m", m.exponent, m.max_range()?);
        for d in [1.0, 10.0, 25.0, 45.0] {
            println!("  {d:>5} m  {:>6.1} dB", m.snr_at(d)?);
        }
    }

    // Fit your own: 40 dB at 1 m, 8 dB at 30 m.
    let m = fit_path_loss((1.0, 40.0), (30.0, 8.0))?;
    println!("custom fit: n = {:.3}, reaches 5 dB at {:.1} m", m.exponent, m.max_range()?);

    let floors = FloorModel::load()?;
    for &(f, _) in &floors.per_floor_snr {
        let r = floors.floor_snr(f)?;
        println!("floor {f:>+2}: {:>5.1} dB {}", r.snr_db, if r.detectable { "detected" } else { "lost" });
    }

    let policy = CompliancePolicy::default();
    for f in [580e6, 700e6] {
        let v = policy.check(f, -40.0);
        println!("{:.0} MHz at -40 dBm: passes = {} {:?}", f / 1e6, v.passes(), v.violations);
    }
    Ok(())
}
