//! Bias a tunnel diode inside its negative-resistance region and size the
//! tank for a target carrier.
//!
//! cargo run --example oscillator_design

use anyhow::Result;
use tdotag::tdo::{oscillation_frequency, stability_ratio, BiasNetwork, ResonantTank, TunnelDiode};

fn main() -> Result<()> {
    let diode = TunnelDiode::mp1x4266()?;
    let (lo, hi) = diode.ndr_window();
    println!("NDR window {:.0}-{:.0} mV", lo * 1e3, hi * 1e3);

    let net = BiasNetwork::default();
    let bp = net.bias_point(&diode)?;
    println!(
        "bias point {:.1} mV ({:?}), {} load-line crossing(s)",
        bp.voltage * 1e3,
        bp.region,
        bp.intersections.len()
    );

    // Sweep the tank inductance and keep the ones that land in the 580 MHz band.
    let net = net.with_equivalent_resistance(20.0)?;
    println!("\n{:>8} {:>12} {:>10} {:>8}", "L (nH)", "f_o (MHz)", "ratio", "osc");
    for l_nh in [60.0, 70.0, 75.0, 80.0, 90.0] {
        let tank = ResonantTank::with_diode(l_nh * 1e-9, &diode)?;
        let st = stability_ratio(&net, &diode, &tank);
        let f = oscillation_frequency(&net, &diode, &tank).map(|f| format!("{:.1}", f / 1e6));
        println!(
            "{l_nh:>8.1} {:>12} {:>10.3e} {:>8}",
            f.unwrap_or_else(|e| e.to_string()),
            st.ratio,
            st.oscillates
        );
    }

    // Too much series loss kills the oscillation outright.
    let lossy = BiasNetwork::default().with_equivalent_resistance(150.0)?;
    let tank = ResonantTank::with_diode(75e-9, &diode)?;
    match oscillation_frequency(&lossy, &diode, &tank) {
        Ok(f) => println!("\nlossy network still oscillates at {:.1} MHz", f / 1e6),
        Err(e) => println!("\nlossy network: {e}"),
    }
    Ok(())
}
