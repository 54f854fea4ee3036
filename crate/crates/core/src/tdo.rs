//! Tunnel diode oscillator: I-V curve, bias point, resonance and power draw.
//!
//! The diode is described by a digitized piecewise-linear I-V table. The
//! bias network places the diode across `R1` with `R2` in series from the
//! supply, so the diode sees a Thevenin source of `Vs·R1/(R1+R2)` behind
//! `R1∥R2`. The small-signal resonance uses the loss product `R_T·|g_d|`
//! where `R_T` defaults to `R1∥R2` but may be overridden.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::interp::PiecewiseLinear;

pub const DEFAULT_R1_OHM: f64 = 1_000.0;
pub const DEFAULT_R2_OHM: f64 = 470.0;
pub const DEFAULT_SUPPLY_V: f64 = 0.25;
/// Magnitude of the diode's small-signal negative conductance.
pub const DEFAULT_NEGATIVE_CONDUCTANCE_S: f64 = 0.01;
/// Junction capacitance used when none is configured; places `L ≈ 75 nH`
/// in the 575–600 MHz band.
pub const DEFAULT_JUNCTION_CAPACITANCE_F: f64 = 1e-12;
pub const NDR_PEAK_V: f64 = 0.065;
pub const NDR_VALLEY_V: f64 = 0.200;

#[derive(Debug, Clone, PartialEq)]
pub struct TunnelDiode {
    pub peak_voltage: f64,
    pub valley_voltage: f64,
    /// `|g_d|` in siemens.
    pub negative_conductance: f64,
    pub junction_capacitance: f64,
    iv_curve: PiecewiseLinear,
}

impl TunnelDiode {
    pub fn new(
        peak_voltage: f64,
        valley_voltage: f64,
        negative_conductance: f64,
        junction_capacitance: f64,
        iv_curve: PiecewiseLinear,
    ) -> Result<Self> {
        if !(peak_voltage < valley_voltage) {
            return Err(Error::invalid("peak voltage must be below valley voltage"));
        }
        if !(negative_conductance > 0.0) {
            return Err(Error::invalid("|g_d| must be positive"));
        }
        if !(junction_capacitance > 0.0) {
            return Err(Error::invalid("junction capacitance must be positive"));
        }
        let (lo, hi) = iv_curve.domain();
        if peak_voltage < lo || valley_voltage > hi {
            return Err(Error::invalid("NDR window must lie inside the I-V table"));
        }
        // every segment overlapping the NDR window must fall
        let xs = iv_curve.xs();
        let ys = iv_curve.ys();
        for i in 0..xs.len() - 1 {
            let overlaps = xs[i + 1] > peak_voltage && xs[i] < valley_voltage;
            if overlaps && ys[i + 1] >= ys[i] {
                return Err(Error::invalid(format!(
                    "I-V slope is not negative on [{}, {}] V inside the NDR window",
                    xs[i],
                    xs[i + 1]
                )));
            }
        }
        Ok(Self {
            peak_voltage,
            valley_voltage,
            negative_conductance,
            junction_capacitance,
            iv_curve,
        })
    }

    /// The MP1X4266 model: digitized I-V fixture, 65–200 mV NDR window.
    pub fn mp1x4266() -> Result<Self> {
        Self::new(
            NDR_PEAK_V,
            NDR_VALLEY_V,
            DEFAULT_NEGATIVE_CONDUCTANCE_S,
            DEFAULT_JUNCTION_CAPACITANCE_F,
            load_iv_curve()?,
        )
    }

    pub fn iv_curve(&self) -> &PiecewiseLinear {
        &self.iv_curve
    }

    pub fn ndr_window(&self) -> (f64, f64) {
        (self.peak_voltage, self.valley_voltage)
    }

    /// Diode current at `v`, interpolated over the I-V breakpoints.
    pub fn iv_current(&self, v: f64) -> Result<f64> {
        self.iv_curve.eval(v, "diode voltage")
    }
}

/// Load the digitized I-V table (`voltage_v,current_a`).
pub fn load_iv_curve() -> Result<PiecewiseLinear> {
    #[derive(serde::Deserialize)]
    struct Row {
        voltage_v: f64,
        current_a: f64,
    }
    let rows: Vec<Row> = fixtures::load_csv(fixtures::DIODE_IV)?;
    PiecewiseLinear::new(rows.into_iter().map(|r| (r.voltage_v, r.current_a)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasNetwork {
    pub r1: f64,
    pub r2: f64,
    pub supply_voltage: f64,
    /// `R_T` of the resonance formulas.
    pub equivalent_resistance: f64,
}

/// Where the selected operating point sits on the I-V curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasRegion {
    /// Inside the negative differential resistance window.
    NegativeResistance,
    /// No intersection inside the NDR window; the lowest-voltage one was taken.
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasPoint {
    pub voltage: f64,
    pub region: BiasRegion,
    /// Every load-line intersection found, ascending.
    pub intersections: Vec<f64>,
}

impl BiasNetwork {
    pub fn new(r1: f64, r2: f64, supply_voltage: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::invalid("R1 and R2 must be positive"));
        }
        if !(supply_voltage >= 0.0) {
            return Err(Error::invalid("supply voltage must be non-negative"));
        }
        Ok(Self {
            r1,
            r2,
            supply_voltage,
            equivalent_resistance: r1 * r2 / (r1 + r2),
        })
    }

    pub fn with_equivalent_resistance(mut self, r_t: f64) -> Result<Self> {
        if !(r_t > 0.0) {
            return Err(Error::invalid("R_T must be positive"));
        }
        self.equivalent_resistance = r_t;
        Ok(self)
    }

    pub fn thevenin(&self) -> (f64, f64) {
        let v = self.supply_voltage * self.r1 / (self.r1 + self.r2);
        (v, self.r1 * self.r2 / (self.r1 + self.r2))
    }

    /// All voltages where the load line meets `curve`, ascending.
    pub fn intersections(&self, curve: &PiecewiseLinear) -> Vec<f64> {
        let (v_th, r_th) = self.thevenin();
        let mismatch = |v: f64, i: f64| i - (v_th - v) / r_th;
        let pts: Vec<(f64, f64)> = curve.points().collect();
        let mut roots: Vec<f64> = Vec::new();
        for w in pts.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let f0 = mismatch(x0, y0);
            let f1 = mismatch(x1, y1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                roots.push(x0 + (x1 - x0) * f0 / (f0 - f1));
            }
        }
        if let Some(&(x, y)) = pts.last() {
            if mismatch(x, y) == 0.0 {
                roots.push(x);
            }
        }
        roots.dedup();
        roots
    }

    /// Operating point on an arbitrary I-V curve, preferring `ndr_window`.
    pub fn operating_point(
        &self,
        curve: &PiecewiseLinear,
        ndr_window: Option<(f64, f64)>,
    ) -> Result<BiasPoint> {
        let roots = self.intersections(curve);
        let Some(&lowest) = roots.first() else {
            return Err(Error::Model(
                "load line does not meet the I-V curve inside its domain".into(),
            ));
        };
        let in_ndr = ndr_window.and_then(|(lo, hi)| {
            roots.iter().copied().find(|v| (lo..=hi).contains(v))
        });
        Ok(match in_ndr {
            Some(v) => BiasPoint {
                voltage: v,
                region: BiasRegion::NegativeResistance,
                intersections: roots,
            },
            None => BiasPoint {
                voltage: lowest,
                region: BiasRegion::Outside,
                intersections: roots,
            },
        })
    }

    pub fn bias_point(&self, diode: &TunnelDiode) -> Result<BiasPoint> {
        self.operating_point(diode.iv_curve(), Some(diode.ndr_window()))
    }
}

impl Default for BiasNetwork {
    fn default() -> Self {
        Self::new(DEFAULT_R1_OHM, DEFAULT_R2_OHM, DEFAULT_SUPPLY_V).expect("valid defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantTank {
    pub inductance: f64,
    pub capacitance: f64,
}

impl ResonantTank {
    pub fn new(inductance: f64, capacitance: f64) -> Result<Self> {
        if !(inductance > 0.0 && capacitance > 0.0) {
            return Err(Error::invalid("L and C must be positive"));
        }
        Ok(Self {
            inductance,
            capacitance,
        })
    }

    /// Tank with `C` copied from the diode's junction capacitance.
    pub fn with_diode(inductance: f64, diode: &TunnelDiode) -> Result<Self> {
        Self::new(inductance, diode.junction_capacitance)
    }

    pub fn lossless_frequency(&self) -> f64 {
        1.0 / (2.0 * PI * (self.inductance * self.capacitance).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// `(R_T/|g_d|) / (L/C)`; exactly 1 when the matching condition holds.
    pub ratio: f64,
    /// `R_T·|g_d|`, the quantity subtracted from one under the square root.
    pub loss_product: f64,
    pub oscillates: bool,
}

pub fn stability_ratio(
    net: &BiasNetwork,
    diode: &TunnelDiode,
    tank: &ResonantTank,
) -> StabilityReport {
    let r_t = net.equivalent_resistance;
    let g = diode.negative_conductance;
    let loss_product = r_t * g;
    StabilityReport {
        ratio: (r_t / g) / (tank.inductance / tank.capacitance),
        loss_product,
        oscillates: loss_product < 1.0,
    }
}

/// `f_o = (1/2π)·sqrt((1 − R_T·|g_d|)/(L·C))`.
pub fn oscillation_frequency(
    net: &BiasNetwork,
    diode: &TunnelDiode,
    tank: &ResonantTank,
) -> Result<f64> {
    let radicand = 1.0 - net.equivalent_resistance * diode.negative_conductance;
    if radicand <= 0.0 {
        return Err(Error::NoOscillation { radicand });
    }
    Ok(radicand.sqrt() / (2.0 * PI * (tank.inductance * tank.capacitance).sqrt()))
}

/// Input power drawn by the oscillator as a function of bias voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasPowerCurve(PiecewiseLinear);

impl BiasPowerCurve {
    pub fn new(table: PiecewiseLinear) -> Result<Self> {
        if !table.is_non_decreasing() || table.ys().iter().any(|&p| p < 0.0) {
            return Err(Error::invalid("power-vs-bias table must be non-negative and monotone"));
        }
        Ok(Self(table))
    }

    pub fn load() -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Row {
            voltage_v: f64,
            power_w: f64,
        }
        let rows: Vec<Row> = fixtures::load_csv(fixtures::DIODE_POWER)?;
        Self::new(PiecewiseLinear::new(
            rows.into_iter().map(|r| (r.voltage_v, r.power_w)),
        )?)
    }

    pub fn table(&self) -> &PiecewiseLinear {
        &self.0
    }

    pub fn tdo_input_power(&self, bias_voltage: f64) -> Result<f64> {
        self.0.eval(bias_voltage, "bias voltage")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurabilityCurve(PiecewiseLinear);

impl DurabilityCurve {
    pub fn new(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let table = PiecewiseLinear::new(points)?;
        if !table.is_non_decreasing() {
            return Err(Error::invalid("cycles to failure must be non-decreasing in thickness"));
        }
        Ok(Self(table))
    }

    pub fn load() -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Row {
            thickness_mm: f64,
            cycles: f64,
        }
        let rows: Vec<Row> = fixtures::load_csv(fixtures::DURABILITY)?;
        Self::new(rows.into_iter().map(|r| (r.thickness_mm, r.cycles)))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.0.points()
    }

    pub fn cycles_to_failure(&self, thickness_mm: f64) -> Result<f64> {
        self.0.eval(thickness_mm, "copper thickness")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diode() -> TunnelDiode {
        TunnelDiode::mp1x4266().unwrap()
    }

    #[test]
    fn peak_voltage_is_the_local_maximum() {
        let d = diode();
        let ip = d.iv_current(d.peak_voltage).unwrap();
        assert!(ip > d.iv_current(d.peak_voltage - 0.005).unwrap());
        assert!(ip > d.iv_current(d.peak_voltage + 0.005).unwrap());
    }

    #[test]
    fn current_at_150_mv_is_the_table_entry() {
        assert_eq!(diode().iv_current(0.150).unwrap(), 65e-6);
    }

    #[test]
    fn ndr_slope_is_negative() {
        let d = diode();
        let v = 0.12;
        assert!(d.iv_current(v + 1e-4).unwrap() < d.iv_current(v).unwrap());
    }

    #[test]
    fn out_of_domain_voltage_is_rejected() {
        assert!(matches!(diode().iv_current(0.6), Err(Error::Domain { .. })));
        assert!(diode().iv_current(-0.01).is_err());
    }

    #[test]
    fn default_network_biases_inside_100_to_200_mv() {
        let bp = BiasNetwork::default().bias_point(&diode()).unwrap();
        assert!((0.100..=0.200).contains(&bp.voltage), "{bp:?}");
        assert_eq!(bp.region, BiasRegion::NegativeResistance);
    }

    #[test]
    fn zero_supply_biases_at_zero() {
        let net = BiasNetwork::new(1_000.0, 470.0, 0.0).unwrap();
        assert_eq!(net.bias_point(&diode()).unwrap().voltage, 0.0);
    }

    #[test]
    fn linear_resistor_gives_the_divider_voltage() {
        // diode replaced by 2 kΩ: V = Vs·(R1∥Rx)/(R2 + R1∥Rx)
        let rx = 2_000.0;
        let curve = PiecewiseLinear::new([(0.0, 0.0), (1.0, 1.0 / rx)]).unwrap();
        let net = BiasNetwork::new(1_000.0, 470.0, 0.25).unwrap();
        let bp = net.operating_point(&curve, None).unwrap();
        let par = 1_000.0 * rx / (1_000.0 + rx);
        assert_relative_eq!(bp.voltage, 0.25 * par / (470.0 + par), max_relative = 1e-12);
        assert_eq!(bp.region, BiasRegion::Outside);
    }

    #[test]
    fn load_line_missing_the_curve_is_a_model_error() {
        // curve far above any load-line current
        let curve = PiecewiseLinear::new([(0.0, 1.0), (0.5, 2.0)]).unwrap();
        let net = BiasNetwork::default();
        assert!(matches!(net.operating_point(&curve, None), Err(Error::Model(_))));
    }

    #[test]
    fn multiple_intersections_prefer_the_ndr_one() {
        // N-shaped curve crossed three times by a steep load line
        let curve = PiecewiseLinear::new([
            (0.0, 0.0),
            (0.1, 0.004),
            (0.2, 0.0005),
            (0.4, 0.006),
        ])
        .unwrap();
        let net = BiasNetwork::new(200.0, 200.0, 0.6).unwrap();
        let bp = net.operating_point(&curve, Some((0.1, 0.2))).unwrap();
        assert_eq!(bp.intersections.len(), 3);
        assert_eq!(bp.region, BiasRegion::NegativeResistance);
        assert!(bp.voltage > 0.1 && bp.voltage < 0.2);
        let lowest = net.operating_point(&curve, None).unwrap();
        assert_eq!(lowest.voltage, bp.intersections[0]);
    }

    #[test]
    fn stability_ratio_is_one_when_matched() {
        let net = BiasNetwork::default().with_equivalent_resistance(100.0).unwrap();
        let tank = ResonantTank::new(10e-6, 1e-9).unwrap();
        let r = stability_ratio(&net, &diode(), &tank);
        assert_relative_eq!(r.ratio, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.loss_product, 1.0, max_relative = 1e-12);
        assert!(!r.oscillates);
    }

    #[test]
    fn lossless_limit_lands_near_580_mhz() {
        let net = BiasNetwork::default().with_equivalent_resistance(1e-12).unwrap();
        let tank = ResonantTank::new(75.3e-9, 1e-12).unwrap();
        let f = oscillation_frequency(&net, &diode(), &tank).unwrap();
        // 1/(2π·sqrt(75.3e-21)) by hand: 579.99 MHz
        assert!((f - 580.0e6).abs() < 0.1e6, "{f}");
    }

    #[test]
    fn half_loss_scales_by_root_half() {
        let d = diode();
        let net = BiasNetwork::default().with_equivalent_resistance(50.0).unwrap();
        let tank = ResonantTank::new(75.3e-9, 1e-12).unwrap();
        let f = oscillation_frequency(&net, &d, &tank).unwrap();
        assert_relative_eq!(f, tank.lossless_frequency() * 0.5f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn default_parallel_resistance_cannot_oscillate() {
        let d = diode();
        let net = BiasNetwork::default();
        let tank = ResonantTank::with_diode(75e-9, &d).unwrap();
        match oscillation_frequency(&net, &d, &tank) {
            Err(Error::NoOscillation { radicand }) => {
                assert_relative_eq!(radicand, 1.0 - 470_000.0 / 1_470.0 * 0.01, max_relative = 1e-12)
            }
            other => panic!("expected NoOscillation, got {other:?}"),
        }
    }

    #[test]
    fn input_power_anchor_points() {
        let p = BiasPowerCurve::load().unwrap();
        assert_eq!(p.tdo_input_power(0.25).unwrap(), 50e-6);
        assert_eq!(p.tdo_input_power(0.0).unwrap(), 0.0);
        let mid = p.tdo_input_power(0.225).unwrap();
        assert!(mid > 32e-6 && mid < 50e-6);
        assert!(p.tdo_input_power(0.5).is_err());
    }

    #[test]
    fn durability_anchor_points() {
        let c = DurabilityCurve::load().unwrap();
        assert_eq!(c.cycles_to_failure(0.10).unwrap(), 200.0);
        assert_eq!(c.cycles_to_failure(0.40).unwrap(), 1000.0);
        assert_relative_eq!(c.cycles_to_failure(0.25).unwrap(), 550.0, max_relative = 1e-12);
        assert!(c.cycles_to_failure(0.05).is_err());
        assert!(c.cycles_to_failure(0.45).is_err());
    }
}
