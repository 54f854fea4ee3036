//! Property suites, one test per property, each with at least 1000 cases.

mod common;

use common::{CASES, PROPERTIES};

fn check(name: &str) {
    let (_, f) = PROPERTIES.iter().find(|(n, _)| *n == name).expect("registered property");
    if let Err(e) = f(CASES) {
        panic!("{name}: {e}");
    }
}

#[test]
fn path_loss_snr_decreases_with_distance() {
    check("path_loss_snr_decreases_with_distance");
}

#[test]
fn harvest_non_decreasing_in_lux_and_count() {
    check("harvest_non_decreasing_in_lux_and_count");
}

#[test]
fn average_power_monotone_in_duty() {
    check("average_power_monotone_in_duty");
}

#[test]
fn energy_percent_is_linear_in_on_time() {
    check("energy_percent_is_linear_in_on_time");
}

#[test]
fn iq_synthesis_is_deterministic_per_seed() {
    check("iq_synthesis_is_deterministic_per_seed");
}

#[test]
fn pearson_bounded_and_affine_invariant() {
    check("pearson_bounded_and_affine_invariant");
}

#[test]
fn cv_is_unit_invariant() {
    check("cv_is_unit_invariant");
}

#[test]
fn bands_are_half_open() {
    check("bands_are_half_open");
}

#[test]
fn match_events_assigns_at_most_once() {
    check("match_events_assigns_at_most_once");
}

#[test]
fn event_csv_round_trips() {
    check("event_csv_round_trips");
}

#[test]
fn scenario_json_round_trips() {
    check("scenario_json_round_trips");
}

#[test]
fn time_compression_does_not_change_events() {
    check("time_compression_does_not_change_events");
}

#[test]
fn emissions_never_precede_their_interaction() {
    check("emissions_never_precede_their_interaction");
}

#[test]
fn every_property_has_a_test() {
    assert_eq!(PROPERTIES.len(), 13);
    assert!(CASES >= 1000);
}
