//! The packaged GSR-shaped fixture: 220 validated rows with the expected
//! per-type composition.

use ced_core::eval::load_gsr;
use ced_core::EventCategory;

const FIXTURE: &str = include_str!("fixtures/gsr_fixture.csv");

#[test]
fn packaged_fixture_counts() {
    let out = load_gsr(FIXTURE.as_bytes()).unwrap();
    assert!(out.rejects.is_empty());
    assert_eq!(out.events.len(), 220);
    let count = |t: EventCategory| out.events.iter().filter(|g| g.event_type == t).count();
    assert_eq!(count(EventCategory::DataBreach), 85);
    assert_eq!(count(EventCategory::AccountHijacking), 55);
    assert_eq!(count(EventCategory::Ddos), 80);
}

#[test]
fn fixture_ids_are_unique_and_dates_parse() {
    let out = load_gsr(FIXTURE.as_bytes()).unwrap();
    let ids: std::collections::BTreeSet<&str> =
        out.events.iter().map(|g| g.gsr_id.as_str()).collect();
    assert_eq!(ids.len(), 220);
    for g in &out.events {
        assert!(!g.victim.is_empty());
        assert!(!g.description.is_empty());
    }
}
