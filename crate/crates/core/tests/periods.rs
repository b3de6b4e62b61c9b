use poolscope_core::event_study::{classify_period, default_markers};
use poolscope_core::time::parse_timestamp;
use poolscope_core::{EventWindow, Period};

#[test]
fn announcement_minute_is_the_boundary() {
    let w = EventWindow::default();
    let at = |s| classify_period(parse_timestamp(s).unwrap(), &w);
    assert_eq!(at("2023-03-11T03:10Z"), Period::Before);
    assert_eq!(at("2023-03-11T03:11Z"), Period::During);
}

#[test]
fn dated_events_fall_in_their_periods() {
    let w = EventWindow::default();
    let got: Vec<(String, Period)> = default_markers()
        .into_iter()
        .map(|m| (m.at.format("%d %b %H:%M").to_string(), classify_period(m.at, &w)))
        .collect();
    let expected = [
        ("08 Mar 00:00", Period::Before),
        ("09 Mar 00:00", Period::Before),
        ("11 Mar 03:11", Period::During),
        ("17 Mar 00:00", Period::After),
        ("22 Mar 00:00", Period::After),
        ("26 Mar 00:00", Period::After),
    ];
    assert_eq!(got.len(), 6);
    for ((date, period), (e_date, e_period)) in got.iter().zip(expected) {
        assert_eq!((date.as_str(), *period), (e_date, e_period));
    }
}

#[test]
fn window_edges() {
    let w = EventWindow::default();
    let at = |s| classify_period(parse_timestamp(s).unwrap(), &w);
    assert_eq!(at("2023-02-01T00:00Z"), Period::Before);
    assert_eq!(at("2023-01-31T23:59Z"), Period::OutOfRange);
    assert_eq!(at("2023-03-16T23:59Z"), Period::During);
    assert_eq!(at("2023-04-30T23:58Z"), Period::After);
    assert_eq!(at("2023-04-30T23:59Z"), Period::OutOfRange);
}
