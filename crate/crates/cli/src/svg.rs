//! Self-contained SVG line charts: one panel per pool, each with its daily
//! median and interquartile band, plus vertical event markers.

use std::fmt::Write as _;

use chrono::{Duration, NaiveDate};
use log::warn;
use poolscope_core::event_study::{default_markers, EventMarker};
use poolscope_core::mci::DailyQuantiles;
use poolscope_core::time::format_timestamp;
use poolscope_core::{EventWindow, Timestamp};

const WIDTH: f64 = 960.0;
const PANEL_HEIGHT: f64 = 170.0;
const PANEL_GAP: f64 = 36.0;
const LEFT: f64 = 84.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 56.0;
const BOTTOM: f64 = 36.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    pub label: String,
    pub days: Vec<DailyQuantiles>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub y_label: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub panels: Vec<SeriesPanel>,
    pub markers: Vec<EventMarker>,
    /// Shaded interval, normally the "during" period of the event window.
    pub shade: Option<(Timestamp, Timestamp)>,
}

impl Chart {
    /// Empty chart spanning the days covered by `panels`.
    pub fn new(title: &str, y_label: &str, panels: Vec<SeriesPanel>) -> Option<Self> {
        let first = panels.iter().filter_map(|p| p.days.first()).map(|d| d.date).min()?;
        let last = panels.iter().filter_map(|p| p.days.last()).map(|d| d.date).max()?;
        Some(Self {
            title: title.into(),
            y_label: y_label.into(),
            start: day_start(first),
            end: day_start(last) + Duration::days(1),
            panels,
            markers: Vec::new(),
            shade: None,
        })
    }

    fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t <= self.end
    }
}

fn day_start(d: NaiveDate) -> Timestamp {
    d.and_hms_opt(0, 0, 0).expect("midnight").and_utc()
}

/// Adds the default dated events plus `extra`, and shades the "during"
/// period of `window`. Markers outside the chart are skipped with a warning.
pub fn emit_event_markers(chart: Chart, window: &EventWindow, extra: &[EventMarker]) -> Chart {
    let mut all = default_markers();
    all.extend(extra.iter().cloned());
    emit_markers(chart, window, &all)
}

/// As [`emit_event_markers`] with an explicit marker list.
pub fn emit_markers(mut chart: Chart, window: &EventWindow, markers: &[EventMarker]) -> Chart {
    for m in markers {
        if chart.contains(m.at) {
            chart.markers.push(m.clone());
        } else {
            warn!(
                "{}: marker {:?} at {} is outside the chart range, skipped",
                chart.title,
                m.label,
                format_timestamp(&m.at)
            );
        }
    }
    let lo = window.treatment_time.max(chart.start);
    let hi = window.during_end.min(chart.end);
    chart.shade = (lo < hi).then_some((lo, hi));
    chart
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.to_string()
        }
    }
}

struct Frame {
    t0: f64,
    t1: f64,
    y0: f64,
    y1: f64,
    top: f64,
}

impl Frame {
    fn x(&self, t: Timestamp) -> f64 {
        let s = t.timestamp() as f64;
        LEFT + (s - self.t0) / (self.t1 - self.t0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        self.top + PANEL_HEIGHT - (v - self.y0) / (self.y1 - self.y0) * PANEL_HEIGHT
    }
}

fn y_range(days: &[DailyQuantiles]) -> (f64, f64) {
    let lo = days.iter().map(|d| d.q25).fold(f64::INFINITY, f64::min);
    let hi = days.iter().map(|d| d.q75).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        (hi - lo) * 0.08
    } else {
        lo.abs().max(1.0) * 0.05
    };
    (lo - pad, hi + pad)
}

/// Renders the chart. Output depends only on the chart contents.
pub fn render_svg(chart: &Chart) -> String {
    let n = chart.panels.len().max(1) as f64;
    let height = TOP + n * PANEL_HEIGHT + (n - 1.0) * PANEL_GAP + BOTTOM;
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{LEFT}" y="20" font-size="15" font-weight="bold">{}</text>"#,
        escape(&chart.title)
    );
    let _ = writeln!(
        w,
        r##"<text x="{LEFT}" y="38" fill="#555">{}; daily median with interquartile band</text>"##,
        escape(&chart.y_label)
    );

    for (i, panel) in chart.panels.iter().enumerate() {
        let top = TOP + i as f64 * (PANEL_HEIGHT + PANEL_GAP);
        let (y0, y1) = y_range(&panel.days);
        let f = Frame {
            t0: chart.start.timestamp() as f64,
            t1: chart.end.timestamp() as f64,
            y0,
            y1,
            top,
        };
        let color = PALETTE[i % PALETTE.len()];
        let bottom = top + PANEL_HEIGHT;
        let right = WIDTH - RIGHT;

        if let Some((a, b)) = chart.shade {
            let _ = writeln!(
                w,
                r##"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{PANEL_HEIGHT:.2}" fill="#f0f0f0"/>"##,
                f.x(a),
                f.x(b) - f.x(a)
            );
        }
        let _ = writeln!(
            w,
            r##"<rect x="{LEFT:.2}" y="{top:.2}" width="{:.2}" height="{PANEL_HEIGHT:.2}" fill="none" stroke="#888"/>"##,
            right - LEFT
        );
        for k in 0..=4 {
            let v = y0 + (y1 - y0) * k as f64 / 4.0;
            let y = f.y(v);
            let _ = writeln!(
                w,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="#888"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT - 4.0,
                LEFT - 6.0,
                y + 4.0,
                fmt_value(v)
            );
        }
        let mut day = chart.start.date_naive();
        while day_start(day) <= chart.end {
            let x = f.x(day_start(day));
            let _ = writeln!(
                w,
                r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                bottom + 4.0,
                bottom + 16.0,
                day.format("%m-%d")
            );
            day += Duration::days(7);
        }

        if !panel.days.is_empty() {
            let mid = |d: &DailyQuantiles| day_start(d.date) + Duration::hours(12);
            let mut band = String::new();
            for d in &panel.days {
                let _ = write!(band, "{:.2},{:.2} ", f.x(mid(d)), f.y(d.q75));
            }
            for d in panel.days.iter().rev() {
                let _ = write!(band, "{:.2},{:.2} ", f.x(mid(d)), f.y(d.q25));
            }
            let _ = writeln!(
                w,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.22" stroke="none"/>"#,
                band.trim_end()
            );
            let line: Vec<String> = panel
                .days
                .iter()
                .map(|d| format!("{:.2},{:.2}", f.x(mid(d)), f.y(d.median)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                line.join(" ")
            );
        }
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-weight="bold" fill="{color}">{}</text>"#,
            LEFT + 6.0,
            top + 14.0,
            escape(&panel.label)
        );

        for (j, m) in chart.markers.iter().enumerate() {
            let x = f.x(m.at);
            let _ = writeln!(
                w,
                r##"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#444" stroke-dasharray="4 3"/>"##
            );
            if i == 0 {
                let _ = writeln!(
                    w,
                    r##"<text x="{:.2}" y="{:.2}" font-size="9" fill="#444">{}</text>"##,
                    x + 2.0,
                    top + 26.0 + 11.0 * j as f64,
                    escape(&m.label)
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
