//! Event windows around the treatment announcement, panel construction and
//! the two-group, two-period difference-in-differences estimator.

mod did;
mod panel;

use serde::{Deserialize, Serialize};

use crate::time::{parse_timestamp, Timestamp};

pub use did::{
    did_estimate, relative_effect, relative_effect_bounds, stars, write_estimates_csv, Coefficient, DidError,
    DidEstimate, SeKind,
};
pub use panel::{build_panel, write_panel_csv, Group, OutcomeTransform, Panel, PanelObservation, PoolSeries};

/// Analysis periods. Each interval is half-open: `[before_start, τ)`,
/// `[τ, during_end)`, `[during_end, after_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventWindow {
    #[serde(with = "crate::time::iso")]
    pub before_start: Timestamp,
    #[serde(with = "crate::time::iso")]
    pub treatment_time: Timestamp,
    #[serde(with = "crate::time::iso")]
    pub during_end: Timestamp,
    #[serde(with = "crate::time::iso")]
    pub after_end: Timestamp,
}

impl Default for EventWindow {
    fn default() -> Self {
        let t = |s: &str| parse_timestamp(s).expect("valid default");
        Self {
            before_start: t("2023-02-01T00:00Z"),
            treatment_time: t("2023-03-11T03:11Z"),
            during_end: t("2023-03-17T00:00Z"),
            after_end: t("2023-04-30T23:59Z"),
        }
    }
}

impl EventWindow {
    pub fn new(
        before_start: Timestamp,
        treatment_time: Timestamp,
        during_end: Timestamp,
        after_end: Timestamp,
    ) -> Result<Self, DidError> {
        let w = Self {
            before_start,
            treatment_time,
            during_end,
            after_end,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), DidError> {
        if self.before_start < self.treatment_time
            && self.treatment_time < self.during_end
            && self.during_end < self.after_end
        {
            Ok(())
        } else {
            Err(DidError::Config(format!(
                "window bounds must increase: {} < {} < {} < {}",
                self.before_start, self.treatment_time, self.during_end, self.after_end
            )))
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.before_start <= t && t < self.after_end
    }

    /// Post-treatment indicator, strictly after τ.
    pub fn is_post(&self, t: Timestamp) -> bool {
        t > self.treatment_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Before,
    During,
    After,
    OutOfRange,
}

pub fn classify_period(t: Timestamp, w: &EventWindow) -> Period {
    if t < w.before_start || t >= w.after_end {
        Period::OutOfRange
    } else if t < w.treatment_time {
        Period::Before
    } else if t < w.during_end {
        Period::During
    } else {
        Period::After
    }
}

/// A dated event drawn as a vertical marker on charts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMarker {
    pub label: String,
    #[serde(with = "crate::time::iso")]
    pub at: Timestamp,
}

/// The banking-turmoil events of March 2023.
pub fn default_markers() -> Vec<EventMarker> {
    [
        ("Silvergate liquidation", "2023-03-08T00:00Z"),
        ("SVB stock crash", "2023-03-09T00:00Z"),
        ("Circle discloses SVB exposure", "2023-03-11T03:11Z"),
        ("SVB Financial files chapter 11", "2023-03-17T00:00Z"),
        ("Fed raises rates", "2023-03-22T00:00Z"),
        ("First Citizens acquires SVB", "2023-03-26T00:00Z"),
    ]
    .into_iter()
    .map(|(label, at)| EventMarker {
        label: label.into(),
        at: parse_timestamp(at).expect("valid marker"),
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Timestamp {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn announcement_minute_splits_before_and_during() {
        let w = EventWindow::default();
        assert_eq!(classify_period(t("2023-03-11T03:10Z"), &w), Period::Before);
        assert_eq!(classify_period(t("2023-03-11T03:11Z"), &w), Period::During);
        assert_eq!(classify_period(t("2023-05-01T00:00Z"), &w), Period::OutOfRange);
        assert_eq!(classify_period(t("2023-02-01T00:00Z"), &w), Period::Before);
        assert_eq!(classify_period(t("2023-01-31T23:59Z"), &w), Period::OutOfRange);
        assert_eq!(classify_period(t("2023-03-17T00:00Z"), &w), Period::After);
    }

    #[test]
    fn post_is_strictly_after_treatment() {
        let w = EventWindow::default();
        assert!(!w.is_post(w.treatment_time));
        assert!(w.is_post(t("2023-03-11T03:11:01Z")));
    }

    #[test]
    fn window_must_be_ordered() {
        let w = EventWindow::default();
        assert!(EventWindow::new(w.treatment_time, w.before_start, w.during_end, w.after_end).is_err());
        assert!(EventWindow::new(w.before_start, w.treatment_time, w.during_end, w.after_end).is_ok());
    }

    #[test]
    fn six_default_markers_inside_window() {
        let w = EventWindow::default();
        let m = default_markers();
        assert_eq!(m.len(), 6);
        assert!(m.iter().all(|m| w.contains(m.at)));
    }
}
