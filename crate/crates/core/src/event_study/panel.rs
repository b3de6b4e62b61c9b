use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{DidError, EventWindow};
use crate::time::{format_timestamp, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Control,
    Treatment,
}

impl Group {
    pub fn indicator(self) -> f64 {
        match self {
            Group::Control => 0.0,
            Group::Treatment => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Control => "control",
            Group::Treatment => "treatment",
        }
    }
}

/// Outcome time series of one pool; `None` marks an undefined value.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSeries {
    pub pool_id: String,
    pub points: Vec<(Timestamp, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub pool_id: String,
    pub group: Group,
    #[serde(with = "crate::time::iso")]
    pub timestamp: Timestamp,
    pub post: bool,
    pub outcome: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeTransform {
    #[default]
    Level,
    /// Natural log; non-positive outcomes are dropped as missing.
    Log,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Panel {
    pub observations: Vec<PanelObservation>,
    /// Outcomes that were undefined, non-finite, or outside the transform's
    /// domain.
    pub dropped_missing: usize,
    /// Points outside the event window.
    pub dropped_out_of_window: usize,
}

/// One observation per (pool, timestamp) inside the window.
pub fn build_panel(
    series: &[PoolSeries],
    groups: &BTreeMap<String, Group>,
    window: &EventWindow,
    transform: OutcomeTransform,
) -> Result<Panel, DidError> {
    let mut panel = Panel::default();
    for s in series {
        let group = *groups
            .get(&s.pool_id)
            .ok_or_else(|| DidError::Config(format!("pool {} has no group", s.pool_id)))?;
        for &(t, y) in &s.points {
            if !window.contains(t) {
                panel.dropped_out_of_window += 1;
                continue;
            }
            let y = match (y, transform) {
                (Some(v), OutcomeTransform::Level) if v.is_finite() => v,
                (Some(v), OutcomeTransform::Log) if v.is_finite() && v > 0.0 => v.ln(),
                _ => {
                    panel.dropped_missing += 1;
                    continue;
                }
            };
            panel.observations.push(PanelObservation {
                pool_id: s.pool_id.clone(),
                group,
                timestamp: t,
                post: window.is_post(t),
                outcome: y,
            });
        }
    }
    Ok(panel)
}

pub fn write_panel_csv<W: Write>(writer: W, panel: &Panel) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["pool_id", "group", "timestamp", "post", "outcome"])?;
    for o in &panel.observations {
        w.write_record([
            o.pool_id.as_str(),
            o.group.as_str(),
            &format_timestamp(&o.timestamp),
            if o.post { "1" } else { "0" },
            &o.outcome.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
