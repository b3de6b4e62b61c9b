use std::collections::BTreeMap;

use chrono::{DateTime, TimeDelta};

use super::records::{apply, EventKind, PositionEvent};
use super::{HistoryError, PoolSnapshot, PriceSeries};
use crate::amm::LiquidityPosition;
use crate::time::Timestamp;

pub const DEFAULT_STALENESS_HOURS: i64 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    /// Oldest acceptable price sample relative to the snapshot time.
    pub staleness: TimeDelta,
    /// Fail instead of flagging when a price is stale.
    pub strict_staleness: bool,
    /// First instant the event log is known to be complete from. `None`
    /// means the log starts at pool creation.
    pub coverage_start: Option<Timestamp>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            staleness: TimeDelta::hours(DEFAULT_STALENESS_HOURS),
            strict_staleness: false,
            coverage_start: None,
        }
    }
}

/// Walks the event log backward from `current`, producing one snapshot per
/// entry of `times` (which must descend from `current.as_of`).
///
/// A snapshot at `T` holds every position open at `T`: events stamped
/// after `T` are undone, events at or before `T` are kept.
pub fn reconstruct_states(
    current: &PoolSnapshot,
    events: &[PositionEvent],
    times: &[Timestamp],
    prices: &PriceSeries,
    opts: &ReconstructOptions,
) -> Result<Vec<PoolSnapshot>, HistoryError> {
    check_times(current.as_of, times)?;
    check_events(current.as_of, events)?;

    let mut first_mint: BTreeMap<&str, Timestamp> = BTreeMap::new();
    for e in events.iter().filter(|e| e.kind == EventKind::Mint) {
        first_mint.entry(e.position_id.as_str()).or_insert(e.timestamp);
    }

    let mut state: BTreeMap<String, LiquidityPosition> = current
        .positions
        .iter()
        .map(|p| (p.position_id.clone(), p.clone()))
        .collect();
    let mut pending = events.len();
    let mut out = Vec::with_capacity(times.len());

    for &t in times {
        if let Some(start) = opts.coverage_start {
            if t < start {
                return Err(HistoryError::Coverage {
                    requested: t,
                    coverage_start: start,
                });
            }
        }
        while pending > 0 && events[pending - 1].timestamp > t {
            pending -= 1;
            undo(&mut state, &events[pending], &first_mint)?;
        }
        let (price, stale) = price_at(prices, t, opts)?;
        out.push(PoolSnapshot {
            meta: current.meta.clone(),
            current_price: price,
            positions: state.values().cloned().collect(),
            as_of: t,
            stale_price: stale,
        });
    }
    Ok(out)
}

fn undo(
    state: &mut BTreeMap<String, LiquidityPosition>,
    e: &PositionEvent,
    first_mint: &BTreeMap<&str, Timestamp>,
) -> Result<(), HistoryError> {
    match e.kind {
        EventKind::Mint => {
            let open = state.get(&e.position_id).map_or(0, |p| p.liquidity);
            if open < e.liquidity_delta {
                return Err(HistoryError::InconsistentLog {
                    position_id: e.position_id.clone(),
                    reason: format!(
                        "mint of {} at {} exceeds the {} open after it",
                        e.liquidity_delta, e.timestamp, open
                    ),
                });
            }
            if open == e.liquidity_delta {
                state.remove(&e.position_id);
            } else if let Some(p) = state.get_mut(&e.position_id) {
                p.liquidity -= e.liquidity_delta;
            }
        }
        EventKind::Burn => {
            if e.liquidity_delta == 0 {
                return Ok(());
            }
            state
                .entry(e.position_id.clone())
                .and_modify(|p| p.liquidity += e.liquidity_delta)
                .or_insert_with(|| LiquidityPosition {
                    position_id: e.position_id.clone(),
                    owner: e.owner.clone(),
                    lower: e.lower,
                    upper: e.upper,
                    liquidity: e.liquidity_delta,
                    opened_at: first_mint.get(e.position_id.as_str()).copied().unwrap_or(e.timestamp),
                    closed_at: None,
                });
        }
    }
    Ok(())
}

fn check_times(head: Timestamp, times: &[Timestamp]) -> Result<(), HistoryError> {
    if let Some(&t) = times.iter().find(|&&t| t > head) {
        return Err(HistoryError::InvalidTimes(format!(
            "{t} is after the head state at {head}"
        )));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] >= w[0]) {
        return Err(HistoryError::InvalidTimes(format!(
            "times must strictly descend, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn check_events(head: Timestamp, events: &[PositionEvent]) -> Result<(), HistoryError> {
    if let Some(w) = events.windows(2).find(|w| w[1].order_key() < w[0].order_key()) {
        return Err(HistoryError::InconsistentLog {
            position_id: w[1].position_id.clone(),
            reason: "events are not in chain order".into(),
        });
    }
    if let Some(w) = events.windows(2).find(|w| w[1].timestamp < w[0].timestamp) {
        return Err(HistoryError::InconsistentLog {
            position_id: w[1].position_id.clone(),
            reason: "timestamps decrease along chain order".into(),
        });
    }
    if let Some(e) = events.last().filter(|e| e.timestamp > head) {
        return Err(HistoryError::EventAfterHead {
            position_id: e.position_id.clone(),
            timestamp: e.timestamp,
            head,
        });
    }
    Ok(())
}

fn price_at(
    prices: &PriceSeries,
    t: Timestamp,
    opts: &ReconstructOptions,
) -> Result<(crate::amm::Price, bool), HistoryError> {
    let sample = prices.at_or_before(t).ok_or(HistoryError::MissingPrice { at: t })?;
    let gap = t - sample.timestamp;
    if gap <= opts.staleness {
        return Ok((sample.price, false));
    }
    let gap_hours = gap.num_seconds() as f64 / 3600.0;
    if opts.strict_staleness {
        return Err(HistoryError::StalePrice {
            at: t,
            sample: sample.timestamp,
            gap_hours,
        });
    }
    log::warn!("price at {t} is {gap_hours:.1}h old; snapshot flagged stale");
    Ok((sample.price, true))
}

/// Applies every event in order on top of `start`.
pub fn apply_events_forward(start: &PoolSnapshot, events: &[PositionEvent]) -> Result<PoolSnapshot, HistoryError> {
    let as_of = events.iter().map(|e| e.timestamp).fold(start.as_of, Timestamp::max);
    forward(start, events.iter(), as_of)
}

/// Applies the events stamped at or before `t` on top of `start`, which is
/// assumed to precede all of them.
pub fn apply_events_until(
    start: &PoolSnapshot,
    events: &[PositionEvent],
    t: Timestamp,
) -> Result<PoolSnapshot, HistoryError> {
    forward(start, events.iter().filter(|e| e.timestamp <= t), t)
}

fn forward<'a>(
    start: &PoolSnapshot,
    events: impl Iterator<Item = &'a PositionEvent>,
    as_of: Timestamp,
) -> Result<PoolSnapshot, HistoryError> {
    let mut state: BTreeMap<String, LiquidityPosition> = start
        .positions
        .iter()
        .map(|p| (p.position_id.clone(), p.clone()))
        .collect();
    for e in events {
        apply(&mut state, e)?;
    }
    Ok(PoolSnapshot {
        meta: start.meta.clone(),
        current_price: start.current_price,
        positions: state.into_values().collect(),
        as_of,
        stale_price: start.stale_price,
    })
}

/// Snapshot times from `to` back to `from` on multiples of `step` since the
/// epoch, newest first.
pub fn snapshot_grid(from: Timestamp, to: Timestamp, step: TimeDelta) -> Result<Vec<Timestamp>, HistoryError> {
    let step_s = step.num_seconds();
    if step_s <= 0 {
        return Err(HistoryError::InvalidTimes(format!("grid step {step}")));
    }
    if from > to {
        return Err(HistoryError::InvalidTimes(format!("{from} is after {to}")));
    }
    let mut t = to.timestamp().div_euclid(step_s) * step_s;
    let mut out = Vec::new();
    while t >= from.timestamp() {
        out.push(DateTime::from_timestamp(t, 0).expect("grid time in range"));
        t -= step_s;
    }
    Ok(out)
}
