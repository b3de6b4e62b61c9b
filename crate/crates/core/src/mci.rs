//! Marginal cost of immediacy (MCI) for concentrated-liquidity pools.
//!
//! An order that walks `k` levels into one side of the pool is simulated
//! with [`execute_order_over_levels`]. Its volume-weighted execution price is
//! compared with the pre-trade price on a log scale, and that deviation is
//! spread over the X volume executed:
//!
//! ```text
//! VWAPM = ln((ΣΔY / ΣΔX) / P)
//! MCI   = (-1)^B · VWAPM / ΣΔX · 10⁷      B = 0 buy (ask), 1 sell (bid)
//! ```
//!
//! The `10⁷` factor reports the cost in basis points per thousand X units.
//! Undefined values (no executable volume, zero denominators) are surfaced
//! as errors or `None`, never as zero.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::amm::{execute_order_over_levels, AmmError, Price, Side, SwapFill, TickLadder};
use crate::history::PoolSnapshot;
use crate::time::Timestamp;

/// Basis points (10⁴) per thousand X units (10³).
pub const MCI_SCALE: f64 = 1e7;

/// Depths reported by default.
pub const DEFAULT_LEVELS: [usize; 5] = [1, 5, 10, 15, 20];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MciError {
    #[error("metric undefined: {0}")]
    Undefined(&'static str),
    #[error("invalid book: {0}")]
    InvalidBook(String),
    #[error(transparent)]
    Amm(#[from] AmmError),
}

/// Log deviation of the fills' execution price (Y per X) from `p`.
pub fn vwapm(fills: &[SwapFill], p: Price) -> Result<f64, MciError> {
    let (sum_x, sum_y) = totals(fills)?;
    Ok(((sum_y / sum_x) / p.get()).ln())
}

/// One-sided MCI in basis points per thousand X units. Positive whenever
/// execution moves the price against the taker.
pub fn mci_side(fills: &[SwapFill], p: Price, side: Side) -> Result<f64, MciError> {
    let (sum_x, _) = totals(fills)?;
    let sign = match side {
        Side::Buy => 1.0,
        Side::Sell => -1.0,
    };
    Ok(sign * vwapm(fills, p)? / sum_x * MCI_SCALE)
}

fn totals(fills: &[SwapFill]) -> Result<(f64, f64), MciError> {
    if fills.is_empty() {
        return Err(MciError::Undefined("no fills"));
    }
    let sum_x: f64 = fills.iter().map(|f| f.delta_x).sum();
    let sum_y: f64 = fills.iter().map(|f| f.delta_y).sum();
    if !(sum_x > 0.0 && sum_y > 0.0) {
        return Err(MciError::Undefined("zero executed volume"));
    }
    Ok((sum_x, sum_y))
}

/// `(ask - bid) / (ask + bid)`; positive when buying is the costlier side.
pub fn mci_imbalance(mci_ask: f64, mci_bid: f64) -> Result<f64, MciError> {
    let denom = mci_ask + mci_bid;
    if denom == 0.0 || !denom.is_finite() {
        return Err(MciError::Undefined("ask + bid is zero"));
    }
    Ok((mci_ask - mci_bid) / denom)
}

pub fn mci_mean(mci_ask: f64, mci_bid: f64) -> f64 {
    (mci_ask + mci_bid) / 2.0
}

/// One price level of a limit order book.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobLevel {
    pub price: Price,
    pub quantity: f64,
}

/// MCI on a limit order book, normalised by the book's dollar volume
/// `Σ P·Q`. Ask levels must ascend and bid levels descend.
pub fn lob_mci(levels: &[LobLevel], midpoint: Price, side: Side) -> Result<f64, MciError> {
    if levels.is_empty() {
        return Err(MciError::InvalidBook("no levels".into()));
    }
    for (i, lvl) in levels.iter().enumerate() {
        if !(lvl.quantity.is_finite() && lvl.quantity > 0.0) {
            return Err(MciError::InvalidBook(format!(
                "level {} quantity {}",
                i + 1,
                lvl.quantity
            )));
        }
    }
    for (i, w) in levels.windows(2).enumerate() {
        let ordered = match side {
            Side::Buy => w[1].price > w[0].price,
            Side::Sell => w[1].price < w[0].price,
        };
        if !ordered {
            return Err(MciError::InvalidBook(format!(
                "level {} price {} out of order",
                i + 2,
                w[1].price
            )));
        }
    }
    let volume: f64 = levels.iter().map(|l| l.price.get() * l.quantity).sum();
    let quantity: f64 = levels.iter().map(|l| l.quantity).sum();
    let vwapm = ((volume / quantity) / midpoint.get()).ln();
    let sign = match side {
        Side::Buy => 1.0,
        Side::Sell => -1.0,
    };
    Ok(sign * vwapm / volume * MCI_SCALE)
}

/// MCI family at one depth for one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MciReport {
    pub level: usize,
    #[serde(with = "crate::time::iso")]
    pub timestamp: Timestamp,
    pub pre_trade_price: f64,
    pub mci_ask: Option<f64>,
    pub mci_bid: Option<f64>,
    pub mci_imbalance: Option<f64>,
    pub mci_mean: Option<f64>,
    /// The ask side had fewer than `level` non-empty levels.
    pub ask_depth_exhausted: bool,
    pub bid_depth_exhausted: bool,
}

/// Reports for each requested depth, ascending and de-duplicated.
pub fn mci_report_for_ladder(
    ladder: &TickLadder,
    timestamp: Timestamp,
    levels: &[usize],
) -> Result<Vec<MciReport>, MciError> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.first() == Some(&0) {
        return Err(MciError::Amm(AmmError::InvalidArgument("level 0".into())));
    }
    let Some(&deepest) = levels.last() else {
        return Ok(Vec::new());
    };
    // deeper orders consume a superset of the shallower ones' levels
    let asks = execute_order_over_levels(ladder, Side::Buy, deepest)?;
    let bids = execute_order_over_levels(ladder, Side::Sell, deepest)?;
    let p = ladder.current_price();
    Ok(levels
        .iter()
        .map(|&k| {
            let ask_fills = &asks.fills[..k.min(asks.fills.len())];
            let bid_fills = &bids.fills[..k.min(bids.fills.len())];
            let mci_ask = mci_side(ask_fills, p, Side::Buy).ok();
            let mci_bid = mci_side(bid_fills, p, Side::Sell).ok();
            let (mci_imbalance, mci_mean) = match (mci_ask, mci_bid) {
                (Some(a), Some(b)) => (mci_imbalance(a, b).ok(), Some(mci_mean(a, b))),
                _ => (None, None),
            };
            MciReport {
                level: k,
                timestamp,
                pre_trade_price: p.get(),
                mci_ask,
                mci_bid,
                mci_imbalance,
                mci_mean,
                ask_depth_exhausted: ask_fills.len() < k,
                bid_depth_exhausted: bid_fills.len() < k,
            }
        })
        .collect())
}

/// Reports for a snapshot, with the pool's first token as X.
pub fn mci_report(snapshot: &PoolSnapshot, levels: &[usize]) -> Result<Vec<MciReport>, MciError> {
    let ladder = snapshot.ladder()?;
    mci_report_for_ladder(&ladder, snapshot.as_of, levels)
}

/// Median and interquartile band of one day's observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyQuantiles {
    pub date: NaiveDate,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub count: usize,
}

/// Groups observations by UTC day. Missing values are skipped; days with no
/// defined value are omitted.
pub fn daily_quantiles(series: &[(Timestamp, Option<f64>)]) -> Vec<DailyQuantiles> {
    let mut by_day: std::collections::BTreeMap<NaiveDate, Vec<f64>> = Default::default();
    for (t, v) in series {
        if let Some(v) = v.filter(|v| v.is_finite()) {
            by_day.entry(t.date_naive()).or_default().push(v);
        }
    }
    by_day
        .into_iter()
        .map(|(date, mut values)| {
            values.sort_by(f64::total_cmp);
            DailyQuantiles {
                date,
                q25: quantile_sorted(&values, 0.25),
                median: quantile_sorted(&values, 0.5),
                q75: quantile_sorted(&values, 0.75),
                count: values.len(),
            }
        })
        .collect()
}

/// Linear-interpolation quantile of sorted, non-empty data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
