//! Pool state over time.
//!
//! The starting point is the pool as it stands now: its open positions and
//! the log of mints and burns that led there. Historical snapshots are
//! obtained by walking that log backward from the head, re-adding liquidity
//! burned after the query time and removing liquidity minted after it. A
//! separate price series places the active tick at each snapshot.

mod fetch;
mod prices;
mod reconstruct;
mod records;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::amm::{AmmError, FeeTier, LadderScale, LiquidityPosition, Price, TickLadder};
use crate::time::Timestamp;

pub use fetch::{record_from_raw, FetchConfig, FetchError, Page, RecordKind, SubgraphClient, SCHEMA_VERSION};
pub use prices::{PriceSample, PriceSeries};
pub use reconstruct::{
    apply_events_forward, apply_events_until, reconstruct_states, snapshot_grid, ReconstructOptions,
    DEFAULT_STALENESS_HOURS,
};
pub use records::{
    parse_position_records, read_position_records, write_position_records, EventKind, LineKind, PositionEvent,
    PositionRecords, RecordLine,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMeta {
    pub symbol: String,
    pub decimals: u8,
}

/// Static description of a pool. Prices are quoted as `token_y` per
/// `token_x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolMeta {
    pub pool_id: String,
    pub token_x: TokenMeta,
    pub token_y: TokenMeta,
    #[serde(rename = "fee_tier_bps")]
    pub fee_tier: FeeTier,
}

impl PoolMeta {
    pub fn from_json(text: &str) -> Result<Self, HistoryError> {
        serde_json::from_str(text).map_err(|e| HistoryError::Meta(e.to_string()))
    }

    pub fn load(path: impl Into<PathBuf>) -> Result<Self, HistoryError> {
        let path = path.into();
        let text = std::fs::read_to_string(&path).map_err(|source| HistoryError::Io {
            path: path.clone(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn spacing(&self) -> u32 {
        self.fee_tier.tick_spacing()
    }

    pub fn scale(&self) -> LadderScale {
        LadderScale::for_decimals(self.token_x.decimals, self.token_y.decimals)
    }
}

/// A pool at one instant: every position open at `as_of` and the
/// decimal-adjusted price it traded at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSnapshot {
    pub meta: PoolMeta,
    pub current_price: Price,
    /// Sorted by `position_id`; every entry has non-zero liquidity.
    pub positions: Vec<LiquidityPosition>,
    #[serde(with = "crate::time::iso")]
    pub as_of: Timestamp,
    /// The price came from a sample older than the staleness bound.
    #[serde(default)]
    pub stale_price: bool,
}

impl PoolSnapshot {
    /// Normalises `positions` (drops empty ones, sorts by id) and checks them
    /// against the pool's tick spacing.
    pub fn new(
        meta: PoolMeta,
        current_price: Price,
        mut positions: Vec<LiquidityPosition>,
        as_of: Timestamp,
    ) -> Result<Self, HistoryError> {
        positions.retain(|p| p.liquidity > 0);
        positions.sort_by(|a, b| a.position_id.cmp(&b.position_id));
        for w in positions.windows(2) {
            if w[0].position_id == w[1].position_id {
                return Err(HistoryError::Amm(AmmError::InvalidPosition {
                    position_id: w[0].position_id.clone(),
                    reason: "duplicate position id".into(),
                }));
            }
        }
        let spacing = meta.spacing();
        for p in &positions {
            p.validate(spacing)?;
        }
        Ok(Self {
            meta,
            current_price,
            positions,
            as_of,
            stale_price: false,
        })
    }

    pub fn pool_id(&self) -> &str {
        &self.meta.pool_id
    }

    /// Decimal-adjusted ladder with the pool's first token as X.
    pub fn ladder(&self) -> Result<TickLadder, AmmError> {
        TickLadder::build(
            &self.positions,
            self.meta.spacing(),
            self.current_price,
            self.meta.scale(),
        )
    }

    pub fn total_liquidity(&self) -> u128 {
        self.positions.iter().map(|p| p.liquidity).sum()
    }

    /// `(position_id, liquidity)` pairs, the identity used when comparing
    /// snapshots produced by different routes.
    pub fn position_set(&self) -> Vec<(String, u128)> {
        self.positions
            .iter()
            .map(|p| (p.position_id.clone(), p.liquidity))
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HistoryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: burn references unknown position {position_id}")]
    UnknownPosition { line: usize, position_id: String },
    #[error("line {line}: position {position_id}: {reason}")]
    ConflictingPosition {
        line: usize,
        position_id: String,
        reason: String,
    },
    #[error("inconsistent event log at position {position_id}: {reason}")]
    InconsistentLog { position_id: String, reason: String },
    #[error("event for {position_id} at {timestamp} is after the head state at {head}")]
    EventAfterHead {
        position_id: String,
        timestamp: Timestamp,
        head: Timestamp,
    },
    #[error("requested {requested} precedes event coverage starting {coverage_start}")]
    Coverage {
        requested: Timestamp,
        coverage_start: Timestamp,
    },
    #[error("no price sample at or before {at}")]
    MissingPrice { at: Timestamp },
    #[error("price for {at} is {gap_hours:.1}h old (sample at {sample})")]
    StalePrice {
        at: Timestamp,
        sample: Timestamp,
        gap_hours: f64,
    },
    #[error("invalid query times: {0}")]
    InvalidTimes(String),
    #[error("pool metadata: {0}")]
    Meta(String),
    #[error("price series line {line}: {message}")]
    PriceSeries { line: usize, message: String },
    #[error(transparent)]
    Amm(#[from] AmmError),
}
