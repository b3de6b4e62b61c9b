//! Reconstruction and liquidity analytics for concentrated-liquidity pools.
//!
//! The crate is organised bottom-up:
//!
//! - [`amm`]: tick/price math, per-slot liquidity ladders and simulated swaps.
//! - [`mci`]: marginal cost of immediacy on both sides of a pool, plus the
//!   order-book form used as a cross-check.
//! - [`concentration`]: provider shares, Gini coefficient and TVL in USD.
//! - [`history`]: position/event ingestion, backward state reconstruction and
//!   the paginated subgraph client.
//! - [`event_study`]: event windows, panel construction and the
//!   difference-in-differences estimator.
//! - [`synth`]: deterministic synthetic pools used by fixtures and demos.

pub mod amm;
pub mod concentration;
pub mod event_study;
pub mod history;
pub mod mci;
pub mod serde_u128;
pub mod synth;
pub mod time;

pub use amm::{
    aggregate_liquidity_by_tick, execute_order_over_levels, swap_in_tick, tick_to_price, AmmError, FeeTier,
    LiquidityPosition, Price, Side, SwapFill, TickIndex, TickLadder,
};
pub use concentration::{gini, tvl_usd, ProviderShare, QuoteBook, TvlQuote};
pub use event_study::{DidEstimate, EventWindow, Group, PanelObservation, Period};
pub use history::{PoolMeta, PoolSnapshot, PositionEvent, PriceSeries};
pub use mci::MciReport;
pub use time::Timestamp;
