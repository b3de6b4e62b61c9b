//! Concentrated-liquidity pool arithmetic.
//!
//! Prices are quoted as token Y per token X. A pool's liquidity is sliced
//! into tick slots of width `spacing`; within a slot the pool behaves like a
//! constant-product curve with virtual reserves `x_v · y_v = L²`.

mod ladder;
mod liquidity;
mod swap;
pub mod tick;

pub use ladder::{aggregate_liquidity_by_tick, LadderEntry, LadderScale, LadderWalk, LiquidityPosition, TickLadder};
pub use liquidity::{token_amounts_in_range, virtual_reserves};
pub use swap::{execute_order_over_levels, swap_in_tick, OrderExecution, Side, SwapFill};
pub use tick::{tick_at_price, tick_to_price, FeeTier, Price, TickIndex};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AmmError {
    #[error("invalid price {0}")]
    InvalidPrice(f64),
    #[error("invalid price range [{lower}, {upper}]")]
    InvalidRange { lower: f64, upper: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tick spacing {0} is not one of 1, 10, 60, 200")]
    InvalidSpacing(u32),
    #[error("fee tier {0} bps is not supported")]
    InvalidFeeTier(u32),
    #[error("tick {0} outside representable range")]
    TickOutOfBounds(i32),
    #[error("position {position_id}: {reason}")]
    InvalidPosition { position_id: String, reason: String },
    #[error("slot [{lower}, {upper}) holds no liquidity")]
    EmptyTick { lower: i32, upper: i32 },
    #[error("price {price} outside slot [{lower}, {upper}]")]
    PriceOutsideTick { price: f64, lower: f64, upper: f64 },
}
