use serde::{Deserialize, Serialize};

use super::ladder::{LadderEntry, TickLadder};
use super::liquidity::{token_amounts_in_range, virtual_reserves};
use super::{AmmError, Price};

/// Direction of a simulated order, from the taker's point of view.
///
/// `Buy` acquires token X and pays Y, pushing the price up. `Sell` disposes
/// of X for Y and pushes the price down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    /// +1 when X leaves the pool, -1 when it enters.
    pub fn x_sign(self) -> f64 {
        match self {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

/// Execution record for one tick slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapFill {
    pub side: Side,
    pub lower: i32,
    pub upper: i32,
    pub lower_price: Price,
    pub upper_price: Price,
    pub liquidity: f64,
    pub start_sqrt_price: f64,
    pub end_sqrt_price: f64,
    /// X taken from (buy) or given to (sell) the pool.
    pub delta_x: f64,
    /// Y given to (buy) or taken from (sell) the pool.
    pub delta_y: f64,
    /// X still consumable in this slot beyond the end price.
    pub remaining_x: f64,
    /// The slot's consumable liquidity was used up.
    pub exhausted: bool,
}

impl SwapFill {
    pub fn start_price(&self) -> f64 {
        self.start_sqrt_price * self.start_sqrt_price
    }

    pub fn end_price(&self) -> f64 {
        self.end_sqrt_price * self.end_sqrt_price
    }

    fn entry(&self) -> LadderEntry {
        LadderEntry {
            lower: self.lower,
            upper: self.upper,
            lower_price: self.lower_price,
            upper_price: self.upper_price,
            liquidity: self.liquidity,
        }
    }

    /// Virtual reserves of the slot at the fill's start price.
    pub fn start_virtual_reserves(&self) -> Result<(f64, f64), AmmError> {
        let p = Price::from_sqrt(self.start_sqrt_price)?;
        let (x, y) = token_amounts_in_range(self.liquidity, self.lower_price, self.upper_price, p)?;
        virtual_reserves(self.liquidity, self.lower_price, self.upper_price, x, y)
    }

    /// Continues trading in the same slot from where this fill stopped.
    pub fn continue_in_tick(&self, limit: Option<f64>) -> Result<SwapFill, AmmError> {
        fill_remaining(&self.entry(), self.side, self.end_sqrt_price, self.remaining_x, limit)
    }
}

/// Consumes liquidity in one slot starting at price `from`.
///
/// Without a limit the whole consumable part of the slot is taken: `[from,
/// upper]` for a buy, `[lower, from]` for a sell. A limit caps the X amount
/// traded and solves the constant-product relation for the partial fill.
pub fn swap_in_tick(entry: &LadderEntry, from: Price, side: Side, limit: Option<f64>) -> Result<SwapFill, AmmError> {
    if entry.liquidity.is_nan() || entry.liquidity <= 0.0 {
        return Err(AmmError::EmptyTick {
            lower: entry.lower,
            upper: entry.upper,
        });
    }
    if from < entry.lower_price || from > entry.upper_price {
        return Err(AmmError::PriceOutsideTick {
            price: from.get(),
            lower: entry.lower_price.get(),
            upper: entry.upper_price.get(),
        });
    }
    let l = entry.liquidity;
    let sp = from.sqrt();
    let remaining = match side {
        Side::Buy => token_amounts_in_range(l, entry.lower_price, entry.upper_price, from)?.0,
        Side::Sell => {
            let sa = entry.lower_price.sqrt();
            l * (sp - sa) / (sa * sp)
        }
    };
    fill_remaining(entry, side, sp, remaining, limit)
}

fn fill_remaining(
    entry: &LadderEntry,
    side: Side,
    start_sqrt: f64,
    remaining: f64,
    limit: Option<f64>,
) -> Result<SwapFill, AmmError> {
    if let Some(q) = limit {
        if !(q.is_finite() && q >= 0.0) {
            return Err(AmmError::InvalidArgument(format!("limit {q}")));
        }
    }
    let l = entry.liquidity;
    let (sa, sb) = (entry.lower_price.sqrt(), entry.upper_price.sqrt());
    let remaining = remaining.max(0.0);
    let exhausted = limit.is_none_or(|q| q >= remaining);
    let dx = if exhausted {
        remaining
    } else {
        limit.unwrap_or(remaining)
    };
    let left = remaining - dx;
    let end_sqrt = if dx == 0.0 {
        start_sqrt
    } else if exhausted {
        match side {
            Side::Buy => sb,
            Side::Sell => sa,
        }
    } else {
        // position inside the slot is recovered from the X still left
        match side {
            Side::Buy => 1.0 / (1.0 / sb + left / l),
            Side::Sell => 1.0 / (1.0 / sa - left / l),
        }
    };
    Ok(SwapFill {
        side,
        lower: entry.lower,
        upper: entry.upper,
        lower_price: entry.lower_price,
        upper_price: entry.upper_price,
        liquidity: l,
        start_sqrt_price: start_sqrt,
        end_sqrt_price: end_sqrt,
        delta_x: dx,
        // execution price over a constant-L range is √(p_start·p_end)
        delta_y: dx * start_sqrt * end_sqrt,
        remaining_x: if exhausted { 0.0 } else { left },
        exhausted,
    })
}

/// Fills produced by walking `k` levels into one side of a ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderExecution {
    pub side: Side,
    pub fills: Vec<SwapFill>,
    /// Fewer than the requested number of non-empty levels existed.
    pub depth_exhausted: bool,
}

impl OrderExecution {
    pub fn total_x(&self) -> f64 {
        self.fills.iter().map(|f| f.delta_x).sum()
    }

    pub fn total_y(&self) -> f64 {
        self.fills.iter().map(|f| f.delta_y).sum()
    }
}

/// Fully consumes `k` non-empty levels away from the current price.
///
/// Level 1 is what remains of the active slot in the order's direction;
/// empty slots and zero-width remainders do not count as levels.
pub fn execute_order_over_levels(ladder: &TickLadder, side: Side, k: usize) -> Result<OrderExecution, AmmError> {
    if k == 0 {
        return Err(AmmError::InvalidArgument("level count must be >= 1".into()));
    }
    let active = ladder.active_slot();
    let mut fills = Vec::with_capacity(k);
    for entry in ladder.walk(side == Side::Buy) {
        if fills.len() == k {
            break;
        }
        let from = if entry.lower == active {
            ladder.current_price()
        } else {
            match side {
                Side::Buy => entry.lower_price,
                Side::Sell => entry.upper_price,
            }
        };
        let fill = swap_in_tick(&entry, from, side, None)?;
        if fill.delta_x > 0.0 {
            fills.push(fill);
        }
    }
    Ok(OrderExecution {
        side,
        depth_exhausted: fills.len() < k,
        fills,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amm::tick::tick_to_price;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    fn entry(lower: i32, upper: i32, l: f64) -> LadderEntry {
        LadderEntry {
            lower,
            upper,
            lower_price: tick_to_price(lower),
            upper_price: tick_to_price(upper),
            liquidity: l,
        }
    }

    fn product_error(f: &SwapFill) -> f64 {
        let (xv, yv) = f.start_virtual_reserves().unwrap();
        let s = f.side.x_sign();
        rel((xv - s * f.delta_x) * (yv + s * f.delta_y), f.liquidity * f.liquidity)
    }

    #[test]
    fn zero_limit_is_empty_fill() {
        let e = entry(0, 60, 1e6);
        let f = swap_in_tick(&e, e.lower_price, Side::Buy, Some(0.0)).unwrap();
        assert_eq!((f.delta_x, f.delta_y), (0.0, 0.0));
        assert!(!f.exhausted);
    }

    #[test]
    fn zero_liquidity_signals_empty_tick() {
        let e = entry(0, 60, 0.0);
        assert!(matches!(
            swap_in_tick(&e, e.lower_price, Side::Buy, None),
            Err(AmmError::EmptyTick { .. })
        ));
    }

    #[test]
    fn full_tick_sell_matches_closed_form() {
        let e = entry(-120, -60, 5.0e5);
        let f = swap_in_tick(&e, e.upper_price, Side::Sell, None).unwrap();
        // entering from above the slot holds only Y; selling X takes all of
        // it and pays in the slot's full X capacity
        let (x_cap, _) = token_amounts_in_range(e.liquidity, e.lower_price, e.upper_price, e.lower_price).unwrap();
        assert!(rel(f.delta_x, x_cap) < 1e-12);
        let (xv, yv) = f.start_virtual_reserves().unwrap();
        // sell side of the constant-product relation with X flowing in
        let dy = yv - e.liquidity * e.liquidity / (xv + f.delta_x);
        assert!(rel(f.delta_y, dy) < 1e-9);
        assert!(f.exhausted);
        assert_eq!(f.end_sqrt_price, e.lower_price.sqrt());
    }

    #[test]
    fn full_tick_buy_matches_closed_form() {
        let e = entry(60, 120, 5.0e5);
        let f = swap_in_tick(&e, e.lower_price, Side::Buy, None).unwrap();
        let (x_real, y_full) = (
            token_amounts_in_range(e.liquidity, e.lower_price, e.upper_price, e.lower_price)
                .unwrap()
                .0,
            token_amounts_in_range(e.liquidity, e.lower_price, e.upper_price, e.upper_price)
                .unwrap()
                .1,
        );
        assert!(rel(f.delta_x, x_real) < 1e-15);
        let (xv, yv) = f.start_virtual_reserves().unwrap();
        let dy = e.liquidity * e.liquidity / (xv - f.delta_x) - yv;
        assert!(rel(f.delta_y, dy) < 1e-9);
        assert!(rel(f.delta_y, y_full) < 1e-12);
    }

    #[test]
    fn partial_fills_compose() {
        for side in [Side::Buy, Side::Sell] {
            for spacing in [1, 10, 60, 200] {
                let e = entry(-spacing * 3, -spacing * 2, 3.3e7);
                let from = match side {
                    Side::Buy => e.lower_price,
                    Side::Sell => e.upper_price,
                };
                let full = swap_in_tick(&e, from, side, None).unwrap();
                let first = swap_in_tick(&e, from, side, Some(0.3 * full.delta_x)).unwrap();
                let second = first.continue_in_tick(Some(0.7 * full.delta_x)).unwrap();
                assert!(rel(first.delta_x + second.delta_x, full.delta_x) <= 1e-12);
                assert!(rel(first.delta_y + second.delta_y, full.delta_y) <= 1e-12);
                for f in [&full, &first, &second] {
                    assert!(product_error(f) <= 1e-12, "{side:?} {spacing}");
                }
            }
        }
    }

    #[test]
    fn limit_beyond_capacity_is_capped() {
        let e = entry(0, 10, 1e6);
        let full = swap_in_tick(&e, e.lower_price, Side::Buy, None).unwrap();
        let capped = swap_in_tick(&e, e.lower_price, Side::Buy, Some(full.delta_x * 2.0)).unwrap();
        assert!(capped.exhausted);
        assert_eq!(capped.delta_x, full.delta_x);
        assert!(swap_in_tick(&e, e.lower_price, Side::Buy, Some(-1.0)).is_err());
    }

    #[test]
    fn start_outside_tick_is_rejected() {
        let e = entry(0, 10, 1e6);
        let below = Price::new(0.5).unwrap();
        assert!(matches!(
            swap_in_tick(&e, below, Side::Buy, None),
            Err(AmmError::PriceOutsideTick { .. })
        ));
    }

    #[test]
    fn single_level_is_active_remainder() {
        let ladder =
            TickLadder::from_ranges(10, 1.0, &[(-50, 50, 2.0e6)], Price::new(1.0001f64.powf(3.7)).unwrap()).unwrap();
        for side in [Side::Buy, Side::Sell] {
            let exec = execute_order_over_levels(&ladder, side, 1).unwrap();
            assert_eq!(exec.fills.len(), 1);
            let active = ladder.entry_at(ladder.active_slot()).unwrap();
            let direct = swap_in_tick(&active, ladder.current_price(), side, None).unwrap();
            assert_eq!(exec.fills[0], direct);
        }
    }

    #[test]
    fn depth_marker_when_levels_run_out() {
        let ladder = TickLadder::from_ranges(10, 1.0, &[(0, 30, 1.0)], Price::new(1.0).unwrap()).unwrap();
        let buy = execute_order_over_levels(&ladder, Side::Buy, 5).unwrap();
        assert_eq!(buy.fills.len(), 3);
        assert!(buy.depth_exhausted);
        // price sits on the lower bound, so nothing is left to sell into
        let sell = execute_order_over_levels(&ladder, Side::Sell, 1).unwrap();
        assert!(sell.fills.is_empty());
        assert!(sell.depth_exhausted);
        assert!(execute_order_over_levels(&ladder, Side::Buy, 0).is_err());
    }
}
