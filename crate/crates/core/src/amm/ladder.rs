use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tick::{align_down, tick_at_price, tick_to_price, MAX_TICK, MIN_TICK, VALID_SPACINGS};
use super::{AmmError, Price};
use crate::time::Timestamp;

/// One provider's concentrated range order.
///
/// `liquidity` is the raw on-chain value; it stays an integer so that
/// mint/burn replay is exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiquidityPosition {
    pub position_id: String,
    pub owner: String,
    pub lower: i32,
    pub upper: i32,
    #[serde(with = "crate::serde_u128")]
    pub liquidity: u128,
    pub opened_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at: Option<Timestamp>,
}

impl LiquidityPosition {
    pub fn validate(&self, spacing: u32) -> Result<(), AmmError> {
        let reject = |reason: String| AmmError::InvalidPosition {
            position_id: self.position_id.clone(),
            reason,
        };
        if self.lower >= self.upper {
            return Err(reject(format!("lower {} >= upper {}", self.lower, self.upper)));
        }
        if self.lower < MIN_TICK || self.upper > MAX_TICK {
            return Err(reject("tick outside representable range".into()));
        }
        let s = spacing as i32;
        if self.lower.rem_euclid(s) != 0 || self.upper.rem_euclid(s) != 0 {
            return Err(reject(format!("bounds not aligned to spacing {spacing}")));
        }
        if let Some(closed) = self.closed_at {
            if closed < self.opened_at {
                return Err(reject("closed before opened".into()));
            }
        }
        Ok(())
    }
}

/// Conversion from raw on-chain units into the units prices and token
/// amounts are reported in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderScale {
    /// Multiplier from raw tick price to decimal-adjusted price.
    pub price: f64,
    /// Multiplier from raw liquidity to decimal-adjusted liquidity.
    pub liquidity: f64,
}

impl LadderScale {
    pub const UNIT: Self = Self {
        price: 1.0,
        liquidity: 1.0,
    };

    /// Scale for a pool whose tokens carry `decimals_x` and `decimals_y`.
    pub fn for_decimals(decimals_x: u8, decimals_y: u8) -> Self {
        let (dx, dy) = (decimals_x as i32, decimals_y as i32);
        Self {
            price: 10f64.powi(dx - dy),
            liquidity: 10f64.powf(-(dx + dy) as f64 / 2.0),
        }
    }
}

/// One initializable tick slot and the liquidity active over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderEntry {
    pub lower: i32,
    pub upper: i32,
    pub lower_price: Price,
    pub upper_price: Price,
    pub liquidity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    lower: i32,
    upper: i32,
    liquidity: f64,
}

/// Aggregate liquidity by tick slot around a current price.
///
/// Stored as maximal runs of equal liquidity so that full-range positions
/// on fine spacings stay cheap; [`TickLadder::entries`] expands the runs
/// back into one entry per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TickLadder {
    spacing: u32,
    price_scale: f64,
    segments: Vec<Segment>,
    current_price: Price,
    current_tick: i32,
}

/// Aggregates open positions into a ladder quoted in raw tick prices.
pub fn aggregate_liquidity_by_tick(
    positions: &[LiquidityPosition],
    spacing: u32,
    current_price: Price,
) -> Result<TickLadder, AmmError> {
    TickLadder::build(positions, spacing, current_price, LadderScale::UNIT)
}

impl TickLadder {
    pub fn build(
        positions: &[LiquidityPosition],
        spacing: u32,
        current_price: Price,
        scale: LadderScale,
    ) -> Result<Self, AmmError> {
        check_spacing(spacing)?;
        let mut net: BTreeMap<i32, i128> = BTreeMap::new();
        for pos in positions {
            pos.validate(spacing)?;
            if pos.liquidity == 0 {
                continue;
            }
            let l = i128::try_from(pos.liquidity).map_err(|_| AmmError::InvalidPosition {
                position_id: pos.position_id.clone(),
                reason: "liquidity overflows".into(),
            })?;
            *net.entry(pos.lower).or_default() += l;
            *net.entry(pos.upper).or_default() -= l;
        }
        let mut segments: Vec<Segment> = Vec::new();
        let mut running: i128 = 0;
        let mut prev: Option<i32> = None;
        for (&tick, &delta) in &net {
            if let Some(start) = prev {
                push_segment(&mut segments, start, tick, running as f64 * scale.liquidity);
            }
            running += delta;
            prev = Some(tick);
        }
        debug_assert_eq!(running, 0);
        Ok(Self::assemble(spacing, scale.price, segments, current_price))
    }

    /// Builds a ladder directly from `(lower, upper, liquidity)` ranges, which
    /// must be aligned, ordered and contiguous.
    pub fn from_ranges(
        spacing: u32,
        price_scale: f64,
        ranges: &[(i32, i32, f64)],
        current_price: Price,
    ) -> Result<Self, AmmError> {
        check_spacing(spacing)?;
        let s = spacing as i32;
        let mut segments = Vec::with_capacity(ranges.len());
        let mut last_upper: Option<i32> = None;
        for &(lower, upper, l) in ranges {
            if lower >= upper || lower.rem_euclid(s) != 0 || upper.rem_euclid(s) != 0 {
                return Err(AmmError::InvalidArgument(format!(
                    "range [{lower}, {upper}) is not an aligned slot run"
                )));
            }
            if !(l.is_finite() && l >= 0.0) {
                return Err(AmmError::InvalidArgument(format!("liquidity {l}")));
            }
            if last_upper.is_some_and(|u| u != lower) {
                return Err(AmmError::InvalidArgument("ranges are not contiguous".into()));
            }
            last_upper = Some(upper);
            push_segment(&mut segments, lower, upper, l);
        }
        Ok(Self::assemble(spacing, price_scale, segments, current_price))
    }

    fn assemble(spacing: u32, price_scale: f64, mut segments: Vec<Segment>, current_price: Price) -> Self {
        // trim empty runs at either end so the ladder spans exactly the
        // ticks touched by some liquidity
        while segments.first().is_some_and(|s| s.liquidity == 0.0) {
            segments.remove(0);
        }
        while segments.last().is_some_and(|s| s.liquidity == 0.0) {
            segments.pop();
        }
        Self {
            spacing,
            price_scale,
            segments,
            current_price,
            current_tick: tick_at_price(current_price, price_scale),
        }
    }

    pub fn spacing(&self) -> u32 {
        self.spacing
    }

    pub fn price_scale(&self) -> f64 {
        self.price_scale
    }

    pub fn current_price(&self) -> Price {
        self.current_price
    }

    /// Tick containing the current price (not necessarily initializable).
    pub fn current_tick(&self) -> i32 {
        self.current_tick
    }

    /// Lower bound of the slot containing the current price.
    pub fn active_slot(&self) -> i32 {
        align_down(self.current_tick, self.spacing)
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `[lowest lower, highest upper)` covered by the ladder.
    pub fn tick_range(&self) -> Option<(i32, i32)> {
        Some((self.segments.first()?.lower, self.segments.last()?.upper))
    }

    /// Number of slots between the lowest and highest bound.
    pub fn len(&self) -> usize {
        self.tick_range()
            .map(|(lo, hi)| ((hi - lo) / self.spacing as i32) as usize)
            .unwrap_or(0)
    }

    pub fn price_at(&self, tick: i32) -> Price {
        Price(tick_to_price(tick).get() * self.price_scale)
    }

    fn make_entry(&self, lower: i32, liquidity: f64) -> LadderEntry {
        let upper = lower + self.spacing as i32;
        LadderEntry {
            lower,
            upper,
            lower_price: self.price_at(lower),
            upper_price: self.price_at(upper),
            liquidity,
        }
    }

    /// One entry per slot, ascending, including empty slots inside the range.
    pub fn entries(&self) -> impl Iterator<Item = LadderEntry> + '_ {
        let s = self.spacing as i32;
        self.segments.iter().flat_map(move |seg| {
            (seg.lower..seg.upper)
                .step_by(s as usize)
                .map(move |lower| self.make_entry(lower, seg.liquidity))
        })
    }

    /// Maximal runs of equal liquidity, ascending. Each entry spans one or
    /// more slots.
    pub fn runs(&self) -> impl Iterator<Item = LadderEntry> + '_ {
        self.segments.iter().map(|seg| LadderEntry {
            lower: seg.lower,
            upper: seg.upper,
            lower_price: self.price_at(seg.lower),
            upper_price: self.price_at(seg.upper),
            liquidity: seg.liquidity,
        })
    }

    fn segment_index(&self, tick: i32) -> Option<usize> {
        let idx = self.segments.partition_point(|seg| seg.upper <= tick);
        (idx < self.segments.len() && self.segments[idx].lower <= tick).then_some(idx)
    }

    /// The slot starting at `lower`, if it lies inside the ladder.
    pub fn entry_at(&self, lower: i32) -> Option<LadderEntry> {
        let seg = self.segments[self.segment_index(lower)?];
        Some(self.make_entry(align_down(lower, self.spacing), seg.liquidity))
    }

    /// Non-empty slots walking away from the active slot: upward for
    /// `ascending`, downward otherwise. The active slot itself comes first
    /// when it holds liquidity.
    pub fn walk(&self, ascending: bool) -> LadderWalk<'_> {
        let start = match self.tick_range() {
            None => None,
            Some((lo, hi)) => {
                let active = self.active_slot();
                let s = self.spacing as i32;
                if ascending {
                    (active < hi).then(|| active.max(lo))
                } else {
                    (active >= lo).then(|| active.min(hi - s))
                }
            }
        };
        LadderWalk {
            ladder: self,
            next: start,
            ascending,
        }
    }

    /// Same shape with every slot's liquidity multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for seg in &mut out.segments {
            seg.liquidity *= c;
        }
        out
    }

    /// The ladder seen with X and Y swapped: prices invert, ticks negate,
    /// liquidity is unchanged.
    pub fn inverted(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|seg| Segment {
                lower: -seg.upper,
                upper: -seg.lower,
                liquidity: seg.liquidity,
            })
            .collect();
        Self::assemble(
            self.spacing,
            1.0 / self.price_scale,
            segments,
            self.current_price.inverse(),
        )
    }

    /// Same liquidity, repositioned at another price.
    pub fn with_price(&self, price: Price) -> Self {
        Self {
            current_price: price,
            current_tick: tick_at_price(price, self.price_scale),
            ..self.clone()
        }
    }
}

pub struct LadderWalk<'a> {
    ladder: &'a TickLadder,
    next: Option<i32>,
    ascending: bool,
}

impl Iterator for LadderWalk<'_> {
    type Item = LadderEntry;

    fn next(&mut self) -> Option<LadderEntry> {
        let s = self.ladder.spacing as i32;
        loop {
            let slot = self.next?;
            let Some(idx) = self.ladder.segment_index(slot) else {
                self.next = None;
                return None;
            };
            let seg = self.ladder.segments[idx];
            if seg.liquidity > 0.0 {
                self.next = Some(if self.ascending { slot + s } else { slot - s });
                return Some(self.ladder.make_entry(slot, seg.liquidity));
            }
            // skip the whole empty run
            self.next = Some(if self.ascending { seg.upper } else { seg.lower - s });
        }
    }
}

fn push_segment(segments: &mut Vec<Segment>, lower: i32, upper: i32, liquidity: f64) {
    if lower == upper {
        return;
    }
    if let Some(last) = segments.last_mut() {
        if last.upper == lower && last.liquidity == liquidity {
            last.upper = upper;
            return;
        }
    }
    segments.push(Segment {
        lower,
        upper,
        liquidity,
    });
}

fn check_spacing(spacing: u32) -> Result<(), AmmError> {
    if VALID_SPACINGS.contains(&spacing) {
        Ok(())
    } else {
        Err(AmmError::InvalidSpacing(spacing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_timestamp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn pos(id: &str, lower: i32, upper: i32, l: u128) -> LiquidityPosition {
        LiquidityPosition {
            position_id: id.into(),
            owner: format!("owner-{id}"),
            lower,
            upper,
            liquidity: l,
            opened_at: parse_timestamp("2023-03-01T00:00:00Z").unwrap(),
            closed_at: None,
        }
    }

    fn per_slot(ladder: &TickLadder) -> HashMap<i32, f64> {
        ladder.entries().map(|e| (e.lower, e.liquidity)).collect()
    }

    #[test]
    fn empty_positions_give_empty_ladder() {
        let ladder = aggregate_liquidity_by_tick(&[], 10, Price::new(1.0).unwrap()).unwrap();
        assert!(ladder.is_empty());
        assert_eq!(ladder.entries().count(), 0);
        assert_eq!(ladder.walk(true).count(), 0);
    }

    #[test]
    fn one_position_over_three_slots() {
        let ladder = aggregate_liquidity_by_tick(&[pos("a", -60, 120, 5)], 60, Price::new(1.0).unwrap()).unwrap();
        let entries: Vec<_> = ladder.entries().collect();
        assert_eq!(entries.len(), 3);
        assert!(entries.iter().all(|e| e.liquidity == 5.0));
        assert_eq!(entries[0].lower, -60);
        assert_eq!(entries[2].upper, 120);
        assert_eq!(ladder.len(), 3);
    }

    #[test]
    fn inverted_position_is_rejected_with_id() {
        let err = aggregate_liquidity_by_tick(&[pos("bad-7", 60, 0, 1)], 60, Price::new(1.0).unwrap()).unwrap_err();
        match err {
            AmmError::InvalidPosition { position_id, .. } => assert_eq!(position_id, "bad-7"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(aggregate_liquidity_by_tick(&[pos("odd", 5, 60, 1)], 60, Price::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn random_overlaps_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let spacing = 10;
            let positions: Vec<_> = (0..50)
                .map(|i| {
                    let lo = rng.random_range(-40..40) * 10;
                    let width = rng.random_range(1..15) * 10;
                    pos(&i.to_string(), lo, lo + width, rng.random_range(0..1_000_000_000u128))
                })
                .collect();
            let ladder = aggregate_liquidity_by_tick(&positions, spacing, Price::new(1.0).unwrap()).unwrap();
            // brute force: every (position, slot) pair
            let mut oracle: BTreeMap<i32, u128> = BTreeMap::new();
            for p in &positions {
                let mut t = p.lower;
                while t < p.upper {
                    *oracle.entry(t).or_default() += p.liquidity;
                    t += spacing as i32;
                }
            }
            let got = per_slot(&ladder);
            for (tick, l) in &oracle {
                if *l > 0 || got.contains_key(tick) {
                    assert_eq!(got.get(tick).copied().unwrap_or(0.0), *l as f64, "tick {tick}");
                }
            }
            for (tick, l) in &got {
                assert_eq!(oracle.get(tick).copied().unwrap_or(0) as f64, *l);
            }
        }
    }

    #[test]
    fn aggregation_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mk = |rng: &mut ChaCha8Rng, tag: &str| -> Vec<LiquidityPosition> {
            (0..30)
                .map(|i| {
                    let lo = rng.random_range(-20..20);
                    pos(
                        &format!("{tag}{i}"),
                        lo,
                        lo + rng.random_range(1..8),
                        rng.random_range(1..1000),
                    )
                })
                .collect()
        };
        let (a, b) = (mk(&mut rng, "a"), mk(&mut rng, "b"));
        let both: Vec<_> = a.iter().chain(b.iter()).cloned().collect();
        let p = Price::new(1.0).unwrap();
        let la = per_slot(&aggregate_liquidity_by_tick(&a, 1, p).unwrap());
        let lb = per_slot(&aggregate_liquidity_by_tick(&b, 1, p).unwrap());
        let lab = per_slot(&aggregate_liquidity_by_tick(&both, 1, p).unwrap());
        for (tick, l) in &lab {
            let sum = la.get(tick).unwrap_or(&0.0) + lb.get(tick).unwrap_or(&0.0);
            assert_eq!(*l, sum);
        }
    }

    #[test]
    fn walk_skips_empty_runs() {
        let ladder = TickLadder::from_ranges(
            10,
            1.0,
            &[(-30, -10, 4.0), (-10, 20, 0.0), (20, 40, 2.0)],
            Price::new(1.0).unwrap(),
        )
        .unwrap();
        let up: Vec<_> = ladder.walk(true).map(|e| e.lower).collect();
        assert_eq!(up, vec![20, 30]);
        let down: Vec<_> = ladder.walk(false).map(|e| e.lower).collect();
        assert_eq!(down, vec![-20, -30]);
    }

    #[test]
    fn active_slot_contains_price() {
        let ladder = aggregate_liquidity_by_tick(
            &[pos("a", -600, 600, 10)],
            60,
            Price::new(1.0001f64.powf(-75.5)).unwrap(),
        )
        .unwrap();
        assert_eq!(ladder.current_tick(), -76);
        assert_eq!(ladder.active_slot(), -120);
        let e = ladder.entry_at(ladder.active_slot()).unwrap();
        assert!(e.lower_price <= ladder.current_price() && ladder.current_price() < e.upper_price);
    }

    #[test]
    fn inversion_mirrors_slots() {
        let ladder = TickLadder::from_ranges(
            10,
            1.0,
            &[(0, 20, 3.0), (20, 50, 7.0)],
            Price::new(1.0001f64.powf(25.5)).unwrap(),
        )
        .unwrap();
        let inv = ladder.inverted();
        assert_eq!(inv.tick_range(), Some((-50, 0)));
        assert_eq!(inv.entry_at(-50).unwrap().liquidity, 7.0);
        assert_eq!(inv.entry_at(-10).unwrap().liquidity, 3.0);
        assert_eq!(inv.current_tick(), -26);
        let back = inv.inverted();
        assert_eq!(per_slot(&back), per_slot(&ladder));
    }

    #[test]
    fn decimal_scale_round_trips_amounts() {
        let s = LadderScale::for_decimals(6, 18);
        assert!((s.price - 1e-12).abs() < 1e-27);
        assert!((s.liquidity - 1e-12).abs() < 1e-27);
    }
}
