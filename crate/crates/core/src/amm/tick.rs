use std::fmt;

use serde::{Deserialize, Serialize};

use super::AmmError;

/// Price ratio between adjacent ticks.
pub const TICK_BASE: f64 = 1.0001;

/// Smallest tick index representable by a V3-style pool.
pub const MIN_TICK: i32 = -887_272;
/// Largest tick index representable by a V3-style pool.
pub const MAX_TICK: i32 = 887_272;

/// Spacings a pool may use; each fee tier maps to exactly one.
pub const VALID_SPACINGS: [u32; 4] = [1, 10, 60, 200];

/// A positive price quoted as token Y per token X.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Price(pub(crate) f64);

impl Price {
    pub fn new(value: f64) -> Result<Self, AmmError> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(AmmError::InvalidPrice(value))
        }
    }

    /// Builds a price from its square root. The round trip through `sqrt`
    /// returns the same root bit-for-bit.
    pub fn from_sqrt(sqrt_price: f64) -> Result<Self, AmmError> {
        Self::new(sqrt_price * sqrt_price)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }

    /// The reciprocal price, i.e. the same quote with X and Y swapped.
    pub fn inverse(self) -> Self {
        Self(1.0 / self.0)
    }
}

impl TryFrom<f64> for Price {
    type Error = AmmError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Price> for f64 {
    fn from(p: Price) -> f64 {
        p.0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A tick number together with the spacing of the pool it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TickIndex {
    pub index: i32,
    pub spacing: u32,
}

impl TickIndex {
    pub fn new(index: i32, spacing: u32) -> Result<Self, AmmError> {
        if !VALID_SPACINGS.contains(&spacing) {
            return Err(AmmError::InvalidSpacing(spacing));
        }
        if !(MIN_TICK..=MAX_TICK).contains(&index) {
            return Err(AmmError::TickOutOfBounds(index));
        }
        Ok(Self { index, spacing })
    }

    /// Whether the tick may serve as a range bound.
    pub fn is_aligned(&self) -> bool {
        self.index.rem_euclid(self.spacing as i32) == 0
    }

    /// The initializable tick at or below this one.
    pub fn align_down(&self) -> Self {
        Self {
            index: align_down(self.index, self.spacing),
            spacing: self.spacing,
        }
    }

    pub fn price(&self) -> Price {
        tick_to_price(self.index)
    }
}

/// Fee tiers offered by the pools under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum FeeTier {
    /// 0.01%
    OneBp,
    /// 0.05%
    FiveBps,
    /// 0.30%
    ThirtyBps,
    /// 1.00%
    HundredBps,
}

impl FeeTier {
    pub fn from_bps(bps: u32) -> Result<Self, AmmError> {
        match bps {
            1 => Ok(Self::OneBp),
            5 => Ok(Self::FiveBps),
            30 => Ok(Self::ThirtyBps),
            100 => Ok(Self::HundredBps),
            other => Err(AmmError::InvalidFeeTier(other)),
        }
    }

    pub fn bps(self) -> u32 {
        match self {
            Self::OneBp => 1,
            Self::FiveBps => 5,
            Self::ThirtyBps => 30,
            Self::HundredBps => 100,
        }
    }

    pub fn tick_spacing(self) -> u32 {
        match self {
            Self::OneBp => 1,
            Self::FiveBps => 10,
            Self::ThirtyBps => 60,
            Self::HundredBps => 200,
        }
    }
}

impl TryFrom<u32> for FeeTier {
    type Error = AmmError;

    fn try_from(bps: u32) -> Result<Self, Self::Error> {
        Self::from_bps(bps)
    }
}

impl From<FeeTier> for u32 {
    fn from(tier: FeeTier) -> u32 {
        tier.bps()
    }
}

/// Raw price at a tick boundary: `1.0001^index`.
pub fn tick_to_price(index: i32) -> Price {
    Price(TICK_BASE.powi(index))
}

/// The tick `t` with `1.0001^t <= value / scale < 1.0001^(t+1)`.
///
/// `scale` converts raw tick prices into the units `value` is quoted in.
pub fn tick_at_price(value: Price, scale: f64) -> i32 {
    let raw = value.get() / scale;
    let mut tick = (raw.ln() / TICK_BASE.ln()).floor() as i64;
    tick = tick.clamp(MIN_TICK as i64, MAX_TICK as i64);
    let mut t = tick as i32;
    // The logarithm can land one tick off near a boundary.
    while t < MAX_TICK && tick_to_price(t + 1).get() * scale <= value.get() {
        t += 1;
    }
    while t > MIN_TICK && tick_to_price(t).get() * scale > value.get() {
        t -= 1;
    }
    t
}

#[inline]
pub fn align_down(index: i32, spacing: u32) -> i32 {
    let s = spacing as i32;
    index.div_euclid(s) * s
}
