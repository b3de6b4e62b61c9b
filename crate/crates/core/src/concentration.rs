//! Provider concentration and USD valuation of a pool snapshot.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::amm::{token_amounts_in_range, AmmError, Price};
use crate::history::PoolSnapshot;
use crate::time::Timestamp;

#[derive(Debug, thiserror::Error)]
pub enum ConcentrationError {
    #[error("metric undefined: {0}")]
    Undefined(&'static str),
    #[error("value {value} at index {index} is negative or not finite")]
    InvalidValue { index: usize, value: f64 },
    #[error("no USD quote for token {token}")]
    MissingQuote { token: String },
    #[error("quote file line {line}: {message}")]
    InvalidQuote { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Amm(#[from] AmmError),
}

/// One owner's stake in a pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderShare {
    pub owner: String,
    pub liquidity: f64,
}

/// What a provider's stake is measured in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShareBasis {
    /// Raw liquidity summed over the owner's open positions.
    #[default]
    Liquidity,
    /// USD value of the tokens the owner's positions hold.
    Usd,
}

/// Per-owner sum of raw liquidity over open positions, sorted by owner.
pub fn provider_liquidity_shares(snapshot: &PoolSnapshot) -> Vec<ProviderShare> {
    let mut by_owner: BTreeMap<&str, u128> = BTreeMap::new();
    for p in snapshot.positions.iter().filter(|p| p.liquidity > 0) {
        *by_owner.entry(p.owner.as_str()).or_default() += p.liquidity;
    }
    by_owner
        .into_iter()
        .map(|(owner, l)| ProviderShare {
            owner: owner.to_string(),
            liquidity: l as f64,
        })
        .collect()
}

/// Per-owner USD value of token holdings at the snapshot price.
pub fn provider_usd_shares(
    snapshot: &PoolSnapshot,
    quotes: &QuoteSet,
) -> Result<Vec<ProviderShare>, ConcentrationError> {
    let (px, py) = pool_quotes(snapshot, quotes)?;
    let scale = snapshot.meta.scale();
    let mut by_owner: BTreeMap<&str, f64> = BTreeMap::new();
    for p in snapshot.positions.iter().filter(|p| p.liquidity > 0) {
        let (x, y) = position_amounts(snapshot, p.lower, p.upper, p.liquidity as f64 * scale.liquidity)?;
        *by_owner.entry(p.owner.as_str()).or_default() += x * px + y * py;
    }
    Ok(by_owner
        .into_iter()
        .map(|(owner, v)| ProviderShare {
            owner: owner.to_string(),
            liquidity: v,
        })
        .collect())
}

pub fn provider_shares(
    snapshot: &PoolSnapshot,
    basis: ShareBasis,
    quotes: &QuoteSet,
) -> Result<Vec<ProviderShare>, ConcentrationError> {
    match basis {
        ShareBasis::Liquidity => Ok(provider_liquidity_shares(snapshot)),
        ShareBasis::Usd => provider_usd_shares(snapshot, quotes),
    }
}

/// Distinct owners holding at least one position with non-zero liquidity.
pub fn provider_count(snapshot: &PoolSnapshot) -> usize {
    let owners: std::collections::BTreeSet<&str> = snapshot
        .positions
        .iter()
        .filter(|p| p.liquidity > 0)
        .map(|p| p.owner.as_str())
        .collect();
    owners.len()
}

/// Population Gini coefficient, `Σᵢ Σⱼ |xᵢ − xⱼ| / (2 n² x̄)`.
///
/// Evaluated through the sorted-rank identity
/// `G = Σᵢ (2i − n − 1) x₍ᵢ₎ / (n Σx)` in O(n log n).
pub fn gini(values: &[f64]) -> Result<f64, ConcentrationError> {
    if values.is_empty() {
        return Err(ConcentrationError::Undefined("gini of an empty set"));
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(ConcentrationError::InvalidValue { index, value });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Err(ConcentrationError::Undefined("gini of all-zero values"));
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * total)).max(0.0))
}

/// USD price of one token as of some instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvlQuote {
    pub token: String,
    pub usd_price: f64,
    #[serde(rename = "timestamp", with = "crate::time::iso")]
    pub as_of: Timestamp,
}

/// Quotes in force at one instant, keyed by token symbol.
pub type QuoteSet = BTreeMap<String, TvlQuote>;

/// Time series of USD quotes per token.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuoteBook {
    by_token: BTreeMap<String, Vec<TvlQuote>>,
}

impl QuoteBook {
    pub fn new(quotes: Vec<TvlQuote>) -> Result<Self, ConcentrationError> {
        let mut by_token: BTreeMap<String, Vec<TvlQuote>> = BTreeMap::new();
        for (i, q) in quotes.into_iter().enumerate() {
            if !(q.usd_price.is_finite() && q.usd_price > 0.0) {
                return Err(ConcentrationError::InvalidQuote {
                    line: i + 2,
                    message: format!("usd_price {} for {}", q.usd_price, q.token),
                });
            }
            by_token.entry(q.token.clone()).or_default().push(q);
        }
        for (token, series) in &mut by_token {
            series.sort_by_key(|q| q.as_of);
            if let Some(w) = series.windows(2).find(|w| w[0].as_of == w[1].as_of) {
                return Err(ConcentrationError::InvalidQuote {
                    line: 0,
                    message: format!("two quotes for {token} at {}", w[0].as_of),
                });
            }
        }
        Ok(Self { by_token })
    }

    /// Reads `token,usd_price,timestamp` CSV with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, ConcentrationError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut quotes = Vec::new();
        for (i, row) in rdr.deserialize::<TvlQuote>().enumerate() {
            quotes.push(row.map_err(|e| ConcentrationError::InvalidQuote {
                line: i + 2,
                message: e.to_string(),
            })?);
        }
        Self::new(quotes)
    }

    pub fn load(path: &Path) -> Result<Self, ConcentrationError> {
        let file = std::fs::File::open(path).map_err(|source| ConcentrationError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv(file)
    }

    pub fn quotes(&self) -> impl Iterator<Item = &TvlQuote> {
        self.by_token.values().flatten()
    }

    /// Latest quote per token taken at or before `t`. Tokens with no such
    /// quote are absent.
    pub fn at(&self, t: Timestamp) -> QuoteSet {
        self.by_token
            .iter()
            .filter_map(|(token, series)| {
                let idx = series.partition_point(|q| q.as_of <= t);
                idx.checked_sub(1).map(|i| (token.clone(), series[i].clone()))
            })
            .collect()
    }
}

fn pool_quotes(snapshot: &PoolSnapshot, quotes: &QuoteSet) -> Result<(f64, f64), ConcentrationError> {
    let get = |symbol: &str| {
        quotes
            .get(symbol)
            .map(|q| q.usd_price)
            .ok_or_else(|| ConcentrationError::MissingQuote {
                token: symbol.to_string(),
            })
    };
    Ok((get(&snapshot.meta.token_x.symbol)?, get(&snapshot.meta.token_y.symbol)?))
}

fn position_amounts(
    snapshot: &PoolSnapshot,
    lower: i32,
    upper: i32,
    liquidity: f64,
) -> Result<(f64, f64), ConcentrationError> {
    let scale = snapshot.meta.scale().price;
    let p_a = Price::new(crate::amm::tick_to_price(lower).get() * scale)?;
    let p_b = Price::new(crate::amm::tick_to_price(upper).get() * scale)?;
    Ok(token_amounts_in_range(liquidity, p_a, p_b, snapshot.current_price)?)
}

/// USD value of all tokens held by the snapshot's open positions.
///
/// Each run of constant liquidity in the ladder is valued at the snapshot
/// price and the two token amounts are priced with `quotes`.
pub fn tvl_usd(snapshot: &PoolSnapshot, quotes: &QuoteSet) -> Result<f64, ConcentrationError> {
    let (px, py) = pool_quotes(snapshot, quotes)?;
    let ladder = snapshot.ladder()?;
    let p = snapshot.current_price;
    let mut total = 0.0;
    for run in ladder.runs().filter(|r| r.liquidity > 0.0) {
        let (x, y) = token_amounts_in_range(run.liquidity, run.lower_price, run.upper_price, p)?;
        total += x * px + y * py;
    }
    Ok(total)
}
