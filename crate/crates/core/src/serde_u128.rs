//! Raw liquidity travels as a decimal string; JSON numbers cannot hold it.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(u64),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) => Ok(v as u128),
        Raw::Text(s) => parse_liquidity(&s).map_err(de::Error::custom),
    }
}

/// Parses an unsigned decimal integer, tolerating a trailing all-zero
/// fractional part (`"1500.0"`).
pub fn parse_liquidity(s: &str) -> Result<u128, String> {
    let s = s.trim();
    let int_part = match s.split_once('.') {
        Some((int, frac)) if frac.chars().all(|c| c == '0') => int,
        Some(_) => return Err(format!("liquidity {s:?} is not an integer")),
        None => s,
    };
    int_part.parse::<u128>().map_err(|e| format!("liquidity {s:?}: {e}"))
}
