use super::{AmmError, Price};

/// Real token amounts held by liquidity `l` over `[p_a, p_b]` when the pool
/// trades at `p`.
///
/// Below the range everything sits in X, above it everything sits in Y, and
/// inside it the position holds both.
pub fn token_amounts_in_range(l: f64, p_a: Price, p_b: Price, p: Price) -> Result<(f64, f64), AmmError> {
    check_range(p_a, p_b)?;
    if !(l.is_finite() && l >= 0.0) {
        return Err(AmmError::InvalidArgument(format!("liquidity {l}")));
    }
    if l == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (sa, sb) = (p_a.sqrt(), p_b.sqrt());
    let amounts = if p < p_a {
        (l * (sb - sa) / (sa * sb), 0.0)
    } else if p >= p_b {
        (0.0, l * (sb - sa))
    } else {
        let sp = p.sqrt();
        (l * (sb - sp) / (sp * sb), l * (sp - sa))
    };
    Ok(amounts)
}

/// Virtual reserves of a range: real holdings plus the phantom amounts that
/// make the range behave like a full constant-product curve. Their product
/// is `l²`.
pub fn virtual_reserves(l: f64, p_a: Price, p_b: Price, x_real: f64, y_real: f64) -> Result<(f64, f64), AmmError> {
    check_range(p_a, p_b)?;
    for (name, v) in [("liquidity", l), ("x_real", x_real), ("y_real", y_real)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(AmmError::InvalidArgument(format!("{name} {v}")));
        }
    }
    Ok((x_real + l / p_b.sqrt(), y_real + l * p_a.sqrt()))
}

fn check_range(p_a: Price, p_b: Price) -> Result<(), AmmError> {
    if p_a >= p_b {
        return Err(AmmError::InvalidRange {
            lower: p_a.get(),
            upper: p_b.get(),
        });
    }
    Ok(())
}
