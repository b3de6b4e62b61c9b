use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::panel::{Group, PanelObservation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DidError {
    #[error("design is rank deficient: no {} observations {}", group.as_str(), if *post { "after treatment" } else { "before treatment" })]
    EmptyCell { group: Group, post: bool },
    #[error("undefined: {0}")]
    Undefined(&'static str),
    #[error("configuration: {0}")]
    Config(String),
    #[error("normal equations are singular")]
    Singular,
}

/// Standard-error estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeKind {
    #[default]
    Classical,
    /// White's heteroskedasticity-robust estimator with the `n / (n − k)`
    /// small-sample factor.
    Hc1,
    /// Cluster-robust by pool.
    ClusteredByPool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub estimate: f64,
    /// `None` when there are no residual degrees of freedom.
    pub std_error: Option<f64>,
    pub p_value: Option<f64>,
}

impl Coefficient {
    pub fn t_stat(&self) -> Option<f64> {
        self.std_error.filter(|&se| se > 0.0).map(|se| self.estimate / se)
    }

    pub fn stars(&self) -> &'static str {
        self.p_value.map_or("", stars)
    }
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Fit of `y = β₀ + β₁·post + β₂·treated + β₃·post·treated + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidEstimate {
    pub beta0: Coefficient,
    /// Post-period shift common to both groups.
    pub beta1: Coefficient,
    /// Pre-period gap between treatment and control.
    pub beta2: Coefficient,
    /// Treatment effect.
    pub beta3: Coefficient,
    pub n_obs: usize,
    pub se_kind: SeKind,
    /// `β₃ / β₂`, undefined when `β₂ = 0`.
    pub relative_effect: Option<f64>,
    /// Observation counts indexed `[treated][post]`.
    pub cell_counts: [[usize; 2]; 2],
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl DidEstimate {
    pub fn coefficients(&self) -> [(&'static str, &Coefficient); 4] {
        [
            ("intercept", &self.beta0),
            ("post", &self.beta1),
            ("group", &self.beta2),
            ("post_x_group", &self.beta3),
        ]
    }
}

pub fn relative_effect(beta3: f64, beta2: f64) -> Result<f64, DidError> {
    if beta2 == 0.0 {
        return Err(DidError::Undefined("relative effect with zero group coefficient"));
    }
    Ok(beta3 / beta2)
}

/// Range of `β₃ / β₂` when each coefficient is only known to within
/// `± half_width` (e.g. `5e-5` for values printed to four decimals).
pub fn relative_effect_bounds(beta3: f64, beta2: f64, half_width: f64) -> Result<(f64, f64), DidError> {
    let (b2_lo, b2_hi) = (beta2 - half_width, beta2 + half_width);
    if b2_lo <= 0.0 && b2_hi >= 0.0 {
        return Err(DidError::Undefined("group coefficient interval contains zero"));
    }
    let corners = [
        (beta3 - half_width) / b2_lo,
        (beta3 - half_width) / b2_hi,
        (beta3 + half_width) / b2_lo,
        (beta3 + half_width) / b2_hi,
    ];
    let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Ordinary least squares on the saturated 2×2 design.
pub fn did_estimate(observations: &[PanelObservation], se_kind: SeKind) -> Result<DidEstimate, DidError> {
    let mut cell_counts = [[0usize; 2]; 2];
    for o in observations {
        cell_counts[o.group.indicator() as usize][o.post as usize] += 1;
    }
    for (g, group) in [Group::Control, Group::Treatment].into_iter().enumerate() {
        for post in [false, true] {
            if cell_counts[g][post as usize] == 0 {
                return Err(DidError::EmptyCell { group, post });
            }
        }
    }

    let n = observations.len();
    let x = DMatrix::from_fn(n, 4, |i, j| {
        let o = &observations[i];
        let post = if o.post { 1.0 } else { 0.0 };
        let treated = o.group.indicator();
        match j {
            0 => 1.0,
            1 => post,
            2 => treated,
            _ => post * treated,
        }
    });
    let y = DVector::from_iterator(n, observations.iter().map(|o| o.outcome));

    let xtx: Matrix4<f64> = (x.transpose() * &x).fixed_view::<4, 4>(0, 0).into_owned();
    let xtx_inv = xtx.try_inverse().ok_or(DidError::Singular)?;
    let (q, r) = x.clone().qr().unpack();
    let beta = r
        .solve_upper_triangular(&(q.transpose() * &y))
        .ok_or(DidError::Singular)?;

    let residuals: Vec<f64> = (&y - &x * &beta).iter().copied().collect();
    let df_resid = n - 4;

    let (cov, df_t) = match se_kind {
        _ if df_resid == 0 => (None, 0),
        SeKind::Classical => {
            let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / df_resid as f64;
            (Some(xtx_inv * sigma2), df_resid)
        }
        SeKind::Hc1 => {
            let mut meat = Matrix4::zeros();
            for (i, e) in residuals.iter().enumerate() {
                let xi = row(&x, i);
                meat += xi * xi.transpose() * (e * e);
            }
            let c = n as f64 / df_resid as f64;
            (Some(xtx_inv * meat * xtx_inv * c), df_resid)
        }
        SeKind::ClusteredByPool => {
            let mut scores: BTreeMap<&str, Vector4<f64>> = BTreeMap::new();
            for (i, e) in residuals.iter().enumerate() {
                *scores
                    .entry(observations[i].pool_id.as_str())
                    .or_insert_with(Vector4::zeros) += row(&x, i) * *e;
            }
            let g = scores.len();
            if g < 2 {
                (None, 0)
            } else {
                let meat: Matrix4<f64> = scores.values().map(|u| u * u.transpose()).sum();
                let c = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / df_resid as f64);
                (Some(xtx_inv * meat * xtx_inv * c), g - 1)
            }
        }
    };

    let coef = |j: usize| {
        let estimate = beta[j];
        let std_error = cov.map(|c| c[(j, j)].max(0.0).sqrt());
        let p_value = std_error
            .filter(|&se| se > 0.0)
            .and_then(|se| p_two_sided(estimate / se, df_t as f64));
        Coefficient {
            estimate,
            std_error,
            p_value,
        }
    };

    Ok(DidEstimate {
        beta0: coef(0),
        beta1: coef(1),
        beta2: coef(2),
        beta3: coef(3),
        n_obs: n,
        se_kind,
        relative_effect: relative_effect(beta[3], beta[2]).ok(),
        cell_counts,
        residuals,
    })
}

fn row(x: &DMatrix<f64>, i: usize) -> Vector4<f64> {
    Vector4::new(x[(i, 0)], x[(i, 1)], x[(i, 2)], x[(i, 3)])
}

fn p_two_sided(t: f64, df: f64) -> Option<f64> {
    if !t.is_finite() || df < 1.0 {
        return None;
    }
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

/// One row per coefficient and outcome.
pub fn write_estimates_csv<W: Write>(writer: W, rows: &[(&str, &DidEstimate)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "outcome",
        "coefficient",
        "estimate",
        "std_error",
        "p_value",
        "stars",
        "n_obs",
        "relative_effect",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for (outcome, est) in rows {
        for (name, c) in est.coefficients() {
            w.write_record([
                outcome,
                name,
                &c.estimate.to_string(),
                &opt(c.std_error),
                &opt(c.p_value),
                c.stars(),
                &est.n_obs.to_string(),
                &opt(est.relative_effect),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_timestamp;

    fn obs(pool: &str, group: Group, post: bool, y: f64) -> PanelObservation {
        PanelObservation {
            pool_id: pool.into(),
            group,
            timestamp: parse_timestamp("2023-03-01T00:00:00Z").unwrap(),
            post,
            outcome: y,
        }
    }

    fn cell_panel(means: [f64; 4], sizes: [usize; 4]) -> Vec<PanelObservation> {
        let cells = [
            (Group::Control, false),
            (Group::Control, true),
            (Group::Treatment, false),
            (Group::Treatment, true),
        ];
        let mut out = Vec::new();
        for ((g, post), (m, k)) in cells.into_iter().zip(means.into_iter().zip(sizes)) {
            for i in 0..k {
                // symmetric noise keeps the cell mean exact
                let noise = if k % 2 == 0 {
                    if i % 2 == 0 {
                        0.5
                    } else {
                        -0.5
                    }
                } else {
                    0.0
                };
                out.push(obs(if g == Group::Treatment { "t" } else { "c" }, g, post, m + noise));
            }
        }
        out
    }

    #[test]
    fn cell_means_recover_coefficients() {
        let est = did_estimate(&cell_panel([1.0, 2.0, 3.0, 7.0], [4, 6, 2, 8]), SeKind::Classical).unwrap();
        for (got, want) in [
            (est.beta0.estimate, 1.0),
            (est.beta1.estimate, 1.0),
            (est.beta2.estimate, 2.0),
            (est.beta3.estimate, 3.0),
        ] {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((est.relative_effect.unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(est.cell_counts, [[4, 6], [2, 8]]);
    }

    #[test]
    fn four_observations_have_no_standard_errors() {
        let est = did_estimate(&cell_panel([1.0, 2.0, 3.0, 7.0], [1, 1, 1, 1]), SeKind::Classical).unwrap();
        assert_eq!(est.n_obs, 4);
        assert!(est.beta3.std_error.is_none());
        assert!(est.beta3.p_value.is_none());
        assert_eq!(est.beta3.stars(), "");
    }

    #[test]
    fn classical_se_matches_closed_form() {
        // var(β₃) = σ² Σ 1/n_cell for the saturated design
        let sizes = [4, 6, 2, 8];
        let est = did_estimate(&cell_panel([1.0, 2.0, 3.0, 7.0], sizes), SeKind::Classical).unwrap();
        let n: usize = sizes.iter().sum();
        let sigma2 = 0.25 * n as f64 / (n - 4) as f64;
        let want = (sigma2 * sizes.iter().map(|&k| 1.0 / k as f64).sum::<f64>()).sqrt();
        assert!((est.beta3.std_error.unwrap() - want).abs() < 1e-12);
        let b0 = (sigma2 / 4.0).sqrt();
        assert!((est.beta0.std_error.unwrap() - b0).abs() < 1e-12);
    }

    #[test]
    fn empty_cell_is_named() {
        let panel = cell_panel([1.0, 2.0, 3.0, 7.0], [3, 3, 3, 0]);
        assert_eq!(
            did_estimate(&panel, SeKind::Classical).unwrap_err(),
            DidError::EmptyCell {
                group: Group::Treatment,
                post: true
            }
        );
    }

    #[test]
    fn robust_variants_produce_error_bars() {
        let panel = cell_panel([1.0, 2.0, 3.0, 7.0], [4, 6, 2, 8]);
        let hc1 = did_estimate(&panel, SeKind::Hc1).unwrap();
        assert!(hc1.beta3.std_error.unwrap() > 0.0);
        // two clusters leave one degree of freedom
        let cl = did_estimate(&panel, SeKind::ClusteredByPool).unwrap();
        assert!(cl.beta3.std_error.is_some());
        assert_eq!(cl.beta3.estimate, hc1.beta3.estimate);
    }

    #[test]
    fn relative_effect_cases() {
        assert_eq!(relative_effect(0.0, 2.5).unwrap(), 0.0);
        assert_eq!(relative_effect(0.3, 0.3).unwrap(), 1.0);
        assert!(relative_effect(1.0, 0.0).is_err());
        let (lo, hi) = relative_effect_bounds(0.0166, 0.0035, 5e-5).unwrap();
        assert!(lo < 0.0166 / 0.0035 && 0.0166 / 0.0035 < hi);
        assert!(relative_effect_bounds(1.0, 0.00001, 5e-5).is_err());
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0009), "***");
        assert_eq!(stars(0.001), "**");
        assert_eq!(stars(0.049), "*");
        assert_eq!(stars(0.05), "");
    }
}
