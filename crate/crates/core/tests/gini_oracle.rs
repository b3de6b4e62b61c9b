use poolscope_core::concentration::{gini, ConcentrationError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

/// Mean absolute pairwise difference over twice the mean.
fn pairwise(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut total = 0.0;
    for a in values {
        for b in values {
            total += (a - b).abs();
        }
    }
    total / (2.0 * n * n * mean)
}

#[test]
fn sorted_rank_form_equals_pairwise_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let heavy = LogNormal::new(0.0, 2.0).unwrap();
    for case in 0..100 {
        let n = rng.random_range(1..=500);
        let values: Vec<f64> = (0..n)
            .map(|_| match case % 3 {
                0 => rng.random_range(0.0..1.0),
                1 => heavy.sample(&mut rng),
                _ => rng.random_range(0..5) as f64,
            })
            .collect();
        if values.iter().all(|&v| v == 0.0) {
            continue;
        }
        let g = gini(&values).unwrap();
        let oracle = pairwise(&values);
        assert!((g - oracle).abs() <= 1e-12, "case {case}: {g} vs {oracle}");
        assert!((0.0..=1.0 - 1.0 / n as f64 + 1e-12).contains(&g));
    }
}

#[test]
fn equality_cases_are_exact() {
    assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 0.0);
    assert_eq!(gini(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.75);
    assert_eq!(gini(&[0.0, 0.0, 0.0, 3.0]).unwrap(), 0.75);
    assert_eq!(gini(&[7.0]).unwrap(), 0.0);
}

#[test]
fn degenerate_inputs_are_errors() {
    assert!(matches!(gini(&[]), Err(ConcentrationError::Undefined(_))));
    assert!(matches!(gini(&[0.0, 0.0]), Err(ConcentrationError::Undefined(_))));
    assert!(matches!(
        gini(&[1.0, -1.0]),
        Err(ConcentrationError::InvalidValue { index: 1, .. })
    ));
    assert!(matches!(
        gini(&[1.0, f64::NAN]),
        Err(ConcentrationError::InvalidValue { .. })
    ));
}

#[test]
fn scale_and_permutation_invariant() {
    let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let g = gini(&v).unwrap();
    let scaled: Vec<f64> = v.iter().map(|x| x * 1e6).collect();
    let mut rev = v;
    rev.reverse();
    assert!((gini(&scaled).unwrap() - g).abs() < 1e-15);
    assert_eq!(gini(&rev).unwrap(), g);
}
