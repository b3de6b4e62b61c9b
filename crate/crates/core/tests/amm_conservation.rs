use poolscope_core::amm::{tick_to_price, LadderEntry, LadderScale};
use poolscope_core::{execute_order_over_levels, swap_in_tick, LiquidityPosition, Price, Side, SwapFill, TickLadder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Virtual reserves derived from the fill's own start price, then moved by
/// the traded amounts.
fn post_fill_product(f: &SwapFill) -> f64 {
    let l = f.liquidity;
    let sp = f.start_sqrt_price;
    let (xv, yv) = (l / sp, l * sp);
    match f.side {
        Side::Buy => (xv - f.delta_x) * (yv + f.delta_y),
        Side::Sell => (xv + f.delta_x) * (yv - f.delta_y),
    }
}

fn random_ladder(rng: &mut ChaCha8Rng) -> TickLadder {
    let spacing = [1u32, 10, 60, 200][rng.random_range(0..4)];
    let s = spacing as i32;
    let center = rng.random_range(-2000..2000) * s;
    let t0 = poolscope_core::time::parse_timestamp("2023-03-01T00:00Z").unwrap();
    let positions: Vec<LiquidityPosition> = (0..rng.random_range(1..12))
        .map(|i| LiquidityPosition {
            position_id: i.to_string(),
            owner: format!("o{}", i % 3),
            lower: center + rng.random_range(-30..0) * s,
            upper: center + rng.random_range(1..30) * s,
            liquidity: 10f64.powf(rng.random_range(0.0..8.0)) as u128 + 1,
            opened_at: t0,
            closed_at: None,
        })
        .collect();
    let p = tick_to_price(center).get() * 1.0001f64.powf(rng.random_range(0.01..0.99) * spacing as f64);
    TickLadder::build(&positions, spacing, Price::new(p).unwrap(), LadderScale::UNIT).unwrap()
}

#[test]
fn ten_thousand_fills_conserve_the_virtual_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for case in 0..10_000 {
        let ladder = random_ladder(&mut rng);
        let side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
        let k = rng.random_range(1..25);
        let exec = execute_order_over_levels(&ladder, side, k).unwrap();
        for f in &exec.fills {
            let l2 = f.liquidity * f.liquidity;
            let e = rel(post_fill_product(f), l2);
            assert!(e <= 1e-12, "case {case}: relative error {e}");
            checked += 1;
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn partial_fill_then_remainder_equals_full_fill() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..10_000 {
        let lower = rng.random_range(-5000..5000);
        let width = [1, 10, 60, 200][rng.random_range(0..4)];
        let entry = LadderEntry {
            lower,
            upper: lower + width,
            lower_price: tick_to_price(lower),
            upper_price: tick_to_price(lower + width),
            liquidity: 10f64.powf(rng.random_range(0.0..9.0)),
        };
        let (pa, pb) = (entry.lower_price.get(), entry.upper_price.get());
        let from = Price::new(pa + (pb - pa) * rng.random_range(0.0..1.0)).unwrap();
        let side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
        let full = swap_in_tick(&entry, from, side, None).unwrap();
        let q = full.delta_x * rng.random_range(0.0..1.0);
        let first = swap_in_tick(&entry, from, side, Some(q)).unwrap();
        let rest = first.continue_in_tick(None).unwrap();
        let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE);
        assert!(tol(first.delta_x + rest.delta_x, full.delta_x), "case {case} dx");
        assert!(tol(first.delta_y + rest.delta_y, full.delta_y), "case {case} dy");
        assert!(tol(rest.end_sqrt_price, full.end_sqrt_price), "case {case} end price");
        assert!(rel(post_fill_product(&first), entry.liquidity.powi(2)) <= 1e-12);
    }
}
