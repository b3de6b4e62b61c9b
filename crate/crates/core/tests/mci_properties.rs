use poolscope_core::amm::{tick_to_price, LadderScale};
use poolscope_core::mci::{lob_mci, mci_report_for_ladder, mci_side, LobLevel, MCI_SCALE};
use poolscope_core::time::parse_timestamp;
use poolscope_core::{execute_order_over_levels, LiquidityPosition, Price, Side, SwapFill, TickLadder, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t0() -> Timestamp {
    parse_timestamp("2023-03-01T00:00Z").unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn position(id: usize, lower: i32, upper: i32, liquidity: u128) -> LiquidityPosition {
    LiquidityPosition {
        position_id: id.to_string(),
        owner: format!("o{id}"),
        lower,
        upper,
        liquidity,
        opened_at: t0(),
        closed_at: None,
    }
}

fn random_ladder(rng: &mut ChaCha8Rng) -> TickLadder {
    let spacing = [1u32, 10, 60][rng.random_range(0..3)];
    let s = spacing as i32;
    let positions: Vec<_> = (0..rng.random_range(1..15))
        .map(|i| {
            position(
                i,
                rng.random_range(-40..0) * s,
                rng.random_range(1..40) * s,
                rng.random_range(1_000u128..10_000_000),
            )
        })
        .collect();
    let p = 1.0001f64.powf(rng.random_range(0.05..0.95) * spacing as f64);
    TickLadder::build(&positions, spacing, Price::new(p).unwrap(), LadderScale::UNIT).unwrap()
}

#[test]
fn scaling_liquidity_scales_sides_inversely() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let levels = [1, 5, 10, 15, 20];
    for _ in 0..200 {
        let ladder = random_ladder(&mut rng);
        let base = mci_report_for_ladder(&ladder, t0(), &levels).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let scaled = mci_report_for_ladder(&ladder.scaled(c), t0(), &levels).unwrap();
            for (b, s) in base.iter().zip(&scaled) {
                for (x, y) in [(b.mci_ask, s.mci_ask), (b.mci_bid, s.mci_bid)] {
                    let (x, y) = (x.unwrap(), y.unwrap());
                    assert!(rel(y, x / c) <= 1e-9, "c={c}: {y} vs {}", x / c);
                }
                let (bi, si) = (b.mci_imbalance.unwrap(), s.mci_imbalance.unwrap());
                assert!((bi - si).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn sides_are_non_negative_and_imbalance_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let ladder = random_ladder(&mut rng);
        for r in mci_report_for_ladder(&ladder, t0(), &[1, 3, 7, 20]).unwrap() {
            let (a, b) = (r.mci_ask.unwrap(), r.mci_bid.unwrap());
            assert!(a >= 0.0 && b >= 0.0);
            let imb = r.mci_imbalance.unwrap();
            assert!(imb > -1.0 && imb < 1.0);
            assert_eq!(r.mci_mean.unwrap(), (a + b) / 2.0);
        }
    }
}

/// Constant-product closed form for a buy from a tick boundary `P` through
/// `k` slots of uniform liquidity `L`.
fn uniform_ask_closed_form(l: f64, p: f64, p_k: f64) -> f64 {
    let vwapm = 0.5 * (p_k / p).ln();
    let volume = l * (1.0 / p.sqrt() - 1.0 / p_k.sqrt());
    vwapm / volume * MCI_SCALE
}

#[test]
fn uniform_ladder_matches_closed_form() {
    let l = 5_000_000u128;
    let ladder = TickLadder::build(&[position(0, -100, 100, l)], 1, tick_to_price(0), LadderScale::UNIT).unwrap();
    let reports = mci_report_for_ladder(&ladder, t0(), &[1, 5, 10, 15, 20]).unwrap();
    for r in &reports {
        let k = r.level as i32;
        let expected = uniform_ask_closed_form(l as f64, 1.0, tick_to_price(k).get());
        assert!(rel(r.mci_ask.unwrap(), expected) < 1e-9, "k={k}");
    }
    // the closed form rises with depth on a uniform ladder
    let means: Vec<f64> = reports.iter().map(|r| r.mci_mean.unwrap()).collect();
    assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
}

/// Splits every fill into `m` equal-X sub-fills and books each at its worst
/// (end) price.
fn book_from_fills(fills: &[SwapFill], m: usize) -> Vec<LobLevel> {
    let mut book = Vec::new();
    for f in fills {
        let step = f.delta_x / m as f64;
        let mut part = poolscope_core::swap_in_tick(
            &poolscope_core::amm::LadderEntry {
                lower: f.lower,
                upper: f.upper,
                lower_price: f.lower_price,
                upper_price: f.upper_price,
                liquidity: f.liquidity,
            },
            Price::new(f.start_price().clamp(f.lower_price.get(), f.upper_price.get())).unwrap(),
            f.side,
            Some(step),
        )
        .unwrap();
        for i in 0..m {
            if i > 0 {
                let limit = if i + 1 == m { None } else { Some(step) };
                part = part.continue_in_tick(limit).unwrap();
            }
            book.push(LobLevel {
                price: Price::new(part.end_price()).unwrap(),
                quantity: part.delta_x,
            });
        }
    }
    book
}

fn book_errors(side: Side) -> Vec<f64> {
    let ladder = TickLadder::build(
        &[position(0, -40, 40, 2_000_000)],
        1,
        tick_to_price(0),
        LadderScale::UNIT,
    )
    .unwrap();
    let mid = ladder.current_price();
    let exec = execute_order_over_levels(&ladder, side, 20).unwrap();
    assert_eq!(exec.fills.len(), 20);
    let amm = mci_side(&exec.fills, mid, side).unwrap();
    [1, 2, 4]
        .iter()
        .map(|&m| rel(lob_mci(&book_from_fills(&exec.fills, m), mid, side).unwrap(), amm))
        .collect()
}

#[test]
fn twenty_tick_ask_ladder_agrees_with_order_book_form() {
    let errors = book_errors(Side::Buy);
    assert!(errors[0] <= 0.05, "{errors:?}");
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
}

#[test]
fn bid_side_book_error_shrinks_with_refinement() {
    let errors = book_errors(Side::Sell);
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
    assert!(errors[2] < 0.015, "{errors:?}");
}
