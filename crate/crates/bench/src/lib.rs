//! Shared inputs for the benchmarks.

use poolscope_core::history::{parse_position_records, write_position_records, PositionRecords};
use poolscope_core::synth::{synthetic_fixture, SynthPool};
use poolscope_core::{PoolSnapshot, PriceSeries};

/// The synthetic pool with the most positions, parsed, with a head
/// snapshot at its last record.
pub fn busiest_pool() -> (SynthPool, PositionRecords, PoolSnapshot) {
    let fx = synthetic_fixture(7);
    let pool = fx
        .pools
        .into_iter()
        .max_by_key(|p| p.records.len())
        .expect("fixture has pools");
    let mut text = Vec::new();
    write_position_records(&mut text, &pool.records).expect("in-memory write");
    let records = parse_position_records(text.as_slice()).expect("fixture parses");
    let head_time = records.latest_timestamp().expect("non-empty log");
    let price = last_price(&pool.prices);
    let head = PoolSnapshot::new(pool.meta.clone(), price, records.positions.clone(), head_time).expect("valid head");
    (pool, records, head)
}

fn last_price(prices: &PriceSeries) -> poolscope_core::Price {
    prices.samples().last().expect("non-empty series").price
}
