use std::time::Instant;

use chrono::TimeDelta;
use poolscope_core::amm::FeeTier;
use poolscope_core::history::{
    apply_events_forward, apply_events_until, parse_position_records, reconstruct_states, write_position_records,
    PriceSample, ReconstructOptions, TokenMeta,
};
use poolscope_core::synth::{random_event_log, RandomLogConfig};
use poolscope_core::{PoolMeta, PoolSnapshot, Price, PriceSeries, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn meta() -> PoolMeta {
    PoolMeta {
        pool_id: "pool".into(),
        token_x: TokenMeta {
            symbol: "X".into(),
            decimals: 18,
        },
        token_y: TokenMeta {
            symbol: "Y".into(),
            decimals: 18,
        },
        fee_tier: FeeTier::from_bps(5).unwrap(),
    }
}

fn empty(at: Timestamp) -> PoolSnapshot {
    PoolSnapshot::new(meta(), Price::new(1.0).unwrap(), Vec::new(), at).unwrap()
}

fn prices(at: Timestamp) -> PriceSeries {
    PriceSeries::new(vec![PriceSample {
        timestamp: at,
        price: Price::new(1.0).unwrap(),
        tick: None,
    }])
    .unwrap()
}

#[test]
fn backward_walk_equals_forward_replay_on_random_logs() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = ReconstructOptions {
        staleness: TimeDelta::days(3650),
        ..Default::default()
    };
    for log_no in 0..100u64 {
        let cfg = RandomLogConfig {
            n_events: if log_no % 10 == 0 {
                10_000
            } else {
                rng.random_range(1..3000)
            },
            n_owners: rng.random_range(1..40),
            max_gap_secs: [0, 12, 900][rng.random_range(0..3)],
            ..Default::default()
        };
        let events = random_event_log(1000 + log_no, &cfg);
        let origin = cfg.start - TimeDelta::seconds(1);
        let head = apply_events_forward(&empty(origin), &events).unwrap();
        let last = head.as_of;

        let span = (last - origin).num_seconds().max(1);
        let mut times: Vec<Timestamp> = (0..20)
            .map(|_| origin + TimeDelta::seconds(rng.random_range(0..=span)))
            .collect();
        // exact event stamps exercise the inclusive boundary
        times.extend(
            events
                .iter()
                .step_by(events.len().div_ceil(5).max(1))
                .map(|e| e.timestamp),
        );
        times.sort_unstable_by(|a, b| b.cmp(a));
        times.dedup();

        let backward = reconstruct_states(&head, &events, &times, &prices(origin), &opts).unwrap();
        for (t, snap) in times.iter().zip(&backward) {
            let forward = apply_events_until(&empty(origin), &events, *t).unwrap();
            assert_eq!(snap.as_of, *t);
            assert_eq!(snap.position_set(), forward.position_set(), "log {log_no} at {t}");
            let ranges = |s: &PoolSnapshot| -> Vec<_> {
                s.positions
                    .iter()
                    .map(|p| (p.owner.clone(), p.lower, p.upper))
                    .collect()
            };
            assert_eq!(ranges(snap), ranges(&forward));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 30.0, "took {secs:.1}s");
}

#[test]
fn head_from_replay_matches_forward_application() {
    let cfg = RandomLogConfig::default();
    let events = random_event_log(5, &cfg);
    let mut buf = Vec::new();
    let lines: Vec<_> = events.iter().map(|e| e.to_line()).collect();
    write_position_records(&mut buf, &lines).unwrap();
    let parsed = parse_position_records(buf.as_slice()).unwrap();
    assert!(!parsed.explicit_head);
    assert_eq!(parsed.events.len(), events.len());
    let forward = apply_events_forward(&empty(cfg.start - TimeDelta::seconds(1)), &events).unwrap();
    let ids: Vec<_> = parsed
        .positions
        .iter()
        .map(|p| (p.position_id.clone(), p.liquidity))
        .collect();
    assert_eq!(ids, forward.position_set());
}
