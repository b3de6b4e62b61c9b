//! Deterministic synthetic pools and event logs.
//!
//! Everything here is a pure function of the seed, so fixtures written from
//! it can be regenerated bit for bit.

use std::collections::BTreeMap;

use chrono::TimeDelta;
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::amm::tick::align_down as align_down_tick;
use crate::amm::{tick_at_price, FeeTier, LadderScale, Price};
use crate::concentration::TvlQuote;
use crate::event_study::{EventWindow, Group};
use crate::history::{EventKind, LineKind, PoolMeta, PositionEvent, PriceSample, PriceSeries, RecordLine, TokenMeta};
use crate::time::{parse_timestamp, Timestamp};

/// Block height and time used to derive block numbers from timestamps.
const REF_BLOCK: u64 = 16_480_000;
const REF_TIME: &str = "2023-01-24T00:00:00Z";
const BLOCK_SECS: i64 = 12;

/// A generated pool: metadata, its position/event records and hourly prices.
#[derive(Debug, Clone)]
pub struct SynthPool {
    pub meta: PoolMeta,
    pub group: Group,
    /// Symbol of the stablecoin measured as token X.
    pub stable: String,
    pub records: Vec<RecordLine>,
    pub prices: PriceSeries,
}

#[derive(Debug, Clone)]
pub struct SynthFixture {
    pub seed: u64,
    pub start: Timestamp,
    pub end: Timestamp,
    pub window: EventWindow,
    pub pools: Vec<SynthPool>,
    pub quotes: Vec<TvlQuote>,
}

pub const FIXTURE_HOURS: i64 = 60 * 24;

/// Moment the small providers of the stable pair start leaving.
const DROP_START: &str = "2023-03-08T02:00:00Z";
const SMALL_PROVIDERS_LEAVING: usize = 379;
const STABLE_PAIR_WHALES: usize = 16;

struct Spec {
    id: &'static str,
    x: (&'static str, u8),
    y: (&'static str, u8),
    fee_bps: u32,
    group: Group,
    stable: &'static str,
    whales: usize,
    small: usize,
    /// Half-width range of a position, in slots.
    half_width: (i32, i32),
    /// Typical decimal-adjusted liquidity of a whale position.
    whale_liquidity: f64,
    provider_drop: bool,
}

fn specs() -> [Spec; 4] {
    [
        Spec {
            id: "usdc-weth-500",
            x: ("USDC", 6),
            y: ("WETH", 18),
            fee_bps: 5,
            group: Group::Treatment,
            stable: "USDC",
            whales: 12,
            small: 30,
            half_width: (20, 200),
            whale_liquidity: 4.0e5,
            provider_drop: false,
        },
        Spec {
            id: "dai-usdc-100",
            x: ("DAI", 18),
            y: ("USDC", 6),
            fee_bps: 1,
            group: Group::Treatment,
            stable: "USDC",
            whales: STABLE_PAIR_WHALES,
            small: SMALL_PROVIDERS_LEAVING,
            half_width: (15, 300),
            whale_liquidity: 2.0e8,
            provider_drop: true,
        },
        Spec {
            id: "weth-usdt-500",
            x: ("WETH", 18),
            y: ("USDT", 6),
            fee_bps: 5,
            group: Group::Control,
            stable: "USDT",
            whales: 12,
            small: 30,
            half_width: (20, 200),
            whale_liquidity: 3.0e5,
            provider_drop: false,
        },
        Spec {
            id: "dai-usdt-500",
            x: ("DAI", 18),
            y: ("USDT", 6),
            fee_bps: 5,
            group: Group::Control,
            stable: "USDT",
            whales: 12,
            small: 30,
            half_width: (40, 300),
            whale_liquidity: 4.0e7,
            provider_drop: false,
        },
    ]
}

/// USD price paths of the four tokens, sampled hourly.
struct UsdPaths {
    times: Vec<Timestamp>,
    usd: BTreeMap<&'static str, Vec<f64>>,
}

impl UsdPaths {
    fn get(&self, token: &str, i: usize) -> f64 {
        self.usd[token][i]
    }
}

/// Piecewise-linear depeg profile: `(hours after τ, price)`.
fn depeg(hours_after: f64, knots: &[(f64, f64)]) -> f64 {
    if hours_after <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        let ((h0, p0), (h1, p1)) = (w[0], w[1]);
        if hours_after <= h1 {
            return p0 + (p1 - p0) * (hours_after - h0) / (h1 - h0);
        }
    }
    knots[knots.len() - 1].1
}

fn usd_paths(rng: &mut ChaCha8Rng, start: Timestamp, hours: i64, tau: Timestamp) -> UsdPaths {
    let step = Normal::new(0.0, 0.006).expect("valid sigma");
    let jitter = Normal::new(0.0, 0.0003).expect("valid sigma");
    let usdc_knots = [
        (0.0, 1.0),
        (3.0, 0.93),
        (20.0, 0.88),
        (45.0, 0.97),
        (70.0, 0.995),
        (100.0, 1.0),
    ];
    let usdt_knots = [(0.0, 1.0), (10.0, 1.008), (45.0, 1.004), (100.0, 1.0)];
    let mut eth = 1650.0f64;
    let mut usd: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut times = Vec::new();
    for i in 0..=hours {
        let t = start + TimeDelta::hours(i);
        let h = (t - tau).num_seconds() as f64 / 3600.0;
        eth *= f64::exp(step.sample(rng));
        let usdc = depeg(h, &usdc_knots) + jitter.sample(rng);
        // DAI was largely USDC-backed and tracked its depeg closely
        let dai = usdc * (1.0 + 0.002 * depeg(h, &[(0.0, 0.0), (20.0, 1.0), (70.0, 0.0)])) + jitter.sample(rng);
        let usdt = depeg(h, &usdt_knots) + jitter.sample(rng);
        times.push(t);
        usd.entry("WETH").or_default().push(eth);
        usd.entry("USDC").or_default().push(usdc);
        usd.entry("DAI").or_default().push(dai);
        usd.entry("USDT").or_default().push(usdt);
    }
    UsdPaths { times, usd }
}

/// Assigns block numbers and intra-block indices to increasing timestamps.
struct Chain {
    ref_time: Timestamp,
    last: Option<(u64, u32)>,
}

impl Chain {
    fn new() -> Self {
        Self {
            ref_time: parse_timestamp(REF_TIME).expect("valid reference"),
            last: None,
        }
    }

    fn stamp(&mut self, t: Timestamp) -> (u64, u32) {
        let block = REF_BLOCK + ((t - self.ref_time).num_seconds() / BLOCK_SECS) as u64;
        let idx = match self.last {
            Some((b, i)) if b == block => i + 1,
            _ => 0,
        };
        self.last = Some((block, idx));
        (block, idx)
    }
}

fn owner_address(rng: &mut ChaCha8Rng) -> String {
    format!("0x{:032x}{:08x}", rng.random::<u128>(), rng.random::<u32>())
}

struct Open {
    owner: String,
    lower: i32,
    upper: i32,
    liquidity: u128,
    whale: bool,
}

struct PoolSim<'a> {
    spec: &'a Spec,
    scale: LadderScale,
    spacing: u32,
    chain: Chain,
    records: Vec<RecordLine>,
    open: BTreeMap<u64, Open>,
    next_id: u64,
}

impl PoolSim<'_> {
    fn emit(&mut self, kind: LineKind, id: u64, t: Timestamp, liquidity: u128) {
        let (block, log_index) = self.chain.stamp(t);
        let pos = &self.open[&id];
        self.records.push(RecordLine {
            kind,
            position_id: id.to_string(),
            owner: pos.owner.clone(),
            tick_lower: pos.lower,
            tick_upper: pos.upper,
            liquidity,
            block,
            log_index: Some(log_index),
            timestamp: t,
        });
    }

    fn mint(&mut self, rng: &mut ChaCha8Rng, owner: String, whale: bool, price: f64, liquidity_h: f64, t: Timestamp) {
        let s = self.spacing as i32;
        let center = tick_at_price(Price::new(price).expect("positive price"), self.scale.price);
        let (lo, hi) = self.spec.half_width;
        let half = rng.random_range(lo..=hi) * s;
        let offset = ((rng.random::<f64>() - 0.5) * half as f64 * 0.5) as i32;
        let lower = align_down_tick(center + offset - half, self.spacing);
        let upper = lower + 2 * half;
        let liquidity = (liquidity_h / self.scale.liquidity).round() as u128;
        if liquidity == 0 {
            return;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.open.insert(
            id,
            Open {
                owner,
                lower,
                upper,
                liquidity,
                whale,
            },
        );
        self.emit(LineKind::Mint, id, t, liquidity);
    }

    fn burn(&mut self, id: u64, amount: u128, t: Timestamp) {
        self.emit(LineKind::Burn, id, t, amount);
        let pos = self.open.get_mut(&id).expect("open position");
        pos.liquidity -= amount;
        if pos.liquidity == 0 {
            self.open.remove(&id);
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng, whale: bool) -> Option<u64> {
        self.open
            .iter()
            .filter(|(_, p)| p.whale == whale)
            .map(|(id, _)| *id)
            .choose(rng)
    }
}

fn pool_price(spec: &Spec, paths: &UsdPaths, i: usize) -> f64 {
    paths.get(spec.x.0, i) / paths.get(spec.y.0, i)
}

fn simulate(rng: &mut ChaCha8Rng, spec: &Spec, paths: &UsdPaths, tau: Timestamp, base_id: u64) -> SynthPool {
    let meta = PoolMeta {
        pool_id: spec.id.to_string(),
        token_x: TokenMeta {
            symbol: spec.x.0.into(),
            decimals: spec.x.1,
        },
        token_y: TokenMeta {
            symbol: spec.y.0.into(),
            decimals: spec.y.1,
        },
        fee_tier: FeeTier::from_bps(spec.fee_bps).expect("valid tier"),
    };
    let mut sim = PoolSim {
        spec,
        scale: meta.scale(),
        spacing: meta.spacing(),
        chain: Chain::new(),
        records: Vec::new(),
        open: BTreeMap::new(),
        next_id: base_id,
    };
    let size = LogNormal::new(0.0, 0.8).expect("valid sigma");
    let start = paths.times[0];
    let p0 = pool_price(spec, paths, 0);

    // seed the pool the day before the series starts
    let mut t = start - TimeDelta::hours(24);
    let whales: Vec<String> = (0..spec.whales).map(|_| owner_address(rng)).collect();
    let small: Vec<String> = (0..spec.small).map(|_| owner_address(rng)).collect();
    for owner in &whales {
        for _ in 0..rng.random_range(1..=3) {
            t += TimeDelta::seconds(rng.random_range(20..240));
            let l = spec.whale_liquidity * size.sample(rng);
            sim.mint(rng, owner.clone(), true, p0, l, t);
        }
    }
    for owner in &small {
        t += TimeDelta::seconds(rng.random_range(20..120));
        let l = spec.whale_liquidity * 0.002 * size.sample(rng);
        sim.mint(rng, owner.clone(), false, p0, l, t);
    }

    let drop_start = parse_timestamp(DROP_START).expect("valid drop time");
    let mut leaving: Vec<String> = if spec.provider_drop { small.clone() } else { Vec::new() };
    let shock_end = tau + TimeDelta::hours(48);

    let mut clock = t;
    for i in 0..paths.times.len() - 1 {
        let hour = paths.times[i];
        let price = pool_price(spec, paths, i);
        clock = clock.max(hour);
        let mut tick = |rng: &mut ChaCha8Rng| {
            clock += TimeDelta::seconds(rng.random_range(12..240));
            clock
        };
        let shock = hour >= tau && hour < shock_end;
        let post = hour >= tau;

        // whales re-centre around the current price
        if rng.random_bool(0.15) {
            if let Some(id) = sim.pick(rng, true) {
                let (owner, l) = (sim.open[&id].owner.clone(), sim.open[&id].liquidity);
                let l_h = l as f64 * sim.scale.liquidity;
                let t_mint = tick(rng);
                sim.mint(rng, owner, true, price, l_h, t_mint);
                let t_burn = tick(rng);
                sim.burn(id, l, t_burn);
            }
        }

        if !spec.provider_drop && rng.random_bool(0.08) {
            let owner = small.iter().choose(rng).expect("small providers").clone();
            let l = spec.whale_liquidity * 0.002 * size.sample(rng);
            let t_mint = tick(rng);
            sim.mint(rng, owner, false, price, l, t_mint);
        }
        if !spec.provider_drop && rng.random_bool(0.05) {
            if let Some(id) = sim.pick(rng, false) {
                let l = sim.open[&id].liquidity;
                let t_burn = tick(rng);
                sim.burn(id, l, t_burn);
            }
        }

        if spec.provider_drop && hour >= drop_start && !leaving.is_empty() {
            for _ in 0..leaving.len().min(20) {
                let owner = leaving.pop().expect("non-empty");
                let ids: Vec<u64> = sim
                    .open
                    .iter()
                    .filter(|(_, p)| p.owner == owner)
                    .map(|(id, _)| *id)
                    .collect();
                for id in ids {
                    let l = sim.open[&id].liquidity;
                    let t_burn = tick(rng);
                    sim.burn(id, l, t_burn);
                }
            }
        }

        if shock {
            match spec.group {
                Group::Treatment => {
                    for _ in 0..2 {
                        if rng.random_bool(0.6) {
                            if let Some(id) = sim.pick(rng, true) {
                                let amount = sim.open[&id].liquidity / 10 * 6;
                                let t_burn = tick(rng);
                                sim.burn(id, amount, t_burn);
                            }
                        }
                    }
                }
                Group::Control => {
                    if rng.random_bool(0.5) {
                        let owner = whales.iter().choose(rng).expect("whales").clone();
                        let l = spec.whale_liquidity * size.sample(rng);
                        let t_mint = tick(rng);
                        sim.mint(rng, owner, true, price, l, t_mint);
                    }
                }
            }
        } else if post && spec.group == Group::Treatment && rng.random_bool(0.05) {
            if let Some(id) = sim.pick(rng, true) {
                let amount = sim.open[&id].liquidity / 10;
                let t_burn = tick(rng);
                sim.burn(id, amount, t_burn);
            }
        }
    }

    let samples = paths
        .times
        .iter()
        .enumerate()
        .map(|(i, &timestamp)| {
            let price = Price::new(pool_price(spec, paths, i)).expect("positive price");
            PriceSample {
                timestamp,
                price,
                tick: Some(tick_at_price(price, sim.scale.price)),
            }
        })
        .collect();

    SynthPool {
        meta,
        group: spec.group,
        stable: spec.stable.to_string(),
        records: sim.records,
        prices: PriceSeries::new(samples).expect("hourly samples increase"),
    }
}

/// Two treatment (USDC) and two control (USDT) pools over 60 days of hourly
/// prices, with treatment liquidity withdrawn and USDC depegging after τ.
pub fn synthetic_fixture(seed: u64) -> SynthFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = EventWindow::default();
    let start = parse_timestamp("2023-02-20T00:00:00Z").expect("valid start");
    let paths = usd_paths(&mut rng, start, FIXTURE_HOURS, window.treatment_time);
    let pools = specs()
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            simulate(
                &mut rng,
                spec,
                &paths,
                window.treatment_time,
                400_000 + 100_000 * k as u64,
            )
        })
        .collect();
    let quotes = paths
        .usd
        .iter()
        .flat_map(|(token, series)| {
            paths
                .times
                .iter()
                .zip(series)
                .map(move |(&as_of, &usd_price)| TvlQuote {
                    token: token.to_string(),
                    usd_price,
                    as_of,
                })
        })
        .collect();
    SynthFixture {
        seed,
        start,
        end: *paths.times.last().expect("non-empty"),
        window,
        pools,
        quotes,
    }
}

/// Shape of a random mint/burn log.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomLogConfig {
    pub n_events: usize,
    pub n_owners: usize,
    pub spacing: u32,
    pub start: Timestamp,
    /// Upper bound on the gap between consecutive events; zero gaps create
    /// same-block ties.
    pub max_gap_secs: i64,
}

impl Default for RandomLogConfig {
    fn default() -> Self {
        Self {
            n_events: 500,
            n_owners: 25,
            spacing: 10,
            start: parse_timestamp("2023-02-01T00:00:00Z").expect("valid start"),
            max_gap_secs: 900,
        }
    }
}

/// A consistent log: burns never exceed the position's open liquidity.
pub fn random_event_log(seed: u64, cfg: &RandomLogConfig) -> Vec<PositionEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let owners: Vec<String> = (0..cfg.n_owners.max(1)).map(|_| owner_address(&mut rng)).collect();
    let mut open: BTreeMap<u64, (usize, i32, i32, u128)> = BTreeMap::new();
    let mut chain = Chain::new();
    let mut clock = cfg.start;
    let mut next_id = 1u64;
    let mut events = Vec::with_capacity(cfg.n_events);
    let s = cfg.spacing as i32;
    while events.len() < cfg.n_events {
        let gap = rng.random_range(0..=cfg.max_gap_secs.max(0));
        clock += TimeDelta::seconds(gap);
        let mint = open.is_empty() || rng.random_bool(0.55);
        let (kind, id, delta) = if mint {
            let top_up = !open.is_empty() && rng.random_bool(0.3);
            let id = if top_up {
                *open.keys().choose(&mut rng).expect("non-empty")
            } else {
                let lower = rng.random_range(-300..300) * s;
                let width = rng.random_range(1..60) * s;
                let owner = rng.random_range(0..owners.len());
                open.insert(next_id, (owner, lower, lower + width, 0));
                next_id += 1;
                next_id - 1
            };
            let delta = rng.random_range(1..=1_000_000_000_000u128);
            open.get_mut(&id).expect("open").3 += delta;
            (EventKind::Mint, id, delta)
        } else {
            let id = *open.keys().choose(&mut rng).expect("non-empty");
            let l = open[&id].3;
            let delta = if rng.random_bool(0.4) {
                rng.random_range(1..=l)
            } else {
                l
            };
            (EventKind::Burn, id, delta)
        };
        let (owner, lower, upper, _) = open[&id];
        let (block, log_index) = chain.stamp(clock);
        events.push(PositionEvent {
            kind,
            position_id: id.to_string(),
            owner: owners[owner].clone(),
            lower,
            upper,
            liquidity_delta: delta,
            block,
            log_index: Some(log_index),
            timestamp: clock,
            seq: events.len(),
        });
        if kind == EventKind::Burn {
            let entry = open.get_mut(&id).expect("open");
            entry.3 -= delta;
            if entry.3 == 0 {
                open.remove(&id);
            }
        }
    }
    events
}

/// Exactly `total_lines` JSON-lines records: a random log followed by the
/// head state it produces.
pub fn stress_records(seed: u64, total_lines: usize) -> Vec<RecordLine> {
    // a new position adds two lines at once, so some logs step over the
    // target; move on to the next seed when that happens
    for attempt in 0.. {
        if let Some(lines) = try_stress_records(seed.wrapping_add(attempt), total_lines) {
            return lines;
        }
    }
    unreachable!()
}

fn try_stress_records(seed: u64, total_lines: usize) -> Option<Vec<RecordLine>> {
    let cfg = RandomLogConfig {
        n_events: total_lines,
        n_owners: 200,
        ..Default::default()
    };
    let events = random_event_log(seed, &cfg);
    let mut open: BTreeMap<&str, (u128, &PositionEvent)> = BTreeMap::new();
    let mut used = None;
    for (k, e) in events.iter().enumerate() {
        let entry = open.entry(e.position_id.as_str()).or_insert((0, e));
        match e.kind {
            EventKind::Mint => entry.0 += e.liquidity_delta,
            EventKind::Burn => entry.0 -= e.liquidity_delta,
        }
        if entry.0 == 0 {
            open.remove(e.position_id.as_str());
        }
        if k + 1 + open.len() == total_lines {
            used = Some(k + 1);
            break;
        }
    }
    let used = used?;
    let last = &events[used - 1];
    let mut lines: Vec<RecordLine> = events[..used].iter().map(PositionEvent::to_line).collect();
    lines.extend(open.into_iter().map(|(id, (l, e))| RecordLine {
        kind: LineKind::Position,
        position_id: id.to_string(),
        owner: e.owner.clone(),
        tick_lower: e.lower,
        tick_upper: e.upper,
        liquidity: l,
        block: last.block,
        log_index: None,
        timestamp: last.timestamp,
    }));
    Some(lines)
}
