//! The batch stages. Each stage reads the previous stage's files and writes
//! its own directory under the output root.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use log::{info, warn};
use poolscope_core::concentration::{gini, provider_count, provider_shares, QuoteSet};
use poolscope_core::event_study::{
    build_panel, did_estimate, write_estimates_csv, write_panel_csv, DidEstimate, PoolSeries,
};
use poolscope_core::history::{
    read_position_records, reconstruct_states, snapshot_grid, write_position_records, HistoryError, RecordLine,
    SubgraphClient,
};
use poolscope_core::mci::{daily_quantiles, mci_report_for_ladder, MciReport};
use poolscope_core::time::{format_timestamp, parse_timestamp};
use poolscope_core::{tvl_usd, LiquidityPosition, PoolMeta, PoolSnapshot, Price, PriceSeries, QuoteBook, Timestamp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PoolConfig, RunConfig};
use crate::output::{finish, write_manifest, Manifest, StageDir};
use crate::svg::{emit_markers, render_svg, Chart, SeriesPanel};
use crate::CliError;

pub const SNAPSHOTS: &str = "snapshots";
pub const METRICS: &str = "metrics";
pub const DID: &str = "did";
pub const REPORT: &str = "report";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Reconstruct,
    Metrics,
    Did,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Reconstruct, Stage::Metrics, Stage::Did, Stage::Report];

    pub fn dir(self) -> &'static str {
        match self {
            Stage::Reconstruct => SNAPSHOTS,
            Stage::Metrics => METRICS,
            Stage::Did => DID,
            Stage::Report => REPORT,
        }
    }
}

fn context(pool: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(anyhow!("pool {pool}: {e}"))
}

/// Input problems are validation failures; the rest are runtime failures.
fn history_error(pool: &str, e: HistoryError) -> CliError {
    match e {
        HistoryError::Io { .. } | HistoryError::Amm(_) => context(pool, e),
        _ => CliError::Validation(format!("pool {pool}: {e}")),
    }
}

fn with_workers<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Runtime(e.into()))?;
    Ok(pool.install(f))
}

/// Runs one stage, reading earlier stages from the output directory.
pub fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let dir = StageDir::create(out, stage.dir())?;
    execute(stage, cfg, out, &dir)?;
    dir.commit()?;
    write_manifest(out, cfg)
}

/// Runs reconstruct → metrics → did → report. Nothing lands in the output
/// directory unless every stage succeeds.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let scratch = out.join(crate::output::SCRATCH);
    let mut dirs = Vec::new();
    for stage in Stage::ALL {
        let dir = StageDir::create(out, stage.dir())?;
        execute(stage, cfg, &scratch, &dir)?;
        dirs.push(dir);
    }
    for dir in dirs {
        dir.commit()?;
    }
    write_manifest(out, cfg)
}

fn execute(stage: Stage, cfg: &RunConfig, input_root: &Path, dir: &StageDir) -> Result<(), CliError> {
    info!("stage {}", stage.dir());
    match stage {
        Stage::Reconstruct => reconstruct(cfg, dir),
        Stage::Metrics => metrics(cfg, &input_root.join(SNAPSHOTS), dir),
        Stage::Did => did(cfg, &input_root.join(METRICS), dir),
        Stage::Report => report(cfg, &input_root.join(METRICS), &input_root.join(DID), dir),
    }
}

// ---------------------------------------------------------------- fetch

/// Downloads each pool's positions, mints and burns into
/// `<data_dir>/pools/<id>/records.jsonl`.
pub fn fetch(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let settings = cfg
        .fetch
        .as_ref()
        .ok_or_else(|| CliError::Validation("no [fetch] section in config".into()))?;
    let client = SubgraphClient::new(settings.client_config());
    let results = with_workers(cfg, || {
        cfg.pools
            .par_iter()
            .map(|p| {
                let address = p.address.as_deref().unwrap_or(&p.id);
                let records = client.fetch_records(address).map_err(|e| context(&p.id, e))?;
                write_records(&cfg.pool_dir(&p.id), &records)?;
                info!("pool {}: {} records", p.id, records.len());
                Ok(())
            })
            .collect::<Vec<Result<(), CliError>>>()
    })?;
    results.into_iter().collect()
}

/// Writes records as JSON lines via a temporary file.
pub fn write_records(dir: &Path, records: &[RecordLine]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let dest = dir.join("records.jsonl");
    let tmp = dir.join(".records.jsonl.tmp");
    let f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    write_position_records(std::io::BufWriter::new(f), records).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))
}

// ---------------------------------------------------------- reconstruct

/// One snapshot in the compact on-disk form; position details live in the
/// pool's `positions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotLine {
    #[serde(with = "poolscope_core::time::iso")]
    pub as_of: Timestamp,
    pub price: f64,
    pub stale_price: bool,
    /// `(position_id, liquidity)` with liquidity as a decimal string.
    pub positions: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PositionRow {
    position_id: String,
    owner: String,
    tick_lower: i32,
    tick_upper: i32,
    #[serde(with = "poolscope_core::time::iso")]
    opened_at: Timestamp,
}

fn load_meta(cfg: &RunConfig, pool: &str) -> Result<PoolMeta, CliError> {
    PoolMeta::load(cfg.pool_dir(pool).join("meta.json")).map_err(|e| history_error(pool, e))
}

fn reconstruct_pool(cfg: &RunConfig, p: &PoolConfig, dir: &StageDir) -> Result<usize, CliError> {
    let id = p.id.as_str();
    let pool_dir = cfg.pool_dir(id);
    let meta = load_meta(cfg, id)?;
    let records = read_position_records(&pool_dir.join("records.jsonl")).map_err(|e| history_error(id, e))?;
    let prices = PriceSeries::load(&pool_dir.join("prices.csv")).map_err(|e| history_error(id, e))?;
    let grid = snapshot_grid(cfg.snapshots.from, cfg.snapshots.to, cfg.step()).map_err(|e| history_error(id, e))?;
    let head_time = records
        .latest_timestamp()
        .map_or(cfg.snapshots.to, |t| t.max(cfg.snapshots.to));
    let head_price = prices
        .at_or_before(head_time)
        .map(|s| s.price)
        .ok_or_else(|| history_error(id, HistoryError::MissingPrice { at: head_time }))?;
    let head = PoolSnapshot::new(meta, head_price, records.positions, head_time).map_err(|e| history_error(id, e))?;
    let mut states = reconstruct_states(&head, &records.events, &grid, &prices, &cfg.reconstruct_options())
        .map_err(|e| history_error(id, e))?;
    states.reverse();

    let mut table: BTreeMap<String, PositionRow> = BTreeMap::new();
    let file = format!("{id}.jsonl");
    let mut w = dir.writer(&file)?;
    for s in &states {
        for pos in &s.positions {
            table.entry(pos.position_id.clone()).or_insert_with(|| PositionRow {
                position_id: pos.position_id.clone(),
                owner: pos.owner.clone(),
                tick_lower: pos.lower,
                tick_upper: pos.upper,
                opened_at: pos.opened_at,
            });
        }
        let line = SnapshotLine {
            as_of: s.as_of,
            price: s.current_price.get(),
            stale_price: s.stale_price,
            positions: s
                .positions
                .iter()
                .map(|p| (p.position_id.clone(), p.liquidity.to_string()))
                .collect(),
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| CliError::Runtime(e.into()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(&dir.path(&file), e))?;
    }
    finish(w, &dir.path(&file))?;

    let file = format!("{id}.positions.csv");
    let mut csv_w = csv::Writer::from_writer(dir.writer(&file)?);
    for row in table.values() {
        csv_w.serialize(row).map_err(|e| context(id, e))?;
    }
    csv_w.flush().map_err(|e| CliError::io(&dir.path(&file), e))?;
    let stale = states.iter().filter(|s| s.stale_price).count();
    if stale > 0 {
        warn!("pool {id}: {stale} snapshots use a stale price");
    }
    Ok(states.len())
}

fn reconstruct(cfg: &RunConfig, dir: &StageDir) -> Result<(), CliError> {
    let results = with_workers(cfg, || {
        cfg.pools
            .par_iter()
            .map(|p| reconstruct_pool(cfg, p, dir).map(|n| (p.id.clone(), n)))
            .collect::<Vec<_>>()
    })?;
    for r in results {
        let (id, n) = r?;
        info!("pool {id}: {n} snapshots");
    }
    Ok(())
}

/// Reads a pool's snapshots back from the reconstruct stage.
pub fn load_snapshots(dir: &Path, meta: &PoolMeta) -> Result<Vec<PoolSnapshot>, CliError> {
    let id = meta.pool_id.as_str();
    let table_path = dir.join(format!("{id}.positions.csv"));
    let mut rdr = csv::Reader::from_path(&table_path).map_err(|e| context(id, e))?;
    let mut table = BTreeMap::new();
    for row in rdr.deserialize::<PositionRow>() {
        let row = row.map_err(|e| context(id, e))?;
        table.insert(row.position_id.clone(), row);
    }
    let path = dir.join(format!("{id}.jsonl"));
    let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(&path, e))?;
        let s: SnapshotLine =
            serde_json::from_str(&line).map_err(|e| context(id, format!("{}:{}: {e}", path.display(), n + 1)))?;
        let positions = s
            .positions
            .iter()
            .map(|(pid, liq)| {
                let row = table
                    .get(pid)
                    .ok_or_else(|| context(id, format!("position {pid} missing from positions table")))?;
                let liquidity = liq
                    .parse::<u128>()
                    .map_err(|e| context(id, format!("position {pid}: {e}")))?;
                Ok(LiquidityPosition {
                    position_id: pid.clone(),
                    owner: row.owner.clone(),
                    lower: row.tick_lower,
                    upper: row.tick_upper,
                    liquidity,
                    opened_at: row.opened_at,
                    closed_at: None,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let price = Price::new(s.price).map_err(|e| context(id, e))?;
        let mut snap = PoolSnapshot::new(meta.clone(), price, positions, s.as_of).map_err(|e| history_error(id, e))?;
        snap.stale_price = s.stale_price;
        out.push(snap);
    }
    Ok(out)
}

// -------------------------------------------------------------- metrics

/// Column names of a pool's metrics file, in order.
pub fn metric_columns(levels: &[usize]) -> Vec<String> {
    let mut cols: Vec<String> = ["timestamp", "price", "stale_price", "tvl_usd", "providers", "gini"]
        .map(String::from)
        .to_vec();
    for k in levels {
        for m in ["mci_ask", "mci_bid", "mci_imbalance", "mci_mean"] {
            cols.push(format!("{m}_k{k}"));
        }
    }
    cols
}

/// Whether the stable token is Y, in which case ladders are inverted so
/// that it is measured as X.
fn inverted(p: &PoolConfig, meta: &PoolMeta) -> Result<bool, CliError> {
    match p.stable.as_deref() {
        None => Ok(false),
        Some(s) if s == meta.token_x.symbol => Ok(false),
        Some(s) if s == meta.token_y.symbol => Ok(true),
        Some(s) => Err(CliError::Validation(format!(
            "pool {}: stable token {s} is neither {} nor {}",
            p.id, meta.token_x.symbol, meta.token_y.symbol
        ))),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn metrics_row(
    snap: &PoolSnapshot,
    invert: bool,
    levels: &[usize],
    quotes: &QuoteSet,
    cfg: &RunConfig,
) -> Result<Vec<String>, CliError> {
    let id = snap.pool_id();
    let at = |e: &dyn std::fmt::Display| context(id, format!("at {}: {e}", format_timestamp(&snap.as_of)));
    let ladder = snap.ladder().map_err(|e| at(&e))?;
    let ladder = if invert { ladder.inverted() } else { ladder };
    let reports: Vec<MciReport> = mci_report_for_ladder(&ladder, snap.as_of, levels).map_err(|e| at(&e))?;
    let tvl = tvl_usd(snap, quotes).map_err(|e| at(&e))?;
    let shares = provider_shares(snap, cfg.metrics.gini_basis, quotes).map_err(|e| at(&e))?;
    let values: Vec<f64> = shares.iter().map(|s| s.liquidity).collect();
    let g = gini(&values).ok();
    let mut row = vec![
        format_timestamp(&snap.as_of),
        ladder.current_price().get().to_string(),
        u8::from(snap.stale_price).to_string(),
        tvl.to_string(),
        provider_count(snap).to_string(),
        cell(g),
    ];
    for r in &reports {
        row.extend([r.mci_ask, r.mci_bid, r.mci_imbalance, r.mci_mean].map(cell));
    }
    Ok(row)
}

fn metrics_pool(
    cfg: &RunConfig,
    p: &PoolConfig,
    snapshots_dir: &Path,
    quotes: &QuoteBook,
    dir: &StageDir,
) -> Result<usize, CliError> {
    let meta = load_meta(cfg, &p.id)?;
    let invert = inverted(p, &meta)?;
    let snaps = load_snapshots(snapshots_dir, &meta)?;
    let levels = cfg.levels();
    let rows = snaps
        .par_iter()
        .map(|s| metrics_row(s, invert, &levels, &quotes.at(s.as_of), cfg))
        .collect::<Result<Vec<_>, CliError>>()?;
    let file = format!("{}.csv", p.id);
    let mut w = csv::Writer::from_writer(dir.writer(&file)?);
    w.write_record(metric_columns(&levels)).map_err(|e| context(&p.id, e))?;
    for r in &rows {
        w.write_record(r).map_err(|e| context(&p.id, e))?;
    }
    w.flush().map_err(|e| CliError::io(&dir.path(&file), e))?;
    Ok(rows.len())
}

fn metrics(cfg: &RunConfig, snapshots_dir: &Path, dir: &StageDir) -> Result<(), CliError> {
    let quotes = QuoteBook::load(&cfg.quotes_path()).map_err(|e| CliError::Validation(e.to_string()))?;
    let results = with_workers(cfg, || {
        cfg.pools
            .par_iter()
            .map(|p| metrics_pool(cfg, p, snapshots_dir, &quotes, dir))
            .collect::<Vec<_>>()
    })?;
    for (p, r) in cfg.pools.iter().zip(results) {
        info!("pool {}: {} metric rows", p.id, r?);
    }
    Ok(())
}

/// A pool's metrics file: column names and rows of optional values keyed
/// by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub columns: Vec<String>,
    pub rows: Vec<(Timestamp, Vec<Option<f64>>)>,
}

impl MetricsTable {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut rdr =
            csv::Reader::from_path(path).map_err(|e| CliError::Runtime(anyhow!("{}: {e}", path.display())))?;
        let bad = |e: &dyn std::fmt::Display| CliError::Runtime(anyhow!("{}: {e}", path.display()));
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| bad(&e))?
            .iter()
            .skip(1)
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(&e))?;
            let t = parse_timestamp(&rec[0]).map_err(|e| bad(&e))?;
            let values = rec
                .iter()
                .skip(1)
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>().map(Some)
                    }
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(&e))?;
            rows.push((t, values));
        }
        Ok(Self { columns, rows })
    }

    pub fn series(&self, column: &str) -> Option<Vec<(Timestamp, Option<f64>)>> {
        let i = self.columns.iter().position(|c| c == column)?;
        Some(self.rows.iter().map(|(t, v)| (*t, v[i])).collect())
    }
}

fn load_tables(cfg: &RunConfig, metrics_dir: &Path) -> Result<Vec<(String, MetricsTable)>, CliError> {
    cfg.pools
        .iter()
        .map(|p| {
            Ok((
                p.id.clone(),
                MetricsTable::load(&metrics_dir.join(format!("{}.csv", p.id)))?,
            ))
        })
        .collect()
}

// ------------------------------------------------------------------ did

/// Outcomes entering the event study: TVL and the mean MCI at each depth.
pub fn did_outcomes(levels: &[usize]) -> Vec<String> {
    let mut v = vec!["tvl_usd".to_string()];
    v.extend(levels.iter().map(|k| format!("mci_mean_k{k}")));
    v
}

fn did(cfg: &RunConfig, metrics_dir: &Path, dir: &StageDir) -> Result<(), CliError> {
    let tables = load_tables(cfg, metrics_dir)?;
    let groups = cfg.groups();
    let mut estimates: Vec<(String, DidEstimate)> = Vec::new();
    for outcome in did_outcomes(&cfg.levels()) {
        let series = tables
            .iter()
            .map(|(id, t)| {
                let points = t
                    .series(&outcome)
                    .ok_or_else(|| CliError::Runtime(anyhow!("metrics for {id} lack column {outcome}")))?;
                Ok(PoolSeries {
                    pool_id: id.clone(),
                    points,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let panel = build_panel(&series, &groups, &cfg.window, cfg.did.transform)
            .map_err(|e| CliError::Validation(format!("{outcome}: {e}")))?;
        if panel.dropped_missing > 0 {
            warn!("{outcome}: {} undefined observations dropped", panel.dropped_missing);
        }
        let file = format!("panel_{outcome}.csv");
        let w = dir.writer(&file)?;
        write_panel_csv(w, &panel).map_err(|e| CliError::Runtime(anyhow!("{file}: {e}")))?;
        let est =
            did_estimate(&panel.observations, cfg.did.se).map_err(|e| CliError::Runtime(anyhow!("{outcome}: {e}")))?;
        info!(
            "{outcome}: beta3 = {:.6} {} (n = {})",
            est.beta3.estimate,
            est.beta3.stars(),
            est.n_obs
        );
        estimates.push((outcome, est));
    }
    let rows: Vec<(&str, &DidEstimate)> = estimates.iter().map(|(o, e)| (o.as_str(), e)).collect();
    write_estimates_csv(dir.writer("estimates.csv")?, &rows)
        .map_err(|e| CliError::Runtime(anyhow!("estimates.csv: {e}")))?;
    Ok(())
}

// --------------------------------------------------------------- report

/// Series charted by the report stage, with their axis labels.
pub fn report_metrics(levels: &[usize]) -> Vec<(String, String)> {
    let mut v = vec![
        ("tvl_usd".to_string(), "TVL (USD)".to_string()),
        ("providers".to_string(), "Liquidity providers".to_string()),
        ("gini".to_string(), "Gini coefficient of provider liquidity".to_string()),
    ];
    for k in levels {
        v.push((
            format!("mci_mean_k{k}"),
            format!("MCI mean, level {k} (bps per thousand units)"),
        ));
        v.push((format!("mci_imbalance_k{k}"), format!("MCI imbalance, level {k}")));
    }
    v
}

fn report(cfg: &RunConfig, metrics_dir: &Path, did_dir: &Path, dir: &StageDir) -> Result<(), CliError> {
    let tables = load_tables(cfg, metrics_dir)?;
    let markers = cfg.report.markers();
    for (metric, label) in report_metrics(&cfg.levels()) {
        let mut panels = Vec::new();
        let file = format!("daily_{metric}.csv");
        let mut w = csv::Writer::from_writer(dir.writer(&file)?);
        w.write_record(["pool_id", "group", "date", "q25", "median", "q75", "count"])
            .map_err(|e| CliError::Runtime(anyhow!("{file}: {e}")))?;
        for (p, (id, t)) in cfg.pools.iter().zip(&tables) {
            let series = t
                .series(&metric)
                .ok_or_else(|| CliError::Runtime(anyhow!("metrics for {id} lack column {metric}")))?;
            let days = daily_quantiles(&series);
            for d in &days {
                w.write_record([
                    id.clone(),
                    p.group.as_str().to_string(),
                    d.date.to_string(),
                    d.q25.to_string(),
                    d.median.to_string(),
                    d.q75.to_string(),
                    d.count.to_string(),
                ])
                .map_err(|e| CliError::Runtime(anyhow!("{file}: {e}")))?;
            }
            panels.push(SeriesPanel {
                label: format!("{id} ({})", p.group.as_str()),
                days,
            });
        }
        w.flush().map_err(|e| CliError::io(&dir.path(&file), e))?;
        match Chart::new(&metric, &label, panels) {
            Some(chart) => {
                let chart = emit_markers(chart, &cfg.window, &markers);
                dir.write(&format!("{metric}.svg"), render_svg(&chart).as_bytes())?;
            }
            None => warn!("{metric}: no defined values, chart skipped"),
        }
    }
    let estimates = did_dir.join("estimates.csv");
    let text = fs::read_to_string(&estimates).map_err(|e| CliError::io(&estimates, e))?;
    dir.write("did_table.md", did_markdown(&text)?.as_bytes())
}

/// Renders the estimates file as a Markdown table with one column per
/// outcome, standard errors in parentheses.
fn did_markdown(estimates_csv: &str) -> Result<String, CliError> {
    let mut rdr = csv::Reader::from_reader(estimates_csv.as_bytes());
    let mut outcomes: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut n_obs: BTreeMap<String, String> = BTreeMap::new();
    let mut rel: BTreeMap<String, String> = BTreeMap::new();
    let coefs = ["intercept", "post", "group", "post_x_group"];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Runtime(e.into()))?;
        let outcome = rec[0].to_string();
        if !outcomes.contains(&outcome) {
            outcomes.push(outcome.clone());
        }
        let se = if rec[3].is_empty() {
            String::new()
        } else {
            format!(" ({})", fmt4(&rec[3]))
        };
        cells.insert(
            (outcome.clone(), rec[1].to_string()),
            format!("{}{}{}", fmt4(&rec[2]), &rec[5], se),
        );
        n_obs.insert(outcome.clone(), rec[6].to_string());
        rel.insert(
            outcome,
            if rec[7].is_empty() {
                String::new()
            } else {
                fmt4(&rec[7])
            },
        );
    }
    let mut s = format!(
        "| | {} |\n|---|{}\n",
        outcomes.join(" | "),
        "---|".repeat(outcomes.len())
    );
    for c in coefs {
        let row: Vec<&str> = outcomes
            .iter()
            .map(|o| cells.get(&(o.clone(), c.to_string())).map_or("", String::as_str))
            .collect();
        s.push_str(&format!("| {c} | {} |\n", row.join(" | ")));
    }
    let row: Vec<&str> = outcomes.iter().map(|o| rel[o].as_str()).collect();
    s.push_str(&format!("| relative effect | {} |\n", row.join(" | ")));
    let row: Vec<&str> = outcomes.iter().map(|o| n_obs[o].as_str()).collect();
    s.push_str(&format!("| observations | {} |\n", row.join(" | ")));
    Ok(s)
}

fn fmt4(raw: &str) -> String {
    raw.parse::<f64>()
        .map_or_else(|_| raw.to_string(), |v| format!("{v:.4}"))
}

/// Paths of the files a full run produces, relative to the output root.
pub fn expected_outputs(cfg: &RunConfig) -> Vec<PathBuf> {
    let mut v = Vec::new();
    for p in &cfg.pools {
        v.push(Path::new(SNAPSHOTS).join(format!("{}.jsonl", p.id)));
        v.push(Path::new(METRICS).join(format!("{}.csv", p.id)));
    }
    v.push(Path::new(DID).join("estimates.csv"));
    v.push(Path::new(REPORT).join("did_table.md"));
    v
}
