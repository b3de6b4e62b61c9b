//! Writes the synthetic dataset in the pipeline's input layout.

use std::fs;
use std::path::{Path, PathBuf};

use poolscope_core::history::{parse_position_records, LineKind};
use poolscope_core::synth::{stress_records, synthetic_fixture};
use poolscope_core::time::format_timestamp;
use serde::{Deserialize, Serialize};

use crate::pipeline::write_records;
use crate::CliError;

pub const CONFIG_FILE: &str = "poolscope.toml";

/// Writes `quotes.csv`, `pools/<id>/{meta.json,records.jsonl,prices.csv}`
/// and a run configuration covering the fixture. Returns the config path.
pub fn write_synthetic(dir: &Path, seed: u64) -> Result<PathBuf, CliError> {
    let fx = synthetic_fixture(seed);
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;

    let quotes_path = dir.join("quotes.csv");
    let mut w = csv::Writer::from_path(&quotes_path).map_err(|e| CliError::Runtime(e.into()))?;
    for q in &fx.quotes {
        w.serialize(q).map_err(|e| CliError::Runtime(e.into()))?;
    }
    w.flush().map_err(|e| CliError::io(&quotes_path, e))?;

    let mut pools_toml = String::new();
    for pool in &fx.pools {
        let pdir = dir.join("pools").join(&pool.meta.pool_id);
        write_records(&pdir, &pool.records)?;
        let meta = serde_json::to_string_pretty(&pool.meta).map_err(|e| CliError::Runtime(e.into()))? + "\n";
        let meta_path = pdir.join("meta.json");
        fs::write(&meta_path, meta).map_err(|e| CliError::io(&meta_path, e))?;
        let prices_path = pdir.join("prices.csv");
        let f = fs::File::create(&prices_path).map_err(|e| CliError::io(&prices_path, e))?;
        pool.prices.write_csv(f).map_err(|e| CliError::Runtime(e.into()))?;
        pools_toml.push_str(&format!(
            "\n[[pools]]\nid = \"{}\"\ngroup = \"{}\"\nstable = \"{}\"\n",
            pool.meta.pool_id,
            pool.group.as_str(),
            pool.stable
        ));
    }

    let config = format!(
        "# Synthetic fixture, seed {seed}.\n\
         data_dir = \".\"\n\
         out_dir = \"out\"\n\
         workers = 0\n\
         {pools_toml}\n\
         [snapshots]\n\
         from = \"{}\"\n\
         to = \"{}\"\n\
         step_minutes = 60\n\
         staleness_hours = 24\n\
         strict_staleness = false\n\n\
         [metrics]\n\
         levels = [1, 5, 10, 15, 20]\n\
         gini_basis = \"liquidity\"\n\n\
         [did]\n\
         se = \"clustered_by_pool\"\n\
         transform = \"level\"\n",
        format_timestamp(&fx.start),
        format_timestamp(&fx.end),
    );
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, config).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Line counts of a stress log, kept next to it for verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressCounts {
    pub seed: u64,
    pub lines: usize,
    pub mints: usize,
    pub burns: usize,
    pub positions: usize,
    pub open_at_head: usize,
}

/// Writes a `total_lines`-line stress log plus its `counts.json`.
pub fn write_stress(dir: &Path, seed: u64, total_lines: usize) -> Result<StressCounts, CliError> {
    let records = stress_records(seed, total_lines);
    write_records(dir, &records)?;
    let count = |k: LineKind| records.iter().filter(|r| r.kind == k).count();
    let text = fs::read_to_string(dir.join("records.jsonl")).map_err(|e| CliError::io(dir, e))?;
    let parsed = parse_position_records(text.as_bytes()).map_err(|e| CliError::Validation(e.to_string()))?;
    let counts = StressCounts {
        seed,
        lines: records.len(),
        mints: count(LineKind::Mint),
        burns: count(LineKind::Burn),
        positions: count(LineKind::Position),
        open_at_head: parsed.positions.len(),
    };
    let path = dir.join("counts.json");
    let json = serde_json::to_string_pretty(&counts).map_err(|e| CliError::Runtime(e.into()))? + "\n";
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    Ok(counts)
}
