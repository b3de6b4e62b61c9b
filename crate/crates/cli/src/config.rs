//! Run configuration: a TOML file, overridable from the command line.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::TimeDelta;
use poolscope_core::concentration::ShareBasis;
use poolscope_core::event_study::{default_markers, EventMarker, OutcomeTransform, SeKind};
use poolscope_core::history::{FetchConfig, ReconstructOptions, DEFAULT_STALENESS_HOURS};
use poolscope_core::mci::DEFAULT_LEVELS;
use poolscope_core::time::parse_timestamp;
use poolscope_core::{EventWindow, Group, Timestamp};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Input directory holding `quotes.csv` and `pools/<id>/...`.
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Upper bound on per-pool worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub workers: usize,
    pub pools: Vec<PoolConfig>,
    #[serde(default)]
    pub window: EventWindow,
    pub snapshots: SnapshotConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub did: DidConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetch: Option<FetchSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub id: String,
    pub group: Group,
    /// Token measured as X by the liquidity-cost metrics. Defaults to the
    /// pool's first token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable: Option<String>,
    /// Subgraph id of the pool, when it differs from `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotConfig {
    #[serde(with = "poolscope_core::time::iso")]
    pub from: Timestamp,
    #[serde(with = "poolscope_core::time::iso")]
    pub to: Timestamp,
    #[serde(default = "default_step")]
    pub step_minutes: i64,
    #[serde(default = "default_staleness")]
    pub staleness_hours: i64,
    #[serde(default)]
    pub strict_staleness: bool,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_iso")]
    pub coverage_start: Option<Timestamp>,
}

fn default_step() -> i64 {
    60
}

fn default_staleness() -> i64 {
    DEFAULT_STALENESS_HOURS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub levels: Vec<usize>,
    pub gini_basis: ShareBasis,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS.to_vec(),
            gini_basis: ShareBasis::Liquidity,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DidConfig {
    #[serde(default)]
    pub se: SeKind,
    #[serde(default)]
    pub transform: OutcomeTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Draw the dated events of March 2023.
    #[serde(default = "yes")]
    pub default_markers: bool,
    #[serde(default)]
    pub extra_markers: Vec<EventMarker>,
}

fn yes() -> bool {
    true
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            default_markers: true,
            extra_markers: Vec::new(),
        }
    }
}

impl ReportConfig {
    pub fn markers(&self) -> Vec<EventMarker> {
        let mut out = if self.default_markers {
            default_markers()
        } else {
            Vec::new()
        };
        out.extend(self.extra_markers.iter().cloned());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchSettings {
    pub endpoint: String,
    pub cache_dir: PathBuf,
    #[serde(default = "default_page_size")]
    pub page_size: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_delay")]
    pub base_delay_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub offline: bool,
}

fn default_page_size() -> usize {
    1000
}

fn default_retries() -> u32 {
    5
}

fn default_delay() -> u64 {
    500
}

fn default_timeout() -> u64 {
    30
}

impl FetchSettings {
    pub fn client_config(&self) -> FetchConfig {
        let mut c = FetchConfig::new(self.endpoint.clone());
        c.cache_dir = Some(self.cache_dir.clone());
        c.page_size = self.page_size;
        c.max_retries = self.max_retries;
        c.base_delay = std::time::Duration::from_millis(self.base_delay_ms);
        c.timeout = std::time::Duration::from_secs(self.timeout_secs);
        c.offline = self.offline;
        c
    }
}

mod opt_iso {
    use poolscope_core::time::{format_timestamp, parse_timestamp};
    use poolscope_core::Timestamp;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_str(&format_timestamp(t)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|raw| parse_timestamp(&raw).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub pools: Option<Vec<String>>,
    pub levels: Option<Vec<usize>>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Reads the file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data_dir = base.join(&cfg.data_dir);
        cfg.out_dir = base.join(&cfg.out_dir);
        if let Some(f) = cfg.fetch.as_mut() {
            f.cache_dir = base.join(&f.cache_dir);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(ids) = &o.pools {
            let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
            if let Some(unknown) = wanted.iter().find(|id| !self.pools.iter().any(|p| p.id == **id)) {
                return Err(CliError::Validation(format!("--pools: {unknown} is not configured")));
            }
            self.pools.retain(|p| wanted.contains(p.id.as_str()));
        }
        if let Some(levels) = &o.levels {
            self.metrics.levels = levels.clone();
        }
        let ts = |flag: &str, raw: &str| parse_timestamp(raw).map_err(|e| CliError::Validation(format!("{flag}: {e}")));
        if let Some(raw) = &o.from {
            self.snapshots.from = ts("--from", raw)?;
        }
        if let Some(raw) = &o.to {
            self.snapshots.to = ts("--to", raw)?;
        }
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.pools.is_empty() {
            return bad("no pools configured".into());
        }
        for g in [Group::Treatment, Group::Control] {
            if !self.pools.iter().any(|p| p.group == g) {
                return bad(format!("at least one {} pool is required", g.as_str()));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.pools {
            if p.id.is_empty() || p.id.contains(['/', '\\']) || p.id.starts_with('.') {
                return bad(format!("invalid pool id {:?}", p.id));
            }
            if !seen.insert(&p.id) {
                return bad(format!("pool {} listed twice", p.id));
            }
        }
        if self.metrics.levels.is_empty() || self.metrics.levels.contains(&0) {
            return bad("levels must be non-empty and positive".into());
        }
        self.window
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if self.snapshots.step_minutes <= 0 {
            return bad("snapshots.step_minutes must be positive".into());
        }
        if self.snapshots.staleness_hours <= 0 {
            return bad("snapshots.staleness_hours must be positive".into());
        }
        if self.snapshots.from > self.snapshots.to {
            return bad("snapshots.from is after snapshots.to".into());
        }
        Ok(())
    }

    pub fn levels(&self) -> Vec<usize> {
        let mut l = self.metrics.levels.clone();
        l.sort_unstable();
        l.dedup();
        l
    }

    pub fn groups(&self) -> BTreeMap<String, Group> {
        self.pools.iter().map(|p| (p.id.clone(), p.group)).collect()
    }

    pub fn step(&self) -> TimeDelta {
        TimeDelta::minutes(self.snapshots.step_minutes)
    }

    pub fn reconstruct_options(&self) -> ReconstructOptions {
        ReconstructOptions {
            staleness: TimeDelta::hours(self.snapshots.staleness_hours),
            strict_staleness: self.snapshots.strict_staleness,
            coverage_start: self.snapshots.coverage_start,
        }
    }

    pub fn pool_dir(&self, id: &str) -> PathBuf {
        self.data_dir.join("pools").join(id)
    }

    pub fn quotes_path(&self) -> PathBuf {
        self.data_dir.join("quotes.csv")
    }
}
