//! Paginated client for a position/event subgraph, with an on-disk page
//! cache that makes re-runs work offline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::DateTime;
use serde_json::{json, Value};

use super::records::{LineKind, RecordLine};
use crate::serde_u128::parse_liquidity;

/// Version of the record schema this client understands.
pub const SCHEMA_VERSION: &str = "poolscope-subgraph/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Positions,
    Mints,
    Burns,
}

impl RecordKind {
    pub const ALL: [RecordKind; 3] = [RecordKind::Positions, RecordKind::Mints, RecordKind::Burns];

    pub fn entity(self) -> &'static str {
        match self {
            RecordKind::Positions => "positions",
            RecordKind::Mints => "mints",
            RecordKind::Burns => "burns",
        }
    }

    fn selection(self) -> &'static str {
        match self {
            RecordKind::Positions => {
                "id owner tickLower { tickIdx } tickUpper { tickIdx } liquidity \
                 transaction { blockNumber timestamp }"
            }
            RecordKind::Mints | RecordKind::Burns => {
                "id position { id } owner tickLower tickUpper amount logIndex \
                 transaction { blockNumber timestamp }"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchConfig {
    pub endpoint: String,
    pub cache_dir: Option<PathBuf>,
    pub page_size: usize,
    pub max_retries: u32,
    pub base_delay: Duration,
    pub timeout: Duration,
    /// Serve from cache only; a miss is an error.
    pub offline: bool,
}

impl FetchConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            cache_dir: None,
            page_size: 1000,
            max_retries: 5,
            base_delay: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
            offline: false,
        }
    }
}

/// One page of raw records plus the cursor for the next request.
#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub records: Vec<Value>,
    pub next_cursor: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("{endpoint}: HTTP {status}: {body}")]
    Http {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("{endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("{endpoint}: GraphQL errors: {messages}")]
    GraphQl { endpoint: String, messages: String },
    #[error("response does not match schema {version}: {detail}")]
    Schema { version: &'static str, detail: String },
    #[error("offline and no cached page at {}", path.display())]
    Offline { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FetchError {
    fn is_transient(&self) -> bool {
        match self {
            FetchError::Transport { .. } => true,
            FetchError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub struct SubgraphClient {
    config: FetchConfig,
    agent: ureq::Agent,
}

impl SubgraphClient {
    pub fn new(config: FetchConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &FetchConfig {
        &self.config
    }

    /// Records of `kind` with id greater than `cursor`, in id order.
    /// Repeated calls with the same arguments return the same page.
    pub fn fetch_page(&self, pool_id: &str, kind: RecordKind, cursor: &str) -> Result<Page, FetchError> {
        let cache_path = self.cache_path(pool_id, kind, cursor);
        if let Some(path) = &cache_path {
            if path.exists() {
                let body = std::fs::read_to_string(path).map_err(|source| FetchError::Io {
                    path: path.clone(),
                    source,
                })?;
                return self.parse_page(kind, &body);
            }
            if self.config.offline {
                return Err(FetchError::Offline { path: path.clone() });
            }
        } else if self.config.offline {
            return Err(FetchError::Offline {
                path: PathBuf::from("<no cache directory>"),
            });
        }

        let body = self.post_with_retry(pool_id, kind, cursor)?;
        let page = self.parse_page(kind, &body)?;
        if let Some(path) = cache_path {
            write_once(&path, body.as_bytes())?;
        }
        Ok(page)
    }

    /// Every record of `kind` for the pool, following cursors to the end.
    pub fn fetch_all(&self, pool_id: &str, kind: RecordKind) -> Result<Vec<Value>, FetchError> {
        let mut out = Vec::new();
        let mut cursor = String::new();
        loop {
            let page = self.fetch_page(pool_id, kind, &cursor)?;
            out.extend(page.records);
            match page.next_cursor {
                Some(next) => cursor = next,
                None => return Ok(out),
            }
        }
    }

    /// Positions, mints and burns for the pool as JSON-lines records.
    pub fn fetch_records(&self, pool_id: &str) -> Result<Vec<RecordLine>, FetchError> {
        let mut lines = Vec::new();
        for kind in RecordKind::ALL {
            for raw in self.fetch_all(pool_id, kind)? {
                lines.push(record_from_raw(kind, &raw)?);
            }
        }
        Ok(lines)
    }

    fn cache_path(&self, pool_id: &str, kind: RecordKind, cursor: &str) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        Some(
            dir.join(encode_component(pool_id))
                .join(format!("{}@{}.json", kind.entity(), encode_component(cursor))),
        )
    }

    fn post_with_retry(&self, pool_id: &str, kind: RecordKind, cursor: &str) -> Result<String, FetchError> {
        let query = format!(
            "query($pool: String!, $cursor: String!, $first: Int!) {{ {}(first: $first, orderBy: id, \
             orderDirection: asc, where: {{ pool: $pool, id_gt: $cursor }}) {{ {} }} }}",
            kind.entity(),
            kind.selection()
        );
        let payload = json!({
            "query": query,
            "variables": {"pool": pool_id, "cursor": cursor, "first": self.config.page_size},
        })
        .to_string();

        let mut attempt = 0;
        loop {
            match self.post(&payload) {
                Ok(body) => return Ok(body),
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    let delay = self.config.base_delay * 2u32.pow(attempt);
                    log::warn!("{e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn post(&self, payload: &str) -> Result<String, FetchError> {
        let endpoint = &self.config.endpoint;
        let transport = |e: ureq::Error| FetchError::Transport {
            endpoint: endpoint.clone(),
            message: e.to_string(),
        };
        let mut resp = self
            .agent
            .post(endpoint)
            .header("content-type", "application/json")
            .send(payload)
            .map_err(transport)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(transport)?;
        if !(200..300).contains(&status) {
            return Err(FetchError::Http {
                endpoint: endpoint.clone(),
                status,
                body: body.chars().take(200).collect(),
            });
        }
        Ok(body)
    }

    fn parse_page(&self, kind: RecordKind, body: &str) -> Result<Page, FetchError> {
        let doc: Value = serde_json::from_str(body).map_err(|e| schema(format!("body is not JSON: {e}")))?;
        if let Some(errors) = doc.get("errors").and_then(Value::as_array) {
            let messages: Vec<_> = errors
                .iter()
                .map(|e| e.get("message").and_then(Value::as_str).unwrap_or("?").to_string())
                .collect();
            return Err(FetchError::GraphQl {
                endpoint: self.config.endpoint.clone(),
                messages: messages.join("; "),
            });
        }
        let records = doc
            .get("data")
            .and_then(|d| d.get(kind.entity()))
            .and_then(Value::as_array)
            .ok_or_else(|| schema(format!("missing data.{}", kind.entity())))?;
        let mut last_id = None;
        for r in records {
            last_id = Some(
                r.get("id")
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema(format!("{} record without string id", kind.entity())))?,
            );
        }
        let next_cursor = if records.len() >= self.config.page_size {
            last_id.map(str::to_string)
        } else {
            None
        };
        Ok(Page {
            records: records.clone(),
            next_cursor,
        })
    }
}

fn schema(detail: String) -> FetchError {
    FetchError::Schema {
        version: SCHEMA_VERSION,
        detail,
    }
}

fn write_once(path: &Path, bytes: &[u8]) -> Result<(), FetchError> {
    let io = |source| FetchError::Io {
        path: path.to_path_buf(),
        source,
    };
    if path.exists() {
        return Ok(());
    }
    let dir = path.parent().expect("cache path has a parent");
    std::fs::create_dir_all(dir).map_err(io)?;
    let tmp = path.with_extension("json.partial");
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Keeps `[A-Za-z0-9._-]` and percent-encodes every other byte.
fn encode_component(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-') {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

fn field<'a>(raw: &'a Value, path: &[&str]) -> Result<&'a Value, FetchError> {
    let mut v = raw;
    for key in path {
        v = v
            .get(key)
            .ok_or_else(|| schema(format!("missing field {}", path.join("."))))?;
    }
    Ok(v)
}

fn text(raw: &Value, path: &[&str]) -> Result<String, FetchError> {
    match field(raw, path)? {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(schema(format!("{} has unexpected value {other}", path.join(".")))),
    }
}

fn integer<T: std::str::FromStr>(raw: &Value, path: &[&str]) -> Result<T, FetchError> {
    let s = text(raw, path)?;
    s.parse()
        .map_err(|_| schema(format!("{} is not an integer: {s:?}", path.join("."))))
}

/// Converts one raw subgraph record into the JSON-lines form.
pub fn record_from_raw(kind: RecordKind, raw: &Value) -> Result<RecordLine, FetchError> {
    let ts: i64 = integer(raw, &["transaction", "timestamp"])?;
    let timestamp = DateTime::from_timestamp(ts, 0).ok_or_else(|| schema(format!("timestamp {ts} out of range")))?;
    let block = integer(raw, &["transaction", "blockNumber"])?;
    let line = match kind {
        RecordKind::Positions => RecordLine {
            kind: LineKind::Position,
            position_id: text(raw, &["id"])?,
            owner: text(raw, &["owner"])?,
            tick_lower: integer(raw, &["tickLower", "tickIdx"])?,
            tick_upper: integer(raw, &["tickUpper", "tickIdx"])?,
            liquidity: parse_liquidity(&text(raw, &["liquidity"])?).map_err(schema)?,
            block,
            log_index: None,
            timestamp,
        },
        RecordKind::Mints | RecordKind::Burns => RecordLine {
            kind: if kind == RecordKind::Mints {
                LineKind::Mint
            } else {
                LineKind::Burn
            },
            position_id: text(raw, &["position", "id"])?,
            owner: text(raw, &["owner"])?,
            tick_lower: integer(raw, &["tickLower"])?,
            tick_upper: integer(raw, &["tickUpper"])?,
            liquidity: parse_liquidity(&text(raw, &["amount"])?).map_err(schema)?,
            block,
            log_index: Some(integer(raw, &["logIndex"])?),
            timestamp,
        },
    };
    Ok(line)
}
