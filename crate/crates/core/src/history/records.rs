use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HistoryError;
use crate::amm::LiquidityPosition;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Mint,
    Burn,
    /// A position as it stands at the head of the log.
    Position,
}

/// One line of the position/event JSON-lines format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLine {
    pub kind: LineKind,
    pub position_id: String,
    pub owner: String,
    pub tick_lower: i32,
    pub tick_upper: i32,
    #[serde(with = "crate::serde_u128")]
    pub liquidity: u128,
    pub block: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_index: Option<u32>,
    #[serde(with = "crate::time::iso")]
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Mint,
    Burn,
}

/// A liquidity change on one position. A burn may be partial; the position
/// closes when its liquidity reaches zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionEvent {
    pub kind: EventKind,
    pub position_id: String,
    pub owner: String,
    pub lower: i32,
    pub upper: i32,
    pub liquidity_delta: u128,
    pub block: u64,
    pub log_index: Option<u32>,
    pub timestamp: Timestamp,
    /// Position in the input, the last tie-breaker.
    pub seq: usize,
}

impl PositionEvent {
    pub fn order_key(&self) -> (u64, Option<u32>, usize) {
        (self.block, self.log_index, self.seq)
    }

    pub fn to_line(&self) -> RecordLine {
        RecordLine {
            kind: match self.kind {
                EventKind::Mint => LineKind::Mint,
                EventKind::Burn => LineKind::Burn,
            },
            position_id: self.position_id.clone(),
            owner: self.owner.clone(),
            tick_lower: self.lower,
            tick_upper: self.upper,
            liquidity: self.liquidity_delta,
            block: self.block,
            log_index: self.log_index,
            timestamp: self.timestamp,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PositionRecords {
    /// Positions open at the head, sorted by id.
    pub positions: Vec<LiquidityPosition>,
    /// Mints and burns in chain order.
    pub events: Vec<PositionEvent>,
    /// The head came from explicit `position` lines rather than replay.
    pub explicit_head: bool,
}

impl PositionRecords {
    /// Latest timestamp mentioned by any record.
    pub fn latest_timestamp(&self) -> Option<Timestamp> {
        let events = self.events.iter().map(|e| e.timestamp);
        let positions = self.positions.iter().map(|p| p.opened_at);
        events.chain(positions).max()
    }
}

struct Identity {
    owner: String,
    lower: i32,
    upper: i32,
}

/// Parses the position/event stream.
///
/// When the stream carries `position` lines they define the head state;
/// otherwise the head is the result of replaying every mint and burn.
pub fn parse_position_records<R: BufRead>(reader: R) -> Result<PositionRecords, HistoryError> {
    let mut identities: BTreeMap<String, Identity> = BTreeMap::new();
    let mut minted: BTreeMap<String, Timestamp> = BTreeMap::new();
    let mut burns: Vec<(usize, String)> = Vec::new();
    let mut events = Vec::new();
    let mut heads: Vec<(usize, RecordLine)> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| HistoryError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| HistoryError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.tick_lower >= rec.tick_upper {
            return Err(HistoryError::Malformed {
                line: line_no,
                message: format!("tick_lower {} >= tick_upper {}", rec.tick_lower, rec.tick_upper),
            });
        }
        match identities.entry(rec.position_id.clone()) {
            Entry::Vacant(v) => {
                v.insert(Identity {
                    owner: rec.owner.clone(),
                    lower: rec.tick_lower,
                    upper: rec.tick_upper,
                });
            }
            Entry::Occupied(o) => {
                let id = o.get();
                if id.owner != rec.owner || id.lower != rec.tick_lower || id.upper != rec.tick_upper {
                    return Err(HistoryError::ConflictingPosition {
                        line: line_no,
                        position_id: rec.position_id,
                        reason: "owner or range differs from an earlier record".into(),
                    });
                }
            }
        }
        let kind = match rec.kind {
            LineKind::Position => {
                heads.push((line_no, rec));
                continue;
            }
            LineKind::Mint => {
                if rec.liquidity == 0 {
                    return Err(HistoryError::Malformed {
                        line: line_no,
                        message: "mint with zero liquidity".into(),
                    });
                }
                minted
                    .entry(rec.position_id.clone())
                    .and_modify(|t| *t = (*t).min(rec.timestamp))
                    .or_insert(rec.timestamp);
                EventKind::Mint
            }
            LineKind::Burn => {
                burns.push((line_no, rec.position_id.clone()));
                EventKind::Burn
            }
        };
        events.push(PositionEvent {
            kind,
            seq: events.len(),
            position_id: rec.position_id,
            owner: rec.owner,
            lower: rec.tick_lower,
            upper: rec.tick_upper,
            liquidity_delta: rec.liquidity,
            block: rec.block,
            log_index: rec.log_index,
            timestamp: rec.timestamp,
        });
    }

    let head_ids: BTreeMap<&str, usize> = heads.iter().map(|(l, r)| (r.position_id.as_str(), *l)).collect();
    for (line, id) in &burns {
        if !minted.contains_key(id) && !head_ids.contains_key(id.as_str()) {
            return Err(HistoryError::UnknownPosition {
                line: *line,
                position_id: id.clone(),
            });
        }
    }

    events.sort_by_key(|e| e.order_key());
    for w in events.windows(2) {
        if w[1].timestamp < w[0].timestamp {
            return Err(HistoryError::InconsistentLog {
                position_id: w[1].position_id.clone(),
                reason: format!(
                    "block {} is stamped {} but an earlier block is stamped {}",
                    w[1].block, w[1].timestamp, w[0].timestamp
                ),
            });
        }
    }

    let explicit_head = !heads.is_empty();
    let positions = if explicit_head {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for (line, rec) in heads {
            if seen.insert(rec.position_id.clone(), line).is_some() {
                return Err(HistoryError::ConflictingPosition {
                    line,
                    position_id: rec.position_id,
                    reason: "listed twice in the head state".into(),
                });
            }
            if rec.liquidity == 0 {
                continue;
            }
            out.push(LiquidityPosition {
                opened_at: minted.get(&rec.position_id).copied().unwrap_or(rec.timestamp),
                position_id: rec.position_id,
                owner: rec.owner,
                lower: rec.tick_lower,
                upper: rec.tick_upper,
                liquidity: rec.liquidity,
                closed_at: None,
            });
        }
        out
    } else {
        replay(&BTreeMap::new(), &events)?.into_values().collect()
    };

    Ok(PositionRecords {
        positions,
        events,
        explicit_head,
    })
}

pub fn read_position_records(path: &Path) -> Result<PositionRecords, HistoryError> {
    let file = std::fs::File::open(path).map_err(|source| HistoryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_position_records(std::io::BufReader::new(file))
}

/// Writes records in the JSON-lines form read by [`parse_position_records`].
pub fn write_position_records<W: Write>(mut writer: W, records: &[RecordLine]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Applies `events` in order on top of `start`, keyed by position id.
pub(super) fn replay(
    start: &BTreeMap<String, LiquidityPosition>,
    events: &[PositionEvent],
) -> Result<BTreeMap<String, LiquidityPosition>, HistoryError> {
    let mut state = start.clone();
    for e in events {
        apply(&mut state, e)?;
    }
    Ok(state)
}

pub(super) fn apply(state: &mut BTreeMap<String, LiquidityPosition>, e: &PositionEvent) -> Result<(), HistoryError> {
    match e.kind {
        EventKind::Mint => {
            state
                .entry(e.position_id.clone())
                .and_modify(|p| p.liquidity += e.liquidity_delta)
                .or_insert_with(|| LiquidityPosition {
                    position_id: e.position_id.clone(),
                    owner: e.owner.clone(),
                    lower: e.lower,
                    upper: e.upper,
                    liquidity: e.liquidity_delta,
                    opened_at: e.timestamp,
                    closed_at: None,
                });
        }
        EventKind::Burn => {
            let open = state.get(&e.position_id).map_or(0, |p| p.liquidity);
            if e.liquidity_delta > open {
                return Err(HistoryError::InconsistentLog {
                    position_id: e.position_id.clone(),
                    reason: format!("burn of {} exceeds open liquidity {}", e.liquidity_delta, open),
                });
            }
            if e.liquidity_delta == open {
                state.remove(&e.position_id);
            } else if let Some(p) = state.get_mut(&e.position_id) {
                p.liquidity -= e.liquidity_delta;
            }
        }
    }
    Ok(())
}
