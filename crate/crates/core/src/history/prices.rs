use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HistoryError;
use crate::amm::Price;
use crate::time::Timestamp;

/// Decimal-adjusted pool price at one instant, with the raw tick it maps to
/// when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceSample {
    #[serde(with = "crate::time::iso")]
    pub timestamp: Timestamp,
    pub price: Price,
    pub tick: Option<i32>,
}

/// Price samples with strictly increasing timestamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceSeries {
    samples: Vec<PriceSample>,
}

impl PriceSeries {
    pub fn new(samples: Vec<PriceSample>) -> Result<Self, HistoryError> {
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].timestamp <= w[0].timestamp {
                return Err(HistoryError::PriceSeries {
                    line: i + 3,
                    message: format!("timestamp {} does not increase", w[1].timestamp),
                });
            }
        }
        Ok(Self { samples })
    }

    /// Reads `timestamp,price,tick` CSV with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, HistoryError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut samples = Vec::new();
        for (i, row) in rdr.deserialize::<PriceSample>().enumerate() {
            let sample = row.map_err(|e| HistoryError::PriceSeries {
                line: i + 2,
                message: e.to_string(),
            })?;
            samples.push(sample);
        }
        Self::new(samples)
    }

    pub fn load(path: &Path) -> Result<Self, HistoryError> {
        let file = std::fs::File::open(path).map_err(|source| HistoryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn samples(&self) -> &[PriceSample] {
        &self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Latest sample taken at or before `t`.
    pub fn at_or_before(&self, t: Timestamp) -> Option<&PriceSample> {
        let idx = self.samples.partition_point(|s| s.timestamp <= t);
        idx.checked_sub(1).map(|i| &self.samples[i])
    }
}
