//! Feature cache: one header line and one value line per record.
//!
//! ```text
//! iris-features 1
//! record class00/image00.pgm label 0 split train dim 5907 tag lbp-p8-r1-u2-stats7
//! 0.0125 0 0.3 ...
//! ```
//!
//! Values use shortest round-trip formatting, so a write/read cycle is bit-exact.

use std::fmt::Write as _;

use super::FeatureVector;
use crate::dataset::Split;
use crate::error::{Error, Result};

pub const CACHE_HEADER: &str = "iris-features 1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub split: Option<Split>,
    pub vector: FeatureVector,
}

pub fn write_cache(records: &[FeatureRecord]) -> String {
    let mut s = String::from(CACHE_HEADER);
    s.push('\n');
    for r in records {
        let label = r.vector.label.map_or("-".to_string(), |l| l.to_string());
        let split = r.split.map_or("-".to_string(), |s| s.to_string());
        let _ = writeln!(
            s,
            "record {} label {} split {} dim {} tag {}",
            r.id,
            label,
            split,
            r.vector.dimension(),
            r.vector.config_tag
        );
        let mut first = true;
        for v in &r.vector.values {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

/// Parses a cache; every record must share the first record's dimension, or
/// `expected_dim` when given.
pub fn read_cache(text: &str, expected_dim: Option<usize>) -> Result<Vec<FeatureRecord>> {
    let err = |line: usize, reason: String| Error::Format {
        what: "feature cache",
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == CACHE_HEADER => {}
        _ => return Err(err(1, format!("expected header {CACHE_HEADER:?}"))),
    }
    let mut records = Vec::new();
    let mut dim = expected_dim;
    while let Some((i, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let ["record", id, "label", label, "split", split, "dim", d, "tag", tag] = f[..] else {
            return Err(err(i + 1, "malformed record header".into()));
        };
        let label = match label {
            "-" => None,
            l => Some(
                l.parse()
                    .map_err(|_| err(i + 1, format!("bad label {l:?}")))?,
            ),
        };
        let split = match split {
            "-" => None,
            s => Some(s.parse().map_err(|e| err(i + 1, e))?),
        };
        let declared: usize = d
            .parse()
            .map_err(|_| err(i + 1, format!("bad dimension {d:?}")))?;
        let Some((j, body)) = lines.next() else {
            return Err(err(i + 2, format!("record {id} has no values")));
        };
        let values = body
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(j + 1, format!("bad value: {e}")))?;
        let expected = *dim.get_or_insert(declared);
        for actual in [declared, values.len()] {
            if actual != expected {
                return Err(Error::RecordDimension {
                    record: id.to_string(),
                    expected,
                    actual,
                });
            }
        }
        records.push(FeatureRecord {
            id: id.to_string(),
            split,
            vector: FeatureVector {
                values,
                config_tag: tag.to_string(),
                label,
            },
        });
    }
    Ok(records)
}
