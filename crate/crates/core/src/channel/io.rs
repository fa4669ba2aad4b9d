//! JSON channel files.
//!
//! ```json
//! {"M": 2, "N1": 1, "N2": 1, "J1": 1, "J2": 1,
//!  "matrices": {"H_1_1": [[0.3, -1.2], [0.7, 0.1]], "H_2_1": [...]}}
//! ```
//!
//! Each matrix is a flat row-major array of `[re, im]` pairs. Floats are
//! written in shortest round-trip form, so save followed by load is lossless.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChannelError, CompoundChannelSet, User, MAX_DIMENSION};
use crate::matcore::ComplexMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelParseError {
    #[error("malformed channel JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field {field}: {message}")]
    Field { field: String, message: String },
    #[error("matrix {name}: expected {expected} entries ({rows}x{cols}), found {found}")]
    Shape { name: String, rows: usize, cols: usize, expected: usize, found: usize },
    #[error("matrix {name} is missing")]
    MissingMatrix { name: String },
    #[error("unexpected matrix key {name}")]
    UnexpectedMatrix { name: String },
    #[error("matrix {name}: entry {index} is not finite")]
    NonFinite { name: String, index: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N1")]
    n1: usize,
    #[serde(rename = "N2")]
    n2: usize,
    #[serde(rename = "J1")]
    j1: usize,
    #[serde(rename = "J2")]
    j2: usize,
    matrices: BTreeMap<String, Vec<[f64; 2]>>,
}

fn key(k: User, j: usize) -> String {
    format!("H_{}_{}", k.number(), j + 1)
}

struct Entries<'a>(&'a ComplexMatrix);

impl Serialize for Entries<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.as_slice().iter().map(|z| [z.re, z.im]))
    }
}

struct Matrices<'a>(&'a CompoundChannelSet);

impl Serialize for Matrices<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let ch = self.0;
        let mut map = s.serialize_map(Some(ch.states(User::One) + ch.states(User::Two)))?;
        for k in User::BOTH {
            for (j, h) in ch.matrices(k).iter().enumerate() {
                map.serialize_entry(&key(k, j), &Entries(h))?;
            }
        }
        map.end()
    }
}

#[derive(Serialize)]
struct ChannelFile<'a> {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N1")]
    n1: usize,
    #[serde(rename = "N2")]
    n2: usize,
    #[serde(rename = "J1")]
    j1: usize,
    #[serde(rename = "J2")]
    j2: usize,
    matrices: Matrices<'a>,
}

/// Serializes a channel; matrix keys appear in natural state order.
pub fn channel_to_json(ch: &CompoundChannelSet) -> String {
    let file = ChannelFile {
        m: ch.m(),
        n1: ch.antennas(User::One),
        n2: ch.antennas(User::Two),
        j1: ch.states(User::One),
        j2: ch.states(User::Two),
        matrices: Matrices(ch),
    };
    serde_json::to_string_pretty(&file).expect("channel serialization cannot fail")
}

/// Parses and validates a channel document.
pub fn channel_from_json(text: &str) -> Result<CompoundChannelSet, ChannelParseError> {
    let raw: RawChannel = serde_json::from_str(text).map_err(|e| ChannelParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    for (name, v) in [("M", raw.m), ("N1", raw.n1), ("N2", raw.n2), ("J1", raw.j1), ("J2", raw.j2)] {
        if v == 0 || v > MAX_DIMENSION {
            return Err(ChannelParseError::Field {
                field: name.into(),
                message: format!("{v} is outside 1..={MAX_DIMENSION}"),
            });
        }
    }

    let mut remaining = raw.matrices;
    let mut users: [Vec<ComplexMatrix>; 2] = [Vec::new(), Vec::new()];
    for (k, n, states) in [(User::One, raw.n1, raw.j1), (User::Two, raw.n2, raw.j2)] {
        for j in 0..states {
            let name = key(k, j);
            let entries =
                remaining.remove(&name).ok_or_else(|| ChannelParseError::MissingMatrix { name: name.clone() })?;
            let expected = n * raw.m;
            if entries.len() != expected {
                return Err(ChannelParseError::Shape { name, rows: n, cols: raw.m, expected, found: entries.len() });
            }
            if let Some(index) = entries.iter().position(|[re, im]| !re.is_finite() || !im.is_finite()) {
                return Err(ChannelParseError::NonFinite { name, index });
            }
            let data = entries.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
            let h = ComplexMatrix::from_row_major(n, raw.m, data).expect("shape and finiteness already checked");
            users[k.index()].push(h);
        }
    }
    if let Some(name) = remaining.into_keys().next() {
        return Err(ChannelParseError::UnexpectedMatrix { name });
    }

    let [h1, h2] = users;
    Ok(CompoundChannelSet::new(raw.m, raw.n1, raw.n2, h1, h2).expect("counts and shapes already validated"))
}

pub fn save_channel(ch: &CompoundChannelSet, path: impl AsRef<Path>) -> Result<(), ChannelError> {
    let path = path.as_ref();
    std::fs::write(path, channel_to_json(ch) + "\n")
        .map_err(|source| ChannelError::Io { path: path.display().to_string(), source })
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<CompoundChannelSet, ChannelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ChannelError::Io { path: path.display().to_string(), source })?;
    Ok(channel_from_json(&text)?)
}
