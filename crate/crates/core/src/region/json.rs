//! Region documents:
//!
//! ```json
//! {"dimension": 2,
//!  "vertices": [[[0,1],[0,1]], [[3,4],[0,1]]],
//!  "inequalities": [{"normal": [[1,1],[1,1]], "offset": [3,4]}],
//!  "downward_closed": true}
//! ```
//!
//! Rational coordinates are `[numerator, denominator]` pairs; float regions
//! write plain numbers.

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::{Coord, Halfspace, RateRegion, Q};

/// Largest numerator or denominator magnitude accepted from a file. Keeps
/// every membership check comfortably inside `i128`.
pub const MAX_COMPONENT: i128 = 1_000_000;
/// Largest vertex or inequality count accepted from a file.
pub const MAX_ITEMS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionParseError {
    #[error("malformed region JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("vertex {vertex} violates inequality {inequality}")]
    Inconsistent { vertex: usize, inequality: usize },
}

/// Coordinates that know their JSON form.
pub trait JsonCoord: Coord {
    fn to_value(self) -> Value;
}

impl JsonCoord for Q {
    fn to_value(self) -> Value {
        json!([*self.numer(), *self.denom()])
    }
}

impl JsonCoord for f64 {
    fn to_value(self) -> Value {
        json!(self)
    }
}

pub fn region_to_value<T: JsonCoord>(r: &RateRegion<T>) -> Value {
    let point = |p: &[T]| Value::Array(p.iter().map(|&c| c.to_value()).collect());
    json!({
        "dimension": r.dimension(),
        "vertices": r.vertices().iter().map(|v| point(v)).collect::<Vec<_>>(),
        "inequalities": r.inequalities().iter().map(|h| json!({
            "normal": point(&h.normal),
            "offset": h.offset.to_value(),
        })).collect::<Vec<_>>(),
        "downward_closed": r.downward_closed(),
    })
}

pub fn region_to_json<T: JsonCoord>(r: &RateRegion<T>) -> String {
    serde_json::to_string_pretty(&region_to_value(r)).expect("region serialization cannot fail")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHalfspace {
    normal: Vec<[i128; 2]>,
    offset: [i128; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    dimension: usize,
    vertices: Vec<Vec<[i128; 2]>>,
    inequalities: Vec<RawHalfspace>,
    downward_closed: bool,
}

fn rational(pair: [i128; 2], what: &str) -> Result<Q, RegionParseError> {
    let [n, d] = pair;
    if d == 0 {
        return Err(RegionParseError::Invalid(format!("{what}: zero denominator")));
    }
    if n.abs() > MAX_COMPONENT || d.abs() > MAX_COMPONENT {
        return Err(RegionParseError::Invalid(format!(
            "{what}: components must not exceed {MAX_COMPONENT} in magnitude"
        )));
    }
    Ok(Q::new(n, d))
}

fn coords(raw: &[[i128; 2]], dim: usize, what: &str) -> Result<Vec<Q>, RegionParseError> {
    if raw.len() != dim {
        return Err(RegionParseError::Invalid(format!("{what}: expected {dim} coordinates, found {}", raw.len())));
    }
    raw.iter().map(|&p| rational(p, what)).collect()
}

/// Parses an exact region and checks that every vertex satisfies every
/// inequality.
pub fn region_from_json(text: &str) -> Result<RateRegion<Q>, RegionParseError> {
    let raw: RawRegion = serde_json::from_str(text).map_err(|e| RegionParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let dim = raw.dimension;
    if !(2..=3).contains(&dim) {
        return Err(RegionParseError::Invalid(format!("dimension {dim} is not 2 or 3")));
    }
    if raw.vertices.len() > MAX_ITEMS || raw.inequalities.len() > MAX_ITEMS {
        return Err(RegionParseError::Invalid(format!("more than {MAX_ITEMS} vertices or inequalities")));
    }

    let vertices = raw
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| coords(v, dim, &format!("vertex {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let inequalities = raw
        .inequalities
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let what = format!("inequality {i}");
            Ok(Halfspace::new(coords(&h.normal, dim, &what)?, rational(h.offset, &what)?))
        })
        .collect::<Result<Vec<_>, RegionParseError>>()?;

    if raw.downward_closed {
        if let Some(i) = vertices.iter().position(|v| v.iter().any(|&c| c < Q::zero())) {
            return Err(RegionParseError::Invalid(format!(
                "vertex {i} has a negative coordinate in a downward-closed region"
            )));
        }
    }
    for (vi, v) in vertices.iter().enumerate() {
        if let Some(ii) = inequalities.iter().position(|h| !h.holds(v)) {
            return Err(RegionParseError::Inconsistent { vertex: vi, inequality: ii });
        }
    }
    Ok(RateRegion::from_parts(dim, vertices, inequalities, raw.downward_closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::time_share;

    #[test]
    fn round_trip() {
        let pts =
            vec![vec![Q::new(3, 4), Q::new(0, 1)], vec![Q::new(0, 1), Q::new(3, 4)], vec![Q::new(1, 2), Q::new(1, 2)]];
        let r = time_share(&pts).unwrap();
        let text = region_to_json(&r);
        assert!(text.contains("\"downward_closed\": true"));
        assert_eq!(region_from_json(&text).unwrap(), r);
    }

    #[test]
    fn float_regions_serialize_as_numbers() {
        let r = time_share(&[vec![0.5, 0.25]]).unwrap();
        let v = region_to_value(&r);
        assert_eq!(v["vertices"][1], json!([0.5, 0.0]));
    }

    #[test]
    fn rejects_bad_documents() {
        let bad_den = r#"{"dimension":2,"vertices":[[[1,0],[0,1]]],"inequalities":[],"downward_closed":true}"#;
        assert!(matches!(region_from_json(bad_den), Err(RegionParseError::Invalid(_))));
        let bad_dim = r#"{"dimension":4,"vertices":[],"inequalities":[],"downward_closed":true}"#;
        assert!(region_from_json(bad_dim).is_err());
        let outside = r#"{"dimension":2,"vertices":[[[1,1],[1,1]]],
            "inequalities":[{"normal":[[1,1],[1,1]],"offset":[1,1]}],"downward_closed":true}"#;
        assert_eq!(region_from_json(outside), Err(RegionParseError::Inconsistent { vertex: 0, inequality: 0 }));
        let huge = r#"{"dimension":2,"vertices":[[[10000000,1],[0,1]]],"inequalities":[],"downward_closed":true}"#;
        assert!(region_from_json(huge).is_err());
        assert!(matches!(region_from_json("{"), Err(RegionParseError::Syntax { .. })));
    }
}
