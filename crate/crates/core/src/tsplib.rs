//! Reader for the EUC_2D subset of the TSPLIB format.
//!
//! Supported grammar:
//!
//! ```text
//! NAME : <string>
//! TYPE : TSP                      (optional, ignored)
//! COMMENT : <string>              (optional, ignored)
//! DIMENSION : <integer>
//! EDGE_WEIGHT_TYPE : EUC_2D
//! NODE_COORD_SECTION
//! <id> <x> <y>                    (DIMENSION rows, ids 1..=DIMENSION in order)
//! EOF                             (optional)
//! ```
//!
//! Keys are matched case-sensitively, the colon after a key is optional and
//! surrounding whitespace is ignored. Unknown header keys are skipped.
//! Costs are exact Euclidean distances; TSPLIB's nearest-integer rounding is
//! deliberately not applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;

/// The berlin52 instance bundled as a golden fixture.
pub const BERLIN52: &str = include_str!("../data/berlin52.tsp");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCoord {
    /// 1-based index.
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstance {
    pub name: String,
    pub dimension: usize,
    pub coords: Vec<NodeCoord>,
}

impl RawInstance {
    /// Serializes back to TSPLIB text accepted by [`parse_tsplib`].
    pub fn to_tsplib(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("NAME : {}\n", self.name));
        out.push_str("TYPE : TSP\n");
        out.push_str(&format!("DIMENSION : {}\n", self.dimension));
        out.push_str("EDGE_WEIGHT_TYPE : EUC_2D\n");
        out.push_str("NODE_COORD_SECTION\n");
        for c in &self.coords {
            out.push_str(&format!("{} {:?} {:?}\n", c.id, c.x, c.y));
        }
        out.push_str("EOF\n");
        out
    }
}

/// Splits `KEY : VALUE`, `KEY: VALUE` and `KEY VALUE` forms.
fn split_key(line: &str) -> (&str, &str) {
    let line = line.trim();
    let key_end = line.find(|c: char| c == ':' || c.is_whitespace()).unwrap_or(line.len());
    let key = &line[..key_end];
    let rest = line[key_end..].trim_start();
    let rest = rest.strip_prefix(':').unwrap_or(rest).trim();
    (key, rest)
}

pub fn parse_tsplib(text: &str) -> Result<RawInstance> {
    let mut name: Option<String> = None;
    let mut dimension: Option<usize> = None;
    let mut edge_weight_type: Option<String> = None;
    let mut coords = Vec::new();
    let mut in_coords = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        let malformed = |reason: String| Error::MalformedLine { line: lineno, reason };

        if in_coords {
            let first = line.split_whitespace().next().unwrap_or("");
            if first.parse::<usize>().is_err() && first.chars().next().is_some_and(char::is_alphabetic) {
                // Another section begins; anything past the coordinates is unsupported.
                return Err(malformed(format!("unsupported section `{first}`")));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(malformed(format!(
                    "expected `<id> <x> <y>`, found {} fields",
                    fields.len()
                )));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| malformed(format!("bad node id `{}`", fields[0])))?;
            let expected = coords.len() + 1;
            if id != expected {
                return Err(malformed(format!("node id {id}, expected {expected}")));
            }
            let parse_coord = |s: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| malformed(format!("bad coordinate `{s}`")))?;
                if !v.is_finite() {
                    return Err(malformed(format!("non-finite coordinate `{s}`")));
                }
                Ok(v)
            };
            let x = parse_coord(fields[1])?;
            let y = parse_coord(fields[2])?;
            coords.push(NodeCoord { id, x, y });
            continue;
        }

        let (key, value) = split_key(line);
        match key {
            "NAME" => name = Some(value.to_string()),
            "DIMENSION" => {
                let d = value
                    .parse::<usize>()
                    .map_err(|_| malformed(format!("bad DIMENSION `{value}`")))?;
                dimension = Some(d);
            }
            "EDGE_WEIGHT_TYPE" => {
                if value != "EUC_2D" {
                    return Err(Error::UnsupportedEdgeWeightType(value.to_string()));
                }
                edge_weight_type = Some(value.to_string());
            }
            "NODE_COORD_SECTION" => in_coords = true,
            "EDGE_WEIGHT_SECTION" | "DISPLAY_DATA_SECTION" | "TOUR_SECTION" => {
                return Err(malformed(format!("unsupported section `{key}`")));
            }
            _ => {}
        }
    }

    let dimension = dimension.ok_or_else(|| Error::MalformedLine {
        line: 0,
        reason: "missing DIMENSION".into(),
    })?;
    if edge_weight_type.is_none() {
        return Err(Error::MalformedLine {
            line: 0,
            reason: "missing EDGE_WEIGHT_TYPE".into(),
        });
    }
    if !in_coords {
        return Err(Error::MalformedLine {
            line: 0,
            reason: "missing NODE_COORD_SECTION".into(),
        });
    }
    if coords.len() != dimension {
        return Err(Error::DimensionMismatch {
            declared: dimension,
            found: coords.len(),
        });
    }
    if dimension < 3 {
        return Err(Error::OutOfRange {
            what: "DIMENSION",
            value: dimension,
            min: 3,
            max: usize::MAX,
        });
    }
    Ok(RawInstance {
        name: name.unwrap_or_default(),
        dimension,
        coords,
    })
}

/// Keeps the first `n` nodes in file order.
pub fn truncate(raw: &RawInstance, n: usize) -> Result<RawInstance> {
    if n < 3 || n > raw.dimension {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 3,
            max: raw.dimension,
        });
    }
    let coords = raw.coords[..n]
        .iter()
        .enumerate()
        .map(|(i, c)| NodeCoord { id: i + 1, ..*c })
        .collect();
    let name = if n == raw.dimension {
        raw.name.clone()
    } else {
        format!("{}[..{n}]", raw.name)
    };
    Ok(RawInstance {
        name,
        dimension: n,
        coords,
    })
}

/// Builds the complete instance with real Euclidean costs.
pub fn build_costs(raw: &RawInstance) -> Instance {
    let n = raw.dimension;
    let mut costs = vec![0.0; n * n];
    for (i, a) in raw.coords.iter().enumerate() {
        for (j, b) in raw.coords.iter().enumerate().skip(i + 1) {
            let d = (a.x - b.x).hypot(a.y - b.y);
            costs[i * n + j] = d;
            costs[j * n + i] = d;
        }
    }
    Instance::complete(n, costs).expect("euclidean costs form a valid instance")
}

/// Convenience: berlin52 prefix with `n` nodes, complete arc set.
pub fn berlin52_prefix(n: usize) -> Result<Instance> {
    let raw = parse_tsplib(BERLIN52)?;
    Ok(build_costs(&truncate(&raw, n)?))
}
