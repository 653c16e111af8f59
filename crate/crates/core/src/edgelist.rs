//! Readers for the plain-text edge-list formats.
//!
//! Network files hold one `u v conductance` line per edge; `inf` denotes an
//! infinite conductance. Lines starting with `#` are comments and `m z mark`
//! lines (vertex marks written by the sampler) are accepted and ignored.
//! Spatial files additionally carry `v id position` vertex lines.

use crate::electric::Network;
use crate::projection::{SpatialEdge, SpatialNetwork, SpatialVertex};
use crate::{Error, Result};

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse { line, message: format!("missing {what}") })?;
    tok.parse().map_err(|_| Error::Parse { line, message: format!("bad {what} `{tok}`") })
}

fn edge_line(tokens: &[&str], line: usize) -> Result<(i64, i64, f64)> {
    if tokens.len() != 3 {
        return Err(Error::Parse { line, message: format!("expected `u v conductance`, got {} fields", tokens.len()) });
    }
    let u = parse_field(Some(tokens[0]), line, "vertex")?;
    let v = parse_field(Some(tokens[1]), line, "vertex")?;
    let c: f64 = parse_field(Some(tokens[2]), line, "conductance")?;
    if c.is_nan() || c < 0.0 {
        return Err(Error::Parse { line, message: format!("conductance {c} outside [0, inf]") });
    }
    Ok((u, v, c))
}

/// Parses a network edge list. Vertices named on `m` lines are kept even
/// when isolated.
pub fn parse_network(text: &str) -> Result<Network> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = t.split_whitespace().collect();
        if tokens[0] == "m" {
            vertices.push(parse_field(tokens.get(1).copied(), line, "vertex")?);
            continue;
        }
        edges.push(edge_line(&tokens, line)?);
    }
    Network::from_edges(vertices, edges)
}

/// Parses `v id position` vertex lines and `a b conductance` edge lines.
pub fn parse_spatial(text: &str) -> Result<SpatialNetwork> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = t.split_whitespace().collect();
        if tokens[0] == "v" {
            if tokens.len() != 3 {
                return Err(Error::Parse { line, message: "expected `v id position`".into() });
            }
            vertices.push(SpatialVertex {
                id: parse_field(Some(tokens[1]), line, "vertex id")?,
                position: parse_field(Some(tokens[2]), line, "position")?,
            });
            continue;
        }
        let (a, b, conductance) = edge_line(&tokens, line)?;
        edges.push(SpatialEdge { a, b, conductance });
    }
    SpatialNetwork::new(vertices, edges)
}
