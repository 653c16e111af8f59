//! Projection of a network on real positions onto the nearest-neighbour
//! line.
//!
//! The construction, applied in order:
//!
//! 1. every vertex in `[z, z + 1)` is merged into the integer vertex `z`;
//! 2. self-loops created by the merge are removed;
//! 3. an edge of original length `ℓ` becomes a path of `⌈ℓ⌉` edges, each
//!    carrying `⌈ℓ⌉ · C_e` (series-neutral when `ℓ` is an integer);
//! 4. the path is shortened to the integer distance `d` between its merged
//!    endpoints (`d <= ⌈ℓ⌉` always holds); the surplus edges are dropped from
//!    the far end, which is immaterial since they all carry the same value;
//! 5. each path edge is laid onto the matching edge `(z, z + 1)` of `Z_nn`
//!    and conductances are summed.
//!
//! Every step only shorts vertices or replaces a resistor by an equivalent
//! series chain, so effective conductances can only grow.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::electric::Network;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialVertex {
    pub id: i64,
    pub position: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialEdge {
    pub a: i64,
    pub b: i64,
    pub conductance: f64,
}

/// A finite network whose vertices sit at distinct real positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialNetwork {
    vertices: Vec<SpatialVertex>,
    edges: Vec<SpatialEdge>,
}

impl SpatialNetwork {
    pub fn new(vertices: Vec<SpatialVertex>, edges: Vec<SpatialEdge>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(vertices.len());
        for v in &vertices {
            if !v.position.is_finite() {
                return Err(Error::domain(format!("vertex {} has non-finite position", v.id)));
            }
            if ids.insert(v.id, v.position).is_some() {
                return Err(Error::domain(format!("duplicate vertex id {}", v.id)));
            }
        }
        let mut positions: Vec<f64> = vertices.iter().map(|v| v.position).collect();
        positions.sort_by(f64::total_cmp);
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("vertex positions must be distinct"));
        }
        for e in &edges {
            if e.a == e.b {
                return Err(Error::domain(format!("self-loop at vertex {}", e.a)));
            }
            if !ids.contains_key(&e.a) || !ids.contains_key(&e.b) {
                return Err(Error::domain(format!("edge ({}, {}) references an unknown vertex", e.a, e.b)));
            }
            if !(e.conductance > 0.0) {
                return Err(Error::domain(format!("edge ({}, {}) has conductance outside (0, inf]", e.a, e.b)));
            }
        }
        Ok(SpatialNetwork { vertices, edges })
    }

    pub fn vertices(&self) -> &[SpatialVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[SpatialEdge] {
        &self.edges
    }

    pub fn position(&self, id: i64) -> Option<f64> {
        self.vertices.iter().find(|v| v.id == id).map(|v| v.position)
    }

    /// The same network with vertices labelled by id, for conductance
    /// queries on the unprojected graph.
    pub fn to_network(&self) -> Network {
        Network::from_edges(
            self.vertices.iter().map(|v| v.id),
            self.edges.iter().map(|e| (e.a, e.b, e.conductance)),
        )
        .expect("validated conductances")
    }

    /// Ids of the vertices merged into integer vertex `z`.
    pub fn class_of(&self, z: i64) -> Vec<i64> {
        self.vertices.iter().filter(|v| v.position.floor() as i64 == z).map(|v| v.id).collect()
    }

    /// Writes `v id position` lines followed by `a b conductance` lines.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {}", v.id, v.position)?;
        }
        for e in &self.edges {
            writeln!(w, "{} {} {}", e.a, e.b, e.conductance)?;
        }
        Ok(())
    }
}

/// Conductances on consecutive nearest-neighbour edges:
/// `conductances[i]` sits on `(start + i, start + i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZnnProjection {
    pub start: i64,
    pub conductances: Vec<f64>,
}

impl ZnnProjection {
    /// Last integer vertex of the spanned range.
    pub fn end(&self) -> i64 {
        self.start + self.conductances.len() as i64
    }

    /// Conductance on `(z, z + 1)`, zero outside the range.
    pub fn conductance(&self, z: i64) -> f64 {
        if z < self.start || z >= self.end() {
            0.0
        } else {
            self.conductances[(z - self.start) as usize]
        }
    }

    /// Path network on `start..=end`; zero-conductance gaps are absent edges.
    pub fn to_network(&self) -> Network {
        Network::from_edges(
            self.start..=self.end(),
            self.conductances.iter().enumerate().map(|(i, &c)| {
                let z = self.start + i as i64;
                (z, z + 1, c)
            }),
        )
        .expect("projected conductances are non-negative")
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, c) in self.conductances.iter().enumerate() {
            if *c > 0.0 {
                let z = self.start + i as i64;
                writeln!(w, "{} {} {}", z, z + 1, c)?;
            }
        }
        Ok(())
    }
}

/// Number of path edges and the conductance on each when a single edge of
/// length `length` and conductance `conductance` is subdivided.
pub fn subdivide(length: f64, conductance: f64) -> (u64, f64) {
    let k = length.ceil() as u64;
    (k, k as f64 * conductance)
}

pub fn project_to_znn(g: &SpatialNetwork) -> ZnnProjection {
    if g.vertices.is_empty() {
        return ZnnProjection { start: 0, conductances: Vec::new() };
    }
    let floor_of: HashMap<i64, (f64, i64)> =
        g.vertices.iter().map(|v| (v.id, (v.position, v.position.floor() as i64))).collect();
    let start = floor_of.values().map(|&(_, z)| z).min().expect("nonempty");
    let end = floor_of.values().map(|&(_, z)| z).max().expect("nonempty");
    let mut conductances = vec![0.0; (end - start) as usize];

    for e in &g.edges {
        let (xa, za) = floor_of[&e.a];
        let (xb, zb) = floor_of[&e.b];
        if za == zb {
            continue;
        }
        let (k, per_edge) = subdivide((xa - xb).abs(), e.conductance);
        let (lo, hi) = (za.min(zb), za.max(zb));
        debug_assert!((hi - lo) as u64 <= k);
        for z in lo..hi {
            conductances[(z - start) as usize] += per_edge;
        }
    }
    ZnnProjection { start, conductances }
}
