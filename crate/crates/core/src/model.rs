//! Kernels, connection functions and the seeded sampler for long-range
//! percolation on a window `{-n, ..., n}` of the integers.
//!
//! Vertices carry i.i.d. `Uniform(0,1)` marks and the pair `{x, y}` is joined
//! independently (given the marks) with probability
//! `connection(kernel(U_x, U_y) * |x - y|)`. A constant kernel gives
//! homogeneous long-range percolation, in which case no marks are drawn.
//! With `backbone` set every nearest-neighbour pair is present with unit
//! conductance.

use std::fmt;
use std::io::{self, Write};

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::electric::Network;
use crate::mc::{seeded_rng, SimRng};
use crate::{Error, Result};

/// The kernel `g: (0,1)^2 -> [0, ∞]` modulating the effective distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `g ≡ value`.
    Constant { value: f64 },
    /// `g(s, t) = (s t)^gamma`.
    Product { gamma: f64 },
    /// `g(s, t) = min(s, t)^gamma`.
    Min { gamma: f64 },
    /// Piecewise constant on a `k x k` grid of the unit square:
    /// `g(s, t) = table[floor(k s)][floor(k t)]`.
    Custom { table: Vec<Vec<f64>> },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Constant { value } => {
                if value.is_nan() || *value < 0.0 {
                    return Err(Error::config(format!("constant kernel value {value} not in [0, inf]")));
                }
            }
            KernelSpec::Product { gamma } | KernelSpec::Min { gamma } => {
                if !gamma.is_finite() || *gamma < 0.0 {
                    return Err(Error::config(format!("kernel exponent {gamma} must be finite and >= 0")));
                }
            }
            KernelSpec::Custom { table } => {
                let k = table.len();
                if k == 0 || table.iter().any(|row| row.len() != k) {
                    return Err(Error::config("custom kernel table must be square and nonempty"));
                }
                if table.iter().flatten().any(|v| v.is_nan() || *v < 0.0) {
                    return Err(Error::config("custom kernel entries must lie in [0, inf]"));
                }
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, KernelSpec::Constant { .. })
    }

    /// Evaluates `g(s, t)`. Marks are assumed to lie in `(0, 1)`.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            KernelSpec::Constant { value } => *value,
            KernelSpec::Product { gamma } => (s * t).powf(*gamma),
            KernelSpec::Min { gamma } => s.min(t).powf(*gamma),
            KernelSpec::Custom { table } => table[cell(s, table.len())][cell(t, table.len())],
        }
    }

    /// A lower bound on `g(u, v)` over all `v >= u`.
    ///
    /// The built-in kernels are non-decreasing in each argument, so the bound
    /// is `g(u, u)`. For tables it is the minimum over the cells that can hold
    /// such a `v`.
    pub fn lower_bound_above(&self, u: f64) -> f64 {
        match self {
            KernelSpec::Constant { value } => *value,
            KernelSpec::Product { gamma } => (u * u).powf(*gamma),
            KernelSpec::Min { gamma } => u.powf(*gamma),
            KernelSpec::Custom { table } => {
                let row = &table[cell(u, table.len())];
                row[cell(u, table.len())..].iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn cell(s: f64, k: usize) -> usize {
    ((s * k as f64) as usize).min(k - 1)
}

/// The connection profile `φ: [0, ∞] -> [0, 1]`, non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConnectionFunction {
    /// `r ↦ min(1, p r^-delta)`.
    Polynomial { p: f64, delta: f64 },
    /// `r ↦ p max(1, r)^-delta`.
    Truncated { p: f64, delta: f64 },
    /// `r ↦ 1{r <= radius}`.
    Indicator { radius: f64 },
}

impl ConnectionFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            ConnectionFunction::Polynomial { p, delta } | ConnectionFunction::Truncated { p, delta } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::config(format!("connection prefactor {p} not in (0, 1]")));
                }
                if !(delta.is_finite() && *delta > 0.0) {
                    return Err(Error::config(format!("decay exponent {delta} must be finite and > 0")));
                }
            }
            ConnectionFunction::Indicator { radius } => {
                if radius.is_nan() || *radius < 0.0 {
                    return Err(Error::config(format!("indicator radius {radius} must be >= 0")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            ConnectionFunction::Polynomial { p, delta } => (p * r.powf(-delta)).min(1.0),
            ConnectionFunction::Truncated { p, delta } => p * r.max(1.0).powf(-delta),
            ConnectionFunction::Indicator { radius } => {
                if r <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// The polynomial decay exponent, if the profile has one.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self {
            ConnectionFunction::Polynomial { delta, .. } | ConnectionFunction::Truncated { delta, .. } => Some(*delta),
            ConnectionFunction::Indicator { .. } => None,
        }
    }
}

fn default_backbone() -> bool {
    true
}

fn default_conductance() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Vertices are `{-window_radius, ..., window_radius}`.
    pub window_radius: i64,
    pub kernel: KernelSpec,
    pub connection: ConnectionFunction,
    /// Include every nearest-neighbour edge with unit conductance.
    #[serde(default = "default_backbone")]
    pub backbone: bool,
    /// Conductance carried by every sampled (non-backbone) edge.
    #[serde(default = "default_conductance")]
    pub long_edge_conductance: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    /// Homogeneous model with `φ = polynomial(p, delta)` on a nearest-neighbour
    /// backbone.
    pub fn homogeneous(window_radius: i64, p: f64, delta: f64, seed: u64) -> Self {
        ModelConfig {
            window_radius,
            kernel: KernelSpec::Constant { value: 1.0 },
            connection: ConnectionFunction::Polynomial { p, delta },
            backbone: true,
            long_edge_conductance: 1.0,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ModelConfig { seed, ..self.clone() }
    }

    pub fn with_window(&self, window_radius: i64) -> Self {
        ModelConfig { window_radius, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_radius < 1 {
            return Err(Error::config(format!("window_radius {} must be >= 1", self.window_radius)));
        }
        if !(self.long_edge_conductance > 0.0) || self.long_edge_conductance.is_nan() {
            return Err(Error::config("long_edge_conductance must be > 0"));
        }
        self.kernel.validate()?;
        self.connection.validate()
    }

    pub fn vertex_count(&self) -> usize {
        (2 * self.window_radius + 1) as usize
    }

    /// Connection probability of the pair `{x, y}` given marks `u` and `v`.
    pub fn edge_probability(&self, x: i64, y: i64, u: f64, v: f64) -> Result<f64> {
        if x == y {
            return Err(Error::domain("edge probability requested for a self-pair"));
        }
        for m in [u, v] {
            if !(m > 0.0 && m < 1.0) {
                return Err(Error::domain(format!("mark {m} outside (0, 1)")));
            }
        }
        Ok(self.pair_probability((x - y).abs(), u, v))
    }

    pub(crate) fn pair_probability(&self, distance: i64, u: f64, v: f64) -> f64 {
        if self.backbone && distance == 1 {
            return 1.0;
        }
        self.connection.eval(self.kernel.eval(u, v) * distance as f64)
    }

    /// Connection probability at `distance` for a constant kernel.
    pub fn homogeneous_probability(&self, distance: i64) -> Option<f64> {
        match self.kernel {
            KernelSpec::Constant { value } => Some(if self.backbone && distance == 1 {
                1.0
            } else {
                self.connection.eval(value * distance as f64)
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEdge {
    pub a: i64,
    pub b: i64,
    pub conductance: f64,
}

impl SampleEdge {
    pub fn length(&self) -> i64 {
        self.b - self.a
    }
}

/// A realized graph on the window. Edges are sorted with `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub config: ModelConfig,
    marks: Option<Vec<f64>>,
    edges: Vec<SampleEdge>,
}

impl GraphSample {
    pub fn window_radius(&self) -> i64 {
        self.config.window_radius
    }

    pub fn vertices(&self) -> impl Iterator<Item = i64> {
        let n = self.config.window_radius;
        -n..=n
    }

    pub fn marks(&self) -> Option<&[f64]> {
        self.marks.as_deref()
    }

    pub fn mark(&self, z: i64) -> Option<f64> {
        let n = self.config.window_radius;
        if z.abs() > n {
            return None;
        }
        self.marks.as_ref().map(|m| m[(z + n) as usize])
    }

    pub fn edges(&self) -> &[SampleEdge] {
        &self.edges
    }

    pub fn degree(&self, z: i64) -> usize {
        self.edges.iter().filter(|e| e.a == z || e.b == z).count()
    }

    /// The electrical network on all window vertices, isolated ones included.
    pub fn to_network(&self) -> Network {
        Network::from_edges(self.vertices(), self.edges.iter().map(|e| (e.a, e.b, e.conductance)))
            .expect("sampled edges carry valid conductances")
    }

    /// Writes the plain-text edge list: a `# n=.. seed=..` header, one
    /// `m z mark` line per vertex when marks exist, then `u v conductance`.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# n={} seed={}", self.config.window_radius, self.config.seed)?;
        if let Some(marks) = &self.marks {
            for (z, m) in self.vertices().zip(marks) {
                writeln!(w, "m {z} {m}")?;
            }
        }
        for e in &self.edges {
            writeln!(w, "{} {} {}", e.a, e.b, e.conductance)?;
        }
        Ok(())
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }
}

impl fmt::Display for GraphSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list_string())
    }
}

/// Number of Bernoulli(`q`) failures before the first success.
fn geometric_skip(rng: &mut SimRng, q: f64) -> i64 {
    if q >= 1.0 {
        0
    } else if q <= 0.0 {
        i64::MAX
    } else {
        let u: f64 = rng.sample(Open01);
        // `as` saturates for huge quotients.
        (u.ln() / (-q).ln_1p()).floor() as i64
    }
}

/// Samples the graph determined by `config` (including its seed).
///
/// Non-backbone pairs are visited with geometric skips under a
/// non-increasing envelope of the connection probability and accepted by
/// thinning, so the cost is proportional to the number of candidates rather
/// than the number of pairs. With marks, each pair is owned by the endpoint
/// with the smaller `(mark, label)`, whose kernel lower bound gives the
/// envelope.
pub fn sample_graph(config: &ModelConfig) -> Result<GraphSample> {
    config.validate()?;
    let n = config.window_radius;
    let count = config.vertex_count();
    let mut rng = seeded_rng(config.seed);

    let marks: Option<Vec<f64>> = if config.kernel.is_constant() {
        None
    } else {
        Some((0..count).map(|_| rng.sample(Open01)).collect())
    };

    let mut edges = Vec::new();
    if config.backbone {
        edges.extend((-n..n).map(|z| SampleEdge { a: z, b: z + 1, conductance: 1.0 }));
    }
    let first_distance = if config.backbone { 2 } else { 1 };
    let c = config.long_edge_conductance;
    let phi = &config.connection;

    match &marks {
        None => {
            let g = match config.kernel {
                KernelSpec::Constant { value } => value,
                _ => unreachable!(),
            };
            for x in -n..=n {
                let max_distance = n - x;
                let probability = |m: i64| phi.eval(g * m as f64);
                scan(&mut rng, first_distance, max_distance, probability, probability, |m| {
                    edges.push(SampleEdge { a: x, b: x + m, conductance: c })
                });
            }
        }
        Some(marks) => {
            let mark = |z: i64| marks[(z + n) as usize];
            for x in -n..=n {
                let u = mark(x);
                let bound = config.kernel.lower_bound_above(u);
                let envelope = |m: i64| phi.eval(bound * m as f64);
                let owned = |y: i64| {
                    let v = mark(y);
                    v > u || (v == u && y > x)
                };
                for dir in [1i64, -1] {
                    let max_distance = if dir > 0 { n - x } else { x + n };
                    scan(
                        &mut rng,
                        first_distance,
                        max_distance,
                        envelope,
                        |m| {
                            let y = x + dir * m;
                            if owned(y) {
                                phi.eval(config.kernel.eval(u, mark(y)) * m as f64)
                            } else {
                                0.0
                            }
                        },
                        |m| {
                            let y = x + dir * m;
                            edges.push(SampleEdge { a: x.min(y), b: x.max(y), conductance: c });
                        },
                    );
                }
            }
        }
    }

    edges.sort_by_key(|e| (e.a, e.b));
    Ok(GraphSample { config: config.clone(), marks, edges })
}

/// Visits distances `first..=last`; distance `m` is accepted with
/// probability `probability(m)`, which must not exceed `envelope(k)` for any
/// `k <= m`.
fn scan(
    rng: &mut SimRng,
    first: i64,
    last: i64,
    envelope: impl Fn(i64) -> f64,
    probability: impl Fn(i64) -> f64,
    mut accept: impl FnMut(i64),
) {
    let mut m = first;
    while m <= last {
        let q = envelope(m);
        if !(q > 0.0) {
            break;
        }
        let skip = geometric_skip(rng, q);
        if skip > last - m {
            break;
        }
        m += skip;
        let p = probability(m);
        if p >= q || rng.random::<f64>() * q < p {
            accept(m);
        }
        m += 1;
    }
}
