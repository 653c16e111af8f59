use std::collections::BTreeMap;

use crate::{Error, Result};

/// Normalized electrical network in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    /// Sorted distinct original labels.
    labels: Vec<i64>,
    /// `node_of_label[i]` is the node holding `labels[i]`.
    node_of_label: Vec<usize>,
    members: Vec<Vec<i64>>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    /// Running sums of `weights` within each row.
    cumulative: Vec<f64>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

impl Network {
    /// Builds a network from vertex labels and `(u, v, conductance)` edges.
    /// Endpoints missing from `vertices` are added.
    pub fn from_edges<V, E>(vertices: V, edges: E) -> Result<Network>
    where
        V: IntoIterator<Item = i64>,
        E: IntoIterator<Item = (i64, i64, f64)>,
    {
        let edges: Vec<(i64, i64, f64)> = edges.into_iter().collect();
        let mut labels: Vec<i64> = vertices.into_iter().collect();
        labels.extend(edges.iter().flat_map(|&(u, v, _)| [u, v]));
        labels.sort_unstable();
        labels.dedup();

        let index = |z: i64| labels.binary_search(&z).expect("label collected above");
        let mut uf = UnionFind::new(labels.len());
        let mut finite = Vec::with_capacity(edges.len());
        for &(u, v, c) in &edges {
            if c.is_nan() || c < 0.0 {
                return Err(Error::domain(format!("edge ({u}, {v}) has invalid conductance {c}")));
            }
            if c == f64::INFINITY {
                uf.union(index(u), index(v));
            } else if c > 0.0 && u != v {
                finite.push((index(u), index(v), c));
            }
        }
        Ok(Self::assemble(labels, uf, &finite))
    }

    fn assemble(labels: Vec<i64>, mut uf: UnionFind, edges: &[(usize, usize, f64)]) -> Network {
        let mut node_of_root = vec![usize::MAX; labels.len()];
        let mut node_of_label = Vec::with_capacity(labels.len());
        let mut members: Vec<Vec<i64>> = Vec::new();
        for (i, &z) in labels.iter().enumerate() {
            let r = uf.find(i);
            if node_of_root[r] == usize::MAX {
                node_of_root[r] = members.len();
                members.push(Vec::new());
            }
            node_of_label.push(node_of_root[r]);
            members[node_of_root[r]].push(z);
        }

        let mut summed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, c) in edges {
            let (a, b) = (node_of_label[i], node_of_label[j]);
            if a != b {
                *summed.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
            }
        }

        let n = members.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(a, b), &c) in &summed {
            rows[a].push((b, c));
            rows[b].push((a, c));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut cumulative = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(t, _)| t);
            let mut acc = 0.0;
            for &(t, c) in row.iter() {
                acc += c;
                targets.push(t);
                weights.push(c);
                cumulative.push(acc);
            }
            offsets.push(targets.len());
        }
        Network { labels, node_of_label, members, offsets, targets, weights, cumulative }
    }

    pub fn node_count(&self) -> usize {
        self.members.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn node_of(&self, label: i64) -> Option<usize> {
        self.labels.binary_search(&label).ok().map(|i| self.node_of_label[i])
    }

    /// Original labels merged into `node`, ascending.
    pub fn members(&self, node: usize) -> &[i64] {
        &self.members[node]
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.targets[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Total conductance incident to `node`.
    pub fn total_conductance(&self, node: usize) -> f64 {
        let (lo, hi) = (self.offsets[node], self.offsets[node + 1]);
        if lo == hi {
            0.0
        } else {
            self.cumulative[hi - 1]
        }
    }

    pub(crate) fn row_cumulative(&self, node: usize) -> (&[usize], &[f64]) {
        let range = self.offsets[node]..self.offsets[node + 1];
        (&self.targets[range.clone()], &self.cumulative[range])
    }

    /// Summed conductance between two nodes (0 when not adjacent).
    pub fn conductance_between(&self, a: usize, b: usize) -> f64 {
        self.neighbors(a).find(|&(t, _)| t == b).map_or(0.0, |(_, c)| c)
    }

    /// Edges as `(a, b, conductance)` node triples with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        (0..self.node_count())
            .flat_map(|a| self.neighbors(a).filter(move |&(b, _)| b > a).map(move |(b, c)| (a, b, c)))
            .collect()
    }

    /// Edges expressed through the smallest label of each endpoint class.
    pub fn labelled_edges(&self) -> Vec<(i64, i64, f64)> {
        self.edges()
            .into_iter()
            .map(|(a, b, c)| (self.members[a][0], self.members[b][0], c))
            .collect()
    }

    /// Nodes reachable from `start`.
    pub fn component(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(x) = stack.pop() {
            for (y, _) in self.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    /// Identifies every label in `set` with a single node.
    pub fn contract(&self, set: &[i64]) -> Result<Network> {
        if set.is_empty() {
            return Err(Error::domain("cannot contract an empty vertex set"));
        }
        let mut idx = Vec::with_capacity(set.len());
        for &z in set {
            match self.labels.binary_search(&z) {
                Ok(i) => idx.push(i),
                Err(_) => return Err(Error::domain(format!("unknown vertex {z}"))),
            }
        }
        let mut uf = UnionFind::new(self.labels.len());
        let first_index: Vec<usize> = self
            .members
            .iter()
            .map(|m| self.labels.binary_search(&m[0]).expect("member is a label"))
            .collect();
        for (i, &node) in self.node_of_label.iter().enumerate() {
            uf.union(i, first_index[node]);
        }
        for &i in &idx[1..] {
            uf.union(idx[0], i);
        }
        let edges: Vec<(usize, usize, f64)> = self
            .edges()
            .into_iter()
            .map(|(a, b, c)| (first_index[a], first_index[b], c))
            .collect();
        Ok(Self::assemble(self.labels.clone(), uf, &edges))
    }
}

/// Source and sink label sets for an effective conductance query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalPair {
    source: Vec<i64>,
    sink: Vec<i64>,
}

impl TerminalPair {
    pub fn new(source: Vec<i64>, sink: Vec<i64>) -> Result<TerminalPair> {
        if source.is_empty() || sink.is_empty() {
            return Err(Error::domain("terminal sets must be nonempty"));
        }
        if source.iter().any(|z| sink.contains(z)) {
            return Err(Error::domain("terminal sets must be disjoint"));
        }
        Ok(TerminalPair { source, sink })
    }

    pub fn single(source: i64, sink: i64) -> Result<TerminalPair> {
        Self::new(vec![source], vec![sink])
    }

    pub fn source(&self) -> &[i64] {
        &self.source
    }

    pub fn sink(&self) -> &[i64] {
        &self.sink
    }

    pub fn reversed(&self) -> TerminalPair {
        TerminalPair { source: self.sink.clone(), sink: self.source.clone() }
    }
}

/// Conductance of resistors in series: `(Σ 1/c)^-1` with `1/∞ = 0`,
/// `1/0 = ∞` and `∞^-1 = 0`.
pub fn series_chain_conductance(conductances: &[f64]) -> Result<f64> {
    if conductances.is_empty() {
        return Err(Error::domain("series chain needs at least one conductance"));
    }
    let mut resistance = 0.0;
    for &c in conductances {
        if c.is_nan() || c < 0.0 {
            return Err(Error::domain(format!("invalid conductance {c}")));
        }
        if c == 0.0 {
            return Ok(0.0);
        }
        resistance += 1.0 / c;
    }
    Ok(if resistance == 0.0 { f64::INFINITY } else { 1.0 / resistance })
}
