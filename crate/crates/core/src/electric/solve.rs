//! Effective conductance by Kirchhoff solves.
//!
//! The source set is contracted to a node `a` and the sink set is grounded.
//! The direct solver eliminates every other node by star-mesh transforms,
//! which keep all quantities as sums of positive conductances. Each pivot is
//! recomputed as the total conductance still attached to the node instead of
//! being updated by subtraction, so conductances spanning many orders of
//! magnitude lose no relative accuracy. What remains attached between `a`
//! and ground is the effective conductance.

use crate::electric::{Network, TerminalPair};
use crate::{Error, Result};

/// Linear solver used for the reduced Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolverKind {
    /// Elimination when the predicted fill is small enough, conjugate
    /// gradients otherwise.
    #[default]
    Auto,
    /// Sparse star-mesh elimination in node order, source last.
    Elimination,
    /// Jacobi-preconditioned conjugate gradients, stopped at the given
    /// relative residual.
    Iterative { tolerance: f64 },
}

pub const DEFAULT_CG_TOLERANCE: f64 = 1e-12;

/// Upper bound on `Σ width²` over envelope rows for `Auto` to pick
/// elimination. Fill-in never leaves the row envelope of the node order.
const ENVELOPE_WORK_BUDGET: f64 = 2e8;

/// The harmonic potential with value 1 on the source class and 0 on the sink
/// class, together with the conductance and the Dirichlet energy of the
/// potential.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSolution {
    /// Per node. Nodes not reachable from the source without crossing the
    /// sink carry 0, except when the sink is unreachable, in which case the
    /// whole source component sits at 1.
    pub potential: Vec<f64>,
    pub conductance: f64,
    pub energy: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Free,
    Source,
    Sink,
}

/// Symmetric sparse matrix with full sorted rows.
struct SymMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymMatrix {
    fn n(&self) -> usize {
        self.rows.len()
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().find(|&&(j, _)| j == i).map_or(0.0, |&(_, v)| v))
            .collect()
    }

    /// The grounded Laplacian from upper-triangular conductances.
    fn from_upper(upper: &[Vec<(usize, f64)>], ground: &[f64]) -> SymMatrix {
        let n = upper.len();
        let mut diag = ground.to_vec();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in upper.iter().enumerate() {
            for &(j, c) in row {
                diag[i] += c;
                diag[j] += c;
                rows[i].push((j, -c));
                rows[j].push((i, -c));
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i, diag[i]));
            row.sort_by_key(|&(j, _)| j);
        }
        SymMatrix { rows }
    }
}

fn resolve(net: &Network, labels: &[i64]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|&z| net.node_of(z).ok_or_else(|| Error::domain(format!("unknown vertex {z}"))))
        .collect()
}

pub fn effective_conductance(net: &Network, terminals: &TerminalPair) -> Result<f64> {
    effective_conductance_with(net, terminals, SolverKind::Auto)
}

pub fn effective_conductance_with(net: &Network, terminals: &TerminalPair, solver: SolverKind) -> Result<f64> {
    harmonic_solution(net, terminals, solver).map(|h| h.conductance)
}

pub fn harmonic_solution(net: &Network, terminals: &TerminalPair, solver: SolverKind) -> Result<HarmonicSolution> {
    let n = net.node_count();
    let sources = resolve(net, terminals.source())?;
    let sinks = resolve(net, terminals.sink())?;
    let mut role = vec![Role::Free; n];
    for &a in &sources {
        role[a] = Role::Source;
    }
    for &b in &sinks {
        if role[b] == Role::Source {
            // Source and sink share a class.
            let potential = (0..n).map(|i| if role[i] == Role::Source { 1.0 } else { 0.0 }).collect();
            return Ok(HarmonicSolution { potential, conductance: f64::INFINITY, energy: f64::INFINITY });
        }
        role[b] = Role::Sink;
    }

    // Explore from the sources without passing through the sink.
    let mut reached = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for &a in &sources {
        if !reached[a] {
            reached[a] = true;
            stack.push(a);
        }
    }
    let mut sink_reached = false;
    while let Some(x) = stack.pop() {
        for (y, _) in net.neighbors(x) {
            if role[y] == Role::Sink {
                sink_reached = true;
            } else if !reached[y] {
                reached[y] = true;
                stack.push(y);
            }
        }
    }
    if !sink_reached {
        let potential = reached.iter().map(|&r| if r { 1.0 } else { 0.0 }).collect();
        return Ok(HarmonicSolution { potential, conductance: 0.0, energy: 0.0 });
    }

    // Unknowns in node order with the contracted source last.
    let mut var_of = vec![usize::MAX; n];
    let mut count = 0;
    for x in 0..n {
        if role[x] == Role::Free && reached[x] {
            var_of[x] = count;
            count += 1;
        }
    }
    let a_var = count;
    count += 1;
    for &a in &sources {
        var_of[a] = a_var;
    }

    // Conductances between unknowns (upper part) and to ground.
    let mut upper: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
    let mut ground = vec![0.0; count];
    for x in 0..n {
        if !reached[x] {
            continue;
        }
        let i = var_of[x];
        for (y, c) in net.neighbors(x) {
            match role[y] {
                Role::Sink => ground[i] += c,
                _ => {
                    let j = var_of[y];
                    if j > i {
                        upper[i].push((j, c));
                    }
                }
            }
        }
    }
    for row in &mut upper {
        row.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for &(j, c) in row.iter() {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += c,
                _ => merged.push((j, c)),
            }
        }
        *row = merged;
    }

    let series = SeriesReduction::new(&upper, &ground, a_var);
    let (upper, ground) = series.reduced(&upper, &ground);
    let count = upper.len();
    let a_var = count - 1;

    let use_cg = match solver {
        SolverKind::Elimination => None,
        SolverKind::Iterative { tolerance } => Some(tolerance),
        SolverKind::Auto => {
            let mut first: Vec<usize> = (0..count).collect();
            for (i, row) in upper.iter().enumerate() {
                for &(j, _) in row {
                    first[j] = first[j].min(i);
                }
            }
            let work: f64 = first.iter().enumerate().map(|(i, &f)| ((i - f + 1) as f64).powi(2)).sum();
            (work > ENVELOPE_WORK_BUDGET).then_some(DEFAULT_CG_TOLERANCE)
        }
    };
    let (conductance, v) = match use_cg {
        None => eliminate(upper, ground)?,
        Some(tolerance) => {
            let matrix = SymMatrix::from_upper(&upper, &ground);
            let mut rhs = vec![0.0; count];
            rhs[a_var] = 1.0;
            let x = conjugate_gradient(&matrix, &rhs, tolerance)?;
            let resistance = x[a_var];
            if !(resistance > 0.0) || !resistance.is_finite() {
                return Err(Error::Solver(format!("non-positive effective resistance {resistance}")));
            }
            (1.0 / resistance, x.iter().map(|xi| xi / resistance).collect())
        }
    };
    if !(conductance > 0.0) || !conductance.is_finite() {
        return Err(Error::Solver(format!("effective conductance {conductance} out of range")));
    }
    let v = series.expand(&v);

    let potential: Vec<f64> = (0..n)
        .map(|x| match role[x] {
            Role::Source => 1.0,
            Role::Sink => 0.0,
            Role::Free if reached[x] => v[var_of[x]],
            Role::Free => 0.0,
        })
        .collect();
    let energy = net
        .edges()
        .into_iter()
        .map(|(x, y, c)| c * (potential[x] - potential[y]).powi(2))
        .sum();
    Ok(HarmonicSolution { potential, conductance, energy })
}

/// A maximal run of unknowns with exactly two connections each, between
/// `ends` (`None` is ground). `resistances[i]` sits before `nodes[i]`; the
/// last one joins the final node to the far end.
struct Chain {
    ends: [Option<usize>; 2],
    nodes: Vec<usize>,
    resistances: Vec<f64>,
}

/// Replaces every series chain by one edge of conductance `1 / Σ R`. The
/// resistances add exactly when they are integers, which keeps unit-line
/// conductances exact.
struct SeriesReduction {
    /// Reduced index of every unknown, `None` inside a chain.
    new_of: Vec<Option<usize>>,
    kept: usize,
    chains: Vec<Chain>,
}

impl SeriesReduction {
    fn new(upper: &[Vec<(usize, f64)>], ground: &[f64], source: usize) -> SeriesReduction {
        let n = upper.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in upper.iter().enumerate() {
            for &(j, c) in row {
                adj[i].push((j, c));
                adj[j].push((i, c));
            }
        }
        // Connections as (neighbour or ground, conductance).
        let links = |i: usize| -> Vec<(Option<usize>, f64)> {
            let mut l: Vec<(Option<usize>, f64)> = adj[i].iter().map(|&(j, c)| (Some(j), c)).collect();
            if ground[i] > 0.0 {
                l.push((None, ground[i]));
            }
            l
        };
        let in_series = |i: usize| i != source && adj[i].len() + (ground[i] > 0.0) as usize == 2;

        let mut in_chain = vec![false; n];
        let mut chains = Vec::new();
        for start in 0..n {
            if in_chain[start] || !in_series(start) {
                continue;
            }
            // Walk to both ends of the run through `start`.
            let mut halves: Vec<(Vec<usize>, Vec<f64>, Option<usize>)> = Vec::new();
            let first = links(start);
            let mut closed = false;
            for &link in &first {
                let (mut prev, mut next) = (Some(start), link);
                let (mut nodes, mut res) = (Vec::new(), vec![1.0 / next.1]);
                while let Some(x) = next.0.filter(|&x| in_series(x) && x != start) {
                    nodes.push(x);
                    let l = links(x);
                    let onward = if l[0].0 == prev { l[1] } else { l[0] };
                    prev = Some(x);
                    next = onward;
                    res.push(1.0 / next.1);
                }
                if next.0 == Some(start) {
                    closed = true;
                }
                halves.push((nodes, res, next.0));
            }
            if closed {
                // A ring of series nodes touching nothing else is unreachable.
                continue;
            }
            let (left, right) = (&halves[0], &halves[1]);
            let mut nodes: Vec<usize> = left.0.iter().rev().copied().collect();
            nodes.push(start);
            nodes.extend(&right.0);
            let mut resistances: Vec<f64> = left.1.iter().rev().copied().collect();
            resistances.extend(&right.1);
            for &x in &nodes {
                in_chain[x] = true;
            }
            chains.push(Chain { ends: [left.2, right.2], nodes, resistances });
        }

        let mut new_of = vec![None; n];
        let mut kept = 0;
        for i in 0..n {
            if !in_chain[i] {
                new_of[i] = Some(kept);
                kept += 1;
            }
        }
        SeriesReduction { new_of, kept, chains }
    }

    fn reduced(&self, upper: &[Vec<(usize, f64)>], ground: &[f64]) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
        if self.chains.is_empty() {
            return (upper.to_vec(), ground.to_vec());
        }
        let mut new_upper: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.kept];
        let mut new_ground = vec![0.0; self.kept];
        for (i, row) in upper.iter().enumerate() {
            let Some(a) = self.new_of[i] else { continue };
            new_ground[a] += ground[i];
            for &(j, c) in row {
                if let Some(b) = self.new_of[j] {
                    new_upper[a].push((b, c));
                }
            }
        }
        for chain in &self.chains {
            let c = 1.0 / chain.resistances.iter().sum::<f64>();
            let ends = chain.ends.map(|e| e.map(|x| self.new_of[x].expect("chain ends are kept")));
            match ends {
                [Some(a), Some(b)] if a != b => new_upper[a.min(b)].push((a.max(b), c)),
                [Some(a), None] | [None, Some(a)] => new_ground[a] += c,
                // Loops and ground-to-ground runs carry no current.
                _ => {}
            }
        }
        for row in &mut new_upper {
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, c) in row.iter() {
                match merged.last_mut() {
                    Some((k, acc)) if *k == j => *acc += c,
                    _ => merged.push((j, c)),
                }
            }
            *row = merged;
        }
        (new_upper, new_ground)
    }

    /// Potentials of every original unknown from the reduced solution.
    fn expand(&self, v: &[f64]) -> Vec<f64> {
        if self.chains.is_empty() {
            return v.to_vec();
        }
        let mut out: Vec<f64> = self.new_of.iter().map(|k| k.map_or(0.0, |k| v[k])).collect();
        for chain in &self.chains {
            let [va, vb] = chain.ends.map(|e| e.map_or(0.0, |x| out[x]));
            let total: f64 = chain.resistances.iter().sum();
            let mut acc = 0.0;
            for (&x, &r) in chain.nodes.iter().zip(&chain.resistances) {
                acc += r;
                out[x] = va + (vb - va) * (acc / total);
            }
        }
        out
    }
}

/// Eliminates unknowns `0..n-1` in order, leaving the last one. `upper[i]`
/// holds the conductances from `i` to later unknowns, sorted; `ground[i]` the
/// conductance from `i` to the grounded sink. Returns the conductance left
/// between the last unknown and ground, and the potentials with the last
/// unknown at 1.
fn eliminate(mut upper: Vec<Vec<(usize, f64)>>, mut ground: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let n = upper.len();
    let mut pivot = vec![0.0; n];
    let mut scratch = Vec::new();
    for k in 0..n - 1 {
        let row = std::mem::take(&mut upper[k]);
        let d = ground[k] + row.iter().map(|&(_, c)| c).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::Solver(format!("unknown {k} lost every connection during elimination")));
        }
        pivot[k] = d;
        for (p, &(j, cj)) in row.iter().enumerate() {
            let scale = cj / d;
            ground[j] += scale * ground[k];
            // Merge the fill from `k` into the sorted row of `j`.
            let fill = &row[p + 1..];
            if fill.is_empty() {
                continue;
            }
            let old = std::mem::take(&mut upper[j]);
            scratch.clear();
            let (mut a, mut b) = (0, 0);
            while a < old.len() || b < fill.len() {
                if b == fill.len() || (a < old.len() && old[a].0 < fill[b].0) {
                    scratch.push(old[a]);
                    a += 1;
                } else if a == old.len() || fill[b].0 < old[a].0 {
                    scratch.push((fill[b].0, scale * fill[b].1));
                    b += 1;
                } else {
                    scratch.push((old[a].0, old[a].1 + scale * fill[b].1));
                    a += 1;
                    b += 1;
                }
            }
            upper[j] = old;
            upper[j].clear();
            upper[j].extend_from_slice(&scratch);
        }
        upper[k] = row;
    }

    let mut v = vec![0.0; n];
    v[n - 1] = 1.0;
    for k in (0..n - 1).rev() {
        v[k] = upper[k].iter().map(|&(j, c)| c * v[j]).sum::<f64>() / pivot[k];
    }
    Ok((ground[n - 1], v))
}

fn conjugate_gradient(matrix: &SymMatrix, rhs: &[f64], tolerance: f64) -> Result<Vec<f64>> {
    let n = matrix.n();
    let diag = matrix.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Solver("non-positive diagonal entry".into()));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let b_norm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 20 * n + 1000;
    for _ in 0..max_iter {
        if dot(&r, &r).sqrt() <= tolerance * b_norm {
            return Ok(x);
        }
        matrix.mul(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = dot(&r, &r).sqrt() / b_norm;
    if residual <= tolerance {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "conjugate gradients stalled at relative residual {residual:e} after {max_iter} iterations"
        )))
    }
}

/// Effective conductance from `origin` to every vertex of its cluster at
/// distance at least `m` from 0, i.e. outside the open interval `(-m, m)`.
///
/// The window radius is taken to be the largest `|label|` in `net`.
/// Returns 0 when the cluster of `origin` has no such vertex.
pub fn conductance_to_boundary(net: &Network, origin: i64, m: i64) -> Result<f64> {
    let n = net.labels().iter().map(|z| z.abs()).max().unwrap_or(0);
    if m < 1 || m > n {
        return Err(Error::domain(format!("radius {m} outside [1, {n}]")));
    }
    if origin.abs() >= m {
        return Err(Error::domain(format!("origin {origin} does not lie strictly inside radius {m}")));
    }
    let start = net.node_of(origin).ok_or_else(|| Error::domain(format!("unknown vertex {origin}")))?;
    let cluster = net.component(start);
    let boundary: Vec<i64> = net
        .labels()
        .iter()
        .copied()
        .filter(|z| z.abs() >= m && cluster[net.node_of(*z).expect("own label")])
        .collect();
    if boundary.is_empty() {
        return Ok(0.0);
    }
    effective_conductance(net, &TerminalPair::new(vec![origin], boundary)?)
}
