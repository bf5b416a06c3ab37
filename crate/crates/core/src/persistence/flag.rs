//! Persistence of flag (clique) filtrations given by vertex and edge values.
//!
//! H0 comes from a union-find pass under the elder rule. H1 is computed as
//! persistent cohomology: non-merging edges are processed in reverse
//! filtration order and their coboundaries are enumerated on the fly, so
//! triangles are never stored. Edges that kill an H0 class are cleared. When
//! the earliest cofacet of an edge is not yet a pivot the column is already
//! reduced and is recorded without building its coboundary. Pairs agree
//! exactly with the explicit column reduction on the same filtration order.

use std::cmp::{Ordering, Reverse};
use std::collections::binary_heap::PeekMut;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use super::{PersistenceDiagram, PersistencePair};
use crate::error::{Error, Result};
use crate::filtration::{edge_time_matrix, PowerParam, DEFAULT_BISECTION_TOL};
use crate::geometry::{PointCloud, WeightAssignment};

#[derive(Debug, Clone, Copy)]
pub struct FlagOptions {
    /// 1 keeps the 1-skeleton only; 2 adds triangles (and so finite H1 deaths).
    pub max_dim: usize,
    pub t_max: f64,
    pub keep_zero: bool,
}

impl Default for FlagOptions {
    fn default() -> Self {
        Self { max_dim: 2, t_max: f64::INFINITY, keep_zero: false }
    }
}

/// H0/H1 diagram of the weighted Rips filtration of `cloud`.
pub fn weighted_rips_diagram(
    cloud: &PointCloud,
    weights: &WeightAssignment,
    p: PowerParam,
    opts: FlagOptions,
) -> Result<PersistenceDiagram> {
    let edges = edge_time_matrix(cloud, weights, p, DEFAULT_BISECTION_TOL)?;
    flag_diagram(&weights.values, &edges, opts)
}

/// Diagram of the flag filtration with the given vertex values and dense
/// `n x n` edge-value matrix. Edge values must dominate their vertex values.
pub fn flag_diagram(vertex: &[f64], edge: &[f64], opts: FlagOptions) -> Result<PersistenceDiagram> {
    let n = vertex.len();
    if edge.len() != n * n {
        return Err(Error::InvalidConfig(format!("edge matrix has {} entries, expected {}", edge.len(), n * n)));
    }
    if !(1..=2).contains(&opts.max_dim) {
        return Err(Error::DimensionCap(opts.max_dim));
    }
    if !(opts.t_max > 0.0) {
        return Err(Error::NonPositiveTMax(opts.t_max));
    }
    let t_max = opts.t_max;
    // triangle values are recomputed from either row, so asymmetry would
    // break cancellation in the coboundary heap
    if (0..n).any(|i| (i + 1..n).any(|j| edge[i * n + j].to_bits() != edge[j * n + i].to_bits())) {
        return Err(Error::InvalidConfig("edge matrix is not symmetric".into()));
    }

    let mut edges: Vec<Edge> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let value = edge[i * n + j];
            if value <= t_max {
                edges.push(Edge { value, i: i as u32, j: j as u32 });
            }
        }
    }
    edges.sort_unstable_by_key(|e| (ordered_bits(e.value), e.i, e.j));

    let mut pairs = Vec::new();
    let mut push = |dim: usize, birth: f64, death: f64| {
        if opts.keep_zero || birth != death {
            pairs.push(PersistencePair::new(dim, birth, death));
        }
    };

    // H0: elder rule over vertices ordered by (value, index).
    let mut uf = UnionFind::new(n);
    let mut cycle_edges = Vec::new();
    for (e, edge_) in edges.iter().enumerate() {
        let (a, b) = (uf.find(edge_.i as usize), uf.find(edge_.j as usize));
        if a == b {
            cycle_edges.push(e);
            continue;
        }
        let older = |x: usize, y: usize| vertex[x].total_cmp(&vertex[y]).then(x.cmp(&y)) == Ordering::Less;
        let (oa, ob) = (uf.oldest[a], uf.oldest[b]);
        let (survivor, dying) = if older(oa, ob) { (a, b) } else { (b, a) };
        push(0, vertex[uf.oldest[dying]], edge_.value);
        uf.parent[dying] = survivor;
    }
    for v in 0..n {
        if vertex[v] <= t_max && uf.find(v) == v {
            push(0, vertex[uf.oldest[v]], f64::INFINITY);
        }
    }

    if opts.max_dim == 1 {
        for &e in &cycle_edges {
            push(1, edges[e].value, f64::INFINITY);
        }
        return Ok(PersistenceDiagram::new(pairs).sorted());
    }

    // Once one vertex is adjacent to all others the flag complex is a cone,
    // so everything that enters later is paired at zero persistence.
    let cap = if opts.keep_zero { t_max } else { t_max.min(cone_time(n, edge)) };
    let cob = Coboundary::new(n, edge, cap);
    let mut pivots: HashMap<u64, Vec<u32>> = HashMap::new();
    for &e in cycle_edges.iter().rev() {
        let ed = edges[e];
        if ed.value > cap {
            continue;
        }
        let Some(first) = cob.min_cofacet(&ed) else {
            push(1, ed.value, f64::INFINITY);
            continue;
        };
        let key = first.key;
        if let Entry::Vacant(slot) = pivots.entry(key) {
            slot.insert(vec![e as u32]);
            push(1, ed.value, first.value());
            continue;
        }
        let mut col = Column::default();
        col.add_edge(&cob, ed, None);
        let mut reduction = vec![e as u32];
        loop {
            match col.pop_pivot(&cob) {
                None => {
                    push(1, ed.value, f64::INFINITY);
                    break;
                }
                Some(tri) => match pivots.get(&tri.key) {
                    Some(other) => {
                        // `other` sums to `tri` plus later entries: everything up
                        // to `tri` cancels against what was just popped
                        for &f in other {
                            col.add_edge(&cob, edges[f as usize], Some(tri));
                        }
                        reduction.extend_from_slice(other);
                    }
                    None => {
                        push(1, ed.value, tri.value());
                        pivots.insert(tri.key, odd_entries(reduction));
                        break;
                    }
                },
            }
        }
    }
    Ok(PersistenceDiagram::new(pairs).sorted())
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    value: f64,
    i: u32,
    j: u32,
}

/// Triangle ordered by (value, sorted vertices), packed into two integers so
/// comparisons stay cheap in the merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Triangle {
    /// `value` mapped to an order-preserving integer.
    order: u64,
    /// Sorted vertex triple in base `n`; lexicographic order on the triple.
    key: u64,
}

impl Triangle {
    fn new(value: f64, a: u32, b: u32, c: u32, n: usize) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        let n = n as u64;
        let key = (v[0] as u64 * n + v[1] as u64) * n + v[2] as u64;
        Self { order: ordered_bits(value), key }
    }

    fn value(&self) -> f64 {
        let bits = if self.order >> 63 == 1 { self.order & !(1 << 63) } else { !self.order };
        f64::from_bits(bits)
    }
}

struct Coboundary<'a> {
    n: usize,
    edge: &'a [f64],
    t_max: f64,
    /// Row `v` lists the other vertices by increasing edge value to `v`.
    by_value: Vec<u32>,
    /// Edge values in the order of `by_value`.
    sorted: Vec<f64>,
}

impl<'a> Coboundary<'a> {
    fn new(n: usize, edge: &'a [f64], t_max: f64) -> Self {
        let mut by_value = Vec::with_capacity(n * n);
        for v in 0..n {
            let row = &edge[v * n..(v + 1) * n];
            let start = by_value.len();
            by_value.extend(0..n as u32);
            by_value[start..].sort_unstable_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
        }
        let sorted = by_value.iter().enumerate().map(|(x, &k)| edge[(x / n) * n + k as usize]).collect();
        Self { n, edge, t_max, by_value, sorted }
    }

    /// Refills `s.buf` with the next group of equal-valued cofacets, sorted
    /// descending. Cofacet `{i, j, k}` is emitted once, from the row where
    /// `k` appears last, at `max(e, d(i, k), d(j, k))`.
    fn refill(&self, s: &mut Stream) -> bool {
        let e = s.edge;
        let n = self.n;
        let (i, j) = (e.i as usize, e.j as usize);
        let (ri, rj) = (&self.edge[i * n..(i + 1) * n], &self.edge[j * n..(j + 1) * n]);
        let (oi, oj) = (&self.by_value[i * n..(i + 1) * n], &self.by_value[j * n..(j + 1) * n]);
        let (si, sj) = (&self.sorted[i * n..(i + 1) * n], &self.sorted[j * n..(j + 1) * n]);
        let tri = |v: f64, k: u32| Triangle::new(v, e.i, e.j, k, n);
        if !s.started {
            s.started = true;
            // everything already present when `e` enters shares its value
            while s.pi < n && si[s.pi] <= e.value {
                let k = oi[s.pi];
                if k != e.i && k != e.j && rj[k as usize] <= e.value {
                    s.buf.push(tri(e.value, k));
                }
                s.pi += 1;
            }
            while s.pj < n && sj[s.pj] <= e.value {
                s.pj += 1;
            }
        }
        while s.buf.is_empty() {
            let vi = if s.pi < n { si[s.pi] } else { f64::INFINITY };
            let vj = if s.pj < n { sj[s.pj] } else { f64::INFINITY };
            let v = vi.min(vj);
            if v > self.t_max || v == f64::INFINITY {
                return false;
            }
            while s.pi < n && si[s.pi] == v {
                let k = oi[s.pi];
                if k != e.i && k != e.j && rj[k as usize] <= v {
                    s.buf.push(tri(v, k));
                }
                s.pi += 1;
            }
            while s.pj < n && sj[s.pj] == v {
                let k = oj[s.pj];
                if k != e.i && k != e.j && ri[k as usize] < v {
                    s.buf.push(tri(v, k));
                }
                s.pj += 1;
            }
        }
        s.buf.sort_unstable_by(|a, b| b.cmp(a));
        true
    }

    /// With `i < j` fixed, the sorted triple of `{i, j, k}` increases with
    /// `k`, so the earliest cofacet is the smallest `k` of minimal value.
    fn min_cofacet(&self, e: &Edge) -> Option<Triangle> {
        let (i, j) = (e.i as usize, e.j as usize);
        let ri = &self.edge[i * self.n..(i + 1) * self.n];
        let rj = &self.edge[j * self.n..(j + 1) * self.n];
        // lane-wise minimum vectorises; the diagonal entries are +inf, so
        // k = i and k = j never win
        const L: usize = 8;
        let cost = |k: usize| {
            let v = if ri[k] > rj[k] { ri[k] } else { rj[k] };
            if v > e.value {
                v
            } else {
                e.value
            }
        };
        let mut lanes = [f64::INFINITY; L];
        let split = self.n - self.n % L;
        for base in (0..split).step_by(L) {
            for (l, lane) in lanes.iter_mut().enumerate() {
                let v = cost(base + l);
                *lane = if v < *lane { v } else { *lane };
            }
        }
        let mut best = lanes.iter().fold(f64::INFINITY, |a, &b| if b < a { b } else { a });
        for k in split..self.n {
            let v = cost(k);
            best = if v < best { v } else { best };
        }
        let best_k = if best < f64::INFINITY {
            (0..self.n).find(|&k| cost(k) == best).unwrap_or(usize::MAX)
        } else {
            usize::MAX
        };
        (best_k != usize::MAX && best <= self.t_max).then(|| Triangle::new(best, e.i, e.j, best_k as u32, self.n))
    }
}

/// Smallest `t` at which some vertex is joined to every other vertex.
fn cone_time(n: usize, edge: &[f64]) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    (0..n)
        .map(|v| (0..n).filter(|&k| k != v).map(|k| edge[v * n + k]).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Coboundary of one edge, produced lazily in filtration order.
struct Stream {
    edge: Edge,
    started: bool,
    pi: usize,
    pj: usize,
    /// Current group, sorted descending so the head sits at the back.
    buf: Vec<Triangle>,
}

/// Working cochain as a k-way merge of lazily generated coboundaries. Entries
/// past the eventual pivot of a column are never materialised.
#[derive(Default)]
struct Column {
    runs: Vec<Stream>,
    heads: BinaryHeap<Reverse<(Triangle, u32)>>,
}

impl Column {
    /// Adds the coboundary of `e`, skipping entries up to `after`.
    fn add_edge(&mut self, cob: &Coboundary, e: Edge, after: Option<Triangle>) {
        let mut s = Stream { edge: e, started: false, pi: 0, pj: 0, buf: Vec::new() };
        loop {
            if s.buf.is_empty() && !cob.refill(&mut s) {
                return;
            }
            match after {
                Some(after) if s.buf.last().is_some_and(|t| *t <= after) => {
                    s.buf.pop();
                }
                _ => break,
            }
        }
        let r = self.runs.len() as u32;
        self.heads.push(Reverse((*s.buf.last().expect("refilled"), r)));
        self.runs.push(s);
    }

    fn pop(&mut self, cob: &Coboundary) -> Option<Triangle> {
        let mut head = self.heads.peek_mut()?;
        let (top, r) = head.0;
        let run = &mut self.runs[r as usize];
        run.buf.pop();
        if run.buf.is_empty() && !cob.refill(run) {
            run.buf = Vec::new();
            PeekMut::pop(head);
        } else {
            // replacing the top in place costs one sift instead of two
            head.0 = (*run.buf.last().expect("refilled"), r);
        }
        Some(top)
    }

    /// Smallest entry with odd multiplicity, removing everything popped.
    fn pop_pivot(&mut self, cob: &Coboundary) -> Option<Triangle> {
        while let Some(top) = self.pop(cob) {
            let mut odd = true;
            while self.heads.peek().is_some_and(|Reverse((t, _))| *t == top) {
                self.pop(cob);
                odd = !odd;
            }
            if odd {
                return Some(top);
            }
        }
        None
    }
}

/// Order-preserving map from `f64` (total order) to `u64`.
fn ordered_bits(value: f64) -> u64 {
    let bits = value.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

/// Entries occurring an odd number of times, sorted.
fn odd_entries(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    for x in v {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
    /// Oldest vertex of the component, valid at roots.
    oldest: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), oldest: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_loop_dies_at_diagonal() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let cloud = PointCloud::new(pts).unwrap();
        let d =
            weighted_rips_diagram(&cloud, &WeightAssignment::zeros(4), PowerParam::Finite(1.0), FlagOptions::default())
                .unwrap();
        let h1: Vec<_> = d.in_dim(1).collect();
        assert_eq!(h1.len(), 1);
        assert!((h1[0].birth - 0.5).abs() < 1e-12);
        assert!((h1[0].death - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(d.in_dim(0).filter(|p| p.is_essential()).count(), 1);
    }

    #[test]
    fn one_skeleton_keeps_cycles_essential() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let cloud = PointCloud::new(pts).unwrap();
        let opts = FlagOptions { max_dim: 1, ..FlagOptions::default() };
        let d = weighted_rips_diagram(&cloud, &WeightAssignment::zeros(4), PowerParam::Finite(1.0), opts).unwrap();
        // 6 edges, 3 merge, 3 independent cycles
        assert_eq!(d.in_dim(1).filter(|p| p.is_essential()).count(), 3);
    }

    #[test]
    fn rejects_bad_options() {
        let v = [0.0, 0.0];
        let e = [f64::INFINITY, 1.0, 1.0, f64::INFINITY];
        assert!(flag_diagram(&v, &e, FlagOptions { max_dim: 3, ..Default::default() }).is_err());
        assert!(flag_diagram(&v, &e, FlagOptions { t_max: 0.0, ..Default::default() }).is_err());
        assert!(flag_diagram(&v, &e[..3], FlagOptions::default()).is_err());
        let skew = [f64::INFINITY, 1.0, 1.5, f64::INFINITY];
        assert!(flag_diagram(&v, &skew, FlagOptions::default()).is_err());
    }
}
