//! Bottleneck distance between persistence diagrams and influence measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WeightEvaluator;
use crate::persistence::{PersistenceDiagram, PersistencePair};

pub const DEFAULT_TOL: f64 = 1e-9;

/// One end of a matched pair: a diagram point (index into `pairs`) or the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchEnd {
    Point(usize),
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckResult {
    pub distance: f64,
    /// Pairs `(end in D1, end in D2)`; diagonal-to-diagonal pairs are omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<Vec<(MatchEnd, MatchEnd)>>,
}

/// Bottleneck distance between the `dim` parts of two diagrams.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram, dim: usize, tol: f64) -> Result<BottleneckResult> {
    let distance = Problem::new(d1, d2, dim, tol)?.distance();
    Ok(BottleneckResult { distance, matching: None })
}

/// As [`bottleneck`], also returning an optimal matching.
pub fn bottleneck_matching(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    dim: usize,
    tol: f64,
) -> Result<BottleneckResult> {
    let pb = Problem::new(d1, d2, dim, tol)?;
    let distance = pb.distance();
    let matching = pb.matching(distance);
    Ok(BottleneckResult { distance, matching: Some(matching) })
}

/// Shorthand for the distance alone with the default tolerance.
pub fn bottleneck_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram, dim: usize) -> f64 {
    Problem::new(d1, d2, dim, DEFAULT_TOL).map(|p| p.distance()).unwrap_or(f64::NAN)
}

pub fn linf(a: &PersistencePair, b: &PersistencePair) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// ℓ∞ distance from a finite point to the diagonal.
pub fn diagonal_cost(a: &PersistencePair) -> f64 {
    (a.death - a.birth) / 2.0
}

struct Problem<'a> {
    a: Vec<(usize, &'a PersistencePair)>,
    b: Vec<(usize, &'a PersistencePair)>,
    a_inf: Vec<(usize, &'a PersistencePair)>,
    b_inf: Vec<(usize, &'a PersistencePair)>,
}

impl<'a> Problem<'a> {
    fn new(d1: &'a PersistenceDiagram, d2: &'a PersistenceDiagram, dim: usize, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::NonPositiveTolerance(tol));
        }
        let split = |d: &'a PersistenceDiagram| {
            let (mut inf, fin): (Vec<_>, Vec<_>) =
                d.pairs.iter().enumerate().filter(|(_, p)| p.dim == dim).partition(|(_, p)| p.is_essential());
            inf.sort_by(|x, y| x.1.birth.total_cmp(&y.1.birth));
            (fin, inf)
        };
        let (a, a_inf) = split(d1);
        let (b, b_inf) = split(d2);
        Ok(Self { a, b, a_inf, b_inf })
    }

    fn essential_cost(&self) -> f64 {
        if self.a_inf.len() != self.b_inf.len() {
            return f64::INFINITY;
        }
        self.a_inf.iter().zip(&self.b_inf).map(|(x, y)| (x.1.birth - y.1.birth).abs()).fold(0.0, f64::max)
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        linf(self.a[i].1, self.b[j].1)
    }

    fn distance(&self) -> f64 {
        let ess = self.essential_cost();
        if ess.is_infinite() {
            return ess;
        }
        let mut cand: Vec<f64> = Vec::with_capacity(self.a.len() * self.b.len() + self.a.len() + self.b.len() + 1);
        cand.push(0.0);
        cand.extend(self.a.iter().chain(&self.b).map(|(_, p)| diagonal_cost(p)));
        for i in 0..self.a.len() {
            cand.extend((0..self.b.len()).map(|j| self.cost(i, j)));
        }
        cand.sort_unstable_by(f64::total_cmp);
        cand.dedup();
        // all points to the diagonal is always feasible at the largest candidate
        let (mut lo, mut hi) = (0usize, cand.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.feasible(cand[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        cand[lo].max(ess)
    }

    /// A perfect matching with the diagonal exists at threshold `r` iff the
    /// points too far from the diagonal can be covered on each side
    /// separately (two one-sided matchings combine into one covering both).
    fn feasible(&self, r: f64) -> bool {
        let heavy_a: Vec<usize> = (0..self.a.len()).filter(|&i| diagonal_cost(self.a[i].1) > r).collect();
        let heavy_b: Vec<usize> = (0..self.b.len()).filter(|&j| diagonal_cost(self.b[j].1) > r).collect();
        if heavy_a.len() > self.b.len() || heavy_b.len() > self.a.len() {
            return false;
        }
        let adj_a: Vec<Vec<usize>> =
            heavy_a.iter().map(|&i| (0..self.b.len()).filter(|&j| self.cost(i, j) <= r).collect()).collect();
        if hopcroft_karp(&adj_a, self.b.len()).0 < heavy_a.len() {
            return false;
        }
        let adj_b: Vec<Vec<usize>> =
            heavy_b.iter().map(|&j| (0..self.a.len()).filter(|&i| self.cost(i, j) <= r).collect()).collect();
        hopcroft_karp(&adj_b, self.a.len()).0 == heavy_b.len()
    }

    /// Perfect matching of the doubled graph at threshold `r`.
    fn matching(&self, r: f64) -> Vec<(MatchEnd, MatchEnd)> {
        let (na, nb) = (self.a.len(), self.b.len());
        let mut out: Vec<(MatchEnd, MatchEnd)> =
            self.a_inf.iter().zip(&self.b_inf).map(|(x, y)| (MatchEnd::Point(x.0), MatchEnd::Point(y.0))).collect();
        if r.is_infinite() {
            return out;
        }
        // left: a points then diagonal copies of b; right: b points then diagonal copies of a
        let mut adj: Vec<Vec<usize>> = Vec::with_capacity(na + nb);
        for i in 0..na {
            let mut row: Vec<usize> = (0..nb).filter(|&j| self.cost(i, j) <= r).collect();
            if diagonal_cost(self.a[i].1) <= r {
                row.push(nb + i);
            }
            adj.push(row);
        }
        for j in 0..nb {
            let mut row = Vec::with_capacity(na + 1);
            if diagonal_cost(self.b[j].1) <= r {
                row.push(j);
            }
            row.extend(nb..nb + na);
            adj.push(row);
        }
        let (_, mate) = hopcroft_karp(&adj, na + nb);
        for (l, m) in mate.iter().enumerate() {
            let Some(rr) = *m else { continue };
            let left = if l < na { MatchEnd::Point(self.a[l].0) } else { MatchEnd::Diagonal };
            let right = if rr < nb { MatchEnd::Point(self.b[rr].0) } else { MatchEnd::Diagonal };
            if left != MatchEnd::Diagonal || right != MatchEnd::Diagonal {
                out.push((left, right));
            }
        }
        out
    }
}

/// Maximum bipartite matching; returns its size and the partner of each left vertex.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> (usize, Vec<Option<usize>>) {
    const FREE: usize = usize::MAX;
    let n_left = adj.len();
    let mut mate_l = vec![FREE; n_left];
    let mut mate_r = vec![FREE; n_right];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;

    loop {
        // BFS layering from free left vertices
        let mut queue = std::collections::VecDeque::new();
        for l in 0..n_left {
            if mate_l[l] == FREE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let m = mate_r[r];
                if m == FREE {
                    found = true;
                } else if dist[m] == usize::MAX {
                    dist[m] = dist[l] + 1;
                    queue.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        let mut next = vec![0usize; n_left];
        for l in 0..n_left {
            if mate_l[l] == FREE && augment(l, adj, &mut mate_l, &mut mate_r, &mut dist, &mut next) {
                size += 1;
            }
        }
    }
    let mates = mate_l.into_iter().map(|r| (r != FREE).then_some(r)).collect();
    (size, mates)
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    mate_l: &mut [usize],
    mate_r: &mut [usize],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    while next[l] < adj[l].len() {
        let r = adj[l][next[l]];
        next[l] += 1;
        let m = mate_r[r];
        let ok = m == usize::MAX || (dist[m] == dist[l].wrapping_add(1) && augment(m, adj, mate_l, mate_r, dist, next));
        if ok {
            mate_l[l] = r;
            mate_r[r] = l;
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

/// Change in the birth time of the component at `x0` caused by contamination:
/// `f_clean(x0) - f_contaminated(x0)`.
pub fn birth_influence(f_clean: &WeightEvaluator, f_contaminated: &WeightEvaluator, x0: &[f64]) -> Result<f64> {
    Ok(f_clean.eval(x0)? - f_contaminated.eval(x0)?)
}

/// Largest `|f_clean - f_contaminated|` over the evaluation points, a
/// computable stand-in for the sup-norm over the whole space.
pub fn winf_influence<P>(f_clean: &WeightEvaluator, f_contaminated: &WeightEvaluator, points: &[P]) -> Result<f64>
where
    P: AsRef<[f64]> + Sync,
{
    if points.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let gaps = points
        .par_iter()
        .map(|y| Ok((f_clean.eval(y.as_ref())? - f_contaminated.eval(y.as_ref())?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}
