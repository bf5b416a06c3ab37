//! Slow, obviously-correct reference implementations used by the test suites.
#![allow(dead_code)]

use std::collections::HashMap;

use momdist::filtration::FilteredComplex;
use momdist::persistence::{PersistenceDiagram, PersistencePair};

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance from `y` to the nearest of `points`.
pub fn nearest(points: &[Vec<f64>], y: &[f64]) -> f64 {
    points.iter().map(|p| dist(p, y)).fold(f64::INFINITY, f64::min)
}

/// Lower median of the per-block nearest distances.
pub fn median_of_minima(points: &[Vec<f64>], blocks: &[Vec<usize>], y: &[f64]) -> f64 {
    let mut mins: Vec<f64> =
        blocks.iter().map(|b| b.iter().map(|&i| dist(&points[i], y)).fold(f64::INFINITY, f64::min)).collect();
    mins.sort_by(f64::total_cmp);
    mins[(mins.len() - 1) / 2]
}

/// Dense Z/2 column reduction of the full boundary matrix. Reports H0/H1
/// pairs with positive persistence and essential H0/H1 classes.
pub fn dense_diagram(complex: &FilteredComplex) -> PersistenceDiagram {
    let s = &complex.simplices;
    let m = s.len();
    let index: HashMap<&[usize], usize> = s.iter().enumerate().map(|(i, x)| (x.vertices.as_slice(), i)).collect();
    let mut matrix = vec![vec![false; m]; m];
    for (j, simplex) in s.iter().enumerate() {
        for facet in simplex.facets() {
            matrix[j][index[facet.as_slice()]] = true;
        }
    }
    let low = |col: &[bool]| col.iter().rposition(|&x| x);
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut creator = vec![false; m];
    let mut destroyed = vec![false; m];
    let mut pairs = Vec::new();
    for j in 0..m {
        while let Some(l) = low(&matrix[j]) {
            let Some(k) = owner[l] else { break };
            let other = matrix[k].clone();
            for (x, y) in matrix[j].iter_mut().zip(other) {
                *x ^= y;
            }
        }
        match low(&matrix[j]) {
            Some(l) => {
                owner[l] = Some(j);
                destroyed[l] = true;
                let (b, d) = (&s[l], &s[j]);
                if b.dim() <= 1 && b.value != d.value {
                    pairs.push(PersistencePair::new(b.dim(), b.value, d.value));
                }
            }
            None => creator[j] = true,
        }
    }
    for i in 0..m {
        if creator[i] && !destroyed[i] && s[i].dim() <= 1 {
            pairs.push(PersistencePair::new(s[i].dim(), s[i].value, f64::INFINITY));
        }
    }
    PersistenceDiagram::new(pairs).sorted()
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn heap_permutations(k: usize, perm: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if k <= 1 {
        visit(perm);
        return;
    }
    for i in 0..k {
        heap_permutations(k - 1, perm, visit);
        let swap = if k.is_multiple_of(2) { i } else { 0 };
        perm.swap(swap, k - 1);
    }
}

/// Bottleneck distance between two finite diagrams by trying every bijection
/// of the diagonal-augmented point sets.
pub fn exhaustive_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (na, nb) = (a.len(), b.len());
    let size = na + nb;
    // rows: a points then one diagonal slot per b point; columns: b points then a's diagonal slots
    let cost = |r: usize, c: usize| -> f64 {
        match (r < na, c < nb) {
            (true, true) => linf(a[r], b[c]),
            (true, false) => (a[r].1 - a[r].0) / 2.0,
            (false, true) => (b[c].1 - b[c].0) / 2.0,
            (false, false) => 0.0,
        }
    };
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..size).collect();
    heap_permutations(size, &mut perm, &mut |p| {
        let worst = p.iter().enumerate().map(|(r, &c)| cost(r, c)).fold(0.0, f64::max);
        best = best.min(worst);
    });
    if size == 0 {
        0.0
    } else {
        best
    }
}

/// Pairs of `dim` with positive persistence as (birth, death) tuples, sorted.
pub fn finite_pairs(d: &PersistenceDiagram, dim: usize) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = d.in_dim(dim).map(|p| (p.birth, p.death)).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    v
}
