use std::collections::HashMap;

use super::{PersistenceDiagram, PersistencePair};
use crate::error::{Error, Result};
use crate::filtration::FilteredComplex;

#[derive(Debug, Clone, Copy, Default)]
pub struct ReduceOptions {
    /// Emit pairs with birth == death.
    pub keep_zero: bool,
}

/// Raw pairing of simplex positions produced by the reduction.
#[derive(Debug, Clone, Default)]
pub struct Pairing {
    /// (creator, destroyer) positions in filtration order.
    pub pairs: Vec<(usize, usize)>,
    /// Creators that are never destroyed.
    pub essential: Vec<usize>,
}

/// H0/H1 persistence diagram of `complex`, zero-persistence pairs dropped.
///
/// Triangles only serve to kill 1-cycles: with no tetrahedra in the complex,
/// unpaired triangles would be truncation artifacts and are not reported.
pub fn reduce(complex: &FilteredComplex) -> Result<PersistenceDiagram> {
    reduce_with(complex, ReduceOptions::default())
}

pub fn reduce_with(complex: &FilteredComplex, opts: ReduceOptions) -> Result<PersistenceDiagram> {
    let pairing = Pairing::compute(complex)?;
    let s = &complex.simplices;
    let mut pairs = Vec::with_capacity(pairing.pairs.len() + pairing.essential.len());
    for &(b, d) in &pairing.pairs {
        if s[b].dim() <= 1 && (opts.keep_zero || s[b].value != s[d].value) {
            pairs.push(PersistencePair::new(s[b].dim(), s[b].value, s[d].value));
        }
    }
    for &b in pairing.essential.iter().filter(|&&b| s[b].dim() <= 1) {
        pairs.push(PersistencePair::new(s[b].dim(), s[b].value, f64::INFINITY));
    }
    Ok(PersistenceDiagram::new(pairs).sorted())
}

impl Pairing {
    /// Standard left-to-right column reduction over Z/2.
    pub fn compute(complex: &FilteredComplex) -> Result<Self> {
        let columns = boundary_columns(complex)?;
        let m = columns.len();
        let mut pivot_owner: Vec<Option<usize>> = vec![None; m];
        let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(m);
        let mut pairs = Vec::new();
        let mut is_paired = vec![false; m];
        for (j, mut col) in columns.into_iter().enumerate() {
            while let Some(&low) = col.last() {
                match pivot_owner[low] {
                    Some(k) => col = symmetric_difference(&col, &reduced[k]),
                    None => break,
                }
            }
            if let Some(&low) = col.last() {
                pivot_owner[low] = Some(j);
                pairs.push((low, j));
                is_paired[low] = true;
                is_paired[j] = true;
            }
            reduced.push(col);
        }
        let essential = (0..m).filter(|&i| !is_paired[i]).collect();
        Ok(Self { pairs, essential })
    }
}

/// Boundary columns as sorted position lists; validates the filtration order.
fn boundary_columns(complex: &FilteredComplex) -> Result<Vec<Vec<usize>>> {
    let s = &complex.simplices;
    let mut position: HashMap<&[usize], usize> = HashMap::with_capacity(s.len());
    let mut columns = Vec::with_capacity(s.len());
    for (i, simplex) in s.iter().enumerate() {
        if simplex.vertices.is_empty() || simplex.vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::FiltrationOrderViolated(i));
        }
        if i > 0 && s[i - 1].filtration_cmp(simplex) == std::cmp::Ordering::Greater {
            return Err(Error::FiltrationOrderViolated(i));
        }
        let mut col = Vec::with_capacity(simplex.vertices.len());
        for facet in simplex.facets() {
            match position.get(facet.as_slice()) {
                Some(&f) if s[f].value <= simplex.value => col.push(f),
                _ => return Err(Error::FiltrationOrderViolated(i)),
            }
        }
        col.sort_unstable();
        if position.insert(&simplex.vertices, i).is_some() {
            return Err(Error::FiltrationOrderViolated(i));
        }
        columns.push(col);
    }
    Ok(columns)
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::Simplex;

    fn complex(simplices: Vec<(Vec<usize>, f64)>) -> FilteredComplex {
        FilteredComplex::new(simplices.into_iter().map(|(v, t)| Simplex::new(v, t)).collect(), 2, 10.0)
    }

    #[test]
    fn single_vertex() {
        let d = reduce(&complex(vec![(vec![0], 0.0)])).unwrap();
        assert_eq!(d.pairs, vec![PersistencePair::new(0, 0.0, f64::INFINITY)]);
    }

    #[test]
    fn two_vertices_merge() {
        let d = reduce(&complex(vec![(vec![0], 0.0), (vec![1], 0.0), (vec![0, 1], 1.0)])).unwrap();
        assert_eq!(d.pairs, vec![PersistencePair::new(0, 0.0, 1.0), PersistencePair::new(0, 0.0, f64::INFINITY)]);
    }

    #[test]
    fn hollow_then_filled_triangle() {
        let d = reduce(&complex(vec![
            (vec![0], 0.0),
            (vec![1], 0.0),
            (vec![2], 0.0),
            (vec![0, 1], 1.0),
            (vec![1, 2], 1.0),
            (vec![0, 2], 2.0),
            (vec![0, 1, 2], 3.0),
        ]))
        .unwrap();
        assert!(d.pairs.contains(&PersistencePair::new(1, 2.0, 3.0)));
        assert_eq!(d.in_dim(0).count(), 3);
    }

    #[test]
    fn zero_persistence_kept_on_request() {
        let c = complex(vec![(vec![0], 0.0), (vec![1], 0.0), (vec![0, 1], 0.0)]);
        assert_eq!(reduce(&c).unwrap().len(), 1);
        assert_eq!(reduce_with(&c, ReduceOptions { keep_zero: true }).unwrap().len(), 2);
    }

    #[test]
    fn detects_order_violations() {
        let bad = FilteredComplex {
            simplices: vec![Simplex::new(vec![0, 1], 1.0), Simplex::new(vec![0], 0.0), Simplex::new(vec![1], 0.0)],
            max_dim: 1,
            t_max: 1.0,
        };
        assert!(matches!(reduce(&bad), Err(Error::FiltrationOrderViolated(_))));
        let missing_face = FilteredComplex {
            simplices: vec![Simplex::new(vec![0], 0.0), Simplex::new(vec![0, 1], 1.0)],
            max_dim: 1,
            t_max: 1.0,
        };
        assert!(matches!(reduce(&missing_face), Err(Error::FiltrationOrderViolated(1))));
    }
}
