use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{squared_euclidean, PointCloud};
use crate::error::{Error, Result};

pub const DEFAULT_LEAF_SIZE: usize = 16;

/// Result of a nearest-neighbor query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Index of the point in the cloud the tree was built from.
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Exact k-d tree over a subset of a point cloud.
///
/// Splits at the median of the coordinate with the widest spread. Points are
/// copied into tree order so leaves scan contiguous memory.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

impl KdTree {
    pub fn build(cloud: &PointCloud, subset: &[usize]) -> Result<Self> {
        Self::with_leaf_size(cloud, subset, DEFAULT_LEAF_SIZE)
    }

    /// Tree over every point of the cloud.
    pub fn build_all(cloud: &PointCloud) -> Result<Self> {
        let all: Vec<usize> = (0..cloud.len()).collect();
        Self::build(cloud, &all)
    }

    pub fn with_leaf_size(cloud: &PointCloud, subset: &[usize], leaf_size: usize) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::EmptyBlock);
        }
        if leaf_size == 0 {
            return Err(Error::InvalidConfig("leaf_size must be positive".into()));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= cloud.len()) {
            return Err(Error::InvalidConfig(format!("subset index {bad} out of range")));
        }
        let dim = cloud.dim();
        let mut ids = subset.to_vec();
        let mut nodes = Vec::new();
        build_node(cloud, &mut ids, 0, leaf_size, &mut nodes);
        let mut coords = Vec::with_capacity(ids.len() * dim);
        for &i in &ids {
            coords.extend_from_slice(cloud.point(i));
        }
        Ok(Self { dim, coords, ids, nodes, leaf_size })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    /// Exact nearest neighbor of `query`. Panics if the query dimension differs.
    pub fn nearest(&self, query: &[f64]) -> Neighbor {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_in(0, query, &mut best);
        Neighbor { index: self.ids[best.1], distance: best.0.sqrt() }
    }

    fn nearest_in(&self, node: usize, q: &[f64], best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let d2 = squared_euclidean(self.point(slot), q);
                    if d2 < best.0 || (d2 == best.0 && slot < best.1) {
                        *best = (d2, slot);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.0 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` nearest neighbors sorted by increasing distance.
    pub fn knn(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::with_capacity(k + 1);
        self.knn_in(0, query, k, &mut heap);
        let mut out: Vec<_> =
            heap.into_iter().map(|h| Neighbor { index: self.ids[h.slot], distance: h.d2.sqrt() }).collect();
        out.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
        out
    }

    fn knn_in(&self, node: usize, q: &[f64], k: usize, heap: &mut BinaryHeap<HeapItem>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let d2 = squared_euclidean(self.point(slot), q);
                    if heap.len() < k {
                        heap.push(HeapItem { d2, slot });
                    } else if d2 < heap.peek().map_or(f64::INFINITY, |h| h.d2) {
                        heap.pop();
                        heap.push(HeapItem { d2, slot });
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.knn_in(near, q, k, heap);
                let bound = if heap.len() < k { f64::INFINITY } else { heap.peek().unwrap().d2 };
                if diff * diff <= bound {
                    self.knn_in(far, q, k, heap);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    d2: f64,
    slot: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.slot.cmp(&other.slot))
    }
}

fn build_node(cloud: &PointCloud, ids: &mut [usize], offset: usize, leaf_size: usize, nodes: &mut Vec<Node>) -> usize {
    let here = nodes.len();
    if ids.len() <= leaf_size {
        nodes.push(Node::Leaf { start: offset, end: offset + ids.len() });
        return here;
    }
    let dim = cloud.dim();
    let mut axis = 0;
    let mut spread = -1.0;
    for a in 0..dim {
        let (lo, hi) = ids.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let x = cloud.point(i)[a];
            (lo.min(x), hi.max(x))
        });
        if hi - lo > spread {
            spread = hi - lo;
            axis = a;
        }
    }
    if spread <= 0.0 {
        // all points coincide
        nodes.push(Node::Leaf { start: offset, end: offset + ids.len() });
        return here;
    }
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| cloud.point(a)[axis].total_cmp(&cloud.point(b)[axis]));
    let value = cloud.point(ids[mid])[axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (lo, hi) = ids.split_at_mut(mid);
    let left = build_node(cloud, lo, offset, leaf_size, nodes);
    let right = build_node(cloud, hi, offset + mid, leaf_size, nodes);
    nodes[here] = Node::Split { axis, value, left, right };
    here
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_nearest(cloud: &PointCloud, subset: &[usize], q: &[f64]) -> f64 {
        subset.iter().map(|&i| squared_euclidean(cloud.point(i), q)).fold(f64::INFINITY, f64::min).sqrt()
    }

    #[test]
    fn two_point_minimum() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![2.0]]).unwrap();
        let tree = KdTree::build(&cloud, &[0, 1]).unwrap();
        assert!((tree.nearest(&[0.9]).distance - 0.9).abs() < 1e-15);
    }

    #[test]
    fn three_four_five() {
        let cloud = PointCloud::new(vec![vec![0.0, 0.0]]).unwrap();
        let tree = KdTree::build(&cloud, &[0]).unwrap();
        assert_eq!(tree.nearest(&[3.0, 4.0]).distance, 5.0);
    }

    #[test]
    fn empty_subset_is_rejected() {
        let cloud = PointCloud::new(vec![vec![0.0]]).unwrap();
        assert!(matches!(KdTree::build(&cloud, &[]), Err(Error::EmptyBlock)));
    }

    #[test]
    fn matches_brute_force_on_random_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Vec<f64>> = (0..100).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cloud = PointCloud::new(pts).unwrap();
        let subset: Vec<usize> = (0..100).filter(|i| i % 3 != 0).collect();
        let tree = KdTree::with_leaf_size(&cloud, &subset, 4).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
            assert_eq!(tree.nearest(&q).distance, brute_nearest(&cloud, &subset, &q));
        }
    }

    #[test]
    fn knn_matches_sorted_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let cloud = PointCloud::new(pts).unwrap();
        let tree = KdTree::build_all(&cloud).unwrap();
        for _ in 0..20 {
            let q: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut all: Vec<f64> = cloud.points().map(|p| squared_euclidean(p, &q).sqrt()).collect();
            all.sort_by(f64::total_cmp);
            let got: Vec<f64> = tree.knn(&q, 9).iter().map(|n| n.distance).collect();
            assert_eq!(got, all[..9].to_vec());
        }
    }

    #[test]
    fn duplicate_points_do_not_recurse_forever() {
        let cloud = PointCloud::new(vec![vec![1.0, 1.0]; 100]).unwrap();
        let tree = KdTree::build_all(&cloud).unwrap();
        assert_eq!(tree.nearest(&[1.0, 1.0]).distance, 0.0);
    }
}
