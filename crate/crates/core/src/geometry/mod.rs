//! Point clouds, spatial indexing, and the distance-like weight functions
//! evaluated on them: the plain distance function, the median-of-means
//! distance (MoM-Dist), and the distance-to-measure baseline.

mod kdtree;
mod partition;
mod weights;

pub use kdtree::{KdTree, Neighbor, DEFAULT_LEAF_SIZE};
pub use partition::{partition, BlockPartition};
pub use weights::{
    dist_fn, dtm, eval_weights, momdist, DtmMode, WeightAssignment, WeightEvaluator, WeightFunctionKind,
};

use crate::error::{Error, Result};

/// A finite set of points in R^d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    /// Builds a cloud from a list of equal-length coordinate vectors.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptyCloud)?;
        if dim == 0 {
            return Err(Error::InvalidConfig("points must have dimension >= 1".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { coords, dim })
    }

    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("points must have dimension >= 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidConfig(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { coords, dim })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false: a cloud holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Cloud made of the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidConfig(format!("point index {i} out of range")));
            }
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(coords, self.dim)
    }

    /// Appends the points of `other`, which must share the dimension.
    pub fn extend(&mut self, other: &PointCloud) -> Result<()> {
        self.check_dim(other.dim)?;
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: d });
        }
        Ok(())
    }

    /// Coordinate-wise (min, max) over the cloud.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for (k, &x) in p.iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        (lo, hi)
    }

    /// Largest pairwise Euclidean distance (brute force).
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(euclidean(self.point(i), self.point(j)));
            }
        }
        best
    }
}

/// Squared Euclidean distance, accumulated in coordinate order.
#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

/// Directed Hausdorff distances combined: max of the two sup-inf distances.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    a.check_dim(b.dim())?;
    let ta = KdTree::build_all(a)?;
    let tb = KdTree::build_all(b)?;
    let ab = a.points().map(|p| tb.nearest(p).distance).fold(0.0, f64::max);
    let ba = b.points().map(|p| ta.nearest(p).distance).fold(0.0, f64::max);
    Ok(ab.max(ba))
}
