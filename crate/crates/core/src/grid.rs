//! Sublevel persistence of a weight function sampled on a 2-D grid.
//!
//! Each grid cell is split into two triangles along the lower-left to
//! upper-right diagonal and every simplex enters at the largest value among
//! its vertices (lower-star filtration).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::{FilteredComplex, Simplex};
use crate::geometry::{PointCloud, WeightEvaluator, WeightFunctionKind};
use crate::persistence::{reduce_with, PersistenceDiagram, ReduceOptions};

/// Default spacing between grid nodes.
pub const DEFAULT_RESOLUTION: f64 = 0.5;

/// Axis-aligned rectangle `[lo[0], hi[0]] x [lo[1], hi[1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl BBox {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        let ok = (0..2).all(|a| lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]);
        if !ok {
            return Err(Error::InvalidGrid(format!("degenerate bounding box {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// Bounding box of a planar cloud padded by `pad` on every side.
    pub fn around(cloud: &PointCloud, pad: f64) -> Result<Self> {
        if cloud.dim() != 2 {
            return Err(Error::GridNot2d(cloud.dim()));
        }
        let (lo, hi) = cloud.bounding_box();
        let mut b = Self { lo: [lo[0] - pad, lo[1] - pad], hi: [hi[0] + pad, hi[1] + pad] };
        // a single point or collinear data still needs a proper rectangle
        for a in 0..2 {
            if b.hi[a] <= b.lo[a] {
                b.lo[a] -= 0.5;
                b.hi[a] += 0.5;
            }
        }
        Self::new(b.lo, b.hi)
    }
}

impl std::str::FromStr for BBox {
    type Err = Error;

    /// Parses `x0,y0,x1,y1`.
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad bbox component `{t}`"))))
            .collect::<Result<_>>()?;
        if v.len() != 4 {
            return Err(Error::Parse(format!("bbox needs 4 numbers, got {}", v.len())));
        }
        Self::new([v[0], v[1]], [v[2], v[3]])
    }
}

/// Function values on a regular grid; node `(r, c)` sits at
/// `origin + (c, r) * resolution` and is stored at `values[r * cols + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub origin: [f64; 2],
    pub resolution: f64,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(origin: [f64; 2], resolution: f64, rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidGrid(format!("resolution must be positive, got {resolution}")));
        }
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::InvalidGrid(format!("{rows}x{cols} grid with {} values", values.len())));
        }
        Ok(Self { origin, resolution, rows, cols, values })
    }

    /// Node layout covering `bbox`, values left at zero.
    pub fn layout(bbox: BBox, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidGrid(format!("resolution must be positive, got {resolution}")));
        }
        let count = |a: usize| ((bbox.hi[a] - bbox.lo[a]) / resolution + 1e-9).floor() as usize + 1;
        let (rows, cols) = (count(1), count(0));
        Self::new(bbox.lo, resolution, rows, cols, vec![0.0; rows * cols])
    }

    pub fn value(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn node(&self, r: usize, c: usize) -> [f64; 2] {
        [self.origin[0] + c as f64 * self.resolution, self.origin[1] + r as f64 * self.resolution]
    }

    /// All node positions in storage order.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.rows).flat_map(|r| (0..self.cols).map(move |c| (r, c))).map(|(r, c)| self.node(r, c)).collect()
    }

    /// One CSV line per grid row, lowest `y` first.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let row: Vec<String> =
                self.values[r * self.cols..(r + 1) * self.cols].iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Lower-star filtration of the triangulated grid.
    pub fn lower_star_complex(&self) -> FilteredComplex {
        let id = |r: usize, c: usize| r * self.cols + c;
        let val = |vs: &[usize]| vs.iter().map(|&v| self.values[v]).fold(f64::NEG_INFINITY, f64::max);
        let mut simplices = Vec::new();
        let mut add = |vs: Vec<usize>| {
            let value = val(&vs);
            simplices.push(Simplex::new(vs, value));
        };
        for r in 0..self.rows {
            for c in 0..self.cols {
                add(vec![id(r, c)]);
                if c + 1 < self.cols {
                    add(vec![id(r, c), id(r, c + 1)]);
                }
                if r + 1 < self.rows {
                    add(vec![id(r, c), id(r + 1, c)]);
                }
                if r + 1 < self.rows && c + 1 < self.cols {
                    add(vec![id(r, c), id(r + 1, c + 1)]);
                    add(vec![id(r, c), id(r, c + 1), id(r + 1, c + 1)]);
                    add(vec![id(r, c), id(r + 1, c), id(r + 1, c + 1)]);
                }
            }
        }
        FilteredComplex::new(simplices, 2, f64::INFINITY)
    }
}

/// Evaluates the weight function of `cloud` at every node of a grid over `bbox`.
pub fn sample_grid(cloud: &PointCloud, kind: &WeightFunctionKind, bbox: BBox, resolution: f64) -> Result<ScalarGrid> {
    if cloud.dim() != 2 {
        return Err(Error::GridNot2d(cloud.dim()));
    }
    let mut grid = ScalarGrid::layout(bbox, resolution)?;
    let eval = WeightEvaluator::new(cloud, kind)?;
    let nodes = grid.nodes();
    grid.values = nodes.par_iter().map(|y| eval.eval(y)).collect::<Result<_>>()?;
    Ok(grid)
}

/// H0/H1 sublevel diagram of the grid function.
pub fn lower_star_diagram(grid: &ScalarGrid) -> Result<PersistenceDiagram> {
    lower_star_diagram_with(grid, ReduceOptions::default())
}

pub fn lower_star_diagram_with(grid: &ScalarGrid, opts: ReduceOptions) -> Result<PersistenceDiagram> {
    Ok(reduce_with(&grid.lower_star_complex(), opts)?.with_source("grid lower-star"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin_cloud() -> PointCloud {
        PointCloud::new(vec![vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn corner_value_is_diagonal_distance() {
        let bbox = BBox::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let g = sample_grid(&origin_cloud(), &WeightFunctionKind::PlainDistance, bbox, 1.0).unwrap();
        assert_eq!((g.rows, g.cols), (3, 3));
        assert!((g.value(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.value(1, 1), 0.0);
    }

    #[test]
    fn zero_kind_gives_zero_grid() {
        let bbox = BBox::new([-1.0, -1.0], [1.0, 2.0]).unwrap();
        let g = sample_grid(&origin_cloud(), &WeightFunctionKind::Zero, bbox, 0.5).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_planar_clouds() {
        let cloud = PointCloud::new(vec![vec![0.0, 0.0, 0.0]]).unwrap();
        let bbox = BBox::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let err = sample_grid(&cloud, &WeightFunctionKind::Zero, bbox, 1.0).unwrap_err();
        assert!(err.to_string().contains("grid sublevel is 2-D only"));
    }

    #[test]
    fn constant_grid_has_one_component() {
        let g = ScalarGrid::new([0.0, 0.0], 1.0, 4, 5, vec![0.3; 20]).unwrap();
        let d = lower_star_diagram(&g).unwrap();
        assert_eq!(d.pairs.len(), 1);
        assert_eq!((d.pairs[0].dim, d.pairs[0].birth, d.pairs[0].death), (0, 0.3, f64::INFINITY));
    }

    #[test]
    fn ring_of_zeros_around_a_peak() {
        let mut v = vec![0.0; 9];
        v[4] = 1.0;
        let g = ScalarGrid::new([0.0, 0.0], 1.0, 3, 3, v).unwrap();
        let complex = g.lower_star_complex();
        assert_eq!(complex.count_of_dim(2), 8);
        let d = lower_star_diagram(&g).unwrap();
        let h1: Vec<_> = d.in_dim(1).collect();
        assert_eq!(h1.len(), 1);
        assert_eq!((h1[0].birth, h1[0].death), (0.0, 1.0));
    }

    #[test]
    fn single_row_has_no_loops() {
        let g = ScalarGrid::new([0.0, 0.0], 1.0, 1, 4, vec![0.0, 1.0, 0.5, 2.0]).unwrap();
        let d = lower_star_diagram(&g).unwrap();
        assert_eq!(d.in_dim(1).count(), 0);
        assert_eq!(d.in_dim(0).count(), 2);
    }

    #[test]
    fn bbox_parsing_and_validation() {
        let b: BBox = "-1,-2,3,4".parse().unwrap();
        assert_eq!(b, BBox { lo: [-1.0, -2.0], hi: [3.0, 4.0] });
        assert!("1,1,0,2".parse::<BBox>().is_err());
        assert!("1,2,3".parse::<BBox>().is_err());
        assert!(ScalarGrid::layout(b, 0.0).is_err());
    }
}
