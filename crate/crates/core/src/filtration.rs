//! Weighted Vietoris–Rips filtrations.
//!
//! A point `x` with weight `w` carries the ball of radius
//! `r_x(t) = (t^p - w^p)^{1/p}` at resolution `t >= w` (empty before). The
//! weighted Rips complex at `t` is the flag complex of the pairs whose balls
//! meet, so the whole filtration is fixed by vertex and edge times.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud, WeightAssignment};

/// Default absolute tolerance of the edge-time bisection.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-9;

/// Power `p` of the weighted radius function, `1 <= p <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerParam {
    Finite(f64),
    Infinity,
}

impl PowerParam {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidConfig(format!("power p must be >= 1, got {p}")));
        }
        Ok(if p.is_infinite() { Self::Infinity } else { Self::Finite(p) })
    }
}

impl Default for PowerParam {
    fn default() -> Self {
        Self::Finite(1.0)
    }
}

impl fmt::Display for PowerParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for PowerParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(Self::Infinity),
            other => {
                let p: f64 = other.parse().map_err(|_| Error::Parse(format!("invalid power `{s}`")))?;
                Self::finite(p)
            }
        }
    }
}

/// Radius of the weighted ball at resolution `t`; `-inf` when the ball is empty.
pub fn weighted_radius(w: f64, t: f64, p: PowerParam) -> f64 {
    if t < w {
        return f64::NEG_INFINITY;
    }
    match p {
        PowerParam::Infinity => t,
        PowerParam::Finite(1.0) => t - w,
        PowerParam::Finite(p) => (t.powf(p) - w.powf(p)).max(0.0).powf(1.0 / p),
    }
}

/// First resolution at which the weighted ball of a point is nonempty.
pub fn vertex_time(w: f64) -> f64 {
    w
}

/// Smallest `t` at which the weighted balls of two points at distance `dist` meet.
pub fn edge_time(wx: f64, wy: f64, dist: f64, p: PowerParam, tol: f64) -> Result<f64> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::NonPositiveTolerance(tol));
    }
    // symmetric to the last bit: callers rely on edge_time(a, b) == edge_time(b, a)
    let (wx, wy) = if wx <= wy { (wx, wy) } else { (wy, wx) };
    let hi_w = wy;
    Ok(match p {
        PowerParam::Infinity => (dist / 2.0).max(hi_w),
        PowerParam::Finite(1.0) => {
            if dist <= (wx - wy).abs() {
                hi_w
            } else {
                (dist + wx + wy) / 2.0
            }
        }
        PowerParam::Finite(_) => bisect_edge_time(wx, wy, dist, p, tol),
    })
}

/// Bisection on the nondecreasing gap `r_x(t) + r_y(t) - dist` over
/// `[max(wx, wy), max(wx, wy) + dist]`.
pub fn bisect_edge_time(wx: f64, wy: f64, dist: f64, p: PowerParam, tol: f64) -> f64 {
    let reach = |t: f64| weighted_radius(wx, t, p) + weighted_radius(wy, t, p) >= dist;
    let mut lo = wx.max(wy);
    if reach(lo) {
        return lo;
    }
    let mut hi = lo + dist;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reach(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// A simplex of the flag complex with its filtration value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    /// Strictly increasing vertex indices.
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<usize>, value: f64) -> Self {
        vertices.sort_unstable();
        Self { vertices, value }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Filtration order: value, then dimension, then vertex tuple.
    pub fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.vertices.len().cmp(&other.vertices.len()))
            .then_with(|| self.vertices.cmp(&other.vertices))
    }

    /// Codimension-one faces, each obtained by dropping one vertex.
    pub fn facets(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let k = self.vertices.len();
        (0..if k > 1 { k } else { 0 })
            .map(move |skip| self.vertices.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect())
    }
}

/// Simplices sorted in filtration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    pub simplices: Vec<Simplex>,
    pub max_dim: usize,
    pub t_max: f64,
}

impl FilteredComplex {
    /// Sorts `simplices` into filtration order.
    pub fn new(mut simplices: Vec<Simplex>, max_dim: usize, t_max: f64) -> Self {
        simplices.sort_by(Simplex::filtration_cmp);
        Self { simplices, max_dim, t_max }
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_of_dim(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim() == dim).count()
    }

    /// CSV rows `dim,v0[,v1[,v2]],filtration_value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for s in &self.simplices {
            out.push_str(&s.dim().to_string());
            for v in &s.vertices {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push_str(&format!(",{}\n", s.value));
        }
        out
    }
}

/// Default cap on the filtration: cloud diameter plus the largest weight.
pub fn default_t_max(cloud: &PointCloud, weights: &WeightAssignment) -> f64 {
    cloud.diameter() + weights.max()
}

/// Dense matrix of edge times (`+inf` on the diagonal).
pub fn edge_time_matrix(cloud: &PointCloud, weights: &WeightAssignment, p: PowerParam, tol: f64) -> Result<Vec<f64>> {
    let n = cloud.len();
    if weights.len() != n {
        return Err(Error::WeightMismatch { weights: weights.len(), points: n });
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::NonPositiveTolerance(tol));
    }
    let w = &weights.values;
    let mut m = vec![f64::INFINITY; n * n];
    m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
            let d = euclidean(cloud.point(i), cloud.point(j));
            // tol was validated above
            *slot = edge_time(w[i], w[j], d, p, tol).unwrap_or(f64::INFINITY);
        }
    });
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    Ok(m)
}

/// Builds the weighted Rips complex up to dimension `max_dim` (1 or 2),
/// keeping simplices with filtration value at most `t_max`.
pub fn build_weighted_rips(
    cloud: &PointCloud,
    weights: &WeightAssignment,
    p: PowerParam,
    max_dim: usize,
    t_max: f64,
) -> Result<FilteredComplex> {
    build_weighted_rips_with_tol(cloud, weights, p, max_dim, t_max, DEFAULT_BISECTION_TOL)
}

pub fn build_weighted_rips_with_tol(
    cloud: &PointCloud,
    weights: &WeightAssignment,
    p: PowerParam,
    max_dim: usize,
    t_max: f64,
    tol: f64,
) -> Result<FilteredComplex> {
    if !(t_max > 0.0) {
        return Err(Error::NonPositiveTMax(t_max));
    }
    if !(1..=2).contains(&max_dim) {
        return Err(Error::DimensionCap(max_dim));
    }
    let n = cloud.len();
    let et = edge_time_matrix(cloud, weights, p, tol)?;
    let w = &weights.values;
    let mut simplices = Vec::new();
    for (i, &wi) in w.iter().enumerate() {
        if vertex_time(wi) <= t_max {
            simplices.push(Simplex { vertices: vec![i], value: vertex_time(wi) });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = et[i * n + j];
            if v <= t_max {
                simplices.push(Simplex { vertices: vec![i, j], value: v });
            }
        }
    }
    if max_dim == 2 {
        for i in 0..n {
            for j in i + 1..n {
                let eij = et[i * n + j];
                if eij > t_max {
                    continue;
                }
                for k in j + 1..n {
                    let v = eij.max(et[i * n + k]).max(et[j * n + k]);
                    if v <= t_max {
                        simplices.push(Simplex { vertices: vec![i, j, k], value: v });
                    }
                }
            }
        }
    }
    Ok(FilteredComplex::new(simplices, max_dim, t_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    const P1: PowerParam = PowerParam::Finite(1.0);

    #[test]
    fn weighted_radius_cases() {
        assert_eq!(weighted_radius(0.0, 2.0, P1), 2.0);
        for p in [P1, PowerParam::Finite(2.0), PowerParam::Infinity] {
            assert_eq!(weighted_radius(1.0, 0.5, p), f64::NEG_INFINITY);
        }
        assert!((weighted_radius(3.0, 5.0, PowerParam::Finite(2.0)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_time_is_weight() {
        assert_eq!(vertex_time(0.0), 0.0);
        assert_eq!(vertex_time(1.7), 1.7);
    }

    #[test]
    fn edge_time_examples() {
        assert_eq!(edge_time(0.0, 0.0, 2.0, P1, 1e-9).unwrap(), 1.0);
        assert_eq!(edge_time(1.0, 0.0, 0.5, P1, 1e-9).unwrap(), 1.0);
        assert!((bisect_edge_time(1.0, 0.0, 0.5, P1, 1e-12) - 1.0).abs() <= 1e-9);
        let t = edge_time(1.0, 1.0, 2.0, PowerParam::Finite(2.0), 1e-12).unwrap();
        assert!((t - 2f64.sqrt()).abs() <= 1e-9);
        assert!(matches!(edge_time(0.0, 0.0, 1.0, P1, 0.0), Err(Error::NonPositiveTolerance(_))));
    }

    #[test]
    fn parse_power() {
        assert_eq!("inf".parse::<PowerParam>().unwrap(), PowerParam::Infinity);
        assert_eq!("2".parse::<PowerParam>().unwrap(), PowerParam::Finite(2.0));
        assert!("0.5".parse::<PowerParam>().is_err());
    }

    fn equilateral() -> PointCloud {
        PointCloud::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap()
    }

    #[test]
    fn equilateral_triangle_rips() {
        let c = equilateral();
        let cx = build_weighted_rips(&c, &WeightAssignment::zeros(3), P1, 2, 1.0).unwrap();
        assert_eq!(cx.count_of_dim(0), 3);
        assert!(cx.simplices.iter().filter(|s| s.dim() == 0).all(|s| s.value == 0.0));
        let tri = cx.simplices.iter().find(|s| s.dim() == 2).unwrap();
        assert!((tri.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn argument_checks() {
        let c = equilateral();
        let w = WeightAssignment::zeros(3);
        assert!(matches!(build_weighted_rips(&c, &w, P1, 3, 1.0), Err(Error::DimensionCap(3))));
        assert!(matches!(build_weighted_rips(&c, &w, P1, 2, 0.0), Err(Error::NonPositiveTMax(_))));
        assert!(matches!(
            build_weighted_rips(&c, &WeightAssignment::zeros(2), P1, 2, 1.0),
            Err(Error::WeightMismatch { .. })
        ));
    }

    #[test]
    fn zero_weights_give_identical_complexes_across_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = PointCloud::new((0..8).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect())
            .unwrap();
        let w = WeightAssignment::zeros(8);
        let a = build_weighted_rips(&c, &w, P1, 2, 10.0).unwrap();
        let b = build_weighted_rips(&c, &w, PowerParam::Infinity, 2, 10.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn faces_never_exceed_cofaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [P1, PowerParam::Finite(2.0), PowerParam::Infinity] {
            let c =
                PointCloud::new((0..5).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect())
                    .unwrap();
            let w = WeightAssignment { values: (0..5).map(|_| rng.random_range(0.0..0.5)).collect() };
            let cx = build_weighted_rips(&c, &w, p, 2, 100.0).unwrap();
            let value: HashMap<Vec<usize>, f64> = cx.simplices.iter().map(|s| (s.vertices.clone(), s.value)).collect();
            assert_eq!(cx.len(), 5 + 10 + 10);
            for s in &cx.simplices {
                for f in s.facets() {
                    assert!(value[&f] <= s.value);
                }
            }
        }
    }
}
