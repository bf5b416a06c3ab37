//! Resampling heuristic: pick the block count whose diagram moves least when
//! the points are reshuffled before being dealt into blocks.

use rayon::prelude::*;

use super::lepski::{CurvePoint, SelectionTrace};
use crate::error::{Error, Result};
use crate::filtration::PowerParam;
use crate::geometry::{eval_weights, PointCloud, WeightFunctionKind};
use crate::metrics::{bottleneck, DEFAULT_TOL};
use crate::persistence::{weighted_rips_diagram, FlagOptions};
use crate::rng::derive_seed;

/// Returns the minimizing `Q` (ties to the smaller) and the curve of summed
/// pairwise bottleneck distances over `replicates` shuffles.
pub fn heuristic_q(
    cloud: &PointCloud,
    q_grid: &[usize],
    replicates: usize,
    seed: u64,
    p: PowerParam,
    max_dim: usize,
    dim: usize,
) -> Result<(usize, Vec<CurvePoint>)> {
    let n = cloud.len();
    if replicates < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 replicates, got {replicates}")));
    }
    if q_grid.is_empty() {
        return Err(Error::InvalidConfig("empty Q grid".into()));
    }
    if let Some(&q) = q_grid.iter().find(|&&q| q < 1 || q > n) {
        return Err(Error::InvalidBlockCount { q, n });
    }
    let opts = FlagOptions { max_dim, ..FlagOptions::default() };
    let mut curve = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let diagrams = (0..replicates as u64)
            .into_par_iter()
            .map(|r| {
                let kind = WeightFunctionKind::MomDist { q, seed: Some(derive_seed(seed, r)) };
                weighted_rips_diagram(cloud, &eval_weights(cloud, &kind, cloud)?, p, opts)
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> =
            (0..replicates).flat_map(|i| (i + 1..replicates).map(move |j| (i, j))).collect();
        let dists = pairs
            .par_iter()
            .map(|&(i, j)| bottleneck(&diagrams[i], &diagrams[j], dim, DEFAULT_TOL).map(|r| r.distance))
            .collect::<Result<Vec<f64>>>()?;
        curve.push(CurvePoint { q, value: dists.iter().sum() });
    }
    let best = curve
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.q.cmp(&b.q)))
        .map(|c| c.q)
        .expect("grid is nonempty");
    Ok((best, curve))
}

/// [`heuristic_q`] packaged as a selection trace.
pub fn heuristic_trace(
    cloud: &PointCloud,
    q_grid: &[usize],
    replicates: usize,
    seed: u64,
    p: PowerParam,
    max_dim: usize,
    dim: usize,
) -> Result<SelectionTrace> {
    let (q, curve) = heuristic_q(cloud, q_grid, replicates, seed, p, max_dim, dim)?;
    Ok(SelectionTrace {
        method: "resample".into(),
        dim,
        ladder: Vec::new(),
        curve,
        chosen_j: None,
        chosen_q: q,
        no_admissible_rung: false,
        warnings: Vec::new(),
    })
}

/// `(max(1, floor(m/C)), max(1, ceil(C m)))` with `m = floor(Q/2)`.
pub fn derive_bounds_from_heuristic(q_hat: usize, c: f64) -> Result<(usize, usize)> {
    if q_hat < 1 {
        return Err(Error::InvalidParameter { name: "Q".into(), value: q_hat.to_string() });
    }
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::InvalidParameter { name: "C".into(), value: c.to_string() });
    }
    let m = (q_hat / 2) as f64;
    Ok((((m / c).floor() as usize).max(1), ((c * m).ceil() as usize).max(1)))
}
