//! Lepski's rule over a geometric ladder of outlier budgets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radii::{delta_max, radius_h, radius_p, StandardCondition};
use crate::error::{Error, Result};
use crate::filtration::PowerParam;
use crate::geometry::{eval_weights, PointCloud, WeightFunctionKind};
use crate::grid::{lower_star_diagram, sample_grid, BBox, DEFAULT_RESOLUTION};
use crate::metrics::{bottleneck, DEFAULT_TOL};
use crate::persistence::{weighted_rips_diagram, FlagOptions, PersistenceDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LepskiConfig {
    pub m_min: usize,
    pub m_max: usize,
    pub theta: f64,
    pub delta: f64,
    pub ab: StandardCondition,
    /// Seed for shuffling points before they are dealt into blocks;
    /// `None` deals them in input order.
    pub partition_seed: Option<u64>,
    /// Abort instead of warning when a radius is used outside the range
    /// where it is a valid confidence bound.
    pub strict: bool,
}

impl LepskiConfig {
    pub fn new(m_min: usize, m_max: usize, theta: f64, delta: f64, ab: StandardCondition) -> Self {
        Self { m_min, m_max, theta, delta, ab, partition_seed: None, strict: false }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m_min < 1 || self.m_min > self.m_max {
            return Err(Error::InvalidConfig(format!("need 1 <= m_min <= m_max, got {}..{}", self.m_min, self.m_max)));
        }
        if 2 * self.m_max >= n {
            return Err(Error::InvalidConfig(format!("need m_max < n/2, got m_max = {} for n = {n}", self.m_max)));
        }
        if !(self.theta > 1.0) || !self.theta.is_finite() {
            return Err(Error::InvalidConfig(format!("theta must exceed 1, got {}", self.theta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }
}

/// How each rung's diagram is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "lowercase")]
pub enum Pipeline {
    Weighted { p: PowerParam, max_dim: usize, t_max: Option<f64> },
    Sublevel { bbox: Option<BBox>, resolution: f64 },
}

impl Default for Pipeline {
    fn default() -> Self {
        Self::Weighted { p: PowerParam::default(), max_dim: 2, t_max: None }
    }
}

impl Pipeline {
    pub fn sublevel() -> Self {
        Self::Sublevel { bbox: None, resolution: DEFAULT_RESOLUTION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungDistance {
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub j: usize,
    pub m: usize,
    pub q: usize,
    pub radius: f64,
    /// Bottleneck distances to later rungs that were evaluated.
    pub bottlenecks: Vec<RungDistance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub q: usize,
    pub value: f64,
}

/// Record of a block-count selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub method: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<Rung>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curve: Vec<CurvePoint>,
    pub chosen_j: Option<usize>,
    pub chosen_q: usize,
    /// Set when only the last rung passes, which it does vacuously.
    #[serde(default)]
    pub no_admissible_rung: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SelectionTrace {
    pub fn chosen_m(&self) -> usize {
        self.chosen_q / 2
    }
}

/// Rungs `(j, m(j))` with `m(j) = floor(theta^j m_min)` for `j >= 1` while
/// `theta^j m_min < theta m_max`; repeated values keep their first `j`, and
/// rungs whose block count `2 m + 1` exceeds `n` are dropped.
pub fn build_ladder(config: &LepskiConfig, n: usize) -> Result<Vec<(usize, usize)>> {
    let mut ladder: Vec<(usize, usize)> = Vec::new();
    let cap = config.theta * config.m_max as f64;
    let mut j = 1;
    loop {
        let real = config.theta.powi(j as i32) * config.m_min as f64;
        if !(real < cap) {
            break;
        }
        let m = real.floor() as usize;
        if real >= config.m_min as f64 && 2 * m < n && ladder.last().is_none_or(|&(_, prev)| prev != m) {
            ladder.push((j, m));
        }
        j += 1;
    }
    if ladder.is_empty() {
        return Err(Error::EmptyLadder);
    }
    Ok(ladder)
}

/// Index of the smallest rung `i` with `dist(i, k) <= 2 radius[k]` for every
/// later rung `k`. Distances are requested lazily, at most once per pair.
pub fn lepski_index(radius: &[f64], mut dist: impl FnMut(usize, usize) -> f64) -> usize {
    let n = radius.len();
    (0..n).find(|&i| (i + 1..n).all(|k| dist(i, k) <= 2.0 * radius[k])).unwrap_or(n.saturating_sub(1))
}

/// Runs Lepski's rule on one cloud.
pub fn lepski_select(
    cloud: &PointCloud,
    config: &LepskiConfig,
    pipeline: Pipeline,
    dim: usize,
) -> Result<SelectionTrace> {
    let n = cloud.len();
    config.validate(n)?;
    let ladder = build_ladder(config, n)?;

    let mut warnings = Vec::new();
    let radii: Vec<f64> = match pipeline {
        Pipeline::Weighted { .. } => {
            let dm = delta_max(config.delta, config.m_max, config.ab);
            if !(dm > 0.0) {
                return Err(Error::DeltaTooSmall(dm));
            }
            ladder.iter().map(|&(_, m)| radius_h(n, m, config.delta, config.m_max, config.ab)).collect::<Result<_>>()?
        }
        Pipeline::Sublevel { .. } => {
            if cloud.dim() != 2 {
                return Err(Error::GridNot2d(cloud.dim()));
            }
            ladder.iter().map(|&(_, m)| radius_p(n, m, config.delta, config.ab)).collect::<Result<_>>()?
        }
    };
    if let Some(&(_, m_top)) = ladder.last() {
        if m_top > config.m_max {
            warnings.push(format!("top rung m = {m_top} exceeds m_max = {}", config.m_max));
        }
    }
    if config.strict && !warnings.is_empty() {
        return Err(Error::Constraint(warnings.join("; ")));
    }

    let diagrams = rung_diagrams(cloud, &ladder, config.partition_seed, pipeline)?;
    let k = ladder.len();
    let mut cache: Vec<Vec<Option<f64>>> = vec![vec![None; k]; k];
    let mut failure = None;
    let chosen = lepski_index(&radii, |i, j| {
        *cache[i][j].get_or_insert_with(|| match bottleneck(&diagrams[i], &diagrams[j], dim, DEFAULT_TOL) {
            Ok(r) => r.distance,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }

    let rungs = ladder
        .iter()
        .enumerate()
        .map(|(i, &(j, m))| Rung {
            j,
            m,
            q: 2 * m + 1,
            radius: radii[i],
            bottlenecks: (0..k)
                .filter_map(|t| cache[i][t].map(|distance| RungDistance { j: ladder[t].0, distance }))
                .collect(),
        })
        .collect();
    Ok(SelectionTrace {
        method: "lepski".into(),
        dim,
        ladder: rungs,
        curve: Vec::new(),
        chosen_j: Some(ladder[chosen].0),
        chosen_q: 2 * ladder[chosen].1 + 1,
        no_admissible_rung: k > 1 && chosen == k - 1,
        warnings,
    })
}

/// Diagram of every rung, computed in parallel.
pub fn rung_diagrams(
    cloud: &PointCloud,
    ladder: &[(usize, usize)],
    partition_seed: Option<u64>,
    pipeline: Pipeline,
) -> Result<Vec<PersistenceDiagram>> {
    let kind = |m: usize| WeightFunctionKind::MomDist { q: 2 * m + 1, seed: partition_seed };
    match pipeline {
        Pipeline::Weighted { p, max_dim, t_max } => ladder
            .par_iter()
            .map(|&(_, m)| {
                let w = eval_weights(cloud, &kind(m), cloud)?;
                let opts = FlagOptions { max_dim, t_max: t_max.unwrap_or(f64::INFINITY), keep_zero: false };
                weighted_rips_diagram(cloud, &w, p, opts)
            })
            .collect(),
        Pipeline::Sublevel { bbox, resolution } => {
            // one grid for all rungs so that diagrams stay comparable
            let bbox = match bbox {
                Some(b) => b,
                None => {
                    let top = ladder.last().ok_or(Error::EmptyLadder)?.1;
                    let pad = eval_weights(cloud, &kind(top), cloud)?.max();
                    BBox::around(cloud, pad)?
                }
            };
            ladder
                .par_iter()
                .map(|&(_, m)| lower_star_diagram(&sample_grid(cloud, &kind(m), bbox, resolution)?))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(m_min: usize, m_max: usize, theta: f64) -> LepskiConfig {
        LepskiConfig::new(m_min, m_max, theta, 0.1, StandardCondition { a: 1.0, b: 2.0 })
    }

    #[test]
    fn ladder_floors_and_dedups() {
        let l = build_ladder(&config(20, 200, 1.07), 500).unwrap();
        assert_eq!(l[0], (1, 21));
        assert!(l.windows(2).all(|w| w[0].1 < w[1].1));
        assert!(l.last().unwrap().1 < 214);
        let small = build_ladder(&config(1, 3, 1.5), 100).unwrap();
        // 1.5, 2.25, 3.375 -> 1, 2, 3; 5.06 >= 4.5 stops
        assert_eq!(small, vec![(1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn ladder_drops_rungs_beyond_n() {
        let l = build_ladder(&config(20, 200, 1.07), 300).unwrap();
        assert!(l.iter().all(|&(_, m)| 2 * m < 300));
        assert!(matches!(build_ladder(&config(20, 200, 1.07), 30), Err(Error::EmptyLadder)));
    }

    #[test]
    fn rule_follows_definition() {
        // rung 0 fails against rung 2, rung 1 passes against rung 2
        let d = [[0.0, 0.1, 0.9], [0.1, 0.0, 0.3], [0.9, 0.3, 0.0]];
        assert_eq!(lepski_index(&[1.0, 0.2, 0.2], |i, j| d[i][j]), 1);
        assert_eq!(lepski_index(&[1.0, 0.2, 0.5], |i, j| d[i][j]), 0);
        assert_eq!(lepski_index(&[1.0, 0.01, 0.01], |i, j| d[i][j]), 2);
        assert_eq!(lepski_index(&[0.3, 0.2], |_, _| 0.5), 1);
        assert_eq!(lepski_index(&[0.3], |_, _| unreachable!()), 0);
    }

    #[test]
    fn config_validation() {
        assert!(config(0, 10, 1.1).validate(100).is_err());
        assert!(config(5, 60, 1.1).validate(100).is_err());
        assert!(config(5, 10, 1.0).validate(100).is_err());
        assert!(config(5, 10, 1.1).validate(100).is_ok());
    }
}
