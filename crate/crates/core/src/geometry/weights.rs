use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{partition::partition_indices, BlockPartition, KdTree, PointCloud};
use crate::error::{Error, Result};

/// How the distance-to-measure aggregates the `k` nearest neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DtmMode {
    /// sqrt of the mean squared distance to the k nearest neighbors.
    #[default]
    Rms,
    /// Distance to the k-th nearest neighbor.
    KthNeighbor,
}

/// Weight function attached to the points of a weighted filtration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunctionKind {
    /// Distance to the cloud.
    PlainDistance,
    /// Median-of-means distance over `q` blocks. With `seed = Some(s)` the
    /// point order is shuffled by `s` before the round-robin assignment.
    MomDist {
        q: usize,
        seed: Option<u64>,
    },
    /// Distance-to-measure over `k` neighbors.
    Dtm {
        k: usize,
        mode: DtmMode,
    },
    Zero,
}

impl WeightFunctionKind {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Self::MomDist { q, .. } if q < 1 || q > n => Err(Error::InvalidBlockCount { q, n }),
            Self::Dtm { k, .. } if k < 1 || k > n => Err(Error::KOutOfRange { k, n }),
            _ => Ok(()),
        }
    }
}

/// Per-point weights `w_i = f(target_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment {
    pub values: Vec<f64>,
}

impl WeightAssignment {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// CSV rows `index,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{w}\n"));
        }
        out
    }
}

/// Evaluator for a weight function, with its spatial indexes prebuilt.
///
/// Immutable once built; queries may run from many threads at once.
#[derive(Debug, Clone)]
pub enum WeightEvaluator {
    Plain(KdTree),
    Mom(Vec<KdTree>),
    Dtm { tree: KdTree, k: usize, mode: DtmMode },
    Zero { dim: usize },
}

impl WeightEvaluator {
    pub fn new(cloud: &PointCloud, kind: &WeightFunctionKind) -> Result<Self> {
        kind.validate(cloud.len())?;
        Ok(match *kind {
            WeightFunctionKind::PlainDistance => Self::Plain(KdTree::build_all(cloud)?),
            WeightFunctionKind::MomDist { q, seed } => {
                let part = partition_indices(cloud.len(), q, seed.unwrap_or(0), seed.is_some())?;
                Self::from_partition(cloud, &part)?
            }
            WeightFunctionKind::Dtm { k, mode } => Self::Dtm { tree: KdTree::build_all(cloud)?, k, mode },
            WeightFunctionKind::Zero => Self::Zero { dim: cloud.dim() },
        })
    }

    /// MoM evaluator over an explicit partition.
    pub fn from_partition(cloud: &PointCloud, part: &BlockPartition) -> Result<Self> {
        part.check_against(cloud)?;
        let trees = part.blocks().iter().map(|b| KdTree::build(cloud, b)).collect::<Result<Vec<_>>>()?;
        Ok(Self::Mom(trees))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Plain(t) | Self::Dtm { tree: t, .. } => t.dim(),
            Self::Mom(ts) => ts[0].dim(),
            Self::Zero { dim } => *dim,
        }
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        Ok(match self {
            Self::Plain(t) => t.nearest(y).distance,
            Self::Mom(trees) => {
                let mut per_block: Vec<f64> = trees.iter().map(|t| t.nearest(y).distance).collect();
                lower_median(&mut per_block)
            }
            Self::Dtm { tree, k, mode } => {
                let nn = tree.knn(y, *k);
                match mode {
                    DtmMode::Rms => {
                        let s: f64 = nn.iter().map(|n| n.distance * n.distance).sum();
                        (s / *k as f64).sqrt()
                    }
                    DtmMode::KthNeighbor => nn[*k - 1].distance,
                }
            }
            Self::Zero { .. } => 0.0,
        })
    }

    /// Evaluates at every target; results keep target order.
    pub fn eval_many<'a, I>(&self, targets: I) -> Result<Vec<f64>>
    where
        I: IntoParallelIterator<Item = &'a [f64]>,
        I::Iter: IndexedParallelIterator,
    {
        targets.into_par_iter().map(|y| self.eval(y)).collect()
    }
}

/// Lower median: the element of 1-based rank ceil(len/2).
pub(crate) fn lower_median(values: &mut [f64]) -> f64 {
    let rank = values.len().div_ceil(2) - 1;
    *values.select_nth_unstable_by(rank, f64::total_cmp).1
}

/// Distance from `y` to the cloud.
pub fn dist_fn(cloud: &PointCloud, y: &[f64]) -> Result<f64> {
    WeightEvaluator::new(cloud, &WeightFunctionKind::PlainDistance)?.eval(y)
}

/// Median over blocks of the distance from `y` to each block.
pub fn momdist(cloud: &PointCloud, part: &BlockPartition, y: &[f64]) -> Result<f64> {
    WeightEvaluator::from_partition(cloud, part)?.eval(y)
}

/// Root-mean-squared distance from `y` to its `k` nearest neighbors.
pub fn dtm(cloud: &PointCloud, k: usize, y: &[f64]) -> Result<f64> {
    WeightEvaluator::new(cloud, &WeightFunctionKind::Dtm { k, mode: DtmMode::Rms })?.eval(y)
}

/// Weight of every target under `kind`, computed over `cloud`.
pub fn eval_weights(cloud: &PointCloud, kind: &WeightFunctionKind, targets: &PointCloud) -> Result<WeightAssignment> {
    cloud.check_dim(targets.dim())?;
    let eval = WeightEvaluator::new(cloud, kind)?;
    let targets: Vec<&[f64]> = targets.points().collect();
    Ok(WeightAssignment { values: eval.eval_many(targets)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::squared_euclidean;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud1(xs: &[f64]) -> PointCloud {
        PointCloud::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointCloud {
        PointCloud::new((0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()).unwrap()
    }

    // per-block linear scan followed by a full sort
    fn momdist_oracle(cloud: &PointCloud, part: &BlockPartition, y: &[f64]) -> f64 {
        let mut mins: Vec<f64> = part
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&i| squared_euclidean(cloud.point(i), y)).fold(f64::INFINITY, f64::min).sqrt())
            .collect();
        mins.sort_by(f64::total_cmp);
        mins[mins.len().div_ceil(2) - 1]
    }

    #[test]
    fn dist_fn_midpoint_and_membership() {
        let c = cloud1(&[0.0, 2.0]);
        assert_eq!(dist_fn(&c, &[1.0]).unwrap(), 1.0);
        assert_eq!(dist_fn(&c, &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn dist_fn_dimension_mismatch() {
        let c = cloud1(&[0.0, 2.0]);
        assert!(matches!(dist_fn(&c, &[1.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn momdist_single_block_is_dist_fn() {
        let c = cloud1(&[0.0, 2.0]);
        let part = super::super::partition(&c, 1, 0, false).unwrap();
        assert_eq!(momdist(&c, &part, &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn momdist_median_of_three_blocks() {
        let c = cloud1(&[0.0, 10.0, 2.0]);
        let part = BlockPartition::from_blocks(vec![vec![0], vec![1], vec![2]], 3).unwrap();
        assert_eq!(momdist(&c, &part, &[0.0]).unwrap(), 2.0);
    }

    #[test]
    fn even_block_count_takes_lower_middle() {
        let c = cloud1(&[0.0, 1.0, 5.0, 9.0]);
        let part = BlockPartition::from_blocks(vec![vec![0], vec![1], vec![2], vec![3]], 4).unwrap();
        // per-block distances {0, 1, 5, 9}: lower middle is 1
        assert_eq!(momdist(&c, &part, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn momdist_rejects_mismatched_partition() {
        let c = cloud1(&[0.0, 1.0, 2.0]);
        let part = BlockPartition::from_blocks(vec![vec![0], vec![1]], 2).unwrap();
        assert!(matches!(momdist(&c, &part, &[0.0]), Err(Error::InconsistentPartition(_))));
    }

    #[test]
    fn momdist_matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let n = rng.random_range(5..80);
            let c = random_cloud(&mut rng, n, 2);
            let q = rng.random_range(1..=n);
            let part = super::super::partition(&c, q, trial, true).unwrap();
            let eval = WeightEvaluator::from_partition(&c, &part).unwrap();
            for _ in 0..10 {
                let y = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                assert_eq!(eval.eval(&y).unwrap(), momdist_oracle(&c, &part, &y));
            }
        }
    }

    #[test]
    fn dtm_k1_is_dist_fn_and_symmetric_pair() {
        let c = cloud1(&[0.0, 2.0]);
        assert_eq!(dtm(&c, 1, &[0.7]).unwrap(), dist_fn(&c, &[0.7]).unwrap());
        assert_eq!(dtm(&c, 2, &[1.0]).unwrap(), 1.0);
        assert!(matches!(dtm(&c, 3, &[1.0]), Err(Error::KOutOfRange { k: 3, n: 2 })));
        assert!(matches!(dtm(&c, 0, &[1.0]), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn dtm_matches_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_cloud(&mut rng, 60, 3);
        for k in [1usize, 4, 17, 60] {
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut d2: Vec<f64> = c.points().map(|p| squared_euclidean(p, &y)).collect();
            d2.sort_by(f64::total_cmp);
            let rms = (d2[..k].iter().sum::<f64>() / k as f64).sqrt();
            assert!((dtm(&c, k, &y).unwrap() - rms).abs() <= 1e-12 * rms.max(1.0));
            let kth = WeightEvaluator::new(&c, &WeightFunctionKind::Dtm { k, mode: DtmMode::KthNeighbor })
                .unwrap()
                .eval(&y)
                .unwrap();
            assert_eq!(kth, d2[k - 1].sqrt());
        }
    }

    #[test]
    fn eval_weights_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_cloud(&mut rng, 9, 2);
        let zero = eval_weights(&c, &WeightFunctionKind::Zero, &c).unwrap();
        assert!(zero.values.iter().all(|&w| w == 0.0));
        let q1 = eval_weights(&c, &WeightFunctionKind::MomDist { q: 1, seed: None }, &c).unwrap();
        assert!(q1.values.iter().all(|&w| w == 0.0));
        let kind = WeightFunctionKind::MomDist { q: 3, seed: Some(1) };
        let w = eval_weights(&c, &kind, &c).unwrap();
        let part = super::super::partition(&c, 3, 1, true).unwrap();
        for (i, p) in c.points().enumerate() {
            assert_eq!(w.values[i], momdist_oracle(&c, &part, p));
        }
    }

    #[test]
    fn invalid_kind_parameters() {
        let c = cloud1(&[0.0, 1.0]);
        assert!(WeightEvaluator::new(&c, &WeightFunctionKind::MomDist { q: 3, seed: None }).is_err());
        assert!(WeightEvaluator::new(&c, &WeightFunctionKind::Dtm { k: 0, mode: DtmMode::Rms }).is_err());
    }
}
