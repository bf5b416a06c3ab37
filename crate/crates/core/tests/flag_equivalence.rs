use momdist::filtration::{build_weighted_rips, PowerParam};
use momdist::geometry::{eval_weights, PointCloud, WeightAssignment, WeightFunctionKind};
use momdist::persistence::{reduce_with, weighted_rips_diagram, FlagOptions, PersistenceDiagram, ReduceOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, lattice: bool) -> PointCloud {
    let pts = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| if lattice { rng.random_range(0..4) as f64 } else { rng.random_range(-1.0..1.0) })
                .collect()
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

fn assert_same(a: &PersistenceDiagram, b: &PersistenceDiagram, ctx: &str) {
    assert_eq!(a.pairs, b.pairs, "{ctx}");
}

#[test]
fn flag_path_matches_explicit_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..60 {
        let n = rng.random_range(3..18);
        let lattice = case % 3 == 0;
        let cloud = random_cloud(&mut rng, n, 2, lattice);
        let weights = match case % 4 {
            0 => WeightAssignment::zeros(n),
            1 => eval_weights(&cloud, &WeightFunctionKind::MomDist { q: 3.min(n), seed: Some(case) }, &cloud).unwrap(),
            2 => eval_weights(&cloud, &WeightFunctionKind::Dtm { k: 2, mode: Default::default() }, &cloud).unwrap(),
            _ => WeightAssignment { values: (0..n).map(|_| rng.random_range(0.0..0.5)).collect() },
        };
        for p in [PowerParam::Finite(1.0), PowerParam::Finite(2.0), PowerParam::Infinity] {
            for max_dim in [1, 2] {
                for t_max in [0.6, f64::INFINITY] {
                    for keep_zero in [false, true] {
                        let cap = if t_max.is_finite() { t_max } else { 1e9 };
                        let complex = build_weighted_rips(&cloud, &weights, p, max_dim, cap).unwrap();
                        let explicit = reduce_with(&complex, ReduceOptions { keep_zero }).unwrap();
                        let fast =
                            weighted_rips_diagram(&cloud, &weights, p, FlagOptions { max_dim, t_max: cap, keep_zero })
                                .unwrap();
                        assert_same(
                            &explicit,
                            &fast,
                            &format!("case {case} p {p} dim {max_dim} t_max {cap} zero {keep_zero}"),
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn evenly_spaced_circle_has_one_loop() {
    let n = 20;
    let pts = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let cloud = PointCloud::new(pts).unwrap();
    let d = weighted_rips_diagram(&cloud, &WeightAssignment::zeros(n), PowerParam::Finite(1.0), FlagOptions::default())
        .unwrap();
    let h1: Vec<_> = d.in_dim(1).collect();
    assert_eq!(h1.len(), 1);
    // Edge (0, k) has length 2 sin(pi k / n); the loop fills once the longest
    // chord of the first triangle spanning the centre appears.
    let chord = |k: usize| (std::f64::consts::PI * k as f64 / n as f64).sin();
    assert!((h1[0].birth - chord(1)).abs() < 1e-12);
    assert!((h1[0].death - chord(7)).abs() < 1e-12);
}
