//! Frozen values and test-local brute-force references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmobius_core::chains::{critical_theta, find_theta_chain};
use qmobius_core::covering::{candidate_radii, doubling_constant, min_half_cover, CoverMode};
use qmobius_core::distortion::{cross_ratio, Quadruple};
use qmobius_core::generators::{cantor_space, euclidean_space, random_space, CantorSpec, RandomModel};
use qmobius_core::{chain_metric, ExtendedMetricSpace, FiniteSpace, PointId};

fn line(xs: &[f64]) -> ExtendedMetricSpace {
    euclidean_space(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
}

fn spaces() -> Vec<ExtendedMetricSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut out = Vec::new();
    for i in 0..18 {
        let n = rng.random_range(4..=8);
        let model = [RandomModel::Ultrametric, RandomModel::Graph, RandomModel::PerturbedGrid { jitter: 0.4 }][i % 3];
        let s = random_space(rng.random(), n, model).unwrap().into_metric().unwrap();
        out.push(if i % 4 == 0 { s.complete_with_remote().unwrap() } else { s });
    }
    out
}

/// Inverted distances by Bellman-Ford relaxation of the raw kernel.
fn relaxed_inversion(space: &ExtendedMetricSpace, p: PointId) -> Vec<Vec<f64>> {
    let rest: Vec<PointId> = space.point_ids().into_iter().filter(|&x| x != p).collect();
    let kernel = |x: PointId, y: PointId| {
        if x == y {
            0.0
        } else if space.is_remote(x) {
            1.0 / space.dist(p, y)
        } else if space.is_remote(y) {
            1.0 / space.dist(p, x)
        } else {
            space.dist(x, y) / space.dist(p, x) / space.dist(p, y)
        }
    };
    let m = rest.len();
    let mut d: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| kernel(rest[i], rest[j])).collect()).collect();
    for _ in 0..m {
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
    }
    d
}

/// θ-chain existence via connectivity of short links, with the direct pair
/// allowed only if a third point joins the component.
fn connected_by_short_links(space: &ExtendedMetricSpace, theta: f64, a: PointId, b: PointId) -> bool {
    let bound = theta * space.dist(a, b) * (1.0 + 1e-9);
    let n = space.len();
    let mut reach = vec![false; n];
    let mut stack = vec![a.0];
    reach[a.0] = true;
    while let Some(x) = stack.pop() {
        for y in 0..n {
            let skip_direct = (x == a.0 && y == b.0) || (x == b.0 && y == a.0);
            if !reach[y] && !skip_direct && space.dist(PointId(x), PointId(y)) <= bound {
                reach[y] = true;
                if y != b.0 {
                    stack.push(y);
                }
            }
        }
    }
    reach[b.0]
}

fn covers_by_mask(space: &ExtendedMetricSpace, c: PointId, r: f64) -> usize {
    let n = space.len();
    let target: Vec<usize> = (0..n).filter(|&x| space.dist(c, PointId(x)) <= r).collect();
    (1u32..1 << n)
        .filter(|mask| {
            target.iter().all(|&x| {
                (0..n).any(|y| mask & (1 << y) != 0 && space.dist(PointId(y), PointId(x)) <= r / 2.0)
            })
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap()
}

#[test]
fn frozen_values() {
    let l3 = line(&[0., 1., 2.]);
    let d = doubling_constant(&l3, CoverMode::Exact).unwrap();
    assert_eq!((d.constant, d.witness.center, d.witness.radius), (3, PointId(1), 1.0));
    assert_eq!(min_half_cover(&l3, PointId(1), 2.0, CoverMode::Exact).unwrap().count(), 1);
    assert_eq!(critical_theta(&l3).unwrap().theta_star, 0.5);
    assert_eq!(critical_theta(&line(&[0., 1., 2., 3., 4.])).unwrap().theta_star, 0.25);

    let dp = chain_metric(&line(&[0., 1., 2., 4.]), PointId(0)).unwrap();
    assert_eq!(dp.dist(PointId(0), PointId(2)), 0.75);

    let q = Quadruple::new([PointId(0), PointId(1), PointId(2), PointId(3)]).unwrap();
    assert!((cross_ratio(&line(&[0., 1., 2., 3.]), q).unwrap() - 4.0 / 3.0).abs() < 1e-15);

    for depth in 2..=5 {
        let c = cantor_space(CantorSpec::new(2, depth, 0.5)).unwrap();
        assert_eq!(doubling_constant(&c, CoverMode::Exact).unwrap().constant, 2);
        assert_eq!(critical_theta(&c).unwrap().theta_star, 1.0);
    }
    let c3 = cantor_space(CantorSpec::new(3, 3, 1.0 / 3.0)).unwrap();
    assert_eq!(doubling_constant(&c3, CoverMode::Exact).unwrap().constant, 3);
}

#[test]
fn chain_metric_matches_relaxation() {
    for s in spaces() {
        for p in s.finite_points() {
            let fast = chain_metric(&s, p).unwrap();
            let slow = relaxed_inversion(&s, p);
            for x in fast.point_ids() {
                for y in fast.point_ids() {
                    let (a, b) = (fast.dist(x, y), slow[x.0][y.0]);
                    assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn theta_chains_match_connectivity() {
    for s in spaces() {
        let finite = s.finite_points();
        for &a in &finite {
            for &b in &finite {
                if a >= b {
                    continue;
                }
                for theta in [0.15, 0.3, 0.45, 0.5, 0.6, 0.75, 0.9] {
                    let fast = find_theta_chain(&s, theta, (a, b)).unwrap().is_some();
                    assert_eq!(fast, connected_by_short_links(&s, theta, a, b), "θ={theta} {a:?} {b:?}");
                }
            }
        }
    }
}

#[test]
fn exact_covers_match_masks() {
    for s in spaces() {
        for c in s.point_ids() {
            for r in candidate_radii(&s) {
                let fast = min_half_cover(&s, c, r, CoverMode::Exact).unwrap().count();
                assert_eq!(fast, covers_by_mask(&s, c, r), "center {c:?} radius {r}");
            }
        }
    }
}
