//! Deterministic test spaces.
//!
//! Random models (all driven by a ChaCha8 stream seeded with a `u64`):
//!
//! * `Ultrametric`: agglomerative clustering. Starting from singletons, two
//!   uniformly chosen clusters are merged at a height that grows by a
//!   uniform step in `[0.1, 1)` per merge; `d(x, y)` is the merge height.
//! * `PerturbedGrid { jitter }`: points of a square lattice with unit
//!   spacing, each coordinate moved by a uniform offset in
//!   `[-jitter/2, jitter/2]`, with Euclidean distances.
//! * `Quasi(K)`: for `K >= 2`, Euclidean distances of uniform points in the
//!   unit square multiplied pairwise by uniform factors in `[1, K/2]`; for
//!   `K < 2`, a random ultrametric with factors in `[1, K]`. Every draw is
//!   validated and redrawn up to [`QUASI_BUDGET`] times.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::space::{
    index_labels, AnySpace, ExtendedMetricSpace, FiniteSpace, PointId, QuasiMetricSpace, SpaceError,
    MIN_POINTS,
};
use crate::transforms::{LambdaWeighting, TransformError};

pub const DEFAULT_POINT_CAP: usize = 4096;
pub const QUASI_BUDGET: usize = 1000;
const ALPHABET: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{points} points exceed the cap of {cap}")]
    TooLarge { points: u128, cap: usize },
    #[error("points {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("no valid {k}-quasi-metric after {budget} draws (seed {seed})")]
    BudgetExhausted { k: f64, budget: usize, seed: u64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

fn param(msg: impl Into<String>) -> GenError {
    GenError::Parameter(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CantorSpec {
    pub k: usize,
    pub depth: u32,
    pub a: f64,
    pub cap: usize,
}

impl CantorSpec {
    pub fn new(k: usize, depth: u32, a: f64) -> Self {
        CantorSpec {
            k,
            depth,
            a,
            cap: DEFAULT_POINT_CAP,
        }
    }

    pub fn validate(&self) -> Result<usize, GenError> {
        if !(2..=ALPHABET.len()).contains(&self.k) {
            return Err(param(format!("alphabet size must be in 2..=36, got {}", self.k)));
        }
        if self.depth < 1 {
            return Err(param("depth must be at least 1"));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(param(format!("a must lie in (0, 1), got {}", self.a)));
        }
        let points = (self.k as u128).checked_pow(self.depth).unwrap_or(u128::MAX);
        if points > self.cap as u128 {
            return Err(GenError::TooLarge {
                points,
                cap: self.cap,
            });
        }
        Ok(points as usize)
    }
}

/// Words of length `depth` over `k` letters with `d(x, y) = a^L`, `L` the
/// common prefix length.
pub fn cantor_space(spec: CantorSpec) -> Result<ExtendedMetricSpace, GenError> {
    let n = spec.validate()?;
    let m = spec.depth as usize;
    let words: Vec<Vec<u8>> = (0..n)
        .map(|mut i| {
            let mut w = vec![0u8; m];
            for slot in w.iter_mut().rev() {
                *slot = ALPHABET[i % spec.k];
                i /= spec.k;
            }
            w
        })
        .collect();
    let rows: Vec<Vec<f64>> = words
        .iter()
        .map(|x| {
            words
                .iter()
                .map(|y| match x.iter().zip(y).position(|(a, b)| a != b) {
                    None => 0.0,
                    Some(l) => spec.a.powi(l as i32),
                })
                .collect()
        })
        .collect();
    let labels = words
        .into_iter()
        .map(|w| String::from_utf8(w).expect("ascii alphabet"))
        .collect();
    Ok(ExtendedMetricSpace::new(labels, &rows, None)?)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn euclidean_space(coords: &[Vec<f64>]) -> Result<ExtendedMetricSpace, GenError> {
    euclidean_space_labeled(index_labels(coords.len()), coords)
}

pub fn euclidean_space_labeled(
    labels: Vec<String>,
    coords: &[Vec<f64>],
) -> Result<ExtendedMetricSpace, GenError> {
    let n = coords.len();
    if n < MIN_POINTS {
        return Err(SpaceError::TooFewPoints(n).into());
    }
    let dim = coords[0].len();
    if coords.iter().any(|c| c.len() != dim) {
        return Err(param("all points need the same dimension"));
    }
    if coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(param("coordinates must be finite"));
    }
    let rows: Vec<Vec<f64>> = coords
        .iter()
        .map(|a| coords.iter().map(|b| euclid(a, b)).collect())
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if rows[i][j] == 0.0 {
                return Err(GenError::Duplicate(i, j));
            }
        }
    }
    Ok(ExtendedMetricSpace::new(labels, &rows, None)?)
}

/// `p = 0` followed by `x_i = 1/u_i` for `n` values `u_i` evenly spaced from
/// `u_hi` down to `u_lo`. In `d_p` consecutive points are `(u_hi-u_lo)/(n-1)`
/// apart, so the extreme points are joined by a `1/(n-1)`-chain.
pub fn inversion_ray(
    n: usize,
    u_lo: f64,
    u_hi: f64,
) -> Result<(ExtendedMetricSpace, PointId), GenError> {
    if n < 3 {
        return Err(param(format!("need at least 3 ray points, got {n}")));
    }
    if !(u_lo > 0.0 && u_lo < u_hi && u_hi.is_finite()) {
        return Err(param(format!("need 0 < u_lo < u_hi, got [{u_lo}, {u_hi}]")));
    }
    let step = (u_hi - u_lo) / (n - 1) as f64;
    let mut coords = vec![vec![0.0]];
    coords.extend((0..n).map(|i| vec![1.0 / (u_hi - step * i as f64)]));
    let mut labels = vec!["p".to_string()];
    labels.extend((1..=n).map(|i| format!("x{i}")));
    Ok((euclidean_space_labeled(labels, &coords)?, PointId(0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomModel {
    Ultrametric,
    /// Uniform points in the unit cube of the given dimension.
    Euclidean { dim: usize },
    PerturbedGrid { jitter: f64 },
    /// Shortest paths in a complete graph with edge weights uniform in `[1, 3]`.
    Graph,
    Quasi { k: f64 },
}

fn random_ultrametric_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; n]; n];
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut height = 0.0;
    while clusters.len() > 1 {
        height += rng.random_range(0.1..1.0);
        let i = rng.random_range(0..clusters.len());
        let a = clusters.swap_remove(i);
        let j = rng.random_range(0..clusters.len());
        for &x in &a {
            for &y in &clusters[j] {
                rows[x][y] = height;
                rows[y][x] = height;
            }
        }
        clusters[j].extend(a);
    }
    rows
}

pub fn random_space(seed: u64, n: usize, model: RandomModel) -> Result<AnySpace, GenError> {
    if n < MIN_POINTS {
        return Err(SpaceError::TooFewPoints(n).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        RandomModel::Ultrametric => {
            let rows = random_ultrametric_rows(&mut rng, n);
            Ok(AnySpace::Metric(ExtendedMetricSpace::from_rows(&rows)?))
        }
        RandomModel::Euclidean { dim } => {
            if dim == 0 {
                return Err(param("dimension must be positive"));
            }
            let coords: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
                .collect();
            Ok(AnySpace::Metric(euclidean_space(&coords)?))
        }
        RandomModel::Graph => {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = rng.random_range(1.0..=3.0);
                    rows[i][j] = w;
                    rows[j][i] = w;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = rows[i][k] + rows[k][j];
                        if via < rows[i][j] {
                            rows[i][j] = via;
                        }
                    }
                }
            }
            Ok(AnySpace::Metric(ExtendedMetricSpace::from_rows(&rows)?))
        }
        RandomModel::PerturbedGrid { jitter } => {
            if !(0.0..1.0).contains(&jitter) {
                return Err(param(format!("jitter must lie in [0, 1), got {jitter}")));
            }
            let side = (n as f64).sqrt().ceil() as usize;
            let coords: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let base = [(i % side) as f64, (i / side) as f64];
                    base.iter()
                        .map(|&c| {
                            let off: f64 = rng.random_range(-0.5..=0.5);
                            c + jitter * off
                        })
                        .collect()
                })
                .collect();
            Ok(AnySpace::Metric(euclidean_space(&coords)?))
        }
        RandomModel::Quasi { k } => {
            if !(k.is_finite() && k >= 1.0) {
                return Err(param(format!("K must be a finite number >= 1, got {k}")));
            }
            for _ in 0..QUASI_BUDGET {
                let (base, spread) = if k >= 2.0 {
                    let pts: Vec<[f64; 2]> = (0..n)
                        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
                        .collect();
                    let rows = pts
                        .iter()
                        .map(|a| pts.iter().map(|b| euclid(a, b)).collect())
                        .collect::<Vec<Vec<f64>>>();
                    (rows, k / 2.0)
                } else {
                    (random_ultrametric_rows(&mut rng, n), k)
                };
                let mut rows = base;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let f = if spread > 1.0 { rng.random_range(1.0..=spread) } else { 1.0 };
                        rows[i][j] *= f;
                        rows[j][i] = rows[i][j];
                    }
                }
                if let Ok(q) = QuasiMetricSpace::new(index_labels(n), &rows, k, BTreeSet::new()) {
                    return Ok(AnySpace::Quasi(q));
                }
            }
            Err(GenError::BudgetExhausted {
                k,
                budget: QUASI_BUDGET,
                seed,
            })
        }
    }
}

/// A weighted quasi-metric space carrying a θ-chain of `d_λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaChainInstance {
    pub space: QuasiMetricSpace,
    pub weighting: LambdaWeighting,
    pub chain: Vec<PointId>,
    pub theta: f64,
}

/// Plane configuration where `λ` vanishes at the origin `p` and a θ-chain of
/// `d_λ` runs along the inverted image of a half ellipse with semi-axes
/// `1` and `h`. Points are placed greedily so each link stays below
/// `0.8·θ` times the endpoint distance; `λ` is then the largest weight
/// satisfying both weighting inequalities with the endpoint weights held at
/// their smallest admissible values. The space is viewed as a
/// 2-quasi-metric.
pub fn lambda_chain_instance(
    k_prime: f64,
    h: f64,
    theta: f64,
) -> Result<LambdaChainInstance, GenError> {
    const MAX_POINTS: usize = 2000;
    if !(h > 0.0 && h != 1.0 && h.is_finite()) {
        return Err(param(format!("ellipse ratio must be positive and not 1, got {h}")));
    }
    if !(theta > 0.0 && theta < 1.0) || !(k_prime.is_finite() && k_prime >= 2.0) {
        return Err(param("need 0 < theta < 1 and K' >= 2"));
    }
    let curve = |s: f64| {
        let t = PI * (1.0 - s);
        let (x, y) = (t.cos(), h * t.sin());
        let r2 = x * x + y * y;
        [x / r2, y / r2]
    };
    let norm = |a: [f64; 2]| a[0].hypot(a[1]);
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);

    let (x0, xn) = (curve(0.0), curve(1.0));
    let d0n = dist(x0, xn);
    let l0 = norm(x0).max(d0n) / k_prime;
    let ln = norm(xn).max(d0n) / k_prime;
    let limit = 0.8 * theta * d0n / (l0 * ln);
    let estimate = |x: [f64; 2], prev: [f64; 2], lp: f64| {
        (k_prime * norm(x))
            .min(k_prime * dist(x, x0).max(l0))
            .min(k_prime * dist(x, xn).max(ln))
            .min(k_prime * dist(x, prev).max(lp))
    };

    let mut pts = vec![x0];
    let mut lams = vec![l0];
    let mut s = 0.0;
    loop {
        let (prev, lp) = (*pts.last().unwrap(), *lams.last().unwrap());
        if dist(xn, prev) / (lp * ln) <= limit {
            pts.push(xn);
            break;
        }
        let (mut lo, mut hi) = (s, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let x = curve(mid);
            if dist(x, prev) / (lp * estimate(x, prev, lp)) <= limit {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo <= s {
            return Err(param("chain placement stalled"));
        }
        let mut x = curve(lo);
        if dist(x, xn) <= 1e-9 * d0n {
            // Overshot onto the endpoint: stop where the final link fits.
            let gap = 0.5 * limit * k_prime * ln * ln;
            let (mut a, mut b) = (s, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if dist(curve(mid), xn) >= gap {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            lo = a;
            x = curve(lo);
        }
        s = lo;
        lams.push(estimate(x, prev, lp));
        pts.push(x);
        if pts.len() > MAX_POINTS {
            return Err(param("chain needs too many points"));
        }
    }

    let mut coords = vec![vec![0.0, 0.0]];
    coords.extend(pts.iter().map(|p| p.to_vec()));
    let mut labels = vec!["p".to_string()];
    labels.extend((0..pts.len()).map(|i| format!("c{i}")));
    let metric = euclidean_space_labeled(labels, &coords)?;
    let n = metric.len();
    let d = |i: usize, j: usize| metric.dist(PointId(i), PointId(j));

    let ends = [1, n - 1];
    let mut lambda: Vec<f64> = (0..n).map(|i| k_prime * d(0, i)).collect();
    lambda[0] = 0.0;
    lambda[1] = d(0, 1).max(d(1, n - 1)) / k_prime;
    lambda[n - 1] = d(0, n - 1).max(d(1, n - 1)) / k_prime;
    loop {
        let mut changed = false;
        for x in 1..n {
            if ends.contains(&x) {
                continue;
            }
            let bound = (0..n)
                .filter(|&y| y != x)
                .map(|y| k_prime * d(x, y).max(lambda[y]))
                .fold(k_prime * d(0, x), f64::min);
            if bound < lambda[x] {
                lambda[x] = bound;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let space = QuasiMetricSpace::from_metric(&metric);
    let weighting = LambdaWeighting::new(lambda, 1.0, k_prime)?;
    weighting.validate(&space)?;
    Ok(LambdaChainInstance {
        space,
        weighting,
        chain: (1..n).map(PointId).collect(),
        theta,
    })
}
