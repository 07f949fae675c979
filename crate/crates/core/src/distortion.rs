//! Cross-ratios and empirical distortion of point bijections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::space::{FiniteSpace, PointId, SpaceError};

/// Spaces up to this size are enumerated exhaustively.
pub const FULL_ENUMERATION_MAX: usize = 12;
/// Number of sampled tuples for larger spaces.
pub const SAMPLE_SIZE: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistortionError {
    #[error("quadruple points must be pairwise distinct: {0:?}")]
    NotDistinct([PointId; 4]),
    #[error("cross-ratio undefined for {0:?}")]
    Undefined([PointId; 4]),
    #[error("source has {source_len} points, target has {target_len}")]
    SizeMismatch { source_len: usize, target_len: usize },
    #[error("map has {got} entries for {expected} points")]
    MapLength { got: usize, expected: usize },
    #[error("map is not a bijection: {0} is hit twice")]
    NotBijective(PointId),
    #[error("remote point {0} must map to a remote point")]
    RemoteMismatch(PointId),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Quadruple([PointId; 4]);

impl Quadruple {
    pub fn new(ids: [PointId; 4]) -> Result<Self, DistortionError> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if ids[i] == ids[j] {
                    return Err(DistortionError::NotDistinct(ids));
                }
            }
        }
        Ok(Quadruple(ids))
    }

    pub fn ids(&self) -> [PointId; 4] {
        self.0
    }

    pub fn map(&self, f: &[PointId]) -> Quadruple {
        Quadruple(self.0.map(|x| f[x.0]))
    }
}

/// `d(x1,x3)·d(x2,x4) / (d(x1,x4)·d(x2,x3))`. One infinite factor above and
/// one below cancel; any other pattern of infinities is undefined.
pub fn cross_ratio(space: &impl FiniteSpace, q: Quadruple) -> Result<f64, DistortionError> {
    let [x1, x2, x3, x4] = q.0;
    for x in q.0 {
        space.check_point(x)?;
    }
    let num = [space.dist(x1, x3), space.dist(x2, x4)];
    let den = [space.dist(x1, x4), space.dist(x2, x3)];
    let finite_product = |fs: [f64; 2]| fs.iter().filter(|v| v.is_finite()).product::<f64>();
    let inf_num = num.iter().filter(|v| v.is_infinite()).count();
    let inf_den = den.iter().filter(|v| v.is_infinite()).count();
    if inf_num != inf_den || inf_num > 1 {
        return Err(DistortionError::Undefined(q.0));
    }
    let (n, d) = (finite_product(num), finite_product(den));
    if d <= 0.0 || n.is_nan() {
        return Err(DistortionError::Undefined(q.0));
    }
    Ok(n / d)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterPoint<const N: usize> {
    #[serde(with = "serde_ids")]
    pub ids: [PointId; N],
    pub t: f64,
    pub u: f64,
}

mod serde_ids {
    use super::PointId;
    use serde::Serializer;

    pub fn serialize<S: Serializer, const N: usize>(ids: &[PointId; N], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ids.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scatter<const N: usize> {
    pub points: Vec<ScatterPoint<N>>,
    /// `mapping[x]` is the image of source point `x`.
    pub mapping: Vec<PointId>,
    /// Seed used when the tuples were sampled rather than enumerated.
    pub seed: Option<u64>,
    /// Tuples where either value was undefined.
    pub skipped: usize,
}

/// Cross-ratio pairs `(crt(Q,d), crt(f(Q),d'))`.
pub type DistortionScatter = Scatter<4>;
/// Distance-ratio pairs `(d(x1,x2)/d(x1,x3), d'(fx1,fx2)/d'(fx1,fx3))`.
pub type TripleScatter = Scatter<3>;

impl<const N: usize> Scatter<N> {
    /// The scatter of the inverse map (coordinates swapped).
    pub fn inverse(&self) -> Scatter<N> {
        let mut inv = vec![PointId(0); self.mapping.len()];
        for (x, y) in self.mapping.iter().enumerate() {
            inv[y.0] = PointId(x);
        }
        Scatter {
            points: self
                .points
                .iter()
                .map(|p| ScatterPoint {
                    ids: p.ids.map(|x| self.mapping[x.0]),
                    t: p.u,
                    u: p.t,
                })
                .collect(),
            mapping: inv,
            seed: self.seed,
            skipped: self.skipped,
        }
    }

    pub fn envelope(&self) -> MonotoneEnvelope {
        MonotoneEnvelope::from_pairs(self.points.iter().map(|p| (p.t, p.u)))
    }

    /// Extremes of `u / t` over the scatter.
    pub fn ratio_range(&self) -> Option<(f64, f64)> {
        self.points.iter().map(|p| p.u / p.t).fold(None, |acc, r| match acc {
            None => Some((r, r)),
            Some((lo, hi)) => Some((lo.min(r), hi.max(r))),
        })
    }
}

/// Least nondecreasing step function dominating a scatter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneEnvelope {
    pub breakpoints: Vec<(f64, f64)>,
}

impl MonotoneEnvelope {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut pts: Vec<(f64, f64)> = pairs.into_iter().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breakpoints: Vec<(f64, f64)> = Vec::new();
        let mut running = f64::NEG_INFINITY;
        for (t, u) in pts {
            running = running.max(u);
            match breakpoints.last_mut() {
                Some(last) if last.0 == t => last.1 = running,
                _ => breakpoints.push((t, running)),
            }
        }
        MonotoneEnvelope { breakpoints }
    }

    /// `ν̂(t)`; `None` below the first breakpoint.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let idx = self.breakpoints.partition_point(|b| b.0 <= t);
        idx.checked_sub(1).map(|i| self.breakpoints[i].1)
    }

    pub fn dominates(&self, t: f64, u: f64) -> bool {
        self.eval(t).is_some_and(|v| u <= v)
    }
}

pub fn monotone_envelope<const N: usize>(scatter: &Scatter<N>) -> MonotoneEnvelope {
    scatter.envelope()
}

fn check_map(
    source: &impl FiniteSpace,
    target: &impl FiniteSpace,
    f: &[PointId],
) -> Result<(), DistortionError> {
    let n = source.len();
    if target.len() != n {
        return Err(DistortionError::SizeMismatch {
            source_len: n,
            target_len: target.len(),
        });
    }
    if f.len() != n {
        return Err(DistortionError::MapLength {
            got: f.len(),
            expected: n,
        });
    }
    let mut hit = vec![false; n];
    for &y in f {
        target.check_point(y)?;
        if std::mem::replace(&mut hit[y.0], true) {
            return Err(DistortionError::NotBijective(y));
        }
    }
    let target_has_remote = target.point_ids().into_iter().any(|y| target.is_remote(y));
    if target_has_remote {
        for x in source.point_ids() {
            if source.is_remote(x) && !target.is_remote(f[x.0]) {
                return Err(DistortionError::RemoteMismatch(x));
            }
        }
    }
    Ok(())
}

/// Ordered tuples of distinct points: all of them for small spaces, a seeded
/// uniform sample otherwise.
fn tuples<const N: usize>(n: usize, seed: u64) -> (Vec<[PointId; N]>, Option<u64>) {
    if n <= FULL_ENUMERATION_MAX {
        let mut out = Vec::new();
        let mut cur = [PointId(0); N];
        fn rec<const N: usize>(n: usize, depth: usize, cur: &mut [PointId; N], out: &mut Vec<[PointId; N]>) {
            if depth == N {
                out.push(*cur);
                return;
            }
            for x in 0..n {
                if cur[..depth].iter().all(|y| y.0 != x) {
                    cur[depth] = PointId(x);
                    rec(n, depth + 1, cur, out);
                }
            }
        }
        rec(n, 0, &mut cur, &mut out);
        (out, None)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = (0..SAMPLE_SIZE)
            .map(|_| loop {
                let t: [PointId; N] = std::array::from_fn(|_| PointId(rng.random_range(0..n)));
                if (0..N).all(|i| (i + 1..N).all(|j| t[i] != t[j])) {
                    break t;
                }
            })
            .collect();
        (out, Some(seed))
    }
}

fn collect<const N: usize>(
    evaluated: Vec<Option<ScatterPoint<N>>>,
    f: &[PointId],
    seed: Option<u64>,
) -> Scatter<N> {
    let total = evaluated.len();
    let points: Vec<_> = evaluated.into_iter().flatten().collect();
    Scatter {
        skipped: total - points.len(),
        points,
        mapping: f.to_vec(),
        seed,
    }
}

pub fn distortion_scatter(
    source: &(impl FiniteSpace + Sync),
    target: &(impl FiniteSpace + Sync),
    f: &[PointId],
    seed: u64,
) -> Result<DistortionScatter, DistortionError> {
    check_map(source, target, f)?;
    let (quads, used_seed) = tuples::<4>(source.len(), seed);
    let evaluated = quads
        .par_iter()
        .map(|&ids| {
            let q = Quadruple(ids);
            let t = cross_ratio(source, q).ok()?;
            let u = cross_ratio(target, q.map(f)).ok()?;
            Some(ScatterPoint { ids, t, u })
        })
        .collect();
    Ok(collect(evaluated, f, used_seed))
}

pub fn quasisymmetry_scatter(
    source: &(impl FiniteSpace + Sync),
    target: &(impl FiniteSpace + Sync),
    f: &[PointId],
    seed: u64,
) -> Result<TripleScatter, DistortionError> {
    check_map(source, target, f)?;
    let (triples, used_seed) = tuples::<3>(source.len(), seed);
    let ratio = |s: &dyn Fn(PointId, PointId) -> f64, [a, b, c]: [PointId; 3]| {
        let (num, den) = (s(a, b), s(a, c));
        (num.is_finite() && den.is_finite() && den > 0.0).then(|| num / den)
    };
    let evaluated = triples
        .par_iter()
        .map(|&ids| {
            if ids.iter().any(|&x| source.is_remote(x) || target.is_remote(f[x.0])) {
                return None;
            }
            let t = ratio(&|x, y| source.dist(x, y), ids)?;
            let u = ratio(&|x, y| target.dist(x, y), ids.map(|x| f[x.0]))?;
            Some(ScatterPoint { ids, t, u })
        })
        .collect();
    Ok(collect(evaluated, f, used_seed))
}

/// Reads `source_label target_label` lines into a point map.
pub fn parse_label_map(
    source: &impl FiniteSpace,
    target: &impl FiniteSpace,
    text: &str,
) -> Result<Vec<PointId>, String> {
    let mut f = vec![None; source.len()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("line {}: expected `source_label target_label`", lineno + 1));
        };
        let x = source
            .find_label(a)
            .ok_or_else(|| format!("line {}: unknown source label `{a}`", lineno + 1))?;
        let y = target
            .find_label(b)
            .ok_or_else(|| format!("line {}: unknown target label `{b}`", lineno + 1))?;
        if f[x.0].replace(y).is_some() {
            return Err(format!("line {}: `{a}` mapped twice", lineno + 1));
        }
    }
    f.iter()
        .enumerate()
        .map(|(i, y)| y.ok_or_else(|| format!("source point `{}` is not mapped", source.label(PointId(i)))))
        .collect()
}

pub fn identity_map(n: usize) -> Vec<PointId> {
    (0..n).map(PointId).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ExtendedMetricSpace;
    use crate::transforms::{chain_metric, inversion_kernel};

    fn line(xs: &[f64]) -> ExtendedMetricSpace {
        let rows: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| (a - b).abs()).collect())
            .collect();
        ExtendedMetricSpace::from_rows(&rows).unwrap()
    }

    fn q(a: usize, b: usize, c: usize, d: usize) -> Quadruple {
        Quadruple::new([PointId(a), PointId(b), PointId(c), PointId(d)]).unwrap()
    }

    #[test]
    fn collinear_cross_ratio() {
        let s = line(&[0., 1., 2., 3.]);
        assert_eq!(cross_ratio(&s, q(0, 1, 2, 3)).unwrap(), 4.0 / 3.0);
        assert_eq!(cross_ratio(&s, q(1, 0, 3, 2)).unwrap(), 4.0 / 3.0);
        assert_eq!(cross_ratio(&s, q(0, 1, 3, 2)).unwrap(), 3.0 / 4.0);
        assert!(Quadruple::new([PointId(0), PointId(1), PointId(0), PointId(2)]).is_err());
    }

    #[test]
    fn remote_factors_cancel() {
        let s = line(&[0., 1., 2.]).complete_with_remote().unwrap();
        // x3 = ω: d13 and d23 are infinite, leaving d24/d14.
        assert_eq!(cross_ratio(&s, q(0, 1, 3, 2)).unwrap(), 1.0 / 2.0);
    }

    #[test]
    fn envelope_is_running_max() {
        let env = MonotoneEnvelope::from_pairs([(1., 1.), (2., 4.), (3., 2.)]);
        assert_eq!(env.breakpoints, vec![(1., 1.), (2., 4.), (3., 4.)]);
        assert_eq!(env.eval(0.5), None);
        assert_eq!(env.eval(2.5), Some(4.0));
        let single = MonotoneEnvelope::from_pairs([(2., 3.)]);
        assert_eq!(single.eval(100.0), Some(3.0));
    }

    #[test]
    fn identity_scatter_is_diagonal() {
        let s = line(&[0., 1., 2.5, 4., 7.]);
        let sc = distortion_scatter(&s, &s, &identity_map(5), 0).unwrap();
        assert_eq!(sc.points.len(), 120);
        assert!(sc.points.iter().all(|p| p.t == p.u));
        assert_eq!(sc.seed, None);
        let tri = quasisymmetry_scatter(&s, &s.scaled(3.0).unwrap(), &identity_map(5), 0).unwrap();
        assert!(tri.points.iter().all(|p| (p.t - p.u).abs() <= 1e-12 * p.t));
    }

    #[test]
    fn inversion_kernel_preserves_cross_ratio() {
        let s = line(&[0., 1., 2., 4., 7., 11.]);
        let p = PointId(0);
        let kernel = inversion_kernel(&s, p).unwrap();
        let rest = s.remove_point(p).unwrap();
        let sc = distortion_scatter(&rest, &kernel, &identity_map(5), 0).unwrap();
        assert!(sc.points.iter().all(|pt| (pt.t - pt.u).abs() <= 1e-9 * pt.t));
        let dp = chain_metric(&s, p).unwrap();
        let sc = distortion_scatter(&rest, &dp, &identity_map(5), 0).unwrap();
        let (lo, hi) = sc.ratio_range().unwrap();
        assert!(lo >= 4f64.powi(-4) && hi <= 4f64.powi(4));
    }

    #[test]
    fn map_checks() {
        let s = line(&[0., 1., 2.]);
        let t = line(&[0., 1., 2., 3.]);
        assert!(matches!(
            distortion_scatter(&s, &t, &identity_map(3), 0),
            Err(DistortionError::SizeMismatch { .. })
        ));
        let bad = vec![PointId(0), PointId(0), PointId(1)];
        assert_eq!(
            distortion_scatter(&s, &s, &bad, 0),
            Err(DistortionError::NotBijective(PointId(0)))
        );
        let map = parse_label_map(&s, &s, "0 2\n1 1\n2 0\n").unwrap();
        assert_eq!(map, vec![PointId(2), PointId(1), PointId(0)]);
        assert!(parse_label_map(&s, &s, "0 2\n").is_err());
    }

    #[test]
    fn large_spaces_are_sampled_deterministically() {
        let xs: Vec<f64> = (0..14).map(|i| (i * i) as f64).collect();
        let s = line(&xs);
        let a = quasisymmetry_scatter(&s, &s, &identity_map(14), 7).unwrap();
        let b = quasisymmetry_scatter(&s, &s, &identity_map(14), 7).unwrap();
        assert_eq!(a.seed, Some(7));
        assert_eq!(a.points.len(), SAMPLE_SIZE);
        assert_eq!(a, b);
    }
}
