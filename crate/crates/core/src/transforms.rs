//! Metric inversion, sphericalization and the λ-weighted generalization.
//!
//! The inversion kernel at a basepoint `p` is
//! `i_p(x, y) = d(x, y) / (d(p, x) d(p, y))`, with `i_p(ω, x) = 1 / d(p, x)`
//! for the remote point. The kernel need not satisfy the triangle inequality;
//! its chain metric `d_p` (shortest chain sums over `X∖{p}`) does, and
//! `i_p / 4 <= d_p <= i_p`. Sphericalization is the same construction with
//! `s_p(x, y) = d(x, y) / ((d(x, p) + 1)(d(y, p) + 1))`, keeping `p`.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{ext_real, le_tol};
use crate::space::{
    DistanceMatrix, ExtendedMetricSpace, FiniteSpace, PointId, QuasiMetricSpace, SpaceError,
    ValidationReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("basepoint {0} is the infinitely remote point")]
    BasepointIsRemote(PointId),
    #[error("sphericalization needs a space without a remote point")]
    RemotePresent,
    #[error("transformed distance between distinct points {0} and {1} is zero")]
    Degenerate(PointId, PointId),
    #[error("invalid weighting: {0}")]
    Weighting(String),
    #[error("weighting vanishes at more than one point: {0:?}")]
    MultipleZeros(Vec<PointId>),
    #[error("λ-transform needs at most one infinitely remote point, got {0}")]
    MultipleRemote(usize),
    #[error("transformed matrix is not a quasi-metric: {0}")]
    NotQuasiMetric(ValidationReport),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Inversion,
    Sphericalization,
}

/// A kernel (`i_p` or `s_p`) on its domain. Row `k` corresponds to base
/// point `domain[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    kind: KernelKind,
    basepoint: PointId,
    domain: Vec<PointId>,
    labels: Vec<String>,
    values: DistanceMatrix,
    /// `1/d(p,x)` (inversion) or `1/(1+d(p,x))` (sphericalization) per domain point.
    reach: Vec<f64>,
}

impl KernelMatrix {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn basepoint(&self) -> PointId {
        self.basepoint
    }

    /// Base-space ids of the kernel's points, in kernel order.
    pub fn domain(&self) -> &[PointId] {
        &self.domain
    }

    pub fn value(&self, x: PointId, y: PointId) -> f64 {
        self.values.get(x.0, y.0)
    }

    /// Kernel index of a base point, `None` if it is outside the domain.
    pub fn kernel_index(&self, base: PointId) -> Option<PointId> {
        self.domain.iter().position(|&b| b == base).map(PointId)
    }

    /// The a-priori bound `1/d(x,p) + 1/d(y,p)` (resp. `1/(1+d(x,p)) + 1/(1+d(y,p))`).
    pub fn outer_bound(&self, x: PointId, y: PointId) -> f64 {
        self.reach[x.0] + self.reach[y.0]
    }

    /// Chain metric of this kernel: all-pairs shortest chain sums.
    pub fn chain_closure(&self) -> DistanceMatrix {
        shortest_chain_closure(&self.values)
    }
}

impl FiniteSpace for KernelMatrix {
    fn matrix(&self) -> &DistanceMatrix {
        &self.values
    }

    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn is_remote(&self, _x: PointId) -> bool {
        false
    }
}

/// Index of base point `x` inside `X∖{p}`.
pub fn index_without(p: PointId, x: PointId) -> Option<PointId> {
    use std::cmp::Ordering::*;
    match x.cmp(&p) {
        Less => Some(x),
        Equal => None,
        Greater => Some(PointId(x.0 - 1)),
    }
}

/// Base index of point `y` of `X∖{p}`.
pub fn index_with(p: PointId, y: PointId) -> PointId {
    if y < p {
        y
    } else {
        PointId(y.0 + 1)
    }
}

pub fn inversion_kernel(
    space: &ExtendedMetricSpace,
    p: PointId,
) -> Result<KernelMatrix, TransformError> {
    space.check_point(p)?;
    if space.is_remote(p) {
        return Err(TransformError::BasepointIsRemote(p));
    }
    let domain: Vec<PointId> = space.point_ids().into_iter().filter(|&x| x != p).collect();
    let reach: Vec<f64> = domain.iter().map(|&x| 1.0 / space.dist(p, x)).collect();
    let values = DistanceMatrix::from_fn(domain.len(), |i, j| {
        let (x, y) = (domain[i], domain[j]);
        if i == j {
            0.0
        } else {
            match (space.is_remote(x), space.is_remote(y)) {
                (true, _) => reach[j],
                (_, true) => reach[i],
                _ => space.dist(x, y) * reach[i] * reach[j],
            }
        }
    });
    Ok(KernelMatrix {
        kind: KernelKind::Inversion,
        basepoint: p,
        labels: domain.iter().map(|&x| space.label(x).to_string()).collect(),
        domain,
        values,
        reach,
    })
}

/// The inverted space `(X∖{p}, d_p)`. Point `y` of the result is base point
/// [`index_with`]`(p, y)`; a former remote point becomes an ordinary point.
pub fn chain_metric(
    space: &ExtendedMetricSpace,
    p: PointId,
) -> Result<ExtendedMetricSpace, TransformError> {
    let kernel = inversion_kernel(space, p)?;
    space_from_closure(&kernel)
}

pub fn sphericalization_kernel(
    space: &ExtendedMetricSpace,
    p: PointId,
) -> Result<KernelMatrix, TransformError> {
    space.check_point(p)?;
    if space.remote().is_some() {
        return Err(TransformError::RemotePresent);
    }
    let domain = space.point_ids();
    let reach: Vec<f64> = domain.iter().map(|&x| 1.0 / (space.dist(p, x) + 1.0)).collect();
    let values = DistanceMatrix::from_fn(domain.len(), |i, j| {
        space.dist(domain[i], domain[j]) * reach[i] * reach[j]
    });
    Ok(KernelMatrix {
        kind: KernelKind::Sphericalization,
        basepoint: p,
        labels: space.labels().to_vec(),
        domain,
        values,
        reach,
    })
}

/// `(X, d̂_p)`: the chain metric of the sphericalization kernel. Bounded by 2.
pub fn sphericalized_metric(
    space: &ExtendedMetricSpace,
    p: PointId,
) -> Result<ExtendedMetricSpace, TransformError> {
    let kernel = sphericalization_kernel(space, p)?;
    space_from_closure(&kernel)
}

fn space_from_closure(kernel: &KernelMatrix) -> Result<ExtendedMetricSpace, TransformError> {
    let closure = kernel.chain_closure();
    let n = closure.side();
    for i in 0..n {
        for j in (i + 1)..n {
            if closure.get(i, j) <= 0.0 {
                return Err(TransformError::Degenerate(PointId(i), PointId(j)));
            }
        }
    }
    Ok(ExtendedMetricSpace::from_matrix(
        kernel.labels.clone(),
        closure,
        None,
    )?)
}

/// Floyd–Warshall closure of a non-negative symmetric weight matrix.
pub fn shortest_chain_closure(weights: &DistanceMatrix) -> DistanceMatrix {
    let n = weights.side();
    let mut dist = weights.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = dist.get(i, k);
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let through = dik + dist.get(k, j);
                if through < dist.get(i, j) {
                    dist.set(i, j, through);
                }
            }
        }
    }
    dist
}

/// The lexicographically smallest chain from `x` to `y` attaining the
/// closure value, given the weights and their closure.
pub fn witness_chain(
    weights: &DistanceMatrix,
    closure: &DistanceMatrix,
    x: PointId,
    y: PointId,
) -> Vec<PointId> {
    let n = weights.side();
    let mut path = vec![x];
    let mut visited = vec![false; n];
    visited[x.0] = true;
    let mut u = x.0;
    while u != y.0 {
        let target = closure.get(u, y.0);
        let next = (0..n)
            .filter(|&v| !visited[v])
            .find(|&v| {
                v == y.0 && le_tol(weights.get(u, v), target)
                    || v != y.0 && le_tol(weights.get(u, v) + closure.get(v, y.0), target)
            })
            .unwrap_or(y.0);
        visited[next] = true;
        path.push(PointId(next));
        u = next;
    }
    path
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SandwichCheck {
    pub pairs: usize,
    /// Pairs with `chain < kernel / 4`.
    pub lower_failures: usize,
    /// Pairs with `chain > kernel`.
    pub upper_failures: usize,
    /// Pairs with `kernel` above the reach bound.
    pub outer_failures: usize,
    /// Smallest observed `chain / kernel`.
    #[serde(with = "ext_real")]
    pub min_ratio: f64,
    /// Largest observed `chain / kernel`.
    #[serde(with = "ext_real")]
    pub max_ratio: f64,
    pub first_failure: Option<(PointId, PointId)>,
}

impl SandwichCheck {
    pub fn ok(&self) -> bool {
        self.lower_failures == 0 && self.upper_failures == 0 && self.outer_failures == 0
    }
}

/// Checks `k/4 <= c <= k <= outer_bound` on every pair, where `c` is the
/// chain metric computed from `kernel` (same indexing).
pub fn check_sandwich(kernel: &KernelMatrix, chain: &impl FiniteSpace) -> SandwichCheck {
    let n = kernel.len();
    let mut check = SandwichCheck {
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        ..Default::default()
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (PointId(i), PointId(j));
            let k = kernel.value(x, y);
            let c = chain.dist(x, y);
            check.pairs += 1;
            let ratio = c / k;
            check.min_ratio = check.min_ratio.min(ratio);
            check.max_ratio = check.max_ratio.max(ratio);
            let mut failed = false;
            if !le_tol(k / 4.0, c) {
                check.lower_failures += 1;
                failed = true;
            }
            if !le_tol(c, k) {
                check.upper_failures += 1;
                failed = true;
            }
            if !le_tol(k, kernel.outer_bound(x, y)) {
                check.outer_failures += 1;
                failed = true;
            }
            if failed && check.first_failure.is_none() {
                check.first_failure = Some((x, y));
            }
        }
    }
    check
}

/// Weight function `λ` with its parameters `L` and `K'`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaWeighting {
    #[serde(serialize_with = "serialize_ext_vec")]
    lambda: Vec<f64>,
    l: f64,
    k_prime: f64,
}

fn serialize_ext_vec<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Ext(f64);
    impl Serialize for Ext {
        fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ext_real::serialize(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&Ext(x))?;
    }
    seq.end()
}

impl LambdaWeighting {
    pub fn new(lambda: Vec<f64>, l: f64, k_prime: f64) -> Result<Self, TransformError> {
        if let Some(bad) = lambda.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(TransformError::Weighting(format!(
                "λ values must lie in [0, inf], got {bad}"
            )));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(TransformError::Weighting(format!("L must be positive, got {l}")));
        }
        if !(k_prime.is_finite() && k_prime >= 1.0) {
            return Err(TransformError::Weighting(format!(
                "K' must be a finite number >= 1, got {k_prime}"
            )));
        }
        Ok(LambdaWeighting { lambda, l, k_prime })
    }

    /// `λ(x) = d(p, x)` with `L = 1`; `d_λ` is then the inversion kernel at `p`.
    pub fn from_basepoint(space: &QuasiMetricSpace, p: PointId) -> Result<Self, TransformError> {
        space.check_point(p)?;
        let lambda: Vec<f64> = space.point_ids().iter().map(|&x| space.dist(p, x)).collect();
        let k_prime = Self::minimal_k_prime(space, &lambda, 1.0);
        Self::new(lambda, 1.0, k_prime)
    }

    /// Smallest `K' >= K` for which both weighting inequalities hold.
    pub fn minimal_k_prime(space: &QuasiMetricSpace, lambda: &[f64], l: f64) -> f64 {
        let n = space.len();
        let ratio = |num: f64, den: f64| -> f64 {
            if num.is_infinite() && den.is_infinite() {
                1.0
            } else {
                num / den
            }
        };
        let mut k = space.k();
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let d = space.dist(PointId(x), PointId(y));
                let (lx, ly) = (l * lambda[x], l * lambda[y]);
                k = k.max(ratio(d, lx.max(ly)));
                k = k.max(ratio(lx, d.max(ly)));
            }
        }
        k
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn k_prime(&self) -> f64 {
        self.k_prime
    }

    /// `λ⁻¹(0)`.
    pub fn zero_set(&self) -> Vec<PointId> {
        self.lambda
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0.0)
            .map(|(i, _)| PointId(i))
            .collect()
    }

    /// Checks `λ⁻¹(inf) = X∞`, `K' >= K`, and both weighting inequalities.
    pub fn validate(&self, space: &QuasiMetricSpace) -> Result<(), TransformError> {
        let n = space.len();
        if self.lambda.len() != n {
            return Err(TransformError::Weighting(format!(
                "{} weights for {n} points",
                self.lambda.len()
            )));
        }
        if self.k_prime < space.k() {
            return Err(TransformError::Weighting(format!(
                "K' = {} is below K = {}",
                self.k_prime,
                space.k()
            )));
        }
        let infinite: BTreeSet<PointId> = (0..n)
            .filter(|&i| self.lambda[i].is_infinite())
            .map(PointId)
            .collect();
        if &infinite != space.remote_set() {
            return Err(TransformError::Weighting(format!(
                "λ⁻¹(inf) = {:?} differs from the remote set {:?}",
                infinite,
                space.remote_set()
            )));
        }
        let (l, kp) = (self.l, self.k_prime);
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let d = space.dist(PointId(x), PointId(y));
                let (lx, ly) = (l * self.lambda[x], l * self.lambda[y]);
                let rhs = kp * lx.max(ly);
                if !le_tol(d, rhs) {
                    return Err(TransformError::Weighting(format!(
                        "d({x},{y}) = {d} > K' max(Lλ({x}), Lλ({y})) = {rhs}"
                    )));
                }
                let rhs = kp * d.max(ly);
                if !le_tol(lx, rhs) {
                    return Err(TransformError::Weighting(format!(
                        "Lλ({x}) = {lx} > K' max(d({x},{y}), Lλ({y})) = {rhs}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `d_λ(x, y) = d(x, y) / (λ(x) λ(y))`, with `L / λ(x)` towards the remote
/// point and `+inf` towards the zero of `λ`. The result is a `K'²`-quasi-metric
/// whose remote set is `λ⁻¹(0)`.
pub fn lambda_transform(
    space: &QuasiMetricSpace,
    w: &LambdaWeighting,
) -> Result<QuasiMetricSpace, TransformError> {
    let zeros = w.zero_set();
    if zeros.len() > 1 {
        return Err(TransformError::MultipleZeros(zeros));
    }
    w.validate(space)?;
    if space.remote_set().len() > 1 {
        return Err(TransformError::MultipleRemote(space.remote_set().len()));
    }
    let n = space.len();
    let is_zero = |i: usize| w.lambda[i] == 0.0;
    let is_remote = |i: usize| space.is_remote(PointId(i));
    let matrix = DistanceMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else if is_zero(i) || is_zero(j) {
            f64::INFINITY
        } else if is_remote(i) {
            w.l / w.lambda[j]
        } else if is_remote(j) {
            w.l / w.lambda[i]
        } else {
            space.dist(PointId(i), PointId(j)) / (w.lambda[i] * w.lambda[j])
        }
    });
    let k = w.k_prime * w.k_prime;
    let remote_set: BTreeSet<PointId> = zeros.into_iter().collect();
    let report = crate::space::validate_quasi_metric_matrix(&matrix, k, &remote_set)?;
    if !report.ok() {
        return Err(TransformError::NotQuasiMetric(report));
    }
    Ok(QuasiMetricSpace::from_matrix(
        space.labels().to_vec(),
        matrix,
        k,
        remote_set,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::FiniteSpace;

    fn line(xs: &[f64]) -> ExtendedMetricSpace {
        let rows: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| (a - b).abs()).collect())
            .collect();
        ExtendedMetricSpace::from_rows(&rows).unwrap()
    }

    #[test]
    fn inversion_kernel_on_a_line() {
        let space = line(&[0., 1., 2.]);
        let k = inversion_kernel(&space, PointId(0)).unwrap();
        assert_eq!(k.domain(), &[PointId(1), PointId(2)]);
        assert_eq!(k.value(PointId(0), PointId(1)), 0.5);
        assert_eq!(k.value(PointId(0), PointId(0)), 0.0);
        assert_eq!(k.value(PointId(1), PointId(1)), 0.0);
    }

    #[test]
    fn remote_point_kernel_is_reciprocal_distance() {
        let space = line(&[0., 2., 3.]).complete_with_remote().unwrap();
        let k = inversion_kernel(&space, PointId(0)).unwrap();
        let omega = k.kernel_index(PointId(3)).unwrap();
        let x = k.kernel_index(PointId(1)).unwrap();
        assert_eq!(k.value(omega, x), 0.5);
        assert_eq!(k.value(x, omega), 0.5);
        assert_eq!(
            inversion_kernel(&space, PointId(3)),
            Err(TransformError::BasepointIsRemote(PointId(3)))
        );
    }

    #[test]
    fn chain_metric_telescopes_on_a_ray() {
        // d_p(1,4) = 1 - 1/4 = 3/4, equal to i_p(1,4) on a ray.
        let space = line(&[0., 1., 2., 4.]);
        let dp = chain_metric(&space, PointId(0)).unwrap();
        assert_eq!(dp.len(), 3);
        assert!((dp.dist(PointId(0), PointId(2)) - 0.75).abs() < 1e-15);
        assert!(dp.remote().is_none());
    }

    #[test]
    fn completed_space_inverts_to_finite_space() {
        let space = line(&[0., 1., 3.]).complete_with_remote().unwrap();
        let dp = chain_metric(&space, PointId(0)).unwrap();
        assert_eq!(dp.len(), 3);
        assert!(dp.remote().is_none());
        let omega = index_without(PointId(0), PointId(3)).unwrap();
        assert!(dp.dist(omega, PointId(0)).is_finite());
    }

    #[test]
    fn index_mapping_round_trips() {
        let p = PointId(2);
        for x in 0..6 {
            match index_without(p, PointId(x)) {
                None => assert_eq!(x, 2),
                Some(y) => assert_eq!(index_with(p, y), PointId(x)),
            }
        }
    }

    #[test]
    fn sphericalization_kernel_values() {
        let space = line(&[0., 1., 3.]);
        let s = sphericalization_kernel(&space, PointId(0)).unwrap();
        assert_eq!(s.value(PointId(0), PointId(1)), 0.5);
        assert_eq!(s.value(PointId(1), PointId(2)), 0.25);
        assert_eq!(s.value(PointId(2), PointId(2)), 0.0);
        let done = space.complete_with_remote().unwrap();
        assert_eq!(
            sphericalization_kernel(&done, PointId(0)),
            Err(TransformError::RemotePresent)
        );
    }

    #[test]
    fn sphericalized_far_point_stays_in_sandwich() {
        let space = line(&[0., 1e6, 1e6 + 1.0]);
        let hat = sphericalized_metric(&space, PointId(0)).unwrap();
        let s = 1e6 / (1e6 + 1.0);
        let v = hat.dist(PointId(0), PointId(1));
        assert!(v >= s / 4.0 && crate::numeric::le_tol(v, s));
    }

    #[test]
    fn witness_chain_is_lexicographically_smallest() {
        // Ray: every chain along increasing coordinates attains d_p.
        let space = line(&[0., 1., 2., 4.]);
        let k = inversion_kernel(&space, PointId(0)).unwrap();
        let closure = k.chain_closure();
        let chain = witness_chain(k.matrix(), &closure, PointId(0), PointId(2));
        assert_eq!(chain, vec![PointId(0), PointId(1), PointId(2)]);
    }

    #[test]
    fn lambda_from_basepoint_reduces_to_inversion_kernel() {
        let space = line(&[0., 1., 2., 4.]).complete_with_remote().unwrap();
        let q = QuasiMetricSpace::from_metric(&space);
        let w = LambdaWeighting::from_basepoint(&q, PointId(0)).unwrap();
        assert!(w.k_prime() <= 2.0 + 1e-12);
        let dl = lambda_transform(&q, &w).unwrap();
        let ip = inversion_kernel(&space, PointId(0)).unwrap();
        for (ki, &bx) in ip.domain().iter().enumerate() {
            for (kj, &by) in ip.domain().iter().enumerate() {
                let a = dl.dist(bx, by);
                let b = ip.value(PointId(ki), PointId(kj));
                assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
            }
        }
        assert_eq!(dl.remote_set().iter().copied().collect::<Vec<_>>(), vec![PointId(0)]);
        // the former remote point is finite, and d_λ(ω,ω) = 0
        assert_eq!(dl.dist(PointId(4), PointId(4)), 0.0);
        assert!(dl.dist(PointId(4), PointId(1)).is_finite());
    }

    #[test]
    fn weighting_violations_are_rejected() {
        let space = QuasiMetricSpace::from_metric(&line(&[0., 1., 2.]));
        let w = LambdaWeighting::new(vec![0.0, 1.0, 100.0], 1.0, 2.0).unwrap();
        assert!(matches!(w.validate(&space), Err(TransformError::Weighting(_))));
        let w = LambdaWeighting::new(vec![0.0, 0.0, 1.0], 1.0, 4.0).unwrap();
        assert!(matches!(
            lambda_transform(&space, &w),
            Err(TransformError::Weighting(_)) | Err(TransformError::MultipleZeros(_))
        ));
        assert!(LambdaWeighting::new(vec![1.0; 3], 0.0, 2.0).is_err());
        assert!(LambdaWeighting::new(vec![-1.0, 1.0, 1.0], 1.0, 2.0).is_err());
    }

    #[test]
    fn two_zeros_is_a_domain_error() {
        // Constant distances: λ = (0, 0, 1, 1) satisfies both inequalities for large K'.
        let rows = vec![vec![1.0; 4]; 4];
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r[i] = 0.0;
                r
            })
            .collect();
        let space = QuasiMetricSpace::new(crate::space::index_labels(4), &rows, 1.0, BTreeSet::new())
            .unwrap();
        let w = LambdaWeighting::new(vec![0.0, 0.0, 1.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(
            lambda_transform(&space, &w),
            Err(TransformError::MultipleZeros(vec![PointId(0), PointId(1)]))
        );
    }
}
