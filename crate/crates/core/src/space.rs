//! Finite extended-metric and K-quasi-metric spaces.
//!
//! Distances are `f64` values in `[0, +inf]`. An extended metric space may
//! carry one infinitely remote point `ω` at distance `+inf` from every other
//! point; a quasi-metric space may carry a whole remote set.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{ext_real, le_tol};

/// Smallest admissible point count for any space.
pub const MIN_POINTS: usize = 3;

/// Label given to the point appended by [`ExtendedMetricSpace::complete_with_remote`].
pub const REMOTE_LABEL: &str = "∞";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl PointId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for PointId {
    fn from(index: usize) -> Self {
        PointId(index)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("a space needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("{labels} labels given for a {side}x{side} matrix")]
    LabelMismatch { labels: usize, side: usize },
    #[error("invalid label `{0}` (labels must be non-empty, unique and free of whitespace)")]
    InvalidLabel(String),
    #[error("point {index} out of range for a space of {len} points")]
    OutOfRange { index: usize, len: usize },
    #[error("quasi-metric constant K must be a finite number >= 1, got {0}")]
    InvalidConstant(f64),
    #[error("space already has an infinitely remote point")]
    AlreadyCompleted,
    #[error("invalid distance matrix: {0}")]
    Invalid(ValidationReport),
}

/// Dense square matrix of extended reals, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    side: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SpaceError> {
        let side = rows.len();
        let mut data = Vec::with_capacity(side * side);
        for (row, values) in rows.iter().enumerate() {
            if values.len() != side {
                return Err(SpaceError::NotSquare {
                    row,
                    len: values.len(),
                    expected: side,
                });
            }
            data.extend_from_slice(values);
        }
        Ok(DistanceMatrix { side, data })
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                data.push(f(i, j));
            }
        }
        DistanceMatrix { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.side + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.side + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.side..(i + 1) * self.side]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.side).map(|i| self.row(i).to_vec()).collect()
    }

    /// Induced submatrix on every index except `skip`.
    pub fn without(&self, skip: usize) -> Self {
        let keep: Vec<usize> = (0..self.side).filter(|&i| i != skip).collect();
        DistanceMatrix::from_fn(keep.len(), |i, j| self.get(keep[i], keep[j]))
    }

    /// Copies the strict upper triangle onto the lower one.
    fn symmetrize(&mut self) {
        for i in 0..self.side {
            for j in 0..i {
                let v = self.get(j, i);
                self.set(i, j, v);
            }
        }
    }
}

/// Read access shared by every finite space-like value (metric spaces,
/// quasi-metric spaces, kernel matrices).
pub trait FiniteSpace {
    fn matrix(&self) -> &DistanceMatrix;

    fn labels(&self) -> &[String];

    fn is_remote(&self, x: PointId) -> bool;

    fn len(&self) -> usize {
        self.matrix().side()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dist(&self, x: PointId, y: PointId) -> f64 {
        self.matrix().get(x.0, y.0)
    }

    fn label(&self, x: PointId) -> &str {
        &self.labels()[x.0]
    }

    fn point_ids(&self) -> Vec<PointId> {
        (0..self.len()).map(PointId).collect()
    }

    fn find_label(&self, label: &str) -> Option<PointId> {
        self.labels().iter().position(|l| l == label).map(PointId)
    }

    fn check_point(&self, x: PointId) -> Result<(), SpaceError> {
        if x.0 < self.len() {
            Ok(())
        } else {
            Err(SpaceError::OutOfRange {
                index: x.0,
                len: self.len(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    NotANumber,
    Negative,
    NonzeroDiagonal,
    CoincidentPoints,
    Asymmetry,
    Triangle,
    QuasiTriangle,
    RemoteRule,
    FinitenessPattern,
}

/// One failed axiom. For triangle-type violations the witness is
/// `[x, y, z]` with `lhs = d(x, y)` and `rhs` the bound through `z`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: Vec<PointId>,
    #[serde(with = "ext_real")]
    pub lhs: f64,
    #[serde(with = "ext_real")]
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, witness: &[usize], lhs: f64, rhs: f64) {
        self.violations.push(Violation {
            kind,
            witness: witness.iter().copied().map(PointId).collect(),
            lhs,
            rhs,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.violations.first() {
            None => write!(f, "ok"),
            Some(v) => write!(
                f,
                "{} violation(s), first {:?} at {:?}: {} vs {}",
                self.violations.len(),
                v.kind,
                v.witness.iter().map(|p| p.0).collect::<Vec<_>>(),
                v.lhs,
                v.rhs
            ),
        }
    }
}

/// Entry checks shared by both validators: NaN, sign, diagonal, positivity, symmetry.
fn check_entries(m: &DistanceMatrix, report: &mut ValidationReport) {
    let n = m.side();
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            if v.is_nan() {
                report.push(ViolationKind::NotANumber, &[i, j], v, 0.0);
            } else if v < 0.0 {
                report.push(ViolationKind::Negative, &[i, j], v, 0.0);
            } else if i == j && v != 0.0 {
                report.push(ViolationKind::NonzeroDiagonal, &[i, i], v, 0.0);
            } else if i != j && v == 0.0 && i < j {
                report.push(ViolationKind::CoincidentPoints, &[i, j], v, 0.0);
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (m.get(i, j), m.get(j, i));
            if a.is_nan() || b.is_nan() {
                continue;
            }
            if !(le_tol(a, b) && le_tol(b, a)) {
                report.push(ViolationKind::Asymmetry, &[i, j], a, b);
            }
        }
    }
}

fn shape_check(m: &DistanceMatrix) -> Result<(), SpaceError> {
    if m.side() < MIN_POINTS {
        return Err(SpaceError::TooFewPoints(m.side()));
    }
    Ok(())
}

/// Validates an extended metric: metric on the finite part, and the remote
/// point (if any) at infinite distance from everything else.
pub fn validate_metric(
    rows: &[Vec<f64>],
    remote: Option<PointId>,
) -> Result<ValidationReport, SpaceError> {
    let m = DistanceMatrix::from_rows(rows)?;
    validate_metric_matrix(&m, remote)
}

pub fn validate_metric_matrix(
    m: &DistanceMatrix,
    remote: Option<PointId>,
) -> Result<ValidationReport, SpaceError> {
    shape_check(m)?;
    let n = m.side();
    if let Some(w) = remote {
        if w.0 >= n {
            return Err(SpaceError::OutOfRange { index: w.0, len: n });
        }
    }
    let mut report = ValidationReport::default();
    check_entries(m, &mut report);

    let w = remote.map(|p| p.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = m.get(i, j);
            let touches_remote = w == Some(i) || w == Some(j);
            if touches_remote != (v == f64::INFINITY) {
                report.push(ViolationKind::RemoteRule, &[i, j], v, f64::INFINITY);
            }
        }
    }

    for x in 0..n {
        for y in (x + 1)..n {
            let dxy = m.get(x, y);
            if !dxy.is_finite() {
                continue;
            }
            for z in 0..n {
                if z == x || z == y {
                    continue;
                }
                let (dxz, dzy) = (m.get(x, z), m.get(z, y));
                if !(dxz.is_finite() && dzy.is_finite()) {
                    continue;
                }
                let rhs = dxz + dzy;
                if !le_tol(dxy, rhs) {
                    report.push(ViolationKind::Triangle, &[x, y, z], dxy, rhs);
                }
            }
        }
    }
    Ok(report)
}

/// Validates a K-quasi-metric with infinitely remote set `remote_set`.
pub fn validate_quasi_metric(
    rows: &[Vec<f64>],
    k: f64,
    remote_set: &BTreeSet<PointId>,
) -> Result<ValidationReport, SpaceError> {
    let m = DistanceMatrix::from_rows(rows)?;
    validate_quasi_metric_matrix(&m, k, remote_set)
}

pub fn validate_quasi_metric_matrix(
    m: &DistanceMatrix,
    k: f64,
    remote_set: &BTreeSet<PointId>,
) -> Result<ValidationReport, SpaceError> {
    if !(k.is_finite() && k >= 1.0) {
        return Err(SpaceError::InvalidConstant(k));
    }
    shape_check(m)?;
    let n = m.side();
    if let Some(w) = remote_set.iter().find(|w| w.0 >= n) {
        return Err(SpaceError::OutOfRange { index: w.0, len: n });
    }
    let mut report = ValidationReport::default();
    check_entries(m, &mut report);

    for i in 0..n {
        for j in (i + 1)..n {
            let v = m.get(i, j);
            let remote_pair =
                remote_set.contains(&PointId(i)) || remote_set.contains(&PointId(j));
            if remote_pair == v.is_finite() {
                report.push(ViolationKind::FinitenessPattern, &[i, j], v, f64::INFINITY);
            }
        }
    }

    for x in 0..n {
        for y in (x + 1)..n {
            let dxy = m.get(x, y);
            if !dxy.is_finite() {
                continue;
            }
            for z in 0..n {
                if z == x || z == y {
                    continue;
                }
                let (dxz, dzy) = (m.get(x, z), m.get(z, y));
                if !(dxz.is_finite() && dzy.is_finite()) {
                    continue;
                }
                let rhs = k * dxz.max(dzy);
                if !le_tol(dxy, rhs) {
                    report.push(ViolationKind::QuasiTriangle, &[x, y, z], dxy, rhs);
                }
            }
        }
    }
    Ok(report)
}

fn check_labels(labels: &[String], side: usize) -> Result<(), SpaceError> {
    if labels.len() != side {
        return Err(SpaceError::LabelMismatch {
            labels: labels.len(),
            side,
        });
    }
    let mut seen = HashSet::new();
    for l in labels {
        if l.is_empty() || l.chars().any(char::is_whitespace) || !seen.insert(l.as_str()) {
            return Err(SpaceError::InvalidLabel(l.clone()));
        }
    }
    Ok(())
}

/// Labels `"0"`, `"1"`, ... for quick construction.
pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// A finite extended metric space with at most one infinitely remote point.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedMetricSpace {
    labels: Vec<String>,
    matrix: DistanceMatrix,
    remote: Option<PointId>,
}

impl ExtendedMetricSpace {
    pub fn new(
        labels: Vec<String>,
        rows: &[Vec<f64>],
        remote: Option<PointId>,
    ) -> Result<Self, SpaceError> {
        Self::from_matrix(labels, DistanceMatrix::from_rows(rows)?, remote)
    }

    /// Builds from rows with labels `"0"`, `"1"`, ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SpaceError> {
        Self::new(index_labels(rows.len()), rows, None)
    }

    pub fn from_matrix(
        labels: Vec<String>,
        mut matrix: DistanceMatrix,
        remote: Option<PointId>,
    ) -> Result<Self, SpaceError> {
        let report = validate_metric_matrix(&matrix, remote)?;
        if !report.ok() {
            return Err(SpaceError::Invalid(report));
        }
        check_labels(&labels, matrix.side())?;
        matrix.symmetrize();
        Ok(ExtendedMetricSpace {
            labels,
            matrix,
            remote,
        })
    }

    pub fn remote(&self) -> Option<PointId> {
        self.remote
    }

    /// Points other than the remote point.
    pub fn finite_points(&self) -> Vec<PointId> {
        self.point_ids()
            .into_iter()
            .filter(|&p| Some(p) != self.remote)
            .collect()
    }

    /// Appends an infinitely remote point `ω` at distance `+inf` from every
    /// existing point.
    pub fn complete_with_remote(&self) -> Result<Self, SpaceError> {
        if self.remote.is_some() {
            return Err(SpaceError::AlreadyCompleted);
        }
        let n = self.len();
        let matrix = DistanceMatrix::from_fn(n + 1, |i, j| match (i == n, j == n) {
            (false, false) => self.matrix.get(i, j),
            (true, true) => 0.0,
            _ => f64::INFINITY,
        });
        let mut labels = self.labels.clone();
        let mut label = REMOTE_LABEL.to_string();
        while labels.contains(&label) {
            label.push('\'');
        }
        labels.push(label);
        Ok(ExtendedMetricSpace {
            labels,
            matrix,
            remote: Some(PointId(n)),
        })
    }

    /// Induced subspace without `p`. Indices above `p` shift down by one.
    pub fn remove_point(&self, p: PointId) -> Result<Self, SpaceError> {
        self.check_point(p)?;
        if self.len() <= MIN_POINTS {
            return Err(SpaceError::TooFewPoints(self.len() - 1));
        }
        let remote = match self.remote {
            Some(w) if w == p => None,
            Some(w) if w > p => Some(PointId(w.0 - 1)),
            other => other,
        };
        let mut labels = self.labels.clone();
        labels.remove(p.0);
        Ok(ExtendedMetricSpace {
            labels,
            matrix: self.matrix.without(p.0),
            remote,
        })
    }

    /// Rescales every finite distance by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, SpaceError> {
        let matrix = DistanceMatrix::from_fn(self.len(), |i, j| self.matrix.get(i, j) * factor);
        Self::from_matrix(self.labels.clone(), matrix, self.remote)
    }
}

impl FiniteSpace for ExtendedMetricSpace {
    fn matrix(&self) -> &DistanceMatrix {
        &self.matrix
    }

    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn is_remote(&self, x: PointId) -> bool {
        self.remote == Some(x)
    }
}

/// A finite K-quasi-metric space with an infinitely remote set.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiMetricSpace {
    labels: Vec<String>,
    matrix: DistanceMatrix,
    k: f64,
    remote_set: BTreeSet<PointId>,
}

impl QuasiMetricSpace {
    pub fn new(
        labels: Vec<String>,
        rows: &[Vec<f64>],
        k: f64,
        remote_set: BTreeSet<PointId>,
    ) -> Result<Self, SpaceError> {
        Self::from_matrix(labels, DistanceMatrix::from_rows(rows)?, k, remote_set)
    }

    pub fn from_matrix(
        labels: Vec<String>,
        mut matrix: DistanceMatrix,
        k: f64,
        remote_set: BTreeSet<PointId>,
    ) -> Result<Self, SpaceError> {
        let report = validate_quasi_metric_matrix(&matrix, k, &remote_set)?;
        if !report.ok() {
            return Err(SpaceError::Invalid(report));
        }
        check_labels(&labels, matrix.side())?;
        matrix.symmetrize();
        Ok(QuasiMetricSpace {
            labels,
            matrix,
            k,
            remote_set,
        })
    }

    /// Views a metric space as a 2-quasi-metric space (`a + b <= 2 max(a, b)`).
    pub fn from_metric(space: &ExtendedMetricSpace) -> Self {
        Self::from_metric_with_constant(space, 2.0).expect("a metric is a 2-quasi-metric")
    }

    pub fn from_metric_with_constant(
        space: &ExtendedMetricSpace,
        k: f64,
    ) -> Result<Self, SpaceError> {
        Self::from_matrix(
            space.labels.clone(),
            space.matrix.clone(),
            k,
            space.remote.into_iter().collect(),
        )
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn remote_set(&self) -> &BTreeSet<PointId> {
        &self.remote_set
    }

    pub fn remove_point(&self, p: PointId) -> Result<Self, SpaceError> {
        self.check_point(p)?;
        if self.len() <= MIN_POINTS {
            return Err(SpaceError::TooFewPoints(self.len() - 1));
        }
        let remote_set = self
            .remote_set
            .iter()
            .filter(|&&w| w != p)
            .map(|&w| if w > p { PointId(w.0 - 1) } else { w })
            .collect();
        let mut labels = self.labels.clone();
        labels.remove(p.0);
        Ok(QuasiMetricSpace {
            labels,
            matrix: self.matrix.without(p.0),
            k: self.k,
            remote_set,
        })
    }
}

impl FiniteSpace for QuasiMetricSpace {
    fn matrix(&self) -> &DistanceMatrix {
        &self.matrix
    }

    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn is_remote(&self, x: PointId) -> bool {
        self.remote_set.contains(&x)
    }
}


/// Either kind of space, as read from a document or produced by a generator.
#[derive(Clone, Debug, PartialEq)]
pub enum AnySpace {
    Metric(ExtendedMetricSpace),
    Quasi(QuasiMetricSpace),
}

impl AnySpace {
    pub fn as_metric(&self) -> Option<&ExtendedMetricSpace> {
        match self {
            AnySpace::Metric(s) => Some(s),
            AnySpace::Quasi(_) => None,
        }
    }

    pub fn into_metric(self) -> Option<ExtendedMetricSpace> {
        match self {
            AnySpace::Metric(s) => Some(s),
            AnySpace::Quasi(_) => None,
        }
    }

    /// Metrics become 2-quasi-metrics.
    pub fn into_quasi(self) -> QuasiMetricSpace {
        match self {
            AnySpace::Metric(s) => QuasiMetricSpace::from_metric(&s),
            AnySpace::Quasi(q) => q,
        }
    }
}

impl FiniteSpace for AnySpace {
    fn matrix(&self) -> &DistanceMatrix {
        match self {
            AnySpace::Metric(s) => s.matrix(),
            AnySpace::Quasi(s) => s.matrix(),
        }
    }

    fn labels(&self) -> &[String] {
        match self {
            AnySpace::Metric(s) => s.labels(),
            AnySpace::Quasi(s) => s.labels(),
        }
    }

    fn is_remote(&self, x: PointId) -> bool {
        match self {
            AnySpace::Metric(s) => s.is_remote(x),
            AnySpace::Quasi(s) => s.is_remote(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PtolemyCheck {
    pub holds: bool,
    /// Quadruple `(x, y, z, w)` with `d(x,y) d(z,w) > d(x,z) d(y,w) + d(x,w) d(y,z)`.
    pub witness: Option<[PointId; 4]>,
}

/// Checks the Ptolemy inequality on every quadruple of non-remote points,
/// under all three pairings.
pub fn is_ptolemy(space: &impl FiniteSpace) -> PtolemyCheck {
    let pts: Vec<usize> = (0..space.len())
        .filter(|&i| !space.is_remote(PointId(i)))
        .collect();
    let m = space.matrix();
    let d = |a: usize, b: usize| m.get(a, b);
    for (ia, &a) in pts.iter().enumerate() {
        for (ib, &b) in pts.iter().enumerate().skip(ia + 1) {
            for (ic, &c) in pts.iter().enumerate().skip(ib + 1) {
                for &e in pts.iter().skip(ic + 1) {
                    let pairings = [
                        ([a, b, c, e], d(a, b) * d(c, e), d(a, c) * d(b, e), d(a, e) * d(b, c)),
                        ([a, c, b, e], d(a, c) * d(b, e), d(a, b) * d(c, e), d(a, e) * d(c, b)),
                        ([a, e, b, c], d(a, e) * d(b, c), d(a, b) * d(e, c), d(a, c) * d(e, b)),
                    ];
                    for (quad, lhs, r1, r2) in pairings {
                        if !le_tol(lhs, r1 + r2) {
                            return PtolemyCheck {
                                holds: false,
                                witness: Some(quad.map(PointId)),
                            };
                        }
                    }
                }
            }
        }
    }
    PtolemyCheck {
        holds: true,
        witness: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> Vec<Vec<f64>> {
        vec![vec![0., 1., 2.], vec![1., 0., 1.], vec![2., 1., 0.]]
    }

    #[test]
    fn collinear_points_validate() {
        assert!(validate_metric(&line3(), None).unwrap().ok());
    }

    #[test]
    fn triangle_violation_is_reported_with_witness() {
        let rows = vec![vec![0., 1., 3.], vec![1., 0., 1.], vec![3., 1., 0.]];
        let report = validate_metric(&rows, None).unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::Triangle);
        assert_eq!(v.witness, vec![PointId(0), PointId(2), PointId(1)]);
        assert_eq!((v.lhs, v.rhs), (3.0, 2.0));
    }

    #[test]
    fn finite_distance_to_remote_point_is_a_violation() {
        let inf = f64::INFINITY;
        let rows = vec![
            vec![0., 1., 2., 5.],
            vec![1., 0., 1., inf],
            vec![2., 1., 0., inf],
            vec![5., inf, inf, 0.],
        ];
        let report = validate_metric(&rows, Some(PointId(3))).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::RemoteRule && v.witness == vec![PointId(0), PointId(3)]));
    }

    #[test]
    fn infinity_without_remote_point_is_a_violation() {
        let inf = f64::INFINITY;
        let rows = vec![vec![0., 1., inf], vec![1., 0., 1.], vec![inf, 1., 0.]];
        let report = validate_metric(&rows, None).unwrap();
        assert_eq!(report.violations[0].kind, ViolationKind::RemoteRule);
    }

    #[test]
    fn shape_errors() {
        let ragged = vec![vec![0., 1., 2.], vec![1., 0.], vec![2., 1., 0.]];
        assert!(matches!(
            validate_metric(&ragged, None),
            Err(SpaceError::NotSquare { row: 1, .. })
        ));
        let small = vec![vec![0., 1.], vec![1., 0.]];
        assert_eq!(validate_metric(&small, None), Err(SpaceError::TooFewPoints(2)));
    }

    #[test]
    fn asymmetry_diagonal_and_coincidence() {
        let rows = vec![vec![0.5, 1., 2.], vec![1.5, 0., 0.], vec![2., 0., 0.]];
        let kinds: Vec<_> = validate_metric(&rows, None)
            .unwrap()
            .violations
            .into_iter()
            .map(|v| v.kind)
            .collect();
        assert!(kinds.contains(&ViolationKind::NonzeroDiagonal));
        assert!(kinds.contains(&ViolationKind::CoincidentPoints));
        assert!(kinds.contains(&ViolationKind::Asymmetry));
    }

    #[test]
    fn tolerance_admits_rounding_noise() {
        let rows = vec![
            vec![0., 1., 2.0 + 1e-12],
            vec![1., 0., 1.],
            vec![2.0 + 1e-12, 1., 0.],
        ];
        assert!(validate_metric(&rows, None).unwrap().ok());
    }

    #[test]
    fn metric_is_two_quasi_metric() {
        let none = BTreeSet::new();
        assert!(validate_quasi_metric(&line3(), 2.0, &none).unwrap().ok());
        let bad = vec![vec![0., 1., 10.], vec![1., 0., 1.], vec![10., 1., 0.]];
        let report = validate_quasi_metric(&bad, 2.0, &none).unwrap();
        assert_eq!(report.violations[0].kind, ViolationKind::QuasiTriangle);
        assert_eq!((report.violations[0].lhs, report.violations[0].rhs), (10.0, 2.0));
        assert_eq!(
            validate_quasi_metric(&line3(), 0.5, &none),
            Err(SpaceError::InvalidConstant(0.5))
        );
    }

    #[test]
    fn quasi_finiteness_pattern() {
        let inf = f64::INFINITY;
        let rows = vec![
            vec![0., 1., inf, inf],
            vec![1., 0., inf, inf],
            vec![inf, inf, 0., inf],
            vec![inf, inf, inf, 0.],
        ];
        let set: BTreeSet<_> = [PointId(2), PointId(3)].into();
        assert!(validate_quasi_metric(&rows, 1.0, &set).unwrap().ok());
        let set: BTreeSet<_> = [PointId(2)].into();
        let report = validate_quasi_metric(&rows, 1.0, &set).unwrap();
        assert!(report
            .violations
            .iter()
            .all(|v| v.kind == ViolationKind::FinitenessPattern));
        assert!(!report.ok());
    }

    #[test]
    fn completion_adds_remote_point() {
        let space = ExtendedMetricSpace::from_rows(&line3()).unwrap();
        let done = space.complete_with_remote().unwrap();
        assert_eq!(done.len(), 4);
        assert_eq!(done.remote(), Some(PointId(3)));
        assert_eq!(done.label(PointId(3)), REMOTE_LABEL);
        for i in 0..3 {
            assert_eq!(done.dist(PointId(i), PointId(3)), f64::INFINITY);
            for j in 0..3 {
                assert_eq!(done.dist(PointId(i), PointId(j)), space.dist(PointId(i), PointId(j)));
            }
        }
        assert_eq!(done.dist(PointId(3), PointId(3)), 0.0);
        assert_eq!(done.complete_with_remote(), Err(SpaceError::AlreadyCompleted));
        assert_eq!(done.remove_point(PointId(3)).unwrap(), space);
    }

    #[test]
    fn remove_point_remaps_remote_and_enforces_size() {
        let line4 = ExtendedMetricSpace::from_rows(&[
            vec![0., 1., 2., 3.],
            vec![1., 0., 1., 2.],
            vec![2., 1., 0., 1.],
            vec![3., 2., 1., 0.],
        ])
        .unwrap();
        let three = line4.remove_point(PointId(3)).unwrap();
        assert_eq!(three.matrix().to_rows(), line3());
        assert_eq!(three.remove_point(PointId(0)), Err(SpaceError::TooFewPoints(2)));

        let done = line4.complete_with_remote().unwrap();
        let shifted = done.remove_point(PointId(0)).unwrap();
        assert_eq!(shifted.remote(), Some(PointId(3)));
    }

    #[test]
    fn ptolemy_examples() {
        let line4 = ExtendedMetricSpace::from_rows(&[
            vec![0., 1., 2., 3.],
            vec![1., 0., 1., 2.],
            vec![2., 1., 0., 1.],
            vec![3., 2., 1., 0.],
        ])
        .unwrap();
        assert!(is_ptolemy(&line4).holds);

        // 4-cycle graph metric: 0-1-2-3-0
        let cycle = ExtendedMetricSpace::from_rows(&[
            vec![0., 1., 2., 1.],
            vec![1., 0., 1., 2.],
            vec![2., 1., 0., 1.],
            vec![1., 2., 1., 0.],
        ])
        .unwrap();
        let check = is_ptolemy(&cycle);
        assert!(!check.holds);
        let [x, y, z, w] = check.witness.unwrap();
        let d = |a: PointId, b: PointId| cycle.dist(a, b);
        assert!(d(x, y) * d(z, w) > d(x, z) * d(y, w) + d(x, w) * d(y, z));
    }

    #[test]
    fn labels_must_be_unique() {
        let labels = vec!["a".into(), "a".into(), "b".into()];
        assert!(matches!(
            ExtendedMetricSpace::new(labels, &line3(), None),
            Err(SpaceError::InvalidLabel(_))
        ));
    }
}
