//! Balls, minimum half-radius covers and doubling constants.
//!
//! Balls are closed. A ball of finite radius around a finite point never
//! contains a remote point, and a ball around a remote point is a singleton.
//! Half-radius covers may use any point of the space as a center.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{ceil_log2, ext_real, pow_plus_one};
use crate::space::{ExtendedMetricSpace, FiniteSpace, PointId, QuasiMetricSpace, SpaceError};
use crate::transforms::{chain_metric, lambda_transform, LambdaWeighting, TransformError};

/// Hard point cap for exact covers.
pub const EXACT_POINT_CAP: usize = 64;
/// Hard cap on the size of the set being covered in exact mode.
pub const EXACT_UNIVERSE_CAP: usize = 32;
/// Default point cap for doubling certificates.
pub const DEFAULT_CERTIFICATE_CAP: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("ball radius must be finite and non-negative, got {0}")]
    InvalidRadius(f64),
    #[error("exact mode refused: {what} has {size} elements, cap is {cap}")]
    ExactLimit {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    Exact,
    Greedy,
}

impl std::str::FromStr for CoverMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(CoverMode::Exact),
            "greedy" => Ok(CoverMode::Greedy),
            other => Err(format!("unknown cover mode `{other}` (expected exact or greedy)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ball {
    pub center: PointId,
    #[serde(with = "ext_real")]
    pub radius: f64,
    pub members: Vec<PointId>,
}

impl Ball {
    pub fn contains(&self, x: PointId) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

pub fn ball(space: &impl FiniteSpace, center: PointId, r: f64) -> Result<Ball, CoverError> {
    space.check_point(center)?;
    if !(r.is_finite() && r >= 0.0) {
        return Err(CoverError::InvalidRadius(r));
    }
    Ok(ball_unchecked(space, center, r))
}

fn ball_unchecked(space: &impl FiniteSpace, center: PointId, r: f64) -> Ball {
    let row = space.matrix().row(center.0);
    let members = row
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= r)
        .map(|(i, _)| PointId(i))
        .collect();
    Ball {
        center,
        radius: r,
        members,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfCover {
    pub target: Ball,
    pub balls: Vec<Ball>,
}

impl HalfCover {
    pub fn count(&self) -> usize {
        self.balls.len()
    }
}

/// Covers `ball(center, r)` by balls of radius `r/2`. Exact mode returns a
/// minimum cover (lexicographically smallest center list among minima);
/// greedy mode returns a valid cover of size at least the optimum.
pub fn min_half_cover(
    space: &impl FiniteSpace,
    center: PointId,
    r: f64,
    mode: CoverMode,
) -> Result<HalfCover, CoverError> {
    let target = ball(space, center, r)?;
    if mode == CoverMode::Exact && space.len() > EXACT_POINT_CAP {
        return Err(CoverError::ExactLimit {
            what: "space",
            size: space.len(),
            cap: EXACT_POINT_CAP,
        });
    }
    let centers = solve_half_cover(space, &target, mode)?;
    let balls = centers
        .into_iter()
        .map(|c| ball_unchecked(space, c, r / 2.0))
        .collect();
    Ok(HalfCover { target, balls })
}

/// Candidate half-balls restricted to the target, as bitsets over the
/// target's member positions: `(center, words)`.
fn candidates(space: &impl FiniteSpace, target: &Ball) -> Vec<(PointId, Vec<u64>)> {
    let half = target.radius / 2.0;
    let m = space.matrix();
    let words = target.members.len().div_ceil(64);
    (0..space.len())
        .filter_map(|c| {
            let row = m.row(c);
            let mut bits = vec![0u64; words];
            for (k, x) in target.members.iter().enumerate() {
                if row[x.0] <= half {
                    bits[k / 64] |= 1 << (k % 64);
                }
            }
            bits.iter().any(|&w| w != 0).then_some((PointId(c), bits))
        })
        .collect()
}

fn solve_half_cover(
    space: &impl FiniteSpace,
    target: &Ball,
    mode: CoverMode,
) -> Result<Vec<PointId>, CoverError> {
    let size = target.members.len();
    if size <= 1 {
        return Ok(vec![target.center]);
    }
    let cands = candidates(space, target);
    match mode {
        CoverMode::Greedy => Ok(greedy_cover(size, &cands)),
        CoverMode::Exact => {
            if size > EXACT_UNIVERSE_CAP {
                return Err(CoverError::ExactLimit {
                    what: "ball",
                    size,
                    cap: EXACT_UNIVERSE_CAP,
                });
            }
            Ok(exact_cover(size, &cands))
        }
    }
}

/// Repeatedly takes the candidate covering the most uncovered elements
/// (lowest center on ties).
fn greedy_cover(size: usize, cands: &[(PointId, Vec<u64>)]) -> Vec<PointId> {
    let mut uncovered = vec![u64::MAX; size.div_ceil(64)];
    if !size.is_multiple_of(64) {
        *uncovered.last_mut().unwrap() = (1u64 << (size % 64)) - 1;
    }
    let mut chosen = Vec::new();
    while uncovered.iter().any(|&w| w != 0) {
        let mut best = 0;
        let mut best_gain = 0;
        for (i, (_, bits)) in cands.iter().enumerate() {
            let gain: u32 = bits
                .iter()
                .zip(&uncovered)
                .map(|(b, u)| (b & u).count_ones())
                .sum();
            if gain > best_gain {
                best = i;
                best_gain = gain;
            }
        }
        debug_assert!(best_gain > 0, "every element is covered by its own half-ball");
        for (u, b) in uncovered.iter_mut().zip(&cands[best].1) {
            *u &= !b;
        }
        chosen.push(cands[best].0);
    }
    chosen.sort();
    chosen
}

fn exact_cover(size: usize, cands: &[(PointId, Vec<u64>)]) -> Vec<PointId> {
    // Identical candidate sets: keep the lowest center.
    let mut sets: Vec<(PointId, u64)> = Vec::new();
    for (c, bits) in cands {
        let mask = bits[0];
        if !sets.iter().any(|&(_, m)| m == mask) {
            sets.push((*c, mask));
        }
    }
    let full: u64 = if size == 64 { u64::MAX } else { (1u64 << size) - 1 };
    let max_size = sets.iter().map(|s| s.1.count_ones()).max().unwrap_or(1);
    let upper = greedy_cover(size, cands).len();

    let mut solver = MinCover {
        sets: &sets,
        max_size,
        best: upper,
    };
    solver.branch(full, 0);
    let k = solver.best;

    let mut suffix = vec![0u64; sets.len() + 1];
    for i in (0..sets.len()).rev() {
        suffix[i] = suffix[i + 1] | sets[i].1;
    }
    let mut picked = Vec::with_capacity(k);
    let found = lex_first(&sets, &suffix, max_size, 0, full, k, &mut picked);
    assert!(found, "a cover of the optimal size exists");
    picked.into_iter().map(|i| sets[i].0).collect()
}

struct MinCover<'a> {
    sets: &'a [(PointId, u64)],
    max_size: u32,
    best: usize,
}

impl MinCover<'_> {
    /// Branch on the lowest uncovered element; prune with a packing bound.
    fn branch(&mut self, uncovered: u64, used: usize) {
        if uncovered == 0 {
            self.best = self.best.min(used);
            return;
        }
        let lower = (uncovered.count_ones()).div_ceil(self.max_size) as usize;
        if used + lower >= self.best {
            return;
        }
        let e = uncovered.trailing_zeros();
        let mut options: Vec<u64> = self
            .sets
            .iter()
            .map(|s| s.1)
            .filter(|m| m & (1 << e) != 0)
            .collect();
        options.sort_by_key(|m| std::cmp::Reverse((m & uncovered).count_ones()));
        for m in options {
            self.branch(uncovered & !m, used + 1);
        }
    }
}

/// First cover (in increasing-center order) using exactly `remaining` more sets.
fn lex_first(
    sets: &[(PointId, u64)],
    suffix: &[u64],
    max_size: u32,
    start: usize,
    uncovered: u64,
    remaining: usize,
    picked: &mut Vec<usize>,
) -> bool {
    if uncovered == 0 {
        return true;
    }
    if remaining == 0 || uncovered.count_ones() > max_size * remaining as u32 {
        return false;
    }
    for i in start..sets.len() {
        if uncovered & !suffix[i] != 0 {
            return false;
        }
        if sets[i].1 & uncovered == 0 {
            continue;
        }
        picked.push(i);
        if lex_first(
            sets,
            suffix,
            max_size,
            i + 1,
            uncovered & !sets[i].1,
            remaining - 1,
            picked,
        ) {
            return true;
        }
        picked.pop();
    }
    false
}

/// Distinct finite positive distances together with their doubles. Every
/// combinatorially distinct (ball, half-ball family) pair occurs at one of
/// these radii.
pub fn candidate_radii(space: &impl FiniteSpace) -> Vec<f64> {
    let n = space.len();
    let m = space.matrix();
    let mut radii = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = m.get(i, j);
            if d.is_finite() && d > 0.0 {
                radii.push(d);
                radii.push(2.0 * d);
            }
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingEntry {
    pub center: PointId,
    #[serde(with = "ext_real")]
    pub radius: f64,
    pub cover_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingReport {
    pub constant: usize,
    pub witness: DoublingEntry,
    pub method: CoverMode,
    #[serde(skip)]
    pub table: Vec<DoublingEntry>,
}

/// Doubling constant with the hard exact cap ([`EXACT_POINT_CAP`]).
pub fn doubling_constant(
    space: &(impl FiniteSpace + Sync),
    mode: CoverMode,
) -> Result<DoublingReport, CoverError> {
    doubling_constant_capped(space, mode, EXACT_POINT_CAP)
}

/// Maximum over centers and candidate radii of the half-cover size.
pub fn doubling_constant_capped(
    space: &(impl FiniteSpace + Sync),
    mode: CoverMode,
    point_cap: usize,
) -> Result<DoublingReport, CoverError> {
    let cap = point_cap.min(EXACT_POINT_CAP);
    if mode == CoverMode::Exact && space.len() > cap {
        return Err(CoverError::ExactLimit {
            what: "space",
            size: space.len(),
            cap,
        });
    }
    let radii = candidate_radii(space);
    let per_center: Vec<Vec<DoublingEntry>> = (0..space.len())
        .into_par_iter()
        .map(|c| {
            let center = PointId(c);
            radii
                .iter()
                .map(|&r| {
                    let target = ball_unchecked(space, center, r);
                    let cover_size = if space.is_remote(center) {
                        1
                    } else {
                        solve_half_cover(space, &target, mode)?.len()
                    };
                    Ok(DoublingEntry {
                        center,
                        radius: r,
                        cover_size,
                    })
                })
                .collect::<Result<Vec<_>, CoverError>>()
        })
        .collect::<Result<_, _>>()?;
    let table: Vec<DoublingEntry> = per_center.into_iter().flatten().collect();
    let witness = table
        .iter()
        .fold(None::<&DoublingEntry>, |best, e| match best {
            Some(b) if b.cover_size >= e.cover_size => Some(b),
            _ => Some(e),
        })
        .cloned()
        .unwrap_or(DoublingEntry {
            center: PointId(0),
            radius: 0.0,
            cover_size: 1,
        });
    Ok(DoublingReport {
        constant: witness.cover_size,
        witness,
        method: mode,
        table,
    })
}

/// Outcome of comparing a transformed space's doubling constant against a
/// bound of the form `base^exponent + 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingCertificate {
    pub base_constant: usize,
    pub transformed_constant: usize,
    pub exponent: u32,
    pub bound: u128,
    pub holds: bool,
    /// `ln(transformed) / ln(base)`, absent when the base constant is 1.
    pub log_ratio: Option<f64>,
    pub base_witness: DoublingEntry,
    pub transformed_witness: DoublingEntry,
}

fn certify(
    base: &(impl FiniteSpace + Sync),
    transformed: &(impl FiniteSpace + Sync),
    exponent: u32,
    cap: usize,
) -> Result<DoublingCertificate, CoverError> {
    for s in [base.len(), transformed.len()] {
        if s > cap {
            return Err(CoverError::ExactLimit {
                what: "certificate space",
                size: s,
                cap,
            });
        }
    }
    let d1 = doubling_constant_capped(base, CoverMode::Exact, cap)?;
    let d2 = doubling_constant_capped(transformed, CoverMode::Exact, cap)?;
    let bound = pow_plus_one(d1.constant as u64, exponent);
    Ok(DoublingCertificate {
        base_constant: d1.constant,
        transformed_constant: d2.constant,
        exponent,
        bound,
        holds: (d2.constant as u128) <= bound,
        log_ratio: (d1.constant > 1)
            .then(|| (d2.constant as f64).ln() / (d1.constant as f64).ln()),
        base_witness: d1.witness,
        transformed_witness: d2.witness,
    })
}

/// Certifies `D(X, d_p) <= D(X, d)^10 + 1` with exact covers on both sides.
pub fn check_inversion_doubling(
    space: &ExtendedMetricSpace,
    p: PointId,
    exact_cap: usize,
) -> Result<DoublingCertificate, CoverError> {
    if space.len() > exact_cap {
        return Err(CoverError::ExactLimit {
            what: "certificate space",
            size: space.len(),
            cap: exact_cap,
        });
    }
    let inverted = chain_metric(space, p)?;
    certify(space, &inverted, 10, exact_cap)
}

/// `ceil(log2(8 K'^10 K))`.
pub fn lambda_doubling_exponent(k: f64, k_prime: f64) -> u32 {
    ceil_log2(8.0 * k_prime.powi(10) * k)
}

/// Certifies `D(X, d_λ) <= D(X, d)^ceil(log2(8 K'^10 K)) + 1`.
pub fn check_lambda_doubling(
    space: &QuasiMetricSpace,
    w: &LambdaWeighting,
    exact_cap: usize,
) -> Result<DoublingCertificate, CoverError> {
    if space.len() > exact_cap {
        return Err(CoverError::ExactLimit {
            what: "certificate space",
            size: space.len(),
            cap: exact_cap,
        });
    }
    let transformed = lambda_transform(space, w)?;
    certify(
        space,
        &transformed,
        lambda_doubling_exponent(space.k(), w.k_prime()),
        exact_cap,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> ExtendedMetricSpace {
        let rows: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| (a - b).abs()).collect())
            .collect();
        ExtendedMetricSpace::from_rows(&rows).unwrap()
    }

    fn uniform(n: usize) -> ExtendedMetricSpace {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        ExtendedMetricSpace::from_rows(&rows).unwrap()
    }

    #[test]
    fn balls() {
        let s = line(&[0., 1., 2.]);
        assert_eq!(ball(&s, PointId(0), 1.0).unwrap().members, vec![PointId(0), PointId(1)]);
        assert_eq!(ball(&s, PointId(1), 0.0).unwrap().members, vec![PointId(1)]);
        assert_eq!(
            ball(&s, PointId(0), f64::INFINITY),
            Err(CoverError::InvalidRadius(f64::INFINITY))
        );
        assert!(ball(&s, PointId(0), -1.0).is_err());

        let done = s.complete_with_remote().unwrap();
        assert_eq!(ball(&done, PointId(3), 5.0).unwrap().members, vec![PointId(3)]);
        assert!(!ball(&done, PointId(0), 1e300).unwrap().contains(PointId(3)));
    }

    #[test]
    fn uniform_space_needs_singletons() {
        let s = uniform(5);
        let cover = min_half_cover(&s, PointId(0), 1.0, CoverMode::Exact).unwrap();
        assert_eq!(cover.count(), 5);
        assert_eq!(doubling_constant(&s, CoverMode::Exact).unwrap().constant, 5);
    }

    #[test]
    fn singleton_ball_needs_one() {
        let s = line(&[0., 1., 5.]);
        let cover = min_half_cover(&s, PointId(2), 1.0, CoverMode::Exact).unwrap();
        assert_eq!(cover.count(), 1);
        assert_eq!(cover.balls[0].center, PointId(2));
    }

    #[test]
    fn collinear_values_match_oracle() {
        // Frozen from brute-force enumeration of center subsets.
        let s = line(&[0., 1., 2.]);
        assert_eq!(min_half_cover(&s, PointId(1), 2.0, CoverMode::Exact).unwrap().count(), 1);
        assert_eq!(min_half_cover(&s, PointId(1), 1.0, CoverMode::Exact).unwrap().count(), 3);
        let report = doubling_constant(&s, CoverMode::Exact).unwrap();
        assert_eq!(report.constant, 3);
        assert_eq!(report.witness.center, PointId(1));
        assert_eq!(report.witness.radius, 1.0);
    }

    #[test]
    fn exact_cover_prefers_lowest_centers() {
        // ball(0, 3) on {0,1,2,3} needs two radius-1.5 balls; {0, 2} is the smallest pair.
        let s = line(&[0., 1., 2., 3.]);
        let cover = min_half_cover(&s, PointId(0), 3.0, CoverMode::Exact).unwrap();
        let centers: Vec<_> = cover.balls.iter().map(|b| b.center).collect();
        assert_eq!(centers, vec![PointId(0), PointId(2)]);
    }

    #[test]
    fn greedy_is_valid_and_not_better() {
        let s = line(&[0., 1., 1.5, 4., 4.2, 7., 9.]);
        for c in 0..s.len() {
            for r in candidate_radii(&s) {
                let e = min_half_cover(&s, PointId(c), r, CoverMode::Exact).unwrap();
                let g = min_half_cover(&s, PointId(c), r, CoverMode::Greedy).unwrap();
                assert!(g.count() >= e.count());
                for cover in [&e, &g] {
                    for &x in &cover.target.members {
                        assert!(cover.balls.iter().any(|b| b.contains(x)));
                    }
                }
            }
        }
    }

    #[test]
    fn exact_mode_refuses_large_inputs() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let s = line(&xs);
        assert!(matches!(
            doubling_constant(&s, CoverMode::Exact),
            Err(CoverError::ExactLimit { .. })
        ));
        assert!(matches!(
            doubling_constant_capped(&line(&xs[..20]), CoverMode::Exact, 16),
            Err(CoverError::ExactLimit { cap: 16, .. })
        ));
        assert!(doubling_constant(&s, CoverMode::Greedy).is_ok());
    }

    #[test]
    fn exponent_arithmetic() {
        assert_eq!(lambda_doubling_exponent(1.0, 1.0), 3);
        assert_eq!(lambda_doubling_exponent(2.0, 2.0), 14);
    }

    #[test]
    fn inversion_certificate_on_a_line() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let cert = check_inversion_doubling(&line(&xs), PointId(0), 16).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.exponent, 10);
        assert!(matches!(
            check_inversion_doubling(&line(&xs), PointId(0), 4),
            Err(CoverError::ExactLimit { .. })
        ));
    }
}
