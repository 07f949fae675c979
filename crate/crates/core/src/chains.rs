//! θ-chains, the critical disconnectedness constant and chain transport
//! from an inverted (or λ-transformed) space back to the original one.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{ext_real, le_tol};
use crate::space::{ExtendedMetricSpace, FiniteSpace, PointId, QuasiMetricSpace, SpaceError};
use crate::transforms::{
    chain_metric, index_with, index_without, lambda_transform, LambdaWeighting, TransformError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("theta must lie in (0, 1), got {0}")]
    InvalidTheta(f64),
    #[error("pair ({0}, {1}) must be two distinct finite points at positive finite distance")]
    InvalidPair(PointId, PointId),
    #[error("a chain needs at least two links and three distinct points")]
    TooShort,
    #[error("endpoint distance {0} is not positive and finite")]
    DegenerateEndpoints(f64),
    #[error("link {index} has length {link}, bound is {bound}")]
    LinkTooLong { index: usize, link: f64, bound: f64 },
    #[error("chain passes through the basepoint {0}")]
    ContainsBasepoint(PointId),
    #[error("chain passes through a remote point {0}")]
    ContainsRemote(PointId),
    #[error("theta {theta} exceeds the transport hypothesis bound {max}")]
    Precondition { theta: f64, max: f64 },
    #[error("transport constant {0} is not below 1")]
    ConstantTooLarge(f64),
    #[error("weighting has no zero to act as basepoint")]
    NoBasepoint,
    #[error(
        "no {target}-chain found in the original space for a {theta}-chain {chain:?}: counterexample"
    )]
    Counterexample {
        theta: f64,
        target: f64,
        chain: Vec<PointId>,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chain {
    points: Vec<PointId>,
    theta: f64,
    endpoints_distance: f64,
    links: Vec<f64>,
}

impl Chain {
    /// Validates `points` as a θ-chain of `space` (links within relative 1e-9
    /// of `θ·d(x₀,xₙ)`, ties allowed).
    pub fn new(space: &impl FiniteSpace, points: Vec<PointId>, theta: f64) -> Result<Self, ChainError> {
        check_theta(theta)?;
        for &x in &points {
            space.check_point(x)?;
        }
        let mut distinct = points.clone();
        distinct.sort();
        distinct.dedup();
        if points.len() < 3 || distinct.len() < 3 {
            return Err(ChainError::TooShort);
        }
        let l = space.dist(points[0], *points.last().unwrap());
        if !(l.is_finite() && l > 0.0) {
            return Err(ChainError::DegenerateEndpoints(l));
        }
        let bound = theta * l;
        let links: Vec<f64> = points.windows(2).map(|w| space.dist(w[0], w[1])).collect();
        if let Some((index, &link)) = links.iter().enumerate().find(|(_, &li)| !le_tol(li, bound)) {
            return Err(ChainError::LinkTooLong { index, link, bound });
        }
        Ok(Chain {
            points,
            theta,
            endpoints_distance: l,
            links,
        })
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn endpoints_distance(&self) -> f64 {
        self.endpoints_distance
    }

    pub fn links(&self) -> &[f64] {
        &self.links
    }

    /// Largest link divided by the endpoint distance.
    pub fn achieved_theta(&self) -> f64 {
        self.links.iter().cloned().fold(0.0, f64::max) / self.endpoints_distance
    }

    /// Same chain traversed backwards.
    pub fn reversed(&self) -> Chain {
        let mut c = self.clone();
        c.points.reverse();
        c.links.reverse();
        c
    }
}

fn check_theta(theta: f64) -> Result<(), ChainError> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(ChainError::InvalidTheta(theta))
    }
}

/// Breadth-first search for a path from `a` to `b` in the graph whose edges
/// are the pairs at distance at most `θ·d(a,b)`, the edge `ab` excluded.
pub fn find_theta_chain(
    space: &impl FiniteSpace,
    theta: f64,
    (a, b): (PointId, PointId),
) -> Result<Option<Chain>, ChainError> {
    check_theta(theta)?;
    space.check_point(a)?;
    space.check_point(b)?;
    let l = space.dist(a, b);
    if a == b || space.is_remote(a) || space.is_remote(b) || !(l.is_finite() && l > 0.0) {
        return Err(ChainError::InvalidPair(a, b));
    }
    let bound = theta * l;
    let n = space.len();
    let m = space.matrix();
    let mut parent = vec![usize::MAX; n];
    parent[a.0] = a.0;
    let mut queue = VecDeque::from([a.0]);
    while let Some(u) = queue.pop_front() {
        let row = m.row(u);
        for v in 0..n {
            if parent[v] != usize::MAX || (u == a.0 && v == b.0) || !le_tol(row[v], bound) {
                continue;
            }
            parent[v] = u;
            if v == b.0 {
                let mut path = vec![b];
                let mut cur = b.0;
                while cur != a.0 {
                    cur = parent[cur];
                    path.push(PointId(cur));
                }
                path.reverse();
                return Chain::new(space, path, theta).map(Some);
            }
            queue.push_back(v);
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisconnectednessReport {
    /// Minimum over pairs of bottleneck / distance; 1 means no θ-chain exists
    /// for any θ < 1.
    pub theta_star: f64,
    pub witness_pair: (PointId, PointId),
    pub witness_chain: Option<Chain>,
}

impl DisconnectednessReport {
    pub fn uniformly_disconnected(&self) -> bool {
        self.theta_star >= 1.0
    }
}

/// All-pairs minimax path values (the smallest achievable largest link).
pub fn bottleneck_closure(space: &impl FiniteSpace) -> Vec<Vec<f64>> {
    let mut b = space.matrix().to_rows();
    let n = b.len();
    for k in 0..n {
        for i in 0..n {
            let bik = b[i][k];
            if !bik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = bik.max(b[k][j]);
                if via < b[i][j] {
                    b[i][j] = via;
                }
            }
        }
    }
    b
}

pub fn critical_theta(space: &impl FiniteSpace) -> Result<DisconnectednessReport, ChainError> {
    let n = space.len();
    if n < crate::space::MIN_POINTS {
        return Err(SpaceError::TooFewPoints(n).into());
    }
    let b = bottleneck_closure(space);
    let mut best = (1.0, None::<(usize, usize)>);
    for i in 0..n {
        for j in (i + 1)..n {
            let l = space.matrix().get(i, j);
            if !l.is_finite() || space.is_remote(PointId(i)) || space.is_remote(PointId(j)) {
                continue;
            }
            let ratio = b[i][j] / l;
            if best.1.is_none() || ratio < best.0 {
                best = (ratio.min(1.0), Some((i, j)));
            }
        }
    }
    let (theta_star, pair) = best;
    let (i, j) = pair.unwrap_or((0, 1));
    let witness_pair = (PointId(i), PointId(j));
    let witness_chain = if theta_star < 1.0 {
        find_theta_chain(space, theta_star, witness_pair)?
    } else {
        None
    };
    Ok(DisconnectednessReport {
        theta_star,
        witness_pair,
        witness_chain,
    })
}

/// Per-link view of a chain of the inverted space in original distances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainGeometry {
    pub basepoint: PointId,
    /// Chain points as indices of the original space.
    pub points: Vec<PointId>,
    pub radii: Vec<f64>,
    pub links: Vec<f64>,
    pub l: f64,
    /// Whether the points were reversed to get `r_n >= r_0`.
    pub reversed: bool,
}

impl ChainGeometry {
    fn build(
        space: &impl FiniteSpace,
        p: PointId,
        points: Vec<PointId>,
    ) -> Result<ChainGeometry, ChainError> {
        for &x in &points {
            if x == p {
                return Err(ChainError::ContainsBasepoint(x));
            }
            if space.is_remote(x) {
                return Err(ChainError::ContainsRemote(x));
            }
        }
        let mut points = points;
        let r = |x: PointId| space.dist(p, x);
        let reversed = r(*points.last().unwrap()) < r(points[0]);
        if reversed {
            points.reverse();
        }
        Ok(ChainGeometry {
            basepoint: p,
            radii: points.iter().map(|&x| r(x)).collect(),
            links: points.windows(2).map(|w| space.dist(w[0], w[1])).collect(),
            l: space.dist(points[0], *points.last().unwrap()),
            points,
            reversed,
        })
    }

    /// Geometry of a chain given in the indexing of `X∖{p}`.
    pub fn of_inverted(
        space: &ExtendedMetricSpace,
        p: PointId,
        chain: &Chain,
    ) -> Result<ChainGeometry, ChainError> {
        let base = chain.points().iter().map(|&y| index_with(p, y)).collect();
        ChainGeometry::build(space, p, base)
    }

    fn r0(&self) -> f64 {
        self.radii[0]
    }

    fn rn(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// `l_i / (r_i r_{i+1})` for each link.
    pub fn scaled_links(&self) -> Vec<f64> {
        self.links
            .iter()
            .enumerate()
            .map(|(i, li)| li / (self.radii[i] * self.radii[i + 1]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkBoundReport {
    pub necessary_holds: bool,
    pub sufficient_holds: bool,
    /// Largest `l_i/(r_i r_{i+1})` divided by `4θl/(r_n r_0)`.
    pub worst_necessary_ratio: f64,
    pub failing_links: Vec<usize>,
}

/// Checks a θ-chain of `(X∖{p}, d_p)` against the link inequalities it
/// implies in original distances.
pub fn check_link_bounds(
    space: &ExtendedMetricSpace,
    p: PointId,
    chain: &Chain,
) -> Result<LinkBoundReport, ChainError> {
    let inverted = chain_metric(space, p)?;
    let chain = Chain::new(&inverted, chain.points().to_vec(), chain.theta())?;
    let g = ChainGeometry::of_inverted(space, p, &chain)?;
    let theta = chain.theta();
    let necessary = 4.0 * theta * g.l / (g.rn() * g.r0());
    let sufficient = theta * g.l / (4.0 * g.rn() * g.r0());
    let scaled = g.scaled_links();
    let failing_links = scaled
        .iter()
        .enumerate()
        .filter(|(_, &s)| !le_tol(s, necessary))
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    Ok(LinkBoundReport {
        necessary_holds: failing_links.is_empty(),
        sufficient_holds: scaled.iter().all(|&s| le_tol(s, sufficient)),
        worst_necessary_ratio: scaled.iter().cloned().fold(0.0, f64::max) / necessary,
        failing_links,
    })
}

/// Whether a point sequence of the original space (excluding `p`) satisfies
/// `l_i/(r_i r_{i+1}) <= θl/(4 r_n r_0)` for every link.
pub fn satisfies_link_bound(
    space: &ExtendedMetricSpace,
    p: PointId,
    points: &[PointId],
    theta: f64,
) -> Result<bool, ChainError> {
    if points.len() < 3 {
        return Err(ChainError::TooShort);
    }
    let g = ChainGeometry::build(space, p, points.to_vec())?;
    let bound = theta * g.l / (4.0 * g.rn() * g.r0());
    Ok(g.scaled_links().iter().all(|&s| le_tol(s, bound)))
}

/// Searches a θ-chain of `(X∖{p}, d_p)` for an index `s` with
/// `l_s > l·c` and `max(r_s, r_{s+1})·c >= r_0`, where `c = ∛(4θ)`.
pub fn long_link_index(
    space: &ExtendedMetricSpace,
    p: PointId,
    chain: &Chain,
) -> Result<Option<usize>, ChainError> {
    let g = ChainGeometry::of_inverted(space, p, chain)?;
    let c = (4.0 * chain.theta()).cbrt();
    Ok((0..g.links.len()).find(|&s| {
        g.links[s] > g.l * c && le_tol(g.r0(), g.radii[s].max(g.radii[s + 1]) * c)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportVia {
    Construction,
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transported {
    pub chain: Chain,
    pub via: TransportVia,
    /// Pivot index `q` in the canonically oriented input chain.
    pub pivot: Option<usize>,
    pub reversed: bool,
    #[serde(with = "ext_real")]
    pub target_theta: f64,
}

/// Builds `(x_q, ..., x_0, p)` for the least `q` with `r_0 <= c·r_q`, checks
/// it as a `c`-chain of `space`, and otherwise searches all pairs.
fn transport(
    space: &impl FiniteSpace,
    g: &ChainGeometry,
    c: f64,
    theta: f64,
) -> Result<Transported, ChainError> {
    let pivot = (0..g.points.len()).find(|&q| le_tol(g.r0(), g.radii[q] * c));
    if let Some(q) = pivot {
        let mut candidate: Vec<PointId> = g.points[..=q].iter().rev().cloned().collect();
        candidate.push(g.basepoint);
        if let Ok(chain) = Chain::new(space, candidate, c) {
            return Ok(Transported {
                chain,
                via: TransportVia::Construction,
                pivot,
                reversed: g.reversed,
                target_theta: c,
            });
        }
    }
    let n = space.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (PointId(i), PointId(j));
            if space.is_remote(a) || space.is_remote(b) || !space.dist(a, b).is_finite() {
                continue;
            }
            if let Some(chain) = find_theta_chain(space, c, (a, b))? {
                return Ok(Transported {
                    chain,
                    via: TransportVia::Fallback,
                    pivot,
                    reversed: g.reversed,
                    target_theta: c,
                });
            }
        }
    }
    Err(ChainError::Counterexample {
        theta,
        target: c,
        chain: g.points.clone(),
    })
}

/// Turns a θ-chain of `(X∖{p}, d_p)` (θ <= 1/32) into a `∛(4θ)`-chain of
/// `(X, d)`.
pub fn transport_chain(
    space: &ExtendedMetricSpace,
    p: PointId,
    chain: &Chain,
) -> Result<Transported, ChainError> {
    let theta = chain.theta();
    if theta > 1.0 / 32.0 {
        return Err(ChainError::Precondition {
            theta,
            max: 1.0 / 32.0,
        });
    }
    let inverted = chain_metric(space, p)?;
    let chain = Chain::new(&inverted, chain.points().to_vec(), theta)?;
    let g = ChainGeometry::of_inverted(space, p, &chain)?;
    transport(space, &g, (4.0 * theta).cbrt(), theta)
}

/// Turns a θ-chain of `(X, d_λ)` (θ <= K^-19) into a `∛(θK'^4)`-chain of
/// `(X, d)`. The zero of λ acts as basepoint.
pub fn transport_chain_lambda(
    space: &QuasiMetricSpace,
    w: &LambdaWeighting,
    chain: &Chain,
) -> Result<Transported, ChainError> {
    let theta = chain.theta();
    let max = space.k().powi(-19);
    if theta > max {
        return Err(ChainError::Precondition { theta, max });
    }
    let c = (theta * w.k_prime().powi(4)).cbrt();
    if c >= 1.0 {
        return Err(ChainError::ConstantTooLarge(c));
    }
    let p = *w.zero_set().first().ok_or(ChainError::NoBasepoint)?;
    let transformed = lambda_transform(space, w)?;
    let chain = Chain::new(&transformed, chain.points().to_vec(), theta)?;
    let g = ChainGeometry::build(space, p, chain.points().to_vec())?;
    transport(space, &g, c, theta)
}

/// Translates a chain of the original space avoiding `p` into the indexing
/// of `X∖{p}`.
pub fn to_inverted_indices(p: PointId, points: &[PointId]) -> Option<Vec<PointId>> {
    points.iter().map(|&x| index_without(p, x)).collect()
}
