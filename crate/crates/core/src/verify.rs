//! Certificate sweeps over generated instances.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::chains::{
    critical_theta, find_theta_chain, check_link_bounds, satisfies_link_bound, transport_chain,
    to_inverted_indices, transport_chain_lambda, Chain, TransportVia,
};
use crate::covering::{
    check_inversion_doubling, check_lambda_doubling, doubling_constant,
    min_half_cover, candidate_radii, CoverMode, DEFAULT_CERTIFICATE_CAP,
};
use crate::distortion::{distortion_scatter, identity_map};
use crate::document::SpaceDocument;
use crate::generators::{
    cantor_space, euclidean_space_labeled, inversion_ray, lambda_chain_instance, random_space,
    CantorSpec, RandomModel,
};
use crate::numeric::{eq_tol, le_tol, pow_plus_one};
use crate::oracle;
use crate::report::{ext, to_value, ReportBuilder, RunReport};
use crate::space::{
    validate_quasi_metric_matrix, ExtendedMetricSpace, FiniteSpace, PointId, QuasiMetricSpace,
};
use crate::transforms::{
    chain_metric, inversion_kernel, lambda_transform, sphericalization_kernel,
    sphericalized_metric, check_sandwich, LambdaWeighting,
};

pub const DEFAULT_SEED: u64 = 7;
pub const SEED_ENV: &str = "QMOBIUS_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Default,
    Extended,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Suite::Default),
            "extended" => Ok(Suite::Extended),
            other => Err(format!("unknown suite `{other}` (expected default or extended)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub suite: Suite,
    pub seed: u64,
    pub exact_cap: usize,
    /// Replaces the doubling bound by a deliberately wrong one.
    pub inject_failure: bool,
}

impl SuiteOptions {
    pub fn new(suite: Suite, seed: u64) -> Self {
        SuiteOptions {
            suite,
            seed,
            exact_cap: DEFAULT_CERTIFICATE_CAP,
            inject_failure: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Euclidean,
    Ultrametric,
    Grid,
    Graph,
    Ray,
    Arc,
}

impl Family {
    pub fn is_euclidean(self) -> bool {
        !matches!(self, Family::Ultrametric | Family::Graph)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub name: String,
    pub family: Family,
    pub space: ExtendedMetricSpace,
    pub basepoint: PointId,
}

impl Instance {
    pub fn document(&self) -> String {
        SpaceDocument::from_metric(&self.name, &self.space)
            .with_basepoint(self.space.label(self.basepoint))
            .to_string()
    }

    fn counterexample(&self, detail: Value) -> Counterexample {
        Counterexample {
            instance: self.name.clone(),
            document: self.document(),
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub instance: String,
    /// The instance as a space document, for reproduction.
    pub document: String,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    pub checks: usize,
    pub summary: Value,
    pub counterexample: Option<Counterexample>,
}

impl Certificate {
    fn from_runs(id: u8, name: &str, runs: Vec<Result<Run, Counterexample>>, summary: Value) -> Self {
        let instances = runs.len();
        let checks = runs.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.checks).sum();
        let counterexample = runs.into_iter().find_map(|r| r.err());
        Certificate {
            id,
            name: name.to_string(),
            passed: counterexample.is_none(),
            instances,
            checks,
            summary,
            counterexample,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Run {
    checks: usize,
    stats: Vec<f64>,
}

fn run(checks: usize) -> Run {
    Run {
        checks,
        stats: Vec::new(),
    }
}

fn stat_max(runs: &[Result<Run, Counterexample>], i: usize) -> f64 {
    runs.iter()
        .filter_map(|r| r.as_ref().ok())
        .filter_map(|r| r.stats.get(i).copied())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn stat_min(runs: &[Result<Run, Counterexample>], i: usize) -> f64 {
    runs.iter()
        .filter_map(|r| r.as_ref().ok())
        .filter_map(|r| r.stats.get(i).copied())
        .fold(f64::INFINITY, f64::min)
}

const FAMILIES: [Family; 4] = [Family::Euclidean, Family::Ultrametric, Family::Grid, Family::Ray];
/// Adds shortest-path graph metrics, which are not Ptolemaic in general.
const ALL_FAMILIES: [Family; 5] = [
    Family::Euclidean,
    Family::Ultrametric,
    Family::Grid,
    Family::Graph,
    Family::Ray,
];

/// `n` points of the given family; the basepoint is uniform except for rays.
pub fn make_instance(family: Family, n: usize, rng: &mut ChaCha8Rng, name: String) -> Instance {
    let seed: u64 = rng.random();
    let (space, basepoint) = match family {
        Family::Euclidean | Family::Ultrametric | Family::Grid | Family::Graph => {
            let model = match family {
                Family::Euclidean => RandomModel::Euclidean { dim: rng.random_range(2..=3) },
                Family::Grid => RandomModel::PerturbedGrid { jitter: 0.3 },
                Family::Graph => RandomModel::Graph,
                _ => RandomModel::Ultrametric,
            };
            let s = random_space(seed, n, model)
                .expect("valid model parameters")
                .into_metric()
                .expect("metric model");
            (s, PointId(rng.random_range(0..n)))
        }
        Family::Ray | Family::Arc => {
            let u_lo = rng.random_range(0.1..0.5);
            let u_hi = u_lo + rng.random_range(0.2..1.0);
            inversion_ray(n - 1, u_lo, u_hi).expect("valid ray parameters")
        }
    };
    Instance {
        name,
        family,
        space,
        basepoint,
    }
}

/// `count` instances cycling through `families`.
pub fn sweep_instances(
    seed: u64,
    tag: &str,
    families: &[Family],
    count: usize,
    sizes: std::ops::RangeInclusive<usize>,
) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag_hash(tag));
    (0..count)
        .map(|i| {
            let family = families[i % families.len()];
            let n = rng.random_range(sizes.clone());
            make_instance(family, n, &mut rng, format!("{tag}-{i}"))
        })
        .collect()
}

fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Ray and arc instances whose inverted spaces contain θ-chains with
/// θ <= 1/32, paired with the nominal θ.
pub fn transport_instances(seed: u64) -> Vec<(Instance, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag_hash("transport"));
    let mut out = Vec::new();
    for i in 0..12 {
        let n = 33 + i;
        let (u_lo, u_hi) = if i == 0 {
            (0.5, 1.0)
        } else {
            let lo = rng.random_range(0.2..0.6);
            (lo, lo + rng.random_range(0.2..0.8))
        };
        let (space, basepoint) = inversion_ray(n, u_lo, u_hi).expect("valid ray parameters");
        let inst = Instance {
            name: format!("ray-{n}"),
            family: Family::Ray,
            space,
            basepoint,
        };
        out.push((inst, 1.0 / (n - 1) as f64));
    }
    for i in 0..10 {
        // Evenly spaced points on a circular arc of the inverted plane.
        let m = 40 + i;
        let radius = rng.random_range(0.5..1.0);
        let center_dist = radius + rng.random_range(0.5..1.5);
        let angle = rng.random_range(0.0..2.0 * PI);
        let (cx, cy) = (center_dist * angle.cos(), center_dist * angle.sin());
        let sweep = rng.random_range(0.5..1.5);
        let start = rng.random_range(0.0..2.0 * PI);
        let mut coords = vec![vec![0.0, 0.0]];
        for j in 0..=m {
            let phi = start + sweep * j as f64 / m as f64;
            let (qx, qy) = (cx + radius * phi.cos(), cy + radius * phi.sin());
            let r2 = qx * qx + qy * qy;
            coords.push(vec![qx / r2, qy / r2]);
        }
        let mut labels = vec!["p".to_string()];
        labels.extend((0..=m).map(|j| format!("a{j}")));
        let space = euclidean_space_labeled(labels, &coords).expect("arc points are distinct");
        let theta = (sweep / (2.0 * m as f64)).sin() / (sweep / 2.0).sin();
        let inst = Instance {
            name: format!("arc-{i}"),
            family: Family::Arc,
            space,
            basepoint: PointId(0),
        };
        out.push((inst, theta));
    }
    out
}

pub fn criterion_sandwich(seed: u64) -> Certificate {
    let instances = sweep_instances(seed, "sandwich", &FAMILIES, 200, 5..=24);
    let runs: Vec<_> = instances
        .par_iter()
        .map(|inst| {
            let p = inst.basepoint;
            let k = inversion_kernel(&inst.space, p).expect("finite basepoint");
            let dp = chain_metric(&inst.space, p).expect("inversion is defined");
            let inv = check_sandwich(&k, &dp);
            let s = sphericalization_kernel(&inst.space, p).expect("bounded space");
            let dhat = sphericalized_metric(&inst.space, p).expect("sphericalization is defined");
            let sph = check_sandwich(&s, &dhat);
            if !inv.ok() || !sph.ok() {
                return Err(inst.counterexample(json!({ "inversion": inv, "sphericalization": sph })));
            }
            Ok(Run {
                checks: inv.pairs + sph.pairs,
                stats: vec![inv.min_ratio, sph.min_ratio],
            })
        })
        .collect();
    let summary = json!({
        "min_inversion_ratio": ext(stat_min(&runs, 0)),
        "min_sphericalization_ratio": ext(stat_min(&runs, 1)),
    });
    Certificate::from_runs(1, "sandwich relations", runs, summary)
}

pub fn criterion_inversion_doubling(seed: u64, exact_cap: usize, inject_failure: bool) -> Certificate {
    let instances = sweep_instances(seed, "doubling", &FAMILIES, 50, 5..=14);
    let runs: Vec<_> = instances
        .par_iter()
        .map(|inst| {
            let cert = check_inversion_doubling(&inst.space, inst.basepoint, exact_cap)
                .map_err(|e| inst.counterexample(json!({ "error": e.to_string() })))?;
            let bound = if inject_failure {
                pow_plus_one(cert.base_constant as u64, 0)
            } else {
                cert.bound
            };
            if cert.transformed_constant as u128 > bound {
                return Err(inst.counterexample(json!({
                    "certificate": cert,
                    "checked_bound": bound.to_string(),
                })));
            }
            Ok(Run {
                checks: 1,
                stats: vec![cert.log_ratio.unwrap_or(0.0), cert.transformed_constant as f64],
            })
        })
        .collect();
    let summary = json!({
        "max_log_ratio": ext(stat_max(&runs, 0)),
        "max_inverted_constant": ext(stat_max(&runs, 1)),
        "bound_injected": inject_failure,
    });
    Certificate::from_runs(2, "inverted doubling bound", runs, summary)
}

pub fn criterion_ptolemy(seed: u64) -> Certificate {
    let instances: Vec<Instance> = sweep_instances(seed, "sandwich", &FAMILIES, 200, 5..=24)
        .into_iter()
        .filter(|i| i.family.is_euclidean())
        .collect();
    let runs: Vec<_> = instances
        .par_iter()
        .map(|inst| {
            let k = inversion_kernel(&inst.space, inst.basepoint).expect("finite basepoint");
            let dp = chain_metric(&inst.space, inst.basepoint).expect("inversion is defined");
            let mut checks = 0;
            for x in dp.point_ids() {
                for y in dp.point_ids() {
                    checks += 1;
                    if !eq_tol(k.value(x, y), dp.dist(x, y)) {
                        return Err(inst.counterexample(json!({
                            "pair": [x, y],
                            "kernel": k.value(x, y),
                            "chain": dp.dist(x, y),
                        })));
                    }
                }
            }
            Ok(run(checks))
        })
        .collect();
    Certificate::from_runs(3, "Ptolemaic inversion is a metric", runs, json!({}))
}

/// Criteria 4 and 5 share the chains found in the inverted spaces.
pub fn criteria_transport(seed: u64) -> (Certificate, Certificate) {
    let instances = transport_instances(seed);
    let results: Vec<(Result<Run, Counterexample>, Result<Run, Counterexample>)> = instances
        .par_iter()
        .map(|(inst, theta)| {
            let (space, p) = (&inst.space, inst.basepoint);
            let inverted = chain_metric(space, p).expect("inversion is defined");
            let last = PointId(inverted.len() - 1);
            let fail = |what: &str, extra: Value| inst.counterexample(json!({ "stage": what, "theta": theta, "detail": extra }));

            let transport = (|| {
                let chain = find_theta_chain(&inverted, *theta, (PointId(0), last))
                    .map_err(|e| fail("search", json!(e.to_string())))?
                    .ok_or_else(|| fail("search", json!("no chain in the inverted space")))?;
                let out = transport_chain(space, p, &chain)
                    .map_err(|e| fail("transport", json!(e.to_string())))?;
                let target = (4.0 * theta).cbrt();
                Chain::new(space, out.chain.points().to_vec(), target)
                    .map_err(|e| fail("independent validation", json!(e.to_string())))?;
                Ok((chain, out.via))
            })();

            let crit4 = transport
                .as_ref()
                .map(|(_, via)| Run {
                    checks: 1,
                    stats: vec![(*via == TransportVia::Fallback) as u8 as f64],
                })
                .map_err(Clone::clone);
            let crit5 = (|| {
                let (chain, _) = transport.clone()?;
                let rep = check_link_bounds(space, p, &chain)
                    .map_err(|e| fail("link bounds", json!(e.to_string())))?;
                if !rep.necessary_holds {
                    return Err(fail("necessary inequality", to_value(&rep)));
                }
                // The whole ordered curve, at four times the achieved ratio.
                let all: Vec<PointId> = (1..space.len()).map(PointId).collect();
                let wide = 4.0 * theta * (1.0 + 1e-6);
                let suff = satisfies_link_bound(space, p, &all, wide)
                    .map_err(|e| fail("sufficient inequality", json!(e.to_string())))?;
                if suff {
                    let seq = to_inverted_indices(p, &all).expect("p is excluded");
                    let found = find_theta_chain(&inverted, wide, (PointId(0), last)).ok().flatten();
                    if found.is_none() || Chain::new(&inverted, seq, wide).is_err() {
                        return Err(fail("sufficient inequality", json!("sequence is not a chain")));
                    }
                }
                Ok(Run {
                    checks: 1 + suff as usize,
                    stats: vec![rep.worst_necessary_ratio, suff as u8 as f64],
                })
            })();
            (crit4, crit5)
        })
        .collect();
    let (r4, r5): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let fallbacks = r4.iter().filter_map(|r| r.as_ref().ok()).filter(|r| r.stats[0] > 0.0).count();
    let sufficient = r5.iter().filter_map(|r| r.as_ref().ok()).filter(|r| r.stats[1] > 0.0).count();
    let summary4 = json!({ "fallbacks": fallbacks });
    let summary5 = json!({
        "worst_necessary_ratio": ext(stat_max(&r5, 0)),
        "sufficient_sequences": sufficient,
    });
    (
        Certificate::from_runs(4, "chain transport under inversion", r4, summary4),
        Certificate::from_runs(5, "link inequalities of inverted chains", r5, summary5),
    )
}

pub fn criterion_cantor() -> Certificate {
    let specs = [
        (CantorSpec::new(2, 2, 0.5), 2),
        (CantorSpec::new(2, 3, 0.5), 2),
        (CantorSpec::new(2, 4, 0.5), 2),
        (CantorSpec::new(2, 5, 0.5), 2),
        (CantorSpec::new(3, 3, 1.0 / 3.0), 3),
    ];
    let runs: Vec<_> = specs
        .par_iter()
        .map(|&(spec, expected)| {
            let space = cantor_space(spec).expect("valid spec");
            let inst = Instance {
                name: format!("cantor-{}-{}", spec.k, spec.depth),
                family: Family::Ultrametric,
                basepoint: PointId(0),
                space,
            };
            let ultra = validate_quasi_metric_matrix(inst.space.matrix(), 1.0, &Default::default())
                .map(|r| r.ok())
                .unwrap_or(false);
            let d = doubling_constant(&inst.space, CoverMode::Exact).map(|r| r.constant);
            let theta = critical_theta(&inst.space).map(|r| r.theta_star);
            match (&d, &theta) {
                (Ok(d), Ok(t)) if ultra && *d == expected && *t >= 1.0 => Ok(run(3)),
                _ => Err(inst.counterexample(json!({
                    "ultrametric": ultra,
                    "doubling": d.as_ref().map_err(|e| e.to_string()).ok(),
                    "expected_doubling": expected,
                    "theta_star": theta.as_ref().ok(),
                }))),
            }
        })
        .collect();
    Certificate::from_runs(6, "Cantor set certificates", runs, json!({}))
}

pub fn criterion_cross_ratio(seed: u64) -> Certificate {
    let mut instances = sweep_instances(seed, "cross-ratio", &ALL_FAMILIES, 25, 6..=11);
    for inst in instances.iter_mut().step_by(3) {
        inst.space = inst.space.complete_with_remote().expect("finite space");
        inst.name.push_str("-completed");
    }
    let bound = 4f64.powi(4);
    let runs: Vec<_> = instances
        .par_iter()
        .map(|inst| {
            let p = inst.basepoint;
            let rest = inst.space.remove_point(p).expect("enough points");
            let id = identity_map(rest.len());
            let kernel = inversion_kernel(&inst.space, p).expect("finite basepoint");
            let dp = chain_metric(&inst.space, p).expect("inversion is defined");
            let exact = distortion_scatter(&rest, &kernel, &id, seed).expect("same size");
            if let Some(bad) = exact.points.iter().find(|pt| !eq_tol(pt.t, pt.u)) {
                return Err(inst.counterexample(json!({ "kernel_cross_ratio": bad })));
            }
            let chain = distortion_scatter(&rest, &dp, &id, seed).expect("same size");
            if let Some(bad) = chain
                .points
                .iter()
                .find(|pt| !(le_tol(pt.u / pt.t, bound) && le_tol(1.0 / bound, pt.u / pt.t)))
            {
                return Err(inst.counterexample(json!({ "chain_cross_ratio": bad })));
            }
            let (lo, hi) = chain.ratio_range().unwrap_or((1.0, 1.0));
            Ok(Run {
                checks: exact.points.len() + chain.points.len(),
                stats: vec![hi, lo],
            })
        })
        .collect();
    let summary = json!({
        "max_ratio": ext(stat_max(&runs, 0)),
        "min_ratio": ext(stat_min(&runs, 1)),
    });
    Certificate::from_runs(7, "cross-ratio invariance", runs, summary)
}

/// Random weighting around a basepoint: `λ = d(p,·)·f / L` with `f` uniform
/// in `[0.8, 1.25]` and `L` drawn from `{1/2, 1, 2}`; `K'` is the smallest
/// admissible value.
pub fn random_weighting(space: &QuasiMetricSpace, p: PointId, rng: &mut ChaCha8Rng) -> LambdaWeighting {
    let l = [0.5, 1.0, 2.0][rng.random_range(0..3)];
    let lambda: Vec<f64> = space
        .point_ids()
        .iter()
        .map(|&x| space.dist(p, x) * rng.random_range(0.8..=1.25) / l)
        .collect();
    let k_prime = LambdaWeighting::minimal_k_prime(space, &lambda, l);
    LambdaWeighting::new(lambda, l, k_prime).expect("weights are admissible")
}

pub fn criterion_weighted(seed: u64, exact_cap: usize) -> Certificate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag_hash("weighted"));
    let cases: Vec<(QuasiMetricSpace, LambdaWeighting, String)> = (0..24)
        .map(|i| {
            let k = [1.0, 1.5, 2.0, 3.0][i % 4];
            let n = rng.random_range(5..=12);
            let space = random_space(rng.random(), n, RandomModel::Quasi { k })
                .expect("quasi model")
                .into_quasi();
            let p = PointId(rng.random_range(0..n));
            let w = random_weighting(&space, p, &mut rng);
            (space, w, format!("quasi-{i}"))
        })
        .collect();
    let mut runs: Vec<Result<Run, Counterexample>> = cases
        .par_iter()
        .map(|(space, w, name)| {
            let fail = |detail: Value| Counterexample {
                instance: name.clone(),
                document: SpaceDocument::from_quasi(name, space).to_string(),
                detail: json!({ "weighting": w, "detail": detail }),
            };
            lambda_transform(space, w).map_err(|e| fail(json!(e.to_string())))?;
            let cert = check_lambda_doubling(space, w, exact_cap).map_err(|e| fail(json!(e.to_string())))?;
            if !cert.holds {
                return Err(fail(to_value(&cert)));
            }
            Ok(run(2))
        })
        .collect();
    let engineered: Vec<Result<Run, Counterexample>> = [0.5, 0.75, 2.0]
        .par_iter()
        .map(|&h| {
            let theta = 2f64.powi(-19);
            let name = format!("engineered-{h}");
            let inst = lambda_chain_instance(26.0, h, theta).map_err(|e| Counterexample {
                instance: name.clone(),
                document: String::new(),
                detail: json!(e.to_string()),
            })?;
            let fail = |detail: Value| Counterexample {
                instance: name.clone(),
                document: SpaceDocument::from_quasi(&name, &inst.space).to_string(),
                detail: json!({ "weighting": inst.weighting, "detail": detail }),
            };
            let dl = lambda_transform(&inst.space, &inst.weighting).map_err(|e| fail(json!(e.to_string())))?;
            let chain = Chain::new(&dl, inst.chain.clone(), theta).map_err(|e| fail(json!(e.to_string())))?;
            let out = transport_chain_lambda(&inst.space, &inst.weighting, &chain)
                .map_err(|e| fail(json!(e.to_string())))?;
            let target = (theta * inst.weighting.k_prime().powi(4)).cbrt();
            Chain::new(&inst.space, out.chain.points().to_vec(), target)
                .map_err(|e| fail(json!(e.to_string())))?;
            Ok(run(1))
        })
        .collect();
    let engineered_count = engineered.len();
    runs.extend(engineered);
    Certificate::from_runs(
        8,
        "weighted inversion doubling and chain transport",
        runs,
        json!({ "quasi_instances": 24, "engineered_instances": engineered_count }),
    )
}

pub fn criterion_oracles(seed: u64) -> Certificate {
    let mut small = sweep_instances(seed, "oracle", &ALL_FAMILIES, 40, 4..=8);
    for inst in small.iter_mut().skip(1).step_by(4) {
        if inst.space.len() < 8 {
            inst.space = inst.space.complete_with_remote().expect("finite space");
            inst.name.push_str("-completed");
        }
    }
    let covers = sweep_instances(seed, "oracle-cover", &ALL_FAMILIES, 12, 5..=12);
    let mut runs: Vec<Result<Run, Counterexample>> = small
        .par_iter()
        .map(|inst| {
            let mut checks = 0;
            let dp = chain_metric(&inst.space, inst.basepoint).expect("inversion is defined");
            let reference = oracle::shortest_chains(&oracle::inversion_kernel_rows(&inst.space, inst.basepoint));
            for x in dp.point_ids() {
                for y in dp.point_ids() {
                    checks += 1;
                    if !eq_tol(dp.dist(x, y), reference[x.0][y.0]) {
                        return Err(inst.counterexample(json!({
                            "check": "chain metric", "pair": [x, y],
                            "fast": dp.dist(x, y), "oracle": reference[x.0][y.0],
                        })));
                    }
                }
            }
            let space = &inst.space;
            let finite = space.finite_points();
            for &a in &finite {
                for &b in &finite {
                    if a >= b {
                        continue;
                    }
                    for theta in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
                        checks += 1;
                        let fast = find_theta_chain(space, theta, (a, b)).expect("valid pair").is_some();
                        if fast != oracle::theta_chain_exists(space, theta, a, b) {
                            return Err(inst.counterexample(json!({
                                "check": "theta chain", "pair": [a, b], "theta": theta, "fast": fast,
                            })));
                        }
                    }
                }
            }
            Ok(run(checks))
        })
        .collect();
    runs.extend(covers.par_iter().map(|inst| {
        let mut checks = 0;
        for c in inst.space.point_ids() {
            for r in candidate_radii(&inst.space) {
                let fast = min_half_cover(&inst.space, c, r, CoverMode::Exact).expect("small space");
                if fast.target.members.len() > 12 {
                    continue;
                }
                checks += 1;
                let reference = oracle::min_half_cover_size(&inst.space, c, r);
                if fast.count() != reference {
                    return Err(inst.counterexample(json!({
                        "check": "half cover", "center": c, "radius": r,
                        "fast": fast.count(), "oracle": reference,
                    })));
                }
            }
        }
        Ok(run(checks))
    }).collect::<Vec<_>>());
    Certificate::from_runs(9, "oracle equivalence", runs, json!({}))
}

pub fn run_suite(opts: &SuiteOptions) -> Vec<Certificate> {
    let seed = opts.seed;
    let (c4, c5) = criteria_transport(seed);
    let mut certs = vec![
        criterion_sandwich(seed),
        criterion_inversion_doubling(seed, opts.exact_cap, opts.inject_failure),
        criterion_ptolemy(seed),
        c4,
        c5,
        criterion_cantor(),
        criterion_cross_ratio(seed),
    ];
    if opts.suite == Suite::Extended {
        certs.push(criterion_weighted(seed, opts.exact_cap));
    }
    certs.push(criterion_oracles(seed));
    certs
}

/// Runs the suite and packages the certificates as a report.
pub fn suite_report(opts: &SuiteOptions) -> (RunReport, bool) {
    let certs = run_suite(opts);
    let passed = certs.iter().all(|c| c.passed);
    let mut b = ReportBuilder::new("verify-theorems");
    b.seed(opts.seed)
        .parameter("suite", to_value(&opts.suite))
        .parameter("exact_cap", opts.exact_cap)
        .parameter("inject_failure", opts.inject_failure)
        .result("passed", passed)
        .result(
            "certificates",
            Value::Array(
                certs
                    .iter()
                    .map(|c| {
                        json!({
                            "id": c.id, "name": c.name, "passed": c.passed,
                            "instances": c.instances, "checks": c.checks, "summary": c.summary,
                        })
                    })
                    .collect(),
            ),
        );
    let counterexamples: Vec<Value> = certs
        .iter()
        .filter_map(|c| c.counterexample.as_ref().map(|x| json!({ "id": c.id, "counterexample": x })))
        .collect();
    b.witness("counterexamples", counterexamples);
    (b.finish(), passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_deterministic() {
        let a = sweep_instances(3, "t", &FAMILIES, 8, 5..=9);
        let b = sweep_instances(3, "t", &FAMILIES, 8, 5..=9);
        assert_eq!(a, b);
        assert_ne!(a, sweep_instances(4, "t", &FAMILIES, 8, 5..=9));
        assert_eq!(a[3].family, Family::Ray);
        assert_eq!(a[3].basepoint, PointId(0));
    }

    #[test]
    fn arcs_have_small_theta() {
        for (inst, theta) in transport_instances(1) {
            assert!(theta <= 1.0 / 32.0, "{} has θ = {theta}", inst.name);
        }
    }

    #[test]
    fn cantor_certificate_passes() {
        assert!(criterion_cantor().passed);
    }

    #[test]
    fn injected_failure_is_reported() {
        let cert = criterion_inversion_doubling(1, 16, true);
        assert!(!cert.passed);
        let cx = cert.counterexample.unwrap();
        assert!(cx.document.contains("matrix:"));
    }
}
