use std::path::Path;

use serde_json::{json, Value};

use qmobius_core::chains::{bottleneck_closure, critical_theta, find_theta_chain, Chain};
use qmobius_core::covering::doubling_constant_capped;
use qmobius_core::distortion::{
    distortion_scatter, identity_map, parse_label_map, quasisymmetry_scatter, MonotoneEnvelope,
};
use qmobius_core::document::SpaceDocument;
use qmobius_core::generators::{
    cantor_space, euclidean_space, inversion_ray, random_space, CantorSpec, RandomModel,
};
use qmobius_core::report::{ext, to_value, ReportBuilder, RunReport};
use qmobius_core::space::{AnySpace, SpaceError};
use qmobius_core::transforms::{check_sandwich, KernelMatrix};
use qmobius_core::verify::{suite_report, SuiteOptions};
use qmobius_core::{
    chain_metric, inversion_kernel, sphericalization_kernel, sphericalized_metric, FiniteSpace,
    PointId,
};

use crate::{Command, GenerateArgs, InvertArgs, Model, RandomKind};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input, or a refused request.
    Usage(String),
    /// Well-formed input that fails a check.
    Semantic(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Semantic(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Semantic(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

pub struct Outcome {
    pub report: Option<RunReport>,
    /// Printed instead of the report JSON.
    pub stdout: Option<String>,
    pub message: Option<String>,
    pub ok: bool,
}

impl Outcome {
    fn report(report: RunReport, ok: bool) -> Self {
        Outcome {
            report: Some(report),
            stdout: None,
            message: None,
            ok,
        }
    }
}

struct Loaded {
    bytes: Vec<u8>,
    doc: SpaceDocument,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| usage(format!("{} is not UTF-8", path.display())))?;
    let doc = SpaceDocument::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(Loaded { bytes, doc })
}

impl Loaded {
    fn space(&self) -> Result<AnySpace, Failure> {
        self.doc.to_space().map_err(|e| {
            if e.is_parse_error() {
                usage(e)
            } else {
                Failure::Semantic(format!("invalid space: {e}"))
            }
        })
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn labels(space: &impl FiniteSpace, ids: &[PointId]) -> Vec<String> {
    ids.iter().map(|&x| space.label(x).to_string()).collect()
}

fn find(space: &impl FiniteSpace, label: &str) -> Result<PointId, Failure> {
    space
        .find_label(label)
        .ok_or_else(|| usage(format!("unknown label `{label}`")))
}

fn rows_value(rows: &[Vec<f64>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Array(r.iter().map(|&v| ext(v)).collect()))
            .collect(),
    )
}

fn kernel_rows(k: &KernelMatrix) -> Vec<Vec<f64>> {
    let ids = k.point_ids();
    ids.iter().map(|&x| ids.iter().map(|&y| k.value(x, y)).collect()).collect()
}

fn chain_value(space: &impl FiniteSpace, chain: &Chain) -> Value {
    json!({
        "points": labels(space, chain.points()),
        "theta": chain.theta(),
        "achieved_theta": chain.achieved_theta(),
        "endpoints_distance": ext(chain.endpoints_distance()),
    })
}

pub fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Validate { input } => validate(&input),
        Command::Invert(args) => invert(args),
        Command::Doubling { input, mode, exact_cap } => {
            let loaded = load(&input)?;
            let space = loaded.space()?;
            let rep = doubling_constant_capped(&space, mode, exact_cap).map_err(usage)?;
            let mut b = ReportBuilder::new("doubling");
            b.input(&loaded.bytes)
                .parameter("mode", to_value(&mode))
                .parameter("exact_cap", exact_cap)
                .result("doubling_constant", rep.constant)
                .result("method", to_value(&rep.method))
                .witness(
                    "ball",
                    json!({
                        "center": space.label(rep.witness.center),
                        "radius": ext(rep.witness.radius),
                        "cover_size": rep.witness.cover_size,
                    }),
                );
            Ok(Outcome::report(b.finish(), true))
        }
        Command::Chains { input, theta, pair } => chains(&input, theta, pair),
        Command::VerifyTheorems {
            suite,
            seed,
            exact_cap,
            inject_failure,
        } => {
            let opts = SuiteOptions {
                suite,
                seed,
                exact_cap,
                inject_failure,
            };
            let (report, passed) = suite_report(&opts);
            let lines: Vec<String> = report.results["certificates"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|c| {
                    format!(
                        "certificate {}: {} ({})",
                        c["id"],
                        if c["passed"] == json!(true) { "PASS" } else { "FAIL" },
                        c["name"].as_str().unwrap_or_default(),
                    )
                })
                .collect();
            let mut out = Outcome::report(report, passed);
            out.message = Some(lines.join("\n"));
            Ok(out)
        }
        Command::Generate(args) => generate(args),
        Command::Distortion {
            source,
            target,
            map,
            seed,
        } => distortion(&source, &target, map.as_deref(), seed),
    }
}

fn validate(input: &Path) -> Result<Outcome, Failure> {
    let loaded = load(input)?;
    let mut b = ReportBuilder::new("validate");
    b.input(&loaded.bytes)
        .parameter("kind", format!("{:?}", loaded.doc.kind).to_lowercase())
        .result("points", loaded.doc.points.len());
    let ok = match loaded.doc.to_space() {
        Ok(_) => {
            b.result("valid", true).witness("violations", json!([]));
            true
        }
        Err(e) if !e.is_parse_error() => {
            b.result("valid", false).result("error", e.to_string());
            if let qmobius_core::document::DocumentError::Space(SpaceError::Invalid(rep)) = &e {
                let named: Vec<Value> = rep
                    .violations
                    .iter()
                    .map(|v| {
                        let mut value = to_value(v);
                        value["labels"] = json!(v
                            .witness
                            .iter()
                            .map(|p| loaded.doc.points[p.0].clone())
                            .collect::<Vec<_>>());
                        value
                    })
                    .collect();
                b.witness("violations", named);
            }
            false
        }
        Err(e) => return Err(usage(format!("{}: {e}", input.display()))),
    };
    Ok(Outcome::report(b.finish(), ok))
}

fn invert(args: InvertArgs) -> Result<Outcome, Failure> {
    let loaded = load(&args.input)?;
    let AnySpace::Metric(mut space) = loaded.space()? else {
        return Err(usage("invert needs a metric document"));
    };
    if args.complete {
        space = space.complete_with_remote().map_err(usage)?;
    }
    let p = find(&space, &args.point)?;
    if space.is_remote(p) {
        return Err(usage(format!("`{}` is the remote point", args.point)));
    }
    let (kernel, transformed, what) = if args.sphericalize {
        (
            sphericalization_kernel(&space, p).map_err(usage)?,
            sphericalized_metric(&space, p).map_err(usage)?,
            "sphericalized",
        )
    } else {
        (
            inversion_kernel(&space, p).map_err(usage)?,
            chain_metric(&space, p).map_err(usage)?,
            "inverted",
        )
    };
    let sandwich = check_sandwich(&kernel, &transformed);
    let name = if loaded.doc.name.is_empty() {
        what.to_string()
    } else {
        format!("{}-{what}", loaded.doc.name)
    };
    let doc = SpaceDocument::from_metric(&name, &transformed).to_string();

    let mut b = ReportBuilder::new("invert");
    b.input(&loaded.bytes)
        .parameter("point", args.point.as_str())
        .parameter("sphericalize", args.sphericalize)
        .parameter("complete", args.complete)
        .result("transform", what)
        .result("points", labels(&transformed, &transformed.point_ids()))
        .result("kernel", rows_value(&kernel_rows(&kernel)))
        .result("sandwich", to_value(&sandwich));
    match &args.output {
        Some(path) => write_file(path, &doc)?,
        None => {
            b.result("document", doc.as_str());
        }
    }
    Ok(Outcome::report(b.finish(), sandwich.ok()))
}

fn chains(input: &Path, theta: Option<f64>, pair: Option<Vec<String>>) -> Result<Outcome, Failure> {
    let loaded = load(input)?;
    let space = loaded.space()?;
    let pair = match pair.as_deref() {
        Some([a, b]) => Some((find(&space, a)?, find(&space, b)?)),
        _ => None,
    };
    let mut b = ReportBuilder::new("chains");
    b.input(&loaded.bytes);
    if let Some(t) = theta {
        b.parameter("theta", t);
    }
    if let Some((x, y)) = pair {
        b.parameter("pair", labels(&space, &[x, y]));
    }

    let critical = critical_theta(&space).map_err(usage)?;
    b.result("theta_star", critical.theta_star)
        .result("uniformly_disconnected", critical.uniformly_disconnected())
        .witness("pair", labels(&space, &[critical.witness_pair.0, critical.witness_pair.1]));
    if critical.uniformly_disconnected() {
        b.result("statement", "uniformly disconnected for all θ<1");
    }
    if let Some(chain) = &critical.witness_chain {
        b.witness("chain", chain_value(&space, chain));
    }

    match (theta, pair) {
        (Some(t), Some(p)) => {
            let found = find_theta_chain(&space, t, p).map_err(usage)?;
            b.result("found", found.is_some());
            if let Some(c) = found {
                b.witness("theta_chain", chain_value(&space, &c));
            }
        }
        (Some(t), None) => {
            let finite: Vec<PointId> = space.point_ids().into_iter().filter(|&x| !space.is_remote(x)).collect();
            let mut count = 0;
            let mut first = None;
            for (i, &x) in finite.iter().enumerate() {
                for &y in &finite[i + 1..] {
                    if !space.dist(x, y).is_finite() {
                        continue;
                    }
                    if let Some(c) = find_theta_chain(&space, t, (x, y)).map_err(usage)? {
                        count += 1;
                        first.get_or_insert(c);
                    }
                }
            }
            b.result("pairs_with_chain", count).result("found", count > 0);
            if let Some(c) = first {
                b.witness("theta_chain", chain_value(&space, &c));
            }
        }
        (None, Some((x, y))) => {
            let l = space.dist(x, y);
            if x == y || space.is_remote(x) || space.is_remote(y) || !l.is_finite() {
                return Err(usage("pair must be two distinct finite points"));
            }
            let pair_theta = (bottleneck_closure(&space)[x.0][y.0] / l).min(1.0);
            b.result("pair_theta", pair_theta);
            if pair_theta < 1.0 {
                if let Some(c) = find_theta_chain(&space, pair_theta, (x, y)).map_err(usage)? {
                    b.witness("pair_chain", chain_value(&space, &c));
                }
            }
        }
        (None, None) => {}
    }
    Ok(Outcome::report(b.finish(), true))
}

fn required<T>(value: Option<T>, flag: &str, model: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("--model {model} requires --{flag}")))
}

fn parse_coords(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| usage(format!("bad coordinate `{c}`"))))
                .collect()
        })
        .collect()
}

fn generate(args: GenerateArgs) -> Result<Outcome, Failure> {
    let (default_name, space, basepoint, seeded) = match args.model {
        Model::Cantor => {
            let spec = CantorSpec::new(
                required(args.k, "k", "cantor")?,
                required(args.depth, "depth", "cantor")?,
                required(args.a, "a", "cantor")?,
            );
            let s = cantor_space(spec).map_err(usage)?;
            (format!("cantor-{}-{}", spec.k, spec.depth), AnySpace::Metric(s), None, false)
        }
        Model::Euclidean => match (&args.coords, args.n) {
            (Some(text), _) => {
                let s = euclidean_space(&parse_coords(text)?).map_err(usage)?;
                ("euclidean".to_string(), AnySpace::Metric(s), None, false)
            }
            (None, Some(n)) => {
                let s = random_space(args.seed, n, RandomModel::Euclidean { dim: args.dim }).map_err(usage)?;
                ("euclidean".to_string(), s, None, true)
            }
            (None, None) => return Err(usage("--model euclidean requires --coords or --n")),
        },
        Model::Ray => {
            let n = required(args.n, "n", "ray")?;
            let (s, p) = inversion_ray(n, required(args.ulo, "ulo", "ray")?, required(args.uhi, "uhi", "ray")?)
                .map_err(usage)?;
            let label = s.label(p).to_string();
            (format!("ray-{n}"), AnySpace::Metric(s), Some(label), false)
        }
        Model::Random => {
            let n = required(args.n, "n", "random")?;
            let model = match args.random_model {
                RandomKind::Euclidean => RandomModel::Euclidean { dim: args.dim },
                RandomKind::Ultrametric => RandomModel::Ultrametric,
                RandomKind::Grid => RandomModel::PerturbedGrid { jitter: args.jitter },
                RandomKind::Graph => RandomModel::Graph,
                RandomKind::Quasi => RandomModel::Quasi { k: args.quasi_k },
            };
            let s = random_space(args.seed, n, model).map_err(usage)?;
            (format!("random-{n}"), s, None, true)
        }
    };
    let name = args.name.unwrap_or(default_name);
    let mut doc = SpaceDocument::from_space(&name, &space);
    if let Some(p) = basepoint {
        doc = doc.with_basepoint(p);
    }
    let text = doc.to_string();
    match &args.output {
        None => Ok(Outcome {
            report: None,
            stdout: Some(text),
            message: None,
            ok: true,
        }),
        Some(path) => {
            write_file(path, &text)?;
            let mut b = ReportBuilder::new("generate");
            b.parameter("model", format!("{:?}", args.model).to_lowercase())
                .result("name", name.as_str())
                .result("points", doc.points.len())
                .result("document_digest", qmobius_core::report::sha256_hex(text.as_bytes()));
            if seeded {
                b.seed(args.seed);
            }
            Ok(Outcome::report(b.finish(), true))
        }
    }
}

fn envelope_value(e: &MonotoneEnvelope) -> Value {
    Value::Array(e.breakpoints.iter().map(|&(t, u)| json!([ext(t), ext(u)])).collect())
}

fn distortion(source: &Path, target: &Path, map: Option<&Path>, seed: u64) -> Result<Outcome, Failure> {
    let src = load(source)?;
    let tgt = load(target)?;
    let (s, t) = (src.space()?, tgt.space()?);
    let mut b = ReportBuilder::new("distortion");
    b.input(&src.bytes).input(&tgt.bytes);
    let f = match map {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            b.input(text.as_bytes());
            parse_label_map(&s, &t, &text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => identity_map(s.len()),
    };
    let crt = distortion_scatter(&s, &t, &f, seed).map_err(usage)?;
    let qs = quasisymmetry_scatter(&s, &t, &f, seed).map_err(usage)?;
    let range = |r: Option<(f64, f64)>| r.map(|(lo, hi)| json!([ext(lo), ext(hi)])).unwrap_or(Value::Null);
    b.parameter("map", if map.is_some() { "file" } else { "identity" })
        .result("quadruples", crt.points.len())
        .result("quadruples_skipped", crt.skipped)
        .result("cross_ratio_range", range(crt.ratio_range()))
        .result("envelope", envelope_value(&crt.envelope()))
        .result("inverse_envelope", envelope_value(&crt.inverse().envelope()))
        .result("triples", qs.points.len())
        .result("distance_ratio_range", range(qs.ratio_range()))
        .result("quasisymmetry_envelope", envelope_value(&qs.envelope()));
    if let Some(seed) = crt.seed {
        b.seed(seed);
    }
    Ok(Outcome::report(b.finish(), true))
}
