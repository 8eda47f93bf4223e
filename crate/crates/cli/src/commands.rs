use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use zerogauss::affinity::{lemma_report, LemmaResidualReport};
use zerogauss::curvature::curvature_report_with;
use zerogauss::output::{num, to_json};
use zerogauss::sampling::{box_points, unit_sphere};
use zerogauss::{
    corpus, euclidean_combination_identity, hessian_kernel, parse_field, rigidity_verdict, trace_ruling,
    CurvatureReport, DomainBox, Quantity, RigidityConfig, ScalarField, Signature, Tolerances, TraceOptions,
};

use crate::args::{
    CorpusArgs, EvalArgs, Format, QuantityArg, ReportArgs, RigidityArgs, RulingsArgs, SignatureArg, Suite,
    VerifyArgs,
};
use crate::config::{has_field, parse_box, parse_list, parse_point, resolve};
use crate::fail::{Failure, HYPOTHESIS};

/// Lines for standard output, plus the exit status when nothing failed hard.
pub struct Output {
    pub lines: Vec<String>,
    pub code: u8,
}

impl Output {
    fn ok(lines: Vec<String>) -> Self {
        Output { lines, code: 0 }
    }
}

fn no_polyline(format: Format, command: &str) -> Result<(), Failure> {
    if format == Format::Polyline {
        return Err(Failure::usage(format!("{command} has no polyline output")));
    }
    Ok(())
}

fn points(raw: &[String], n: usize) -> Result<Vec<Vec<f64>>, Failure> {
    raw.iter().map(|s| parse_point(s, n)).collect()
}

#[derive(Serialize)]
struct Evaluation<'a> {
    point: &'a [f64],
    value: f64,
    gradient: Vec<f64>,
    hessian: Vec<Vec<f64>>,
}

pub fn eval(args: &EvalArgs) -> Result<Output, Failure> {
    let run = resolve(&args.field)?;
    no_polyline(run.format, "eval")?;
    let n = run.field.dim();
    let xs = points(&args.point, n)?;
    let mut lines = Vec::new();
    let csv = run.format == Format::Csv;
    if let Some(dir) = &args.direction {
        let v = parse_point(dir, n)?;
        if csv {
            let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            cols.extend((1..=n).map(|i| format!("v{i}")));
            cols.extend((0..=args.degree).map(|k| format!("d{k}")));
            lines.push(cols.join(","));
        }
        for x in &xs {
            let jet = run.field.directional_jet(x, &v, args.degree)?;
            lines.push(if csv {
                jet.base
                    .iter()
                    .chain(&jet.direction)
                    .chain(&jet.derivs)
                    .map(|&t| num(t))
                    .collect::<Vec<_>>()
                    .join(",")
            } else {
                to_json(&jet)
            });
        }
        return Ok(Output::ok(lines));
    }
    if csv {
        let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        cols.push("value".into());
        cols.extend((1..=n).map(|i| format!("u_{i}")));
        for i in 1..=n {
            cols.extend((1..=n).map(|j| format!("u_{i}{j}")));
        }
        lines.push(cols.join(","));
    }
    for x in &xs {
        let jet = run.field.jet2_at(x)?;
        let e = Evaluation {
            point: x,
            value: jet.value,
            gradient: jet.gradient.iter().cloned().collect(),
            hessian: (0..n).map(|i| jet.hessian.row(i).iter().cloned().collect()).collect(),
        };
        lines.push(if csv {
            x.iter()
                .chain([&e.value])
                .chain(&e.gradient)
                .chain(e.hessian.iter().flatten())
                .map(|&t| num(t))
                .collect::<Vec<_>>()
                .join(",")
        } else {
            to_json(&e)
        });
    }
    Ok(Output::ok(lines))
}

pub fn report(args: &ReportArgs) -> Result<Output, Failure> {
    let run = resolve(&args.field)?;
    no_polyline(run.format, "report")?;
    let n = run.field.dim();
    let signature = match args.signature {
        SignatureArg::Euclidean => Signature::Euclidean,
        SignatureArg::Minkowski => Signature::Minkowski,
    };
    let mut lines = Vec::new();
    if run.format == Format::Csv {
        lines.push(CurvatureReport::csv_header(n));
    }
    for x in points(&args.point, n)? {
        let r = curvature_report_with(&run.field, &x, signature, run.tolerances.light)?;
        lines.push(match run.format {
            Format::Csv => r.csv_row(),
            _ => to_json(&r),
        });
    }
    Ok(Output::ok(lines))
}

fn ruling_csv_header(n: usize) -> String {
    let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    cols.extend((1..=n).map(|i| format!("gamma_{i}")));
    for c in [
        "t_minus",
        "t_plus",
        "affinity_residual",
        "kernel_residual",
        "samples",
        "stop_minus",
        "stop_plus",
    ] {
        cols.push(c.into());
    }
    cols.join(",")
}

pub fn rulings(args: &RulingsArgs) -> Result<Output, Failure> {
    let run = resolve(&args.field)?;
    let n = run.field.dim();
    let options = TraceOptions {
        step: args.step,
        resolution: args.resolution,
        tolerances: run.tolerances,
        ..TraceOptions::default()
    };
    let eta = args.eta.as_deref().map(|s| parse_point(s, n)).transpose()?;
    if eta.is_some() && run.format != Format::Json {
        return Err(Failure::usage("--eta output is JSON only"));
    }
    let fixed = args.direction.as_deref().map(|s| parse_point(s, n)).transpose()?;
    let mut lines = Vec::new();
    let mut code = 0;
    if run.format == Format::Csv {
        lines.push(ruling_csv_header(n));
    }
    for x in points(&args.point, n)? {
        let directions = match &fixed {
            Some(d) => vec![d.clone()],
            None => hessian_kernel(&run.field, &x, run.tolerances.kernel)?,
        };
        if directions.is_empty() {
            eprintln!("no Hessian kernel direction at {x:?}");
            code = HYPOTHESIS;
        }
        for gamma in directions {
            let seg = trace_ruling(&run.field, &x, &gamma, &options)?;
            if let Some(eta) = &eta {
                let report: LemmaResidualReport = lemma_report(&run.field, &seg, eta, 9)?;
                if !report.passes() {
                    code = HYPOTHESIS;
                }
                lines.push(to_json(&report));
                continue;
            }
            lines.push(match run.format {
                Format::Json => to_json(&seg),
                Format::Polyline => seg.polyline(),
                Format::Csv => {
                    let mut cells: Vec<String> = seg
                        .base
                        .iter()
                        .chain(&seg.direction)
                        .chain([&seg.t_minus, &seg.t_plus, &seg.affinity_residual, &seg.kernel_residual])
                        .map(|&t| num(t))
                        .collect();
                    cells.push(seg.samples.to_string());
                    cells.push(seg.stop_minus.to_string());
                    cells.push(seg.stop_plus.to_string());
                    cells.join(",")
                }
            });
        }
    }
    Ok(Output { lines, code })
}

fn quantity(q: QuantityArg) -> Quantity {
    match q {
        QuantityArg::Laplacian => Quantity::Laplacian,
        QuantityArg::MeanEuclidean => Quantity::MeanEuclidean,
        QuantityArg::MeanMinkowskiTilde => Quantity::MeanMinkowskiTilde,
        QuantityArg::MeanMinkowski => Quantity::MeanMinkowski,
    }
}

pub fn rigidity(args: &RigidityArgs) -> Result<Output, Failure> {
    let run = resolve(&args.field)?;
    no_polyline(run.format, "rigidity")?;
    let n = run.field.dim();
    let c = &run.config;
    let seed = c
        .seed
        .or(args.seed)
        .ok_or_else(|| Failure::usage("rigidity needs --seed (or seed in --config)"))?;
    let mut config = RigidityConfig {
        seed,
        tolerances: run.tolerances,
        ..RigidityConfig::default()
    };
    if let Some(r) = c.radii.clone().map(Ok).or_else(|| args.radii.as_deref().map(parse_list)) {
        config.radii = r?;
    }
    if let Some(s) = c.samples.or(args.samples) {
        config.sphere_samples = s;
    }
    if let Some(s) = c.region_samples.or(args.region_samples) {
        config.region_samples = s;
    }
    if let Some(r) = c.region.as_deref().or(args.region.as_deref()) {
        config.region = Some(parse_box(r, n)?);
    }
    config.center = match (&c.center, &args.center) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(s)) => Some(parse_point(s, n)?),
        (None, None) => None,
    };
    let q = quantity(args.quantity);
    if args.profile {
        let domain = run.field.domain();
        let center = config.center.clone().unwrap_or_else(|| {
            domain.lower.iter().zip(&domain.upper).map(|(a, b)| 0.5 * (a + b)).collect()
        });
        let p = zerogauss::rigidity::decay_profile_with(
            &run.field,
            q,
            &center,
            &config.radii,
            config.sphere_samples,
            config.seed,
            &config.tolerances,
        )?;
        let lines = match run.format {
            Format::Csv => p.to_csv().lines().map(String::from).collect(),
            _ => vec![to_json(&p)],
        };
        return Ok(Output::ok(lines));
    }
    let verdict = rigidity_verdict(&run.field, q, &config)?;
    eprintln!("outcome: {}", verdict.outcome);
    let lines = match run.format {
        Format::Csv => match &verdict.profile {
            Some(p) => p.to_csv().lines().map(String::from).collect(),
            None => vec!["radius,sup".into()],
        },
        _ => vec![to_json(&verdict)],
    };
    let code = if verdict.outcome.is_consistent() { 0 } else { HYPOTHESIS };
    Ok(Output { lines, code })
}

#[derive(Serialize)]
struct IdentitySummary {
    suite: &'static str,
    trials: usize,
    seed: u64,
    cases: usize,
    max_relative: f64,
    worst_field: String,
    worst_point: Vec<f64>,
    worst_direction: Vec<f64>,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct LemmaSummary {
    suite: &'static str,
    trials: usize,
    seed: u64,
    fields: usize,
    rulings: usize,
    checks: usize,
    max_r1: f64,
    min_r2: f64,
    max_r3: f64,
    max_r4: f64,
    min_r5: f64,
    max_r6: f64,
    min_profile: f64,
    tolerances: Tolerances,
    failures: Vec<String>,
    passed: bool,
}

#[derive(Serialize)]
struct CrosscheckSummary {
    suite: &'static str,
    trials: usize,
    seed: u64,
    fields: usize,
    points: usize,
    max_low_order: f64,
    max_high_order: f64,
    worst_field: String,
    tolerance_low_order: f64,
    tolerance_high_order: f64,
    passed: bool,
}

/// Every monomial of total degree at most four, coefficients in [−1, 1].
fn random_quartic(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut terms = Vec::new();
    let mut e = vec![0u32; n];
    'outer: loop {
        if e.iter().sum::<u32>() <= 4 {
            let c: f64 = rng.random_range(-1.0..1.0);
            let mut s = format!("({c})");
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    s.push_str(&format!("*x{}^{k}", i + 1));
                }
            }
            terms.push(s);
        }
        for i in 0..=n {
            if i == n {
                break 'outer;
            }
            e[i] += 1;
            if e[i] <= 4 {
                break;
            }
            e[i] = 0;
        }
    }
    terms.join("+")
}

fn shrunk(domain: &DomainBox, factor: f64) -> Result<DomainBox, Failure> {
    let mid: Vec<f64> = domain.lower.iter().zip(&domain.upper).map(|(a, b)| 0.5 * (a + b)).collect();
    let lower = domain.lower.iter().zip(&mid).map(|(a, m)| m + factor * (a - m)).collect();
    let upper = domain.upper.iter().zip(&mid).map(|(b, m)| m + factor * (b - m)).collect();
    Ok(DomainBox::new(lower, upper)?)
}

/// The named field, or the corpus entries selected by `keep`.
fn suite_fields(args: &VerifyArgs, keep: fn(&corpus::CorpusEntry) -> bool) -> Result<Vec<(String, ScalarField)>, Failure> {
    if has_field(&args.field)? {
        let run = resolve(&args.field)?;
        return Ok(vec![(run.field.label().to_string(), run.field)]);
    }
    Ok(corpus::corpus()
        .into_iter()
        .filter(keep)
        .map(|e| (e.name, e.field))
        .collect())
}

pub fn verify(args: &VerifyArgs) -> Result<Output, Failure> {
    let summary = match args.suite {
        Suite::EuclidIdentity => verify_identity(args)?,
        Suite::Lemmas => verify_lemmas(args)?,
        Suite::Crosscheck => verify_crosscheck(args)?,
    };
    Ok(summary)
}

fn verify_identity(args: &VerifyArgs) -> Result<Output, Failure> {
    let tol = if has_field(&args.field)? { resolve(&args.field)?.tolerances } else { Tolerances::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut s = IdentitySummary {
        suite: "euclid-identity",
        trials: args.trials,
        seed: args.seed,
        cases: 0,
        max_relative: 0.0,
        worst_field: String::new(),
        worst_point: Vec::new(),
        worst_direction: Vec::new(),
        tolerance: tol.identity,
        passed: true,
    };
    for trial in 0..args.trials {
        let n = 2 + trial % 3;
        let source = random_quartic(&mut rng, n);
        let field = parse_field(&source, n)?;
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let gamma = loop {
                let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                if g.iter().map(|t| t * t).sum::<f64>() > 1e-4 {
                    break g;
                }
            };
            let r = euclidean_combination_identity(&field, &x, &gamma)?;
            s.cases += 1;
            if r.relative >= s.max_relative {
                s.max_relative = r.relative;
                s.worst_field = source.clone();
                s.worst_point = x;
                s.worst_direction = gamma;
            }
        }
    }
    s.passed = s.max_relative <= tol.identity;
    let code = if s.passed { 0 } else { HYPOTHESIS };
    Ok(Output {
        lines: vec![to_json(&s)],
        code,
    })
}

fn verify_lemmas(args: &VerifyArgs) -> Result<Output, Failure> {
    let tol = if has_field(&args.field)? { resolve(&args.field)?.tolerances } else { Tolerances::default() };
    let fields = suite_fields(args, |e| e.developable && e.convex)?;
    let options = TraceOptions {
        tolerances: tol,
        ..TraceOptions::default()
    };
    let mut s = LemmaSummary {
        suite: "lemmas",
        trials: args.trials,
        seed: args.seed,
        fields: fields.len(),
        rulings: 0,
        checks: 0,
        max_r1: 0.0,
        min_r2: f64::INFINITY,
        max_r3: 0.0,
        max_r4: 0.0,
        min_r5: f64::INFINITY,
        max_r6: 0.0,
        min_profile: f64::INFINITY,
        tolerances: tol,
        failures: Vec::new(),
        passed: true,
    };
    for (stream, (name, field)) in fields.iter().enumerate() {
        let n = field.dim();
        let region = shrunk(field.domain(), 0.75)?;
        let bases = box_points(&region, args.trials, args.seed, stream as u64);
        for (b, x) in bases.iter().enumerate() {
            if field.admissible(x).is_err() {
                continue;
            }
            for gamma in hessian_kernel(field, x, tol.kernel)? {
                let seg = trace_ruling(field, x, &gamma, &options)?;
                if !(seg.t_minus < 0.0 && seg.t_plus > 0.0) {
                    continue;
                }
                s.rulings += 1;
                let etas = unit_sphere(n, 10, args.seed ^ stream as u64, b as u64);
                for eta in etas {
                    let r = lemma_report(field, &seg, &eta, 9)?;
                    s.checks += 1;
                    s.max_r1 = s.max_r1.max(r.r1);
                    s.min_r2 = s.min_r2.min(r.r2);
                    s.max_r3 = s.max_r3.max(r.r3);
                    s.max_r4 = s.max_r4.max(r.r4);
                    s.min_r5 = s.min_r5.min(r.r5);
                    s.max_r6 = s.max_r6.max(r.r6);
                    s.min_profile = s.min_profile.min(r.profile_min);
                    if !r.passes() && !s.failures.contains(name) {
                        s.failures.push(name.clone());
                    }
                }
            }
        }
    }
    s.passed = s.failures.is_empty();
    let code = if s.passed { 0 } else { HYPOTHESIS };
    Ok(Output {
        lines: vec![to_json(&s)],
        code,
    })
}

fn verify_crosscheck(args: &VerifyArgs) -> Result<Output, Failure> {
    let fields = suite_fields(args, |_| true)?;
    let mut s = CrosscheckSummary {
        suite: "crosscheck",
        trials: args.trials,
        seed: args.seed,
        fields: fields.len(),
        points: 0,
        max_low_order: 0.0,
        max_high_order: 0.0,
        worst_field: String::new(),
        tolerance_low_order: 1e-6,
        tolerance_high_order: 1e-5,
        passed: true,
    };
    for (stream, (name, field)) in fields.iter().enumerate() {
        let region = shrunk(field.domain(), 0.95)?;
        for x in box_points(&region, args.trials, args.seed, stream as u64) {
            if field.excluded_distance(&x) < 1.0 || field.admissible(&x).is_err() {
                continue;
            }
            s.points += 1;
            for order in 1..=4 {
                let r = field.fd_crosscheck(&x, order)?;
                if order <= 2 {
                    s.max_low_order = s.max_low_order.max(r);
                } else if r > s.max_high_order {
                    s.max_high_order = r;
                    s.worst_field = name.clone();
                }
            }
        }
    }
    s.passed = s.max_low_order <= s.tolerance_low_order && s.max_high_order <= s.tolerance_high_order;
    let code = if s.passed { 0 } else { HYPOTHESIS };
    Ok(Output {
        lines: vec![to_json(&s)],
        code,
    })
}

pub fn list_corpus(args: &CorpusArgs) -> Result<Output, Failure> {
    no_polyline(args.format, "corpus")?;
    let mut entries = corpus::corpus();
    entries.extend(corpus::random_cylindrical(args.random, args.seed)?);
    let mut lines = Vec::new();
    if args.format == Format::Csv {
        lines.push("name,family,dim,convex,developable,affine,expression".into());
    }
    for e in entries {
        let l = e.listing();
        lines.push(match args.format {
            Format::Csv => format!(
                "{},{},{},{},{},{},\"{}\"",
                l.name,
                to_json(&l.family).trim_matches('"'),
                l.dim,
                l.convex,
                l.developable,
                l.affine,
                l.expression
            ),
            _ => to_json(&l),
        });
    }
    Ok(Output::ok(lines))
}
