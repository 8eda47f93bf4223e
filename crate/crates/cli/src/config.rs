//! Run configuration and field construction shared by the subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use zerogauss::{corpus, grid_field, parse_field, DomainBox, ExcludedSet, GridSpec, ScalarField, Tolerances};

use crate::args::{FieldArgs, Format};
use crate::fail::Failure;

/// TOML document accepted by `--config`. Every entry present here replaces
/// the matching flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: Option<String>,
    pub grid: Option<PathBuf>,
    pub corpus: Option<String>,
    pub dim: Option<usize>,
    pub domain: Option<String>,
    #[serde(default)]
    pub exclude_points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub radii: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub region_samples: Option<usize>,
    pub region: Option<String>,
    pub center: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))
    }
}

/// Flags merged with the config file.
pub struct Resolved {
    pub field: ScalarField,
    pub tolerances: Tolerances,
    pub format: Format,
    pub config: RunConfig,
}

pub fn resolve(args: &FieldArgs) -> Result<Resolved, Failure> {
    let config = RunConfig::load(args.config.as_deref())?;
    let field = build_field(args, &config)?;
    let tolerances = tolerances(&args.tolerance, &config.tolerances)?;
    let format = match &config.format {
        Some(f) => parse_format(f)?,
        None => args.format,
    };
    Ok(Resolved {
        field,
        tolerances,
        format,
        config,
    })
}

fn parse_format(s: &str) -> Result<Format, Failure> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        "polyline" => Ok(Format::Polyline),
        other => Err(Failure::usage(format!("unknown format {other:?}"))),
    }
}

/// True when neither the flags nor the config name a field.
pub fn has_field(args: &FieldArgs) -> Result<bool, Failure> {
    let config = RunConfig::load(args.config.as_deref())?;
    Ok(config.field.is_some()
        || config.grid.is_some()
        || config.corpus.is_some()
        || args.field.is_some()
        || args.grid.is_some()
        || args.corpus.is_some())
}

fn build_field(args: &FieldArgs, config: &RunConfig) -> Result<ScalarField, Failure> {
    let from_config = config.field.is_some() || config.grid.is_some() || config.corpus.is_some();
    let (expr, grid, name) = if from_config {
        (config.field.clone(), config.grid.clone(), config.corpus.clone())
    } else {
        (args.field.clone(), args.grid.clone(), args.corpus.clone())
    };
    let dim = config.dim.or(args.dim);
    let mut field = match (expr, grid, name) {
        (Some(src), None, None) => {
            let dim = dim.ok_or_else(|| Failure::usage("--dim is required with --field"))?;
            parse_field(&src, dim)?
        }
        (None, Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::usage(format!("cannot read grid {}: {e}", path.display())))?;
            grid_field(GridSpec::parse_csv(&text)?)?
        }
        (None, None, Some(name)) => {
            corpus::find(&name)
                .ok_or_else(|| Failure::usage(format!("no corpus field named {name:?}")))?
                .field
        }
        (None, None, None) => return Err(Failure::usage("one of --field, --grid or --corpus is required")),
        _ => return Err(Failure::usage("give exactly one of field, grid or corpus")),
    };
    if let Some(d) = dim {
        if d != field.dim() {
            return Err(Failure::usage(format!("--dim {d} does not match the field dimension {}", field.dim())));
        }
    }
    let n = field.dim();
    if let Some(spec) = config.domain.as_deref().or(args.domain.as_deref()) {
        field = field.with_domain(parse_box(spec, n)?)?;
    }
    let excluded: Vec<Vec<f64>> = match &config.exclude_points {
        Some(points) => points.clone(),
        None => args
            .exclude_point
            .iter()
            .map(|s| parse_point(s, n))
            .collect::<Result<_, _>>()?,
    };
    for p in excluded {
        if p.len() != n {
            return Err(Failure::usage(format!("excluded point {p:?} is not of dimension {n}")));
        }
        field = field.with_excluded(ExcludedSet::point(p))?;
    }
    Ok(field)
}

fn tolerances(flags: &[String], config: &BTreeMap<String, f64>) -> Result<Tolerances, Failure> {
    let mut tol = Tolerances::default();
    let mut overrides: BTreeMap<String, f64> = BTreeMap::new();
    for flag in flags {
        let (name, value) = flag
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("tolerance {flag:?} is not name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("tolerance {name}: {value:?} is not a number")))?;
        overrides.insert(name.trim().to_string(), value);
    }
    overrides.extend(config.iter().map(|(k, v)| (k.clone(), *v)));
    for (name, value) in overrides {
        let slot = match name.as_str() {
            "kernel" => &mut tol.kernel,
            "affinity" => &mut tol.affinity,
            "lemma" => &mut tol.lemma,
            "identity" => &mut tol.identity,
            "light" => &mut tol.light,
            "decay" => &mut tol.decay,
            "conclusion" => &mut tol.conclusion,
            "developable" => &mut tol.developable,
            "convexity" => &mut tol.convexity,
            other => return Err(Failure::usage(format!("unknown tolerance {other:?}"))),
        };
        *slot = value;
    }
    tol.validate()?;
    Ok(tol)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("{t:?} is not a number")))
        })
        .collect()
}

pub fn parse_point(s: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let p = parse_list(s)?;
    if p.len() != n {
        return Err(Failure::usage(format!(
            "point {s:?} has {} coordinates, expected {n}",
            p.len()
        )));
    }
    Ok(p)
}

/// `lo:hi` for every axis, or one `lo:hi` per axis separated by commas.
pub fn parse_box(s: &str, n: usize) -> Result<DomainBox, Failure> {
    let parts: Vec<(f64, f64)> = s
        .split(',')
        .map(|axis| {
            let (lo, hi) = axis
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("box axis {axis:?} is not lo:hi")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| Failure::usage(format!("{lo:?} is not a number")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| Failure::usage(format!("{hi:?} is not a number")))?;
            Ok((lo, hi))
        })
        .collect::<Result<_, Failure>>()?;
    let parts = match parts.len() {
        1 => vec![parts[0]; n],
        k if k == n => parts,
        k => return Err(Failure::usage(format!("box has {k} axes, expected 1 or {n}"))),
    };
    Ok(DomainBox::new(
        parts.iter().map(|p| p.0).collect(),
        parts.iter().map(|p| p.1).collect(),
    )?)
}
