//! Built-in fields with known geometry.
//!
//! Every entry lives on `[-200, 200]^n` so that spheres up to radius 100
//! around the origin fit. Flags record what is known in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{DomainBox, ExcludedSet};
use crate::error::Result;
use crate::field::{parse_field, ScalarField};

pub const CORPUS_HALF_WIDTH: f64 = 200.0;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub family: Family,
    pub field: ScalarField,
    pub convex: bool,
    /// Convex with `det D²u ≡ 0` away from the excluded sets.
    pub developable: bool,
    pub affine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `a·sqrt(x₁² + c)`
    Example,
    /// `a·‖x‖`
    Cone,
    /// `a·sqrt(x₁² + … + x_k²)`
    Vk,
    Affine,
    Quadratic,
    /// `φ(e·x)` for a smooth convex `φ` with decaying `φ″`.
    Cylindrical,
}

/// Serializable summary of an entry.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusListing {
    pub name: String,
    pub family: Family,
    pub dim: usize,
    pub expression: String,
    pub excluded: Vec<ExcludedSet>,
    pub convex: bool,
    pub developable: bool,
    pub affine: bool,
}

impl CorpusEntry {
    pub fn listing(&self) -> CorpusListing {
        CorpusListing {
            name: self.name.clone(),
            family: self.family,
            dim: self.field.dim(),
            expression: self
                .field
                .expression()
                .map(|e| e.to_string())
                .unwrap_or_default(),
            excluded: self.field.excluded().to_vec(),
            convex: self.convex,
            developable: self.developable,
            affine: self.affine,
        }
    }
}

fn entry(
    name: String,
    family: Family,
    source: &str,
    dim: usize,
    excluded: Option<ExcludedSet>,
) -> Result<CorpusEntry> {
    let mut field = parse_field(source, dim)?
        .with_domain(DomainBox::cube(dim, CORPUS_HALF_WIDTH))?
        .with_label(name.clone());
    if let Some(set) = excluded {
        field = field.with_excluded(set)?;
    }
    let (convex, developable, affine) = match family {
        Family::Affine => (true, true, true),
        Family::Quadratic => (true, false, false),
        _ => (true, true, false),
    };
    Ok(CorpusEntry {
        name,
        family,
        field,
        convex,
        developable,
        affine,
    })
}

/// `a·sqrt(x₁² + c)` in the plane.
pub fn example(a: f64, c: f64) -> Result<CorpusEntry> {
    entry(
        format!("example-1.1(a={a},c={c})"),
        Family::Example,
        &format!("{a}*sqrt(x1^2+{c})"),
        2,
        None,
    )
}

/// `a·‖x‖` in ℝⁿ, singular at the origin.
pub fn cone(a: f64, n: usize) -> Result<CorpusEntry> {
    let name = if n == 2 {
        format!("cone(a={a})")
    } else {
        format!("cone(a={a},n={n})")
    };
    entry(
        name,
        Family::Cone,
        &format!("{a}*sqrt({})", squares(n)),
        n,
        Some(ExcludedSet::point(vec![0.0; n])),
    )
}

/// `a·sqrt(x₁² + … + x_k²)` in ℝⁿ, singular on `{x₁ = … = x_k = 0}`.
pub fn vk(a: f64, k: usize, n: usize) -> Result<CorpusEntry> {
    entry(
        format!("vk(a={a},k={k},n={n})"),
        Family::Vk,
        &format!("{a}*sqrt({})", squares(k)),
        n,
        Some(ExcludedSet::coordinate_axes_zero(k, n)),
    )
}

/// `b·x + β`.
pub fn affine(b: &[f64], beta: f64) -> Result<CorpusEntry> {
    let terms: Vec<String> = b
        .iter()
        .enumerate()
        .map(|(i, bi)| format!("({bi})*x{}", i + 1))
        .collect();
    let list: Vec<String> = b.iter().map(|x| x.to_string()).collect();
    entry(
        format!("affine(b=[{}],β={beta})", list.join(",")),
        Family::Affine,
        &format!("{} + ({beta})", terms.join(" + ")),
        b.len(),
        None,
    )
}

pub fn quadratic(n: usize) -> Result<CorpusEntry> {
    entry(
        format!("quadratic(n={n})"),
        Family::Quadratic,
        &format!("({})/2", squares(n)),
        n,
        None,
    )
}

fn squares(k: usize) -> String {
    (1..=k).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join("+")
}

/// Profile `φ` of a cylindrical field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `a·sqrt(s² + c)`, `0 < a < 1`
    Hyperbola { a: f64, c: f64 },
    /// `a·σ·log cosh(s/σ)`
    LogCosh { a: f64, sigma: f64 },
    /// `a·σ·log(1 + exp(s/σ))`
    Softplus { a: f64, sigma: f64 },
}

impl Profile {
    fn source(&self, s: &str) -> String {
        match *self {
            Profile::Hyperbola { a, c } => format!("{a}*sqrt(({s})^2+{c})"),
            Profile::LogCosh { a, sigma } => format!(
                "{a}*{sigma}*log((exp(({s})/{sigma})+exp(-({s})/{sigma}))/2)"
            ),
            Profile::Softplus { a, sigma } => {
                format!("{a}*{sigma}*log(1+exp(({s})/{sigma}))")
            }
        }
    }

    fn tag(&self) -> String {
        match *self {
            Profile::Hyperbola { a, c } => format!("hyperbola,a={a},c={c}"),
            Profile::LogCosh { a, sigma } => format!("logcosh,a={a},σ={sigma}"),
            Profile::Softplus { a, sigma } => format!("softplus,a={a},σ={sigma}"),
        }
    }
}

/// `φ(e·x)` for a unit vector `e` (normalized here).
pub fn cylindrical(profile: Profile, e: &[f64]) -> Result<CorpusEntry> {
    let len = e.iter().map(|c| c * c).sum::<f64>().sqrt();
    let e: Vec<f64> = e.iter().map(|c| c / len).collect();
    let s: Vec<String> = e
        .iter()
        .enumerate()
        .map(|(i, ei)| format!("({ei})*x{}", i + 1))
        .collect();
    let list: Vec<String> = e.iter().map(|c| format!("{c:.6}")).collect();
    entry(
        format!("cylindrical({},e=[{}])", profile.tag(), list.join(",")),
        Family::Cylindrical,
        &profile.source(&s.join("+")),
        e.len(),
        None,
    )
}

/// `count` random cylindrical fields in dimensions 2 to 4, reproducible
/// from `seed`. Parameters are rounded to three decimals so the names
/// re-create the fields.
pub fn random_cylindrical(count: usize, seed: u64) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let round = |x: f64| (x * 1000.0).round() / 1000.0;
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=4);
            let a = round(rng.random_range(0.1..0.9));
            let profile = match rng.random_range(0..3) {
                0 => Profile::Hyperbola {
                    a,
                    c: round(rng.random_range(0.5..4.0)),
                },
                1 => Profile::LogCosh {
                    a,
                    sigma: round(rng.random_range(1.0..5.0)),
                },
                _ => Profile::Softplus {
                    a,
                    sigma: round(rng.random_range(1.0..5.0)),
                },
            };
            let e: Vec<f64> = loop {
                let v: Vec<f64> = (0..n).map(|_| round(rng.random_range(-1.0..1.0))).collect();
                if v.iter().map(|c| c * c).sum::<f64>() > 0.1 {
                    break v;
                }
            };
            cylindrical(profile, &e)
        })
        .collect()
}

/// The fixed built-in list.
pub fn corpus() -> Vec<CorpusEntry> {
    let built = [
        example(0.5, 1.0),
        example(0.3, 2.0),
        example(0.9, 0.5),
        cone(0.5, 2),
        cone(0.3, 3),
        cone(0.9, 4),
        vk(0.5, 2, 3),
        vk(0.7, 3, 4),
        affine(&[0.3, -0.4], 2.0),
        affine(&[0.0, 0.0], 0.0),
        affine(&[0.1, 0.2, -0.5], -1.0),
        quadratic(2),
        quadratic(3),
        cylindrical(Profile::LogCosh { a: 0.8, sigma: 2.0 }, &[0.6, 0.8]),
        cylindrical(Profile::Softplus { a: 0.5, sigma: 1.5 }, &[1.0, -1.0, 1.0]),
        cylindrical(Profile::Hyperbola { a: 0.4, c: 3.0 }, &[2.0, 1.0, 0.0, -1.0]),
    ];
    built
        .into_iter()
        .map(|e| e.expect("built-in corpus sources parse"))
        .collect()
}

pub fn find(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::ma_residual;

    #[test]
    fn required_entries() {
        let c = corpus();
        assert!(c.iter().any(|e| e.name == "example-1.1(a=0.5,c=1)"));
        let cone = find("cone(a=0.5)").unwrap();
        assert_eq!(cone.field.excluded(), &[ExcludedSet::point(vec![0.0, 0.0])]);
        assert!(c.iter().any(|e| e.name.starts_with("affine(") && e.affine));
        assert!(c.iter().any(|e| e.family == Family::Vk && !e.field.excluded().is_empty()));
    }

    #[test]
    fn names_are_unique() {
        let c = corpus();
        let mut names: Vec<&str> = c.iter().map(|e| e.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), c.len());
    }

    #[test]
    fn developable_entries_have_zero_determinant() {
        for e in corpus().iter().filter(|e| e.developable) {
            let n = e.field.dim();
            let x: Vec<f64> = (0..n).map(|i| 1.5 + i as f64).collect();
            let det = ma_residual(&e.field, &x).unwrap();
            assert!(det.abs() < 1e-12, "{}: {det}", e.name);
        }
    }

    #[test]
    fn random_fields_are_reproducible() {
        let a = random_cylindrical(10, 4).unwrap();
        let b = random_cylindrical(10, 4).unwrap();
        let names = |v: &[CorpusEntry]| v.iter().map(|e| e.name.clone()).collect::<Vec<_>>();
        assert_eq!(names(&a), names(&b));
        assert_ne!(names(&a), names(&random_cylindrical(10, 5).unwrap()));
        for e in &a {
            let n = e.field.dim();
            let x: Vec<f64> = (0..n).map(|i| 150.0 - 100.0 * i as f64).collect();
            assert!(e.field.jet2_at(&x).unwrap().gradient.norm() < 1.0, "{}", e.name);
        }
    }
}
