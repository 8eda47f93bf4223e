//! Decay profiles, hypothesis scans and rigidity verdicts.
//!
//! The limit `x → ∞` is replaced by a finite, increasing radius schedule and
//! a decay threshold: a quantity counts as decaying when its estimated
//! supremum on the largest sphere is at most `tolerances.decay`. Both are
//! recorded in every verdict. Sphere suprema are maxima over a seeded
//! low-discrepancy sample followed by a local search, so they are lower
//! bounds of the true suprema.
//!
//! A verdict runs the hypotheses in order and stops at the first failure:
//! convexity, developability, the causal hypothesis (Minkowski quantities
//! only), decay, and finally a direct test of the conclusion.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvature::{mean_tilde, report_from_jet, Causality, CausalType, Signature};
use crate::domain::{norm, DomainBox};
use crate::error::{Error, Result};
use crate::field::{Jet2, ScalarField};
use crate::linalg::{sym_det, sym_eigenvalues};
use crate::sampling::{box_points, unit_sphere};
use crate::tolerance::Tolerances;

/// Curvature quantity whose decay is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// `Δu`; no signature hypothesis.
    Laplacian,
    /// `H^E`, the sum of Euclidean principal curvatures.
    MeanEuclidean,
    /// `H̃^M = (1 − ‖Du‖²)Δu + uᵢuⱼuᵢⱼ`, finite at every point.
    MeanMinkowskiTilde,
    /// `H^M`, defined at spacelike points only.
    MeanMinkowski,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [
        Quantity::Laplacian,
        Quantity::MeanEuclidean,
        Quantity::MeanMinkowskiTilde,
        Quantity::MeanMinkowski,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Laplacian => "laplacian",
            Quantity::MeanEuclidean => "mean-euclidean",
            Quantity::MeanMinkowskiTilde => "mean-minkowski-tilde",
            Quantity::MeanMinkowski => "mean-minkowski",
        }
    }

    /// Ambient signature whose curvatures the conclusion is tested against.
    pub fn signature(self) -> Option<Signature> {
        match self {
            Quantity::Laplacian => None,
            Quantity::MeanEuclidean => Some(Signature::Euclidean),
            Quantity::MeanMinkowskiTilde | Quantity::MeanMinkowski => Some(Signature::Minkowski),
        }
    }

    /// `None` where the quantity is undefined (full `H^M` off the spacelike set).
    pub fn from_jet(self, x: &[f64], jet: &Jet2, tau_light: f64) -> Option<f64> {
        match self {
            Quantity::Laplacian => Some(jet.hessian.trace()),
            Quantity::MeanMinkowskiTilde => Some(mean_tilde(jet)),
            Quantity::MeanEuclidean => {
                report_from_jet(x, jet, Signature::Euclidean, tau_light).mean_curvature
            }
            Quantity::MeanMinkowski => {
                report_from_jet(x, jet, Signature::Minkowski, tau_light).mean_curvature
            }
        }
    }

    pub fn evaluate(self, field: &ScalarField, x: &[f64], tau_light: f64) -> Result<Option<f64>> {
        Ok(self.from_jet(x, &field.jet2_at(x)?, tau_light))
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown quantity `{s}`")))
    }
}

/// Points where evaluation is refused (outside the box, inside a guard, no
/// stencil support) are skipped; any other error is real.
fn skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::OutsideDomain { .. } | Error::NearExcludedSet { .. } | Error::StencilSupport { .. }
    )
}

/// Estimated supremum of `|q|` over one sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereSup {
    pub radius: f64,
    pub sup: f64,
    pub argmax: Vec<f64>,
    pub samples: usize,
    /// Samples where the quantity is undefined.
    pub undefined: usize,
    /// Samples refused by the field (guard or box).
    pub skipped: usize,
}

fn sphere_inside(domain: &DomainBox, center: &[f64], radius: f64) -> bool {
    let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
    domain.contains(&lo) && domain.contains(&hi)
}

pub fn sphere_sup(
    field: &ScalarField,
    quantity: Quantity,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<SphereSup> {
    sphere_sup_with(field, quantity, center, radius, samples, seed, &Tolerances::default())
}

pub fn sphere_sup_with(
    field: &ScalarField,
    quantity: Quantity,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<SphereSup> {
    let n = field.dim();
    if center.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: center.len(),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) || samples == 0 {
        return Err(Error::InvalidArgument(
            "sphere radius and sample count must be positive".into(),
        ));
    }
    if !sphere_inside(field.domain(), center, radius) {
        return Err(Error::SphereOutsideDomain {
            center: center.to_vec(),
            radius,
        });
    }
    let point = |dir: &[f64]| -> Vec<f64> {
        center.iter().zip(dir).map(|(c, d)| c + radius * d).collect()
    };

    let directions = unit_sphere(n, samples, seed, radius.to_bits());
    let mut values: Vec<(f64, usize)> = Vec::new();
    let (mut undefined, mut skipped) = (0, 0);
    for (i, dir) in directions.iter().enumerate() {
        let x = point(dir);
        match quantity.evaluate(field, &x, tol.light) {
            Ok(Some(q)) => values.push((q.abs(), i)),
            Ok(None) => undefined += 1,
            Err(e) if skippable(&e) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{quantity} is undefined at every sample of the sphere of radius {radius}"
        )));
    }
    // descending by value, ties by sample index
    values.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let objective = |dir: &[f64]| -> Option<f64> {
        quantity
            .evaluate(field, &point(dir), tol.light)
            .ok()
            .flatten()
            .map(f64::abs)
    };
    let (mut best_dir, mut best) = (directions[values[0].1].clone(), values[0].0);
    for &(value, i) in values.iter().take(REFINE_STARTS) {
        let (dir, v) = refine_on_sphere(&objective, directions[i].clone(), value);
        if v > best {
            best = v;
            best_dir = dir;
        }
    }
    Ok(SphereSup {
        radius,
        sup: best,
        argmax: point(&best_dir),
        samples: directions.len(),
        undefined,
        skipped,
    })
}

const REFINE_STARTS: usize = 4;
const REFINE_MAX_ITERATIONS: usize = 2000;

/// Compass search over the unit sphere: try `±step` along each tangent
/// direction, move on improvement, halve the step otherwise.
fn refine_on_sphere(
    objective: &dyn Fn(&[f64]) -> Option<f64>,
    mut dir: Vec<f64>,
    mut value: f64,
) -> (Vec<f64>, f64) {
    let mut step = 0.05;
    let mut iterations = 0;
    while step > 1e-11 && iterations < REFINE_MAX_ITERATIONS {
        iterations += 1;
        let mut moved = false;
        'search: for t in tangent_basis(&dir) {
            for sign in [1.0, -1.0] {
                let trial: Vec<f64> = dir.iter().zip(&t).map(|(d, ti)| d + sign * step * ti).collect();
                let len = norm(&trial);
                let trial: Vec<f64> = trial.iter().map(|c| c / len).collect();
                if let Some(v) = objective(&trial) {
                    if v > value {
                        dir = trial;
                        value = v;
                        moved = true;
                        break 'search;
                    }
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (dir, value)
}

/// Orthonormal basis of the tangent space at the unit vector `d`, from
/// Gram–Schmidt on the coordinate vectors.
fn tangent_basis(d: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n {
        if basis.len() + 1 == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        for b in std::iter::once(d).chain(basis.iter().map(|b| b.as_slice())) {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let len = norm(&v);
        if len > 1e-6 {
            basis.push(v.iter().map(|c| c / len).collect());
        }
    }
    basis
}

/// Sphere suprema over an increasing radius schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub quantity: Quantity,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub spheres: Vec<SphereSup>,
    pub samples_per_sphere: usize,
    pub seed: u64,
    /// Suprema are non-increasing in the radius.
    pub monotone: bool,
    pub decay_tolerance: f64,
    /// Final supremum is at most `decay_tolerance`.
    pub decayed: bool,
    /// Suprema are maxima over finite samples, hence lower bounds.
    pub sup_is_lower_bound: bool,
}

impl DecayProfile {
    pub fn sups(&self) -> Vec<f64> {
        self.spheres.iter().map(|s| s.sup).collect()
    }

    /// Two columns, `radius,sup`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,sup\n");
        for s in &self.spheres {
            out.push_str(&format!(
                "{},{}\n",
                crate::output::num(s.radius),
                crate::output::num(s.sup)
            ));
        }
        out
    }
}

pub fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("radius schedule is empty".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "radius schedule must be strictly increasing".into(),
        ));
    }
    Ok(())
}

pub fn decay_profile(
    field: &ScalarField,
    quantity: Quantity,
    center: &[f64],
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<DecayProfile> {
    decay_profile_with(field, quantity, center, radii, samples, seed, &Tolerances::default())
}

pub fn decay_profile_with(
    field: &ScalarField,
    quantity: Quantity,
    center: &[f64],
    radii: &[f64],
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<DecayProfile> {
    validate_radii(radii)?;
    let spheres = radii
        .iter()
        .map(|&r| sphere_sup_with(field, quantity, center, r, samples, seed, tol))
        .collect::<Result<Vec<_>>>()?;
    let monotone = spheres.windows(2).all(|w| w[1].sup <= w[0].sup);
    let last = spheres.last().map(|s| s.sup).unwrap_or(f64::NAN);
    Ok(DecayProfile {
        quantity,
        center: center.to_vec(),
        radii: radii.to_vec(),
        samples_per_sphere: samples,
        seed,
        monotone,
        decay_tolerance: tol.decay,
        decayed: last <= tol.decay,
        sup_is_lower_bound: true,
        spheres,
    })
}

struct RegionSample {
    point: Vec<f64>,
    jet: Jet2,
}

fn check_region(field: &ScalarField, region: &DomainBox) -> Result<()> {
    if region.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: region.dim(),
        });
    }
    if !(field.domain().contains(&region.lower) && field.domain().contains(&region.upper)) {
        return Err(Error::InvalidArgument(
            "scan region must lie inside the field's domain".into(),
        ));
    }
    Ok(())
}

/// Jets at the region's sample points, and the number skipped.
fn region_samples(
    field: &ScalarField,
    region: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<(Vec<RegionSample>, usize)> {
    check_region(field, region)?;
    let mut out = Vec::with_capacity(samples);
    let mut skipped = 0;
    for point in box_points(region, samples, seed, REGION_STREAM) {
        match field.jet2_at(&point) {
            Ok(jet) => out.push(RegionSample { point, jet }),
            Err(e) if skippable(&e) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}

/// Region points use their own stream so they never coincide with sphere points.
const REGION_STREAM: u64 = u64::MAX;

/// Outcome of sampling the causal type over a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelikeScan {
    pub timelike_points_present: bool,
    /// Largest `‖Du‖ − 1` seen.
    pub worst_margin: f64,
    pub witness: Vec<f64>,
    pub spacelike: usize,
    pub lightlike: usize,
    pub timelike: usize,
    pub skipped: usize,
    pub tau_light: f64,
}

pub fn timelike_scan(
    field: &ScalarField,
    region: &DomainBox,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<TimelikeScan> {
    let (points, skipped) = region_samples(field, region, samples, seed)?;
    Ok(timelike_from_samples(&points, skipped, tol))
}

fn timelike_from_samples(points: &[RegionSample], skipped: usize, tol: &Tolerances) -> TimelikeScan {
    let mut scan = TimelikeScan {
        timelike_points_present: false,
        worst_margin: f64::NEG_INFINITY,
        witness: Vec::new(),
        spacelike: 0,
        lightlike: 0,
        timelike: 0,
        skipped,
        tau_light: tol.light,
    };
    for s in points {
        let causal = CausalType::classify(s.jet.gradient.norm(), tol.light);
        match causal.kind {
            Causality::Spacelike => scan.spacelike += 1,
            Causality::Lightlike => scan.lightlike += 1,
            Causality::Timelike => scan.timelike += 1,
        }
        if causal.margin > scan.worst_margin {
            scan.worst_margin = causal.margin;
            scan.witness = s.point.clone();
        }
    }
    scan.timelike_points_present = scan.timelike > 0;
    scan
}

/// Extremes of `det D²u` and of the Hessian spectrum over a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopabilityScan {
    pub max_abs_det: f64,
    pub det_witness: Vec<f64>,
    pub min_eigenvalue: f64,
    pub eigenvalue_witness: Vec<f64>,
    /// Smallest `λ_min / (1 + λ_max⁺)`, the quantity the convexity test uses.
    pub min_relative_eigenvalue: f64,
    pub convexity_witness: Vec<f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

pub fn developability_scan(
    field: &ScalarField,
    region: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<DevelopabilityScan> {
    let (points, skipped) = region_samples(field, region, samples, seed)?;
    Ok(developability_from_samples(&points, skipped))
}

fn developability_from_samples(points: &[RegionSample], skipped: usize) -> DevelopabilityScan {
    let mut scan = DevelopabilityScan {
        max_abs_det: 0.0,
        det_witness: Vec::new(),
        min_eigenvalue: f64::INFINITY,
        eigenvalue_witness: Vec::new(),
        min_relative_eigenvalue: f64::INFINITY,
        convexity_witness: Vec::new(),
        evaluated: points.len(),
        skipped,
    };
    for s in points {
        let eig = sym_eigenvalues(&s.jet.hessian);
        let det: f64 = eig.iter().product();
        let lambda_min = eig[0];
        let lambda_max = eig[eig.len() - 1].max(0.0);
        let relative = lambda_min / (1.0 + lambda_max);
        if det.abs() > scan.max_abs_det || scan.det_witness.is_empty() {
            scan.max_abs_det = det.abs();
            scan.det_witness = s.point.clone();
        }
        if lambda_min < scan.min_eigenvalue {
            scan.min_eigenvalue = lambda_min;
            scan.eigenvalue_witness = s.point.clone();
        }
        if relative < scan.min_relative_eigenvalue {
            scan.min_relative_eigenvalue = relative;
            scan.convexity_witness = s.point.clone();
        }
    }
    scan
}

/// Largest `|κᵢ|` for the quantity's signature, or `|Δu|` for the Laplacian.
///
/// Where Minkowski curvatures are undefined the Hessian eigenvalues stand in:
/// for a convex field both vanish together.
pub fn curvature_bound(quantity: Quantity, x: &[f64], jet: &Jet2, tau_light: f64) -> f64 {
    match quantity.signature() {
        None => jet.hessian.trace().abs(),
        Some(signature) => {
            let kappas = report_from_jet(x, jet, signature, tau_light)
                .principal_curvatures
                .unwrap_or_else(|| sym_eigenvalues(&jet.hessian));
            kappas.iter().fold(0.0, |m, k| m.max(k.abs()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    HyperplaneConsistent,
    DecayFails,
    NotDevelopable,
    NotConvex,
    TimelikePointsPresent,
    /// Full `H^M` only: lightlike points make the quantity undefined.
    NonSpacelikePointsPresent,
    /// Every hypothesis passed but curvature does not vanish: a
    /// counterexample candidate or a tolerance problem.
    ConclusionFails,
}

impl Outcome {
    pub fn is_consistent(self) -> bool {
        self == Outcome::HyperplaneConsistent
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

/// What a witness value measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// `|det D²u|`
    AbsDeterminant,
    /// `λ_min(D²u)`
    MinEigenvalue,
    /// `‖Du‖ − 1`
    CausalMargin,
    /// `|q|` for the verdict's quantity.
    Quantity,
    /// See [`curvature_bound`].
    CurvatureBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub measure: Measure,
    pub point: Vec<f64>,
    /// Unit vector from the profile center, for sphere witnesses.
    pub direction: Option<Vec<f64>>,
    pub value: f64,
}

impl Witness {
    /// Recomputes the witnessed value from the field.
    pub fn reevaluate(&self, field: &ScalarField, quantity: Quantity, tol: &Tolerances) -> Result<f64> {
        let jet = field.jet2_at(&self.point)?;
        let h: &DMatrix<f64> = &jet.hessian;
        Ok(match self.measure {
            Measure::AbsDeterminant => sym_det(h).abs(),
            Measure::MinEigenvalue => sym_eigenvalues(h)[0],
            Measure::CausalMargin => CausalType::classify(jet.gradient.norm(), tol.light).margin,
            Measure::Quantity => quantity
                .from_jet(&self.point, &jet, tol.light)
                .map(f64::abs)
                .unwrap_or(f64::NAN),
            Measure::CurvatureBound => curvature_bound(quantity, &self.point, &jet, tol.light),
        })
    }
}

/// Everything a verdict's claims are relative to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scope {
    pub domain: DomainBox,
    pub region: DomainBox,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub sphere_samples: usize,
    pub region_samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub sup_is_lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub quantity: Quantity,
    /// Present for every outcome except `hyperplane-consistent`.
    pub witness: Option<Witness>,
    pub scope: Scope,
    pub developability: DevelopabilityScan,
    pub causal: Option<TimelikeScan>,
    pub profile: Option<DecayProfile>,
    /// Largest curvature bound over the region, when that stage ran.
    pub conclusion_max: Option<f64>,
    /// Full `H^M` is checked by analogy with the tilde quantity.
    pub extrapolated: bool,
}

/// Inputs of [`rigidity_verdict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigidityConfig {
    /// Defaults to the center of the field's domain.
    pub center: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    /// Defaults to the field's domain.
    pub region: Option<DomainBox>,
    pub sphere_samples: usize,
    pub region_samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        RigidityConfig {
            center: None,
            radii: vec![1.0, 10.0, 100.0],
            region: None,
            sphere_samples: 512,
            region_samples: 1000,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

pub fn rigidity_verdict(
    field: &ScalarField,
    quantity: Quantity,
    config: &RigidityConfig,
) -> Result<Verdict> {
    let tol = config.tolerances;
    tol.validate()?;
    validate_radii(&config.radii)?;
    let domain = field.domain().clone();
    let center = config
        .center
        .clone()
        .unwrap_or_else(|| domain.lower.iter().zip(&domain.upper).map(|(a, b)| 0.5 * (a + b)).collect());
    let region = config.region.clone().unwrap_or_else(|| domain.clone());
    let scope = Scope {
        domain,
        region: region.clone(),
        center: center.clone(),
        radii: config.radii.clone(),
        sphere_samples: config.sphere_samples,
        region_samples: config.region_samples,
        seed: config.seed,
        tolerances: tol,
        sup_is_lower_bound: true,
    };

    let (points, skipped) = region_samples(field, &region, config.region_samples, config.seed)?;
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "no admissible sample points in the scan region".into(),
        ));
    }
    let developability = developability_from_samples(&points, skipped);
    let mut verdict = Verdict {
        outcome: Outcome::HyperplaneConsistent,
        quantity,
        witness: None,
        scope,
        developability: developability.clone(),
        causal: None,
        profile: None,
        conclusion_max: None,
        extrapolated: quantity == Quantity::MeanMinkowski,
    };

    if developability.min_relative_eigenvalue < -tol.convexity {
        let point = developability.convexity_witness.clone();
        let value = sym_eigenvalues(&field.jet2_at(&point)?.hessian)[0];
        return Ok(fail(verdict, Outcome::NotConvex, Measure::MinEigenvalue, point, None, value));
    }
    if developability.max_abs_det > tol.developable {
        let point = developability.det_witness.clone();
        let value = developability.max_abs_det;
        return Ok(fail(verdict, Outcome::NotDevelopable, Measure::AbsDeterminant, point, None, value));
    }

    if quantity.signature() == Some(Signature::Minkowski) {
        let scan = timelike_from_samples(&points, skipped, &tol);
        verdict.causal = Some(scan.clone());
        if scan.timelike_points_present {
            return Ok(fail(
                verdict,
                Outcome::TimelikePointsPresent,
                Measure::CausalMargin,
                scan.witness,
                None,
                scan.worst_margin,
            ));
        }
        if quantity == Quantity::MeanMinkowski {
            let undefined = points
                .iter()
                .find(|s| report_from_jet(&s.point, &s.jet, Signature::Minkowski, tol.light).tilde_only);
            if let Some(s) = undefined {
                let margin = CausalType::classify(s.jet.gradient.norm(), tol.light).margin;
                return Ok(fail(
                    verdict,
                    Outcome::NonSpacelikePointsPresent,
                    Measure::CausalMargin,
                    s.point.clone(),
                    None,
                    margin,
                ));
            }
        }
    }

    let profile = decay_profile_with(
        field,
        quantity,
        &center,
        &config.radii,
        config.sphere_samples,
        config.seed,
        &tol,
    )?;
    verdict.profile = Some(profile.clone());
    if !profile.decayed {
        let last = profile.spheres.last().expect("non-empty schedule");
        let direction: Vec<f64> = last
            .argmax
            .iter()
            .zip(&center)
            .map(|(x, c)| (x - c) / last.radius)
            .collect();
        return Ok(fail(
            verdict,
            Outcome::DecayFails,
            Measure::Quantity,
            last.argmax.clone(),
            Some(direction),
            last.sup,
        ));
    }

    let (worst, at) = points
        .iter()
        .map(|s| (curvature_bound(quantity, &s.point, &s.jet, tol.light), &s.point))
        .fold((f64::NEG_INFINITY, &points[0].point), |a, b| if b.0 > a.0 { b } else { a });
    verdict.conclusion_max = Some(worst);
    if worst > tol.conclusion {
        let point = at.clone();
        return Ok(fail(verdict, Outcome::ConclusionFails, Measure::CurvatureBound, point, None, worst));
    }
    Ok(verdict)
}

fn fail(
    mut verdict: Verdict,
    outcome: Outcome,
    measure: Measure,
    point: Vec<f64>,
    direction: Option<Vec<f64>>,
    value: f64,
) -> Verdict {
    verdict.outcome = outcome;
    verdict.witness = Some(Witness {
        measure,
        point,
        direction,
        value,
    });
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ExcludedSet;
    use crate::field::parse_field;
    use approx::assert_relative_eq;

    fn boxed(src: &str, n: usize, half: f64) -> ScalarField {
        parse_field(src, n)
            .unwrap()
            .with_domain(DomainBox::cube(n, half))
            .unwrap()
    }

    fn cone(a: f64) -> ScalarField {
        boxed(&format!("{a}*sqrt(x1^2+x2^2)"), 2, 200.0)
            .with_excluded(ExcludedSet::point(vec![0.0, 0.0]))
            .unwrap()
    }

    #[test]
    fn cone_laplacian_on_a_sphere() {
        let s = sphere_sup(&cone(0.5), Quantity::Laplacian, &[0.0, 0.0], 10.0, 64, 1).unwrap();
        assert_relative_eq!(s.sup, 0.05, max_relative = 1e-12);
        assert_relative_eq!(norm(&s.argmax), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn example_tilde_sup_needs_refinement() {
        let f = boxed("0.5*sqrt(x1^2+1)", 2, 200.0);
        let s = sphere_sup(&f, Quantity::MeanMinkowskiTilde, &[0.0, 0.0], 100.0, 64, 7).unwrap();
        assert!((s.sup - 0.5).abs() <= 1e-9, "{}", s.sup);
        assert!(s.argmax[0].abs() < 1e-3 && (s.argmax[1].abs() - 100.0).abs() < 1e-6);
    }

    #[test]
    fn affine_sup_is_zero() {
        let f = boxed("0.2*x1 - 0.1*x2 + 3", 2, 200.0);
        for q in Quantity::ALL {
            assert_eq!(sphere_sup(&f, q, &[0.0, 0.0], 5.0, 32, 0).unwrap().sup, 0.0);
        }
    }

    #[test]
    fn sphere_must_fit() {
        let f = boxed("x1", 2, 10.0);
        assert!(matches!(
            sphere_sup(&f, Quantity::Laplacian, &[0.0, 0.0], 11.0, 8, 0),
            Err(Error::SphereOutsideDomain { .. })
        ));
    }

    #[test]
    fn profiles() {
        let p = decay_profile(&cone(0.5), Quantity::Laplacian, &[0.0, 0.0], &[1.0, 10.0, 100.0], 64, 3)
            .unwrap();
        for (s, e) in p.sups().iter().zip([0.5, 0.05, 0.005]) {
            assert_relative_eq!(*s, e, max_relative = 1e-12);
        }
        assert!(p.monotone && !p.decayed);
        assert!(p.to_csv().starts_with("radius,sup\n1.0000000000000000e0,"));
        let f = boxed("0.5*sqrt(x1^2+1)", 2, 200.0);
        let p = decay_profile(&f, Quantity::MeanMinkowskiTilde, &[0.0, 0.0], &[10.0, 100.0], 64, 3)
            .unwrap();
        assert!(p.sups().iter().all(|s| (s - 0.5).abs() < 1e-9));
        assert!(!p.decayed);
        assert!(decay_profile(&f, Quantity::Laplacian, &[0.0, 0.0], &[10.0, 10.0], 8, 0).is_err());
    }

    #[test]
    fn timelike_scans() {
        let region = DomainBox::cube(2, 5.0);
        let tol = Tolerances::default();
        let s = timelike_scan(&boxed("2*x1", 2, 10.0), &region, 50, 1, &tol).unwrap();
        assert!(s.timelike_points_present);
        assert_relative_eq!(s.worst_margin, 1.0);
        let s = timelike_scan(&boxed("x1", 2, 10.0), &region, 50, 1, &tol).unwrap();
        assert!(!s.timelike_points_present);
        assert_eq!(s.lightlike, 50);
        let s = timelike_scan(&boxed("0.5*sqrt(x1^2+1)", 2, 10.0), &region, 200, 1, &tol).unwrap();
        assert!(!s.timelike_points_present && s.worst_margin < -0.5);
    }

    #[test]
    fn developability_scans() {
        let ex = boxed("0.5*sqrt(x1^2+1)", 2, 20.0);
        let s = developability_scan(&ex, &DomainBox::cube(2, 20.0), 500, 2).unwrap();
        assert!(s.max_abs_det <= 1e-13 && s.min_eigenvalue >= -1e-13);
        let q = boxed("(x1^2+x2^2)/2", 2, 20.0);
        let s = developability_scan(&q, &DomainBox::cube(2, 20.0), 50, 2).unwrap();
        assert_relative_eq!(s.max_abs_det, 1.0, max_relative = 1e-12);
        let c = boxed("x1^2*x2", 2, 20.0);
        let region = DomainBox::new(vec![0.9, 0.9], vec![1.1, 1.1]).unwrap();
        assert!(developability_scan(&c, &region, 20, 2).unwrap().min_eigenvalue < 0.0);
    }

    #[test]
    fn verdicts() {
        let config = RigidityConfig {
            region_samples: 200,
            sphere_samples: 64,
            ..Default::default()
        };
        let tol = config.tolerances;
        let affine = boxed("0.3*x1 + 0.4*x2 - 1", 2, 200.0);
        for q in Quantity::ALL {
            let v = rigidity_verdict(&affine, q, &config).unwrap();
            assert_eq!(v.outcome, Outcome::HyperplaneConsistent, "{q}");
            assert!(v.witness.is_none());
        }
        let ex = boxed("0.5*sqrt(x1^2+1)", 2, 200.0);
        for q in [Quantity::Laplacian, Quantity::MeanEuclidean, Quantity::MeanMinkowskiTilde] {
            let v = rigidity_verdict(&ex, q, &config).unwrap();
            assert_eq!(v.outcome, Outcome::DecayFails);
            let w = v.witness.unwrap();
            let d = w.direction.clone().unwrap();
            assert!(d[1].abs() >= (5f64).to_radians().cos(), "{d:?}");
            let again = w.reevaluate(&ex, q, &tol).unwrap();
            assert_relative_eq!(again, w.value, max_relative = 1e-10);
        }
        let quad = boxed("(x1^2+x2^2)/2", 2, 200.0);
        let v = rigidity_verdict(&quad, Quantity::Laplacian, &config).unwrap();
        assert_eq!(v.outcome, Outcome::NotDevelopable);
        let steep = boxed("2*x1", 2, 200.0);
        let v = rigidity_verdict(&steep, Quantity::MeanMinkowskiTilde, &config).unwrap();
        assert_eq!(v.outcome, Outcome::TimelikePointsPresent);
        assert_eq!(rigidity_verdict(&steep, Quantity::Laplacian, &config).unwrap().outcome,
            Outcome::HyperplaneConsistent);
        let null = boxed("x1", 2, 200.0);
        assert_eq!(rigidity_verdict(&null, Quantity::MeanMinkowski, &config).unwrap().outcome,
            Outcome::NonSpacelikePointsPresent);
    }

    #[test]
    fn verdicts_are_deterministic() {
        let config = RigidityConfig {
            region_samples: 100,
            sphere_samples: 32,
            seed: 11,
            ..Default::default()
        };
        let ex = boxed("0.5*sqrt(x1^2+1)", 2, 200.0);
        let a = rigidity_verdict(&ex, Quantity::MeanEuclidean, &config).unwrap();
        let b = rigidity_verdict(&ex, Quantity::MeanEuclidean, &config).unwrap();
        assert_eq!(crate::output::to_json(&a), crate::output::to_json(&b));
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
            assert_eq!(serde_json::to_string(&q).unwrap(), format!("\"{q}\""));
        }
        assert!("mean".parse::<Quantity>().is_err());
        assert_eq!(Outcome::DecayFails.to_string(), "decay-fails");
    }
}
