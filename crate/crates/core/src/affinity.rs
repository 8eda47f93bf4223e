//! Rulings of degenerate convex fields and the identities that hold on them.
//!
//! A convex `u` with `det D²u = 0` is affine along segments running in the
//! kernel of its Hessian. [`trace_ruling`] follows such a segment from a
//! point, certifying affinity as it goes; the lemma checks in this module
//! then evaluate, at a point of a certified ruling, the derivative identities
//! that the rigidity argument relies on:
//!
//! * `D³u[η,γ,γ] = 0` and `D⁴u[η,η,γ,γ] ≥ 0` for every `η`,
//!   with `t ↦ u_ηη(x₀ + tγ)` convex;
//! * `(‖Du‖²)_γ = (‖Du‖²)_γγ = 0`;
//! * `(H̃^M)_γγ ≥ 0`.
//!
//! Rulings are one-dimensional. When the kernel has rank two or more every
//! kernel eigenvector is traced separately; no attempt is made to assemble
//! the higher-dimensional affine simplex.
//!
//! Affinity along a segment is tested as *equality* with the chord, within
//! tolerance. A convexity-style inequality would be satisfied by every convex
//! function and certifies nothing.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::domain::{dot, norm};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{sym_eigen, sym_eigenvalues};
use crate::tolerance::Tolerances;

/// Orthonormal eigenvectors of `D²u(x)` whose eigenvalue is at most
/// `tau_kernel · (1 + λ_max)`, ordered by eigenvalue.
pub fn hessian_kernel(field: &ScalarField, x: &[f64], tau_kernel: f64) -> Result<Vec<Vec<f64>>> {
    let jet = field.jet2_at(x)?;
    let (values, vectors) = sym_eigen(&jet.hessian);
    let threshold = kernel_threshold(&values, tau_kernel);
    Ok(values
        .iter()
        .zip(vectors)
        .filter(|(&lambda, _)| lambda <= threshold)
        .map(|(_, v)| v.iter().cloned().collect())
        .collect())
}

fn kernel_threshold(eigenvalues: &[f64], tau_kernel: f64) -> f64 {
    let lambda_max = eigenvalues.last().cloned().unwrap_or(0.0).max(0.0);
    tau_kernel * (1.0 + lambda_max)
}

/// Why tracing stopped on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    DomainBoundary,
    ExcludedSet,
    KernelExit,
    AffinityBreak,
    EvaluationError,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::DomainBoundary => "domain-boundary",
            StopReason::ExcludedSet => "excluded-set",
            StopReason::KernelExit => "kernel-exit",
            StopReason::AffinityBreak => "affinity-break",
            StopReason::EvaluationError => "evaluation-error",
        })
    }
}

/// A segment `x₀ + tγ, t ∈ [t_minus, t_plus]` along which `u` was
/// certified affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulingSegment {
    pub base: Vec<f64>,
    /// Unit direction.
    pub direction: Vec<f64>,
    pub t_minus: f64,
    pub t_plus: f64,
    /// Largest deviation of `u` from the chord over the certificate samples.
    pub affinity_residual: f64,
    /// Largest `γᵀD²uγ / (1 + λ_max)` over the certificate samples.
    pub kernel_residual: f64,
    pub samples: usize,
    pub stop_minus: StopReason,
    pub stop_plus: StopReason,
    pub tolerances: Tolerances,
}

impl RulingSegment {
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.direction)
            .map(|(x, g)| x + t * g)
            .collect()
    }

    pub fn endpoints(&self) -> (Vec<f64>, Vec<f64>) {
        (self.point_at(self.t_minus), self.point_at(self.t_plus))
    }

    pub fn length(&self) -> f64 {
        self.t_plus - self.t_minus
    }

    /// The same segment seen from the point at parameter `t`.
    pub fn rebased(&self, t: f64) -> Result<RulingSegment> {
        if !(t > self.t_minus && t < self.t_plus) {
            return Err(Error::NotOnRuling(format!(
                "parameter {t} is not interior to [{}, {}]",
                self.t_minus, self.t_plus
            )));
        }
        Ok(RulingSegment {
            base: self.point_at(t),
            t_minus: self.t_minus - t,
            t_plus: self.t_plus - t,
            ..self.clone()
        })
    }

    /// Whitespace-separated polyline record:
    /// `a_1 … a_n b_1 … b_n affinity_residual kernel_residual`.
    pub fn polyline(&self) -> String {
        let (a, b) = self.endpoints();
        a.iter()
            .chain(&b)
            .chain([&self.affinity_residual, &self.kernel_residual])
            .map(|&x| crate::output::num(x))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Extension step; defaults to `1e-2 ·` domain diameter.
    pub step: Option<f64>,
    /// Endpoint localization; defaults to `1e-4 ·` domain diameter.
    pub resolution: Option<f64>,
    /// Interior affinity samples per step.
    pub samples_per_step: usize,
    pub tolerances: Tolerances,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            step: None,
            resolution: None,
            samples_per_step: 4,
            tolerances: Tolerances::default(),
        }
    }
}

/// Follows the line `x₀ + tγ` in both directions while `γ` stays in the
/// Hessian kernel and `u` stays affine, stopping at the domain boundary or
/// the guard around an excluded set. Each stopping point is localized by
/// bisection.
pub fn trace_ruling(
    field: &ScalarField,
    x0: &[f64],
    gamma: &[f64],
    options: &TraceOptions,
) -> Result<RulingSegment> {
    field.admissible(x0)?;
    let scale = norm(gamma);
    if scale == 0.0 || gamma.len() != field.dim() {
        return Err(Error::ZeroDirection);
    }
    let direction: Vec<f64> = gamma.iter().map(|g| g / scale).collect();
    let tol = options.tolerances;
    let residual0 = kernel_residual(field, x0, &direction)?;
    if residual0 > tol.kernel {
        return Err(Error::NotKernelDirection {
            residual: residual0,
            tolerance: tol.kernel,
        });
    }
    let diameter = field.domain().diameter();
    let step = options.step.unwrap_or(1e-2 * diameter);
    let resolution = options.resolution.unwrap_or(1e-4 * diameter);
    if !(step > 0.0 && resolution > 0.0) {
        return Err(Error::InvalidArgument("step and resolution must be positive".into()));
    }

    let u0 = field.eval(x0)?;
    let mut tracer = Tracer {
        field,
        x0,
        direction: &direction,
        tol,
        affinity_bound: tol.affinity * (1.0 + u0.abs()),
        samples: vec![(0.0, u0)],
        kernel_max: residual0,
        t_minus: 0.0,
        t_plus: 0.0,
        samples_per_step: options.samples_per_step.max(1),
    };
    let (t_lo, t_hi) = field.domain().ray_interval(x0, &direction);
    let stop_plus = tracer.extend(1.0, t_hi, step, resolution);
    let stop_minus = tracer.extend(-1.0, -t_lo, step, resolution);
    let samples = tracer.samples.len();

    // Certify the whole segment at a density well above the tracing one.
    // Sides that stopped inside the domain are pulled back until it passes.
    let at = |t: f64| -> Vec<f64> { x0.iter().zip(&direction).map(|(x, g)| x + t * g).collect() };
    let (mut lo, mut hi) = (tracer.t_minus, tracer.t_plus);
    let traced = tracer.affinity_residual(lo, hi, &[]);
    let mut shrunk = false;
    let affinity_residual = loop {
        let dense = if hi > lo {
            affinity_check(field, &at(lo), &at(hi), CERTIFY_DENSITY * samples)?
        } else {
            0.0
        };
        if dense <= tracer.affinity_bound || hi - lo <= resolution {
            break if shrunk { dense } else { dense.max(traced) };
        }
        let pull_plus = stop_plus != StopReason::DomainBoundary;
        let pull_minus = stop_minus != StopReason::DomainBoundary;
        if pull_plus || !pull_minus {
            hi *= 0.9;
        }
        if pull_minus || !pull_plus {
            lo *= 0.9;
        }
        shrunk = true;
    };
    Ok(RulingSegment {
        base: x0.to_vec(),
        direction: direction.clone(),
        t_minus: lo,
        t_plus: hi,
        affinity_residual,
        kernel_residual: tracer.kernel_max,
        samples,
        stop_minus,
        stop_plus,
        tolerances: tol,
    })
}

/// Certification samples per tracing sample.
const CERTIFY_DENSITY: usize = 10;

/// `γᵀD²uγ / (1 + λ_max)` for unit `γ`.
fn kernel_residual(field: &ScalarField, x: &[f64], gamma: &[f64]) -> Result<f64> {
    let jet = field.jet2_at(x)?;
    let g = DVector::from_column_slice(gamma);
    let curvature = g.dot(&(&jet.hessian * &g));
    let lambda_max = sym_eigenvalues(&jet.hessian).last().cloned().unwrap_or(0.0).max(0.0);
    Ok(curvature / (1.0 + lambda_max))
}

struct Tracer<'a> {
    field: &'a ScalarField,
    x0: &'a [f64],
    direction: &'a [f64],
    tol: Tolerances,
    affinity_bound: f64,
    /// `(t, u(x₀ + tγ))`, every accepted sample.
    samples: Vec<(f64, f64)>,
    kernel_max: f64,
    t_minus: f64,
    t_plus: f64,
    samples_per_step: usize,
}

enum Probe {
    Accepted(Vec<(f64, f64)>, f64),
    Rejected(StopReason),
}

impl Tracer<'_> {
    fn point(&self, t: f64) -> Vec<f64> {
        self.x0
            .iter()
            .zip(self.direction)
            .map(|(x, g)| x + t * g)
            .collect()
    }

    fn extend(&mut self, sign: f64, limit: f64, step: f64, resolution: f64) -> StopReason {
        let mut reached = 0.0;
        loop {
            if reached >= limit {
                return StopReason::DomainBoundary;
            }
            let candidate = (reached + step).min(limit);
            match self.probe(sign, reached, candidate) {
                Probe::Accepted(new, kmax) => {
                    self.commit(sign, candidate, new, kmax);
                    reached = candidate;
                }
                Probe::Rejected(reason) => {
                    let (mut good, mut bad) = (reached, candidate);
                    while bad - good > resolution {
                        let mid = 0.5 * (good + bad);
                        match self.probe(sign, good, mid) {
                            Probe::Accepted(new, kmax) => {
                                self.commit(sign, mid, new, kmax);
                                good = mid;
                            }
                            Probe::Rejected(_) => bad = mid,
                        }
                    }
                    return reason;
                }
            }
        }
    }

    fn commit(&mut self, sign: f64, reach: f64, new: Vec<(f64, f64)>, kmax: f64) {
        self.samples.extend(new);
        self.kernel_max = self.kernel_max.max(kmax);
        if sign > 0.0 {
            self.t_plus = reach;
        } else {
            self.t_minus = -reach;
        }
    }

    /// Tests the extension of the current segment from `|t| = from` to `|t| = to`.
    fn probe(&self, sign: f64, from: f64, to: f64) -> Probe {
        let a = self.point(sign * from);
        let b = self.point(sign * to);
        let guard = self.field.guard();
        if self
            .field
            .excluded()
            .iter()
            .any(|s| s.segment_distance(&a, &b) <= guard)
        {
            return Probe::Rejected(StopReason::ExcludedSet);
        }
        let k = self.samples_per_step;
        let mut new = Vec::with_capacity(k + 1);
        let mut kmax: f64 = 0.0;
        for i in 1..=k + 1 {
            let t = sign * (from + (to - from) * i as f64 / (k + 1) as f64);
            let x = self.point(t);
            let value = match self.field.eval(&x) {
                Ok(v) => v,
                Err(_) => return Probe::Rejected(StopReason::EvaluationError),
            };
            new.push((t, value));
        }
        // the new end point must still run along the kernel
        let end = self.point(sign * to);
        match kernel_residual(self.field, &end, self.direction) {
            Ok(r) if r <= self.tol.kernel => kmax = kmax.max(r),
            Ok(_) => return Probe::Rejected(StopReason::KernelExit),
            Err(_) => return Probe::Rejected(StopReason::EvaluationError),
        }
        let (lo, hi) = if sign > 0.0 {
            (self.t_minus, to)
        } else {
            (-to, self.t_plus)
        };
        if self.affinity_residual(lo, hi, &new) > self.affinity_bound {
            return Probe::Rejected(StopReason::AffinityBreak);
        }
        Probe::Accepted(new, kmax)
    }

    /// Largest deviation from the chord over `[lo, hi]`, using accepted
    /// samples plus `extra`.
    fn affinity_residual(&self, lo: f64, hi: f64, extra: &[(f64, f64)]) -> f64 {
        let all = || self.samples.iter().chain(extra);
        let value_at = |t: f64| {
            all()
                .find(|(s, _)| *s == t)
                .map(|&(_, v)| v)
                .unwrap_or(f64::NAN)
        };
        let (u_lo, u_hi) = (value_at(lo), value_at(hi));
        if hi == lo {
            return 0.0;
        }
        all()
            .filter(|(t, _)| *t >= lo && *t <= hi)
            .map(|&(t, v)| {
                let s = (t - lo) / (hi - lo);
                (v - (u_lo + s * (u_hi - u_lo))).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Largest `|u(s·a + (1−s)·b) − (s·u(a) + (1−s)·u(b))|` over
/// `s = i / (samples + 1)`, `i = 1..=samples`.
pub fn affinity_check(field: &ScalarField, a: &[f64], b: &[f64], samples: usize) -> Result<f64> {
    let ua = field.eval(a)?;
    let ub = field.eval(b)?;
    let mut worst: f64 = 0.0;
    for i in 1..=samples {
        let s = i as f64 / (samples + 1) as f64;
        let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| s * p + (1.0 - s) * q).collect();
        let u = field.eval(&x)?;
        worst = worst.max((u - (s * ua + (1.0 - s) * ub)).abs());
    }
    Ok(worst)
}

/// Confirms that the ruling's base point is an interior point of a segment
/// that still passes the kernel and affinity tests.
fn require_on_ruling(field: &ScalarField, ruling: &RulingSegment) -> Result<()> {
    if !(ruling.t_minus < 0.0 && ruling.t_plus > 0.0) {
        return Err(Error::NotOnRuling(
            "base point is an end point of the segment".into(),
        ));
    }
    let tol = ruling.tolerances;
    let residual = kernel_residual(field, &ruling.base, &ruling.direction)?;
    if residual > tol.kernel {
        return Err(Error::NotOnRuling(format!(
            "direction leaves the Hessian kernel at the base (residual {residual:e})"
        )));
    }
    let u0 = field.eval(&ruling.base)?;
    if ruling.affinity_residual > tol.affinity * (1.0 + u0.abs()) {
        return Err(Error::NotOnRuling(format!(
            "segment is not certified affine (residual {:e})",
            ruling.affinity_residual
        )));
    }
    Ok(())
}

/// Third/fourth derivative checks at a ruling point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessResiduals {
    pub eta: Vec<f64>,
    /// `|D³u[η,γ,γ]| / ‖η‖`, expected to vanish.
    pub r1: f64,
    /// `D⁴u[η,η,γ,γ] / ‖η‖²`, expected non-negative.
    pub r2: f64,
    /// Second differences of `t ↦ u_ηη(x₀ + tγ) / ‖η‖²` over the segment,
    /// divided by `1 + max |u_ηη|`; expected non-negative.
    pub profile: Vec<f64>,
}

impl FlatnessResiduals {
    pub fn profile_min(&self) -> f64 {
        self.profile.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn flatness_residuals(
    field: &ScalarField,
    ruling: &RulingSegment,
    eta: &[f64],
    profile_points: usize,
) -> Result<FlatnessResiduals> {
    require_on_ruling(field, ruling)?;
    let eta_norm = norm(eta);
    if eta_norm == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let x0 = &ruling.base;
    let gamma = &ruling.direction;
    let r1 = field.third(x0, eta, gamma)?.abs() / eta_norm;
    let r2 = field.fourth(x0, eta, gamma)? / (eta_norm * eta_norm);

    let m = profile_points.max(3);
    // keep clear of the end points, which may sit on a guard or a face
    let inset = 1e-3 * ruling.length();
    let (lo, hi) = (ruling.t_minus + inset, ruling.t_plus - inset);
    let mut second = Vec::with_capacity(m);
    for i in 0..m {
        let t = lo + (hi - lo) * i as f64 / (m - 1) as f64;
        let jet = field.directional_jet(&ruling.point_at(t), eta, 2)?;
        second.push(jet.derivs[2] / (eta_norm * eta_norm));
    }
    let scale = 1.0 + second.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let profile = second
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]) / scale)
        .collect();
    Ok(FlatnessResiduals {
        eta: eta.to_vec(),
        r1,
        r2,
        profile,
    })
}

/// First and second derivatives of `t ↦ ‖Du(x₀ + tγ)‖²` at `t = 0`, built
/// from the line jets of the gradient components:
/// `(u_k)_γ = D²u[e_k, γ]` and `(u_k)_γγ = D³u[e_k, γ, γ]`.
pub fn gradient_sq_residuals(field: &ScalarField, ruling: &RulingSegment) -> Result<(f64, f64)> {
    require_on_ruling(field, ruling)?;
    let (first, second) = gradient_sq_derivatives(field, &ruling.base, &ruling.direction)?;
    Ok((first.abs(), second.abs()))
}

fn gradient_sq_derivatives(field: &ScalarField, x0: &[f64], gamma: &[f64]) -> Result<(f64, f64)> {
    let n = field.dim();
    let jet = field.jet2_at(x0)?;
    let g = DVector::from_column_slice(gamma);
    let h_gamma = &jet.hessian * &g;
    let mut first = 0.0;
    let mut second = 0.0;
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let uk = jet.gradient[k];
        let uk_t = h_gamma[k];
        let uk_tt = field.third(x0, &e, gamma)?;
        first += 2.0 * uk * uk_t;
        second += 2.0 * uk_t * uk_t + 2.0 * uk * uk_tt;
    }
    Ok((first, second))
}

/// The four terms of `(H̃^M)_γγ` for `H̃^M = w Δu + uₖuₗuₖₗ`, `w = 1 − ‖Du‖²`:
/// `I = w (Δu)_γγ`, `II = 2 w_γ (Δu)_γ`, `III = Δu · w_γγ`,
/// `IV = (uₖuₗuₖₗ)_γγ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtildeTerms {
    pub i: f64,
    pub ii: f64,
    pub iii: f64,
    pub iv: f64,
    pub total: f64,
}

/// `(H̃^M)_γγ` at a point of a certified ruling, with its term split.
pub fn htilde_second_derivative(field: &ScalarField, ruling: &RulingSegment) -> Result<HtildeTerms> {
    require_on_ruling(field, ruling)?;
    htilde_terms(field, &ruling.base, &ruling.direction)
}

/// The same decomposition at any point, with no ruling hypothesis.
pub fn htilde_terms(field: &ScalarField, x0: &[f64], gamma: &[f64]) -> Result<HtildeTerms> {
    let n = field.dim();
    let gn = norm(gamma);
    if gn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let gamma: Vec<f64> = gamma.iter().map(|g| g / gn).collect();
    let jet = field.jet2_at(x0)?;
    let p = &jet.gradient;
    let hess = &jet.hessian;
    let g = DVector::from_column_slice(&gamma);
    let unit = |k: usize| {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        e
    };

    let lap = hess.trace();
    let mut lap_t = 0.0;
    let mut lap_tt = 0.0;
    for k in 0..n {
        let e = unit(k);
        // D³u[γ, e_k, e_k]
        lap_t += field.third(x0, &gamma, &e)?;
        lap_tt += field.fourth(x0, &e, &gamma)?;
    }
    let (gsq_t, gsq_tt) = gradient_sq_derivatives(field, x0, &gamma)?;
    let w = 1.0 - p.norm_squared();

    let p_vec: Vec<f64> = p.iter().cloned().collect();
    let h_gamma = hess * &g;
    let h_p = hess * p;
    let hg_vec: Vec<f64> = h_gamma.iter().cloned().collect();
    let hp_vec: Vec<f64> = h_p.iter().cloned().collect();
    // (pᵀHp)'' = 2 p''ᵀHp + 2 p'ᵀHp' + 4 D³u[p', p, γ] + D⁴u[p, p, γ, γ]
    let iv = 2.0 * field.third(x0, &hp_vec, &gamma)?
        + 2.0 * h_gamma.dot(&(hess * &h_gamma))
        + 4.0 * third_distinct(field, x0, &hg_vec, &p_vec, &gamma)?
        + field.fourth(x0, &p_vec, &gamma)?;

    let i = w * lap_tt;
    let ii = 2.0 * (-gsq_t) * lap_t;
    let iii = lap * (-gsq_tt);
    Ok(HtildeTerms {
        i,
        ii,
        iii,
        iv,
        total: i + ii + iii + iv,
    })
}

/// `D³u[a, b, γ]` from `T(v) = D³u[γ, v, v]`: `(T(a+b) − T(a−b)) / 4`.
fn third_distinct(field: &ScalarField, x0: &[f64], a: &[f64], b: &[f64], gamma: &[f64]) -> Result<f64> {
    if norm(a) == 0.0 || norm(b) == 0.0 {
        return Ok(0.0);
    }
    let plus: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let minus: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok((field.third(x0, gamma, &plus)? - field.third(x0, gamma, &minus)?) / 4.0)
}

/// Both sides of the algebraic identity
/// `w^E (Δu)_γγ − uᵢuⱼuᵢⱼγγ = (Δu)_γγ + Σ_{i<j} D⁴u[ηᵢⱼ, ηᵢⱼ, γ, γ]`
/// with `ηᵢⱼ = uⱼ eᵢ − uᵢ eⱼ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub absolute: f64,
    /// `absolute / (1 + |w (Δu)_γγ| + |uᵢuⱼuᵢⱼγγ|)`
    pub relative: f64,
}

/// Holds for every `C⁴` field at every point; no ruling is required.
pub fn euclidean_combination_identity(
    field: &ScalarField,
    x0: &[f64],
    gamma: &[f64],
) -> Result<IdentityResidual> {
    let n = field.dim();
    let gn = norm(gamma);
    if gn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let gamma: Vec<f64> = gamma.iter().map(|g| g / gn).collect();
    let jet = field.jet2_at(x0)?;
    let p: Vec<f64> = jet.gradient.iter().cloned().collect();
    let w = 1.0 + dot(&p, &p);
    let mut lap_tt = 0.0;
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        lap_tt += field.fourth(x0, &e, &gamma)?;
    }
    let quartic = if norm(&p) == 0.0 {
        0.0
    } else {
        field.fourth(x0, &p, &gamma)?
    };
    let lhs = w * lap_tt - quartic;
    let mut rhs = lap_tt;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut eta = vec![0.0; n];
            eta[i] = p[j];
            eta[j] = -p[i];
            if norm(&eta) > 0.0 {
                rhs += field.fourth(x0, &eta, &gamma)?;
            }
        }
    }
    let absolute = (lhs - rhs).abs();
    let scale = 1.0 + (w * lap_tt).abs() + quartic.abs();
    Ok(IdentityResidual {
        lhs,
        rhs,
        absolute,
        relative: absolute / scale,
    })
}

/// All lemma-level checks at one ruling point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaResidualReport {
    pub ruling: RulingSegment,
    pub eta: Vec<f64>,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub r5: f64,
    pub r6: f64,
    pub profile_min: f64,
    pub htilde_terms: HtildeTerms,
}

impl LemmaResidualReport {
    /// True when every residual respects the lemma tolerance (the identity
    /// residual is compared against the identity tolerance).
    pub fn passes(&self) -> bool {
        let tol = self.ruling.tolerances;
        self.r1 <= tol.lemma
            && self.r2 >= -tol.lemma
            && self.r3 <= tol.lemma
            && self.r4 <= tol.lemma
            && self.r5 >= -tol.lemma
            && self.r6 <= tol.identity
            && self.profile_min >= -tol.lemma
    }
}

pub fn lemma_report(
    field: &ScalarField,
    ruling: &RulingSegment,
    eta: &[f64],
    profile_points: usize,
) -> Result<LemmaResidualReport> {
    let flat = flatness_residuals(field, ruling, eta, profile_points)?;
    let (r3, r4) = gradient_sq_residuals(field, ruling)?;
    let terms = htilde_second_derivative(field, ruling)?;
    let identity = euclidean_combination_identity(field, &ruling.base, &ruling.direction)?;
    Ok(LemmaResidualReport {
        ruling: ruling.clone(),
        eta: eta.to_vec(),
        r1: flat.r1,
        r2: flat.r2,
        r3,
        r4,
        r5: terms.total,
        r6: identity.relative,
        profile_min: flat.profile_min(),
        htilde_terms: terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainBox, ExcludedSet};
    use crate::field::parse_field;
    use approx::assert_relative_eq;

    fn example() -> ScalarField {
        parse_field("0.5*sqrt(x1^2+1)", 2).unwrap()
    }

    fn cone() -> ScalarField {
        parse_field("0.5*sqrt(x1^2+x2^2)", 2)
            .unwrap()
            .with_excluded(ExcludedSet::point(vec![0.0, 0.0]))
            .unwrap()
    }

    fn boxed(f: ScalarField, half: f64) -> ScalarField {
        let n = f.dim();
        f.with_domain(DomainBox::cube(n, half)).unwrap()
    }

    #[test]
    fn kernels() {
        assert_eq!(
            hessian_kernel(&example(), &[1.0, 2.0], 1e-8).unwrap(),
            vec![vec![0.0, 1.0]]
        );
        let quad = parse_field("(x1^2+x2^2)/2", 2).unwrap();
        assert!(hessian_kernel(&quad, &[0.5, 0.5], 1e-8).unwrap().is_empty());
        let k = hessian_kernel(&cone(), &[3.0, 4.0], 1e-8).unwrap();
        assert_eq!(k.len(), 1);
        assert_relative_eq!(k[0][0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(k[0][1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn example_ruling_spans_the_box() {
        let f = boxed(example(), 10.0);
        let seg = trace_ruling(&f, &[0.0, 0.0], &[0.0, 1.0], &TraceOptions::default()).unwrap();
        assert_eq!((seg.t_minus, seg.t_plus), (-10.0, 10.0));
        assert!(seg.affinity_residual <= 1e-12);
        assert_eq!(seg.stop_plus, StopReason::DomainBoundary);
        assert_eq!(seg.stop_minus, StopReason::DomainBoundary);
    }

    #[test]
    fn quadratic_has_no_ruling() {
        let quad = parse_field("(x1^2+x2^2)/2", 2).unwrap();
        assert!(matches!(
            trace_ruling(&quad, &[1.0, 0.0], &[1.0, 0.0], &TraceOptions::default()),
            Err(Error::NotKernelDirection { .. })
        ));
    }

    #[test]
    fn cone_ruling_stops_at_apex_guard_and_box() {
        let f = boxed(cone(), 10.0);
        let seg = trace_ruling(&f, &[3.0, 4.0], &[0.6, 0.8], &TraceOptions::default()).unwrap();
        assert_eq!(seg.stop_plus, StopReason::DomainBoundary);
        assert_relative_eq!(seg.t_plus, 7.5, epsilon = 1e-12);
        assert_eq!(seg.stop_minus, StopReason::ExcludedSet);
        let resolution = 1e-4 * f.domain().diameter();
        assert!(seg.t_minus > -5.0 && seg.t_minus < -5.0 + resolution, "{}", seg.t_minus);
        // certified at ten times the tracing density
        let (a, b) = seg.endpoints();
        let dense = affinity_check(&f, &a, &b, 10 * seg.samples).unwrap();
        assert!(dense <= 1e-9 * (1.0 + 2.5));
    }

    #[test]
    fn ruling_along_a_bent_line_stops() {
        // affine in x2 for x1 < 0 only in a weak sense; the kernel leaves
        let f = parse_field("x1^2*x2^2/100 + x1", 2).unwrap();
        let f = boxed(f, 10.0);
        let seg = trace_ruling(&f, &[0.0, 1.0], &[0.0, 1.0], &TraceOptions::default()).unwrap();
        // along x1 = 0 the function is constant, so the full chord is certified
        assert_eq!(seg.stop_plus, StopReason::DomainBoundary);
        let g = boxed(parse_field("sqrt(1 + x1^2) + x2^4/1e6", 2).unwrap(), 10.0);
        let seg = trace_ruling(&g, &[0.0, 0.0], &[0.0, 1.0], &TraceOptions::default()).unwrap();
        assert!(matches!(
            seg.stop_plus,
            StopReason::KernelExit | StopReason::AffinityBreak
        ));
        assert!(seg.t_plus < 10.0);
    }

    #[test]
    fn affinity_check_examples() {
        assert!(affinity_check(&example(), &[1.0, -3.0], &[1.0, 7.0], 99).unwrap() <= 1e-12);
        let affine = parse_field("3*x1+2", 2).unwrap();
        assert!(affinity_check(&affine, &[-4.0, 1.0], &[9.0, 2.0], 99).unwrap() <= 1e-12);
        let quad = parse_field("(x1^2+x2^2)/2", 2).unwrap();
        let r = affinity_check(&quad, &[-1.0, 0.0], &[1.0, 0.0], 9).unwrap();
        assert_relative_eq!(r, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn lemma_checks_on_example() {
        let f = boxed(example(), 10.0);
        let seg = trace_ruling(&f, &[1.0, 2.0], &[0.0, 1.0], &TraceOptions::default()).unwrap();
        let flat = flatness_residuals(&f, &seg, &[1.0, 0.0], 11).unwrap();
        assert_eq!(flat.r1, 0.0);
        assert_eq!(flat.r2, 0.0);
        assert!(flat.profile.iter().all(|&d| d == 0.0));
        assert_eq!(gradient_sq_residuals(&f, &seg).unwrap(), (0.0, 0.0));
        assert_eq!(htilde_second_derivative(&f, &seg).unwrap().total, 0.0);
    }

    #[test]
    fn lemma_checks_on_cone() {
        let f = boxed(cone(), 10.0);
        let seg = trace_ruling(&f, &[3.0, 4.0], &[0.6, 0.8], &TraceOptions::default()).unwrap();
        let flat = flatness_residuals(&f, &seg, &[-0.8, 0.6], 21).unwrap();
        assert!(flat.r1 <= 1e-9);
        assert!(flat.r2 >= -1e-9);
        assert!(flat.profile_min() >= -1e-8);
        let (r3, r4) = gradient_sq_residuals(&f, &seg).unwrap();
        assert!(r3 <= 1e-10 && r4 <= 1e-10, "{r3} {r4}");
        let h = htilde_second_derivative(&f, &seg).unwrap();
        assert_relative_eq!(h.total, 0.006, max_relative = 1e-6);
        assert!(h.ii.abs() < 1e-12 && h.iii.abs() < 1e-12);
    }

    #[test]
    fn affine_lemma_checks_vanish() {
        let f = boxed(parse_field("0.3*x1 - 0.7*x2 + 2", 2).unwrap(), 10.0);
        let kernel = hessian_kernel(&f, &[1.0, 1.0], 1e-8).unwrap();
        assert_eq!(kernel.len(), 2);
        for gamma in kernel {
            let seg = trace_ruling(&f, &[1.0, 1.0], &gamma, &TraceOptions::default()).unwrap();
            let report = lemma_report(&f, &seg, &[0.4, 1.1], 7).unwrap();
            assert_eq!((report.r1, report.r2, report.r3, report.r4), (0.0, 0.0, 0.0, 0.0));
            assert_eq!(report.r5, 0.0);
            assert!(report.passes());
        }
    }

    #[test]
    fn lemma_checks_refuse_uncertified_points() {
        let f = boxed(example(), 10.0);
        let mut seg = trace_ruling(&f, &[1.0, 2.0], &[0.0, 1.0], &TraceOptions::default()).unwrap();
        seg.direction = vec![1.0, 0.0];
        assert!(matches!(
            gradient_sq_residuals(&f, &seg),
            Err(Error::NotOnRuling(_))
        ));
    }

    #[test]
    fn identity_examples() {
        let ex = example();
        let r = euclidean_combination_identity(&ex, &[0.3, 2.0], &[0.0, 1.0]).unwrap();
        assert!(r.absolute <= 1e-10);
        let e = parse_field("exp(x1+x2)/10", 2).unwrap();
        let r = euclidean_combination_identity(&e, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(r.relative <= 1e-8, "{r:?}");
    }

    #[test]
    fn residuals_ignore_direction_sign() {
        let f = boxed(cone(), 10.0);
        let plus = trace_ruling(&f, &[3.0, 4.0], &[0.6, 0.8], &TraceOptions::default()).unwrap();
        let minus = trace_ruling(&f, &[3.0, 4.0], &[-0.6, -0.8], &TraceOptions::default()).unwrap();
        let a = htilde_second_derivative(&f, &plus).unwrap().total;
        let b = htilde_second_derivative(&f, &minus).unwrap().total;
        assert_relative_eq!(a, b, max_relative = 1e-12);
        let (a3, a4) = gradient_sq_residuals(&f, &plus).unwrap();
        let (b3, b4) = gradient_sq_residuals(&f, &minus).unwrap();
        assert!((a3 - b3).abs() < 1e-15 && (a4 - b4).abs() < 1e-15);
    }
}
