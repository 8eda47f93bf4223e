//! Extrinsic geometry of the graph `M_u = {(x, u(x))}`.
//!
//! For `p = Du` and `w = 1 ± ‖p‖²` the graph has metric `g = I ± p⊗p`,
//! second fundamental form `h = D²u / √|w|` and shape operator `S = g⁻¹h`,
//! with the upper sign in Euclidean space and the lower sign in Minkowski
//! space. Principal curvatures are the eigenvalues of `S`, computed from the
//! symmetric matrix `g^{-1/2} h g^{-1/2}` which is similar to it.
//!
//! Mean curvature is the *sum* of the principal curvatures (the trace of
//! `S`), not their average. In Minkowski space the weight-cleared quantities
//! `H̃ = w Δu + uᵢuⱼuᵢⱼ` and `K̃ = det D²u` are always reported, because they
//! stay finite at lightlike points.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{Jet2, ScalarField};
use crate::linalg::{rows, sym_det, sym_eigenvalues};
use crate::output::{num, opt_num};

/// Default half-width of the lightlike band around `‖Du‖ = 1`.
pub const DEFAULT_TAU_LIGHT: f64 = 1e-9;

/// Below this `w^M`, full Minkowski curvatures are suppressed.
pub const MIN_MINKOWSKI_WEIGHT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Euclidean,
    Minkowski,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signature::Euclidean => "euclidean",
            Signature::Minkowski => "minkowski",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Causality {
    Spacelike,
    Lightlike,
    Timelike,
}

impl fmt::Display for Causality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Causality::Spacelike => "spacelike",
            Causality::Lightlike => "lightlike",
            Causality::Timelike => "timelike",
        })
    }
}

/// Causal character of a point of the graph in Minkowski space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalType {
    pub kind: Causality,
    /// `‖Du‖ − 1`
    pub margin: f64,
}

impl CausalType {
    pub fn classify(gradient_norm: f64, tau_light: f64) -> Self {
        let margin = gradient_norm - 1.0;
        let kind = if margin < -tau_light {
            Causality::Spacelike
        } else if margin > tau_light {
            Causality::Timelike
        } else {
            Causality::Lightlike
        };
        CausalType { kind, margin }
    }
}

/// Per-point geometry of the graph, with every intermediate tensor.
///
/// Serializes to a flat JSON object; matrices are arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub signature: Signature,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    /// `1 + ‖Du‖²` or `1 − ‖Du‖²`
    pub w: f64,
    pub metric: Vec<Vec<f64>>,
    pub second_fundamental_form: Option<Vec<Vec<f64>>>,
    pub shape_operator: Option<Vec<Vec<f64>>>,
    /// Ascending.
    pub principal_curvatures: Option<Vec<f64>>,
    pub mean_curvature: Option<f64>,
    pub gauss_curvature: Option<f64>,
    pub mean_tilde: Option<f64>,
    pub gauss_tilde: Option<f64>,
    pub causal_type: Causality,
    pub causal_margin: f64,
    /// Minkowski report at a point that is not (safely) spacelike: only the
    /// tilde quantities are meaningful.
    pub tilde_only: bool,
}

impl CurvatureReport {
    pub fn causal(&self) -> CausalType {
        CausalType {
            kind: self.causal_type,
            margin: self.causal_margin,
        }
    }

    /// Column names for [`Self::csv_row`] in dimension `n`.
    pub fn csv_header(n: usize) -> String {
        let mut cols: Vec<String> = Vec::new();
        cols.extend((1..=n).map(|i| format!("x{i}")));
        cols.push("signature".into());
        cols.push("value".into());
        cols.extend((1..=n).map(|i| format!("u_{i}")));
        for i in 1..=n {
            for j in 1..=n {
                cols.push(format!("u_{i}{j}"));
            }
        }
        cols.push("w".into());
        cols.extend((1..=n).map(|i| format!("kappa_{i}")));
        for c in [
            "mean_curvature",
            "gauss_curvature",
            "mean_tilde",
            "gauss_tilde",
            "causal_type",
            "causal_margin",
            "tilde_only",
        ] {
            cols.push(c.into());
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let n = self.point.len();
        let mut cells: Vec<String> = Vec::new();
        cells.extend(self.point.iter().map(|&x| num(x)));
        cells.push(self.signature.to_string());
        cells.push(num(self.value));
        cells.extend(self.gradient.iter().map(|&x| num(x)));
        cells.extend(self.hessian.iter().flatten().map(|&x| num(x)));
        cells.push(num(self.w));
        match &self.principal_curvatures {
            Some(k) => cells.extend(k.iter().map(|&x| num(x))),
            None => cells.extend(std::iter::repeat_n(String::new(), n)),
        }
        cells.push(opt_num(self.mean_curvature));
        cells.push(opt_num(self.gauss_curvature));
        cells.push(opt_num(self.mean_tilde));
        cells.push(opt_num(self.gauss_tilde));
        cells.push(self.causal_type.to_string());
        cells.push(num(self.causal_margin));
        cells.push(self.tilde_only.to_string());
        cells.join(",")
    }
}

/// `det D²u(x)` as the product of the symmetrized Hessian's eigenvalues.
pub fn ma_residual(field: &ScalarField, x: &[f64]) -> Result<f64> {
    Ok(sym_det(&field.jet2_at(x)?.hessian))
}

pub fn laplacian(field: &ScalarField, x: &[f64]) -> Result<f64> {
    Ok(field.jet2_at(x)?.hessian.trace())
}

pub fn causal_type(field: &ScalarField, x: &[f64], tau_light: f64) -> Result<CausalType> {
    let jet = field.jet2_at(x)?;
    Ok(CausalType::classify(jet.gradient.norm(), tau_light))
}

pub fn curvature_report(
    field: &ScalarField,
    x: &[f64],
    signature: Signature,
) -> Result<CurvatureReport> {
    curvature_report_with(field, x, signature, DEFAULT_TAU_LIGHT)
}

pub fn curvature_report_with(
    field: &ScalarField,
    x: &[f64],
    signature: Signature,
    tau_light: f64,
) -> Result<CurvatureReport> {
    let jet = field.jet2_at(x)?;
    Ok(report_from_jet(x, &jet, signature, tau_light))
}

/// `H̃^M = (1 − ‖Du‖²) Δu + uᵢuⱼuᵢⱼ`.
pub fn mean_tilde(jet: &Jet2) -> f64 {
    let p = &jet.gradient;
    let lap = jet.hessian.trace();
    let quad = p.dot(&(&jet.hessian * p));
    (1.0 - p.norm_squared()) * lap + quad
}

/// Builds the report from an already computed jet.
pub fn report_from_jet(
    x: &[f64],
    jet: &Jet2,
    signature: Signature,
    tau_light: f64,
) -> CurvatureReport {
    let n = jet.gradient.len();
    let p = &jet.gradient;
    let hess = (&jet.hessian + jet.hessian.transpose()) * 0.5;
    let p2 = p.norm_squared();
    let sign = match signature {
        Signature::Euclidean => 1.0,
        Signature::Minkowski => -1.0,
    };
    let w = 1.0 + sign * p2;
    let ppt = p * p.transpose();
    let metric = DMatrix::identity(n, n) + &ppt * sign;
    let causal = CausalType::classify(p2.sqrt(), tau_light);

    let full = match signature {
        Signature::Euclidean => true,
        Signature::Minkowski => causal.kind == Causality::Spacelike && w >= MIN_MINKOWSKI_WEIGHT,
    };

    let (sff, shape, kappas, mean, gauss) = if full {
        let root_w = w.sqrt();
        let sff = &hess / root_w;
        // g⁻¹ = I ∓ p⊗p / w
        let g_inv = DMatrix::identity(n, n) - &ppt * (sign / w);
        let shape = &g_inv * &sff;
        let g_inv_sqrt = inverse_sqrt_metric(p, w);
        let similar = &g_inv_sqrt * &sff * &g_inv_sqrt;
        let kappas = sym_eigenvalues(&similar);
        let mean: f64 = kappas.iter().sum();
        let gauss: f64 = kappas.iter().product();
        (
            Some(rows(&sff)),
            Some(rows(&shape)),
            Some(kappas),
            Some(mean),
            Some(gauss),
        )
    } else {
        (None, None, None, None, None)
    };

    let (mean_t, gauss_t) = match signature {
        Signature::Euclidean => (None, None),
        Signature::Minkowski => (Some(mean_tilde(jet)), Some(sym_det(&hess))),
    };

    CurvatureReport {
        point: x.to_vec(),
        signature,
        value: jet.value,
        gradient: p.iter().cloned().collect(),
        hessian: rows(&jet.hessian),
        w,
        metric: rows(&metric),
        second_fundamental_form: sff,
        shape_operator: shape,
        principal_curvatures: kappas,
        mean_curvature: mean,
        gauss_curvature: gauss,
        mean_tilde: mean_t,
        gauss_tilde: gauss_t,
        causal_type: causal.kind,
        causal_margin: causal.margin,
        tilde_only: !full,
    }
}

/// `g^{-1/2}` for `g = I ± p⊗p`, whose only non-unit eigenvalue is `w`
/// along `p`.
fn inverse_sqrt_metric(p: &DVector<f64>, w: f64) -> DMatrix<f64> {
    let n = p.len();
    let p2 = p.norm_squared();
    if p2 == 0.0 {
        return DMatrix::identity(n, n);
    }
    let coeff = (1.0 / w.sqrt() - 1.0) / p2;
    DMatrix::identity(n, n) + p * p.transpose() * coeff
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ExcludedSet;
    use crate::field::parse_field;
    use approx::assert_relative_eq;

    fn cone(a: f64) -> ScalarField {
        parse_field(&format!("{a}*sqrt(x1^2+x2^2)"), 2)
            .unwrap()
            .with_excluded(ExcludedSet::point(vec![0.0, 0.0]))
            .unwrap()
    }

    #[test]
    fn monge_ampere_residuals() {
        let ex = parse_field("0.5*sqrt(x1^2+1)", 2).unwrap();
        for x in [[0.0, 0.0], [1.0, 2.0], [-7.0, 30.0]] {
            assert!(ma_residual(&ex, &x).unwrap().abs() <= 1e-13);
        }
        let quad = parse_field("(x1^2+x2^2)/2", 2).unwrap();
        assert_relative_eq!(ma_residual(&quad, &[0.3, -2.0]).unwrap(), 1.0, epsilon = 1e-14);
        let cubic = parse_field("x1^2*x2", 2).unwrap();
        assert_relative_eq!(ma_residual(&cubic, &[1.0, 1.0]).unwrap(), -4.0, epsilon = 1e-12);
    }

    #[test]
    fn causal_classification() {
        let ex = parse_field("0.5*sqrt(x1^2+1)", 2).unwrap();
        assert_eq!(
            causal_type(&ex, &[40.0, 1.0], DEFAULT_TAU_LIGHT).unwrap().kind,
            Causality::Spacelike
        );
        let light = parse_field("x1", 2).unwrap();
        let c = causal_type(&light, &[3.0, 1.0], DEFAULT_TAU_LIGHT).unwrap();
        assert_eq!(c.kind, Causality::Lightlike);
        assert_eq!(c.margin, 0.0);
        let time = parse_field("2*x1", 2).unwrap();
        let c = causal_type(&time, &[3.0, 1.0], DEFAULT_TAU_LIGHT).unwrap();
        assert_eq!(c.kind, Causality::Timelike);
        assert_eq!(c.margin, 1.0);
    }

    #[test]
    fn cone_mean_curvatures() {
        let v = cone(0.5);
        let e = curvature_report(&v, &[3.0, 4.0], Signature::Euclidean).unwrap();
        assert_relative_eq!(
            e.mean_curvature.unwrap(),
            0.5 / (1.25f64.sqrt() * 5.0),
            max_relative = 1e-12
        );
        let m = curvature_report(&v, &[3.0, 4.0], Signature::Minkowski).unwrap();
        assert_relative_eq!(m.mean_tilde.unwrap(), 0.075, max_relative = 1e-12);
        assert!(!m.tilde_only);
        assert_relative_eq!(
            m.mean_curvature.unwrap(),
            m.w.powf(-1.5) * m.mean_tilde.unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn affine_reports_are_flat() {
        let f = parse_field("0.3*x1 - 0.2*x2 + 1", 2).unwrap();
        for sig in [Signature::Euclidean, Signature::Minkowski] {
            let r = curvature_report(&f, &[1.0, 1.0], sig).unwrap();
            assert!(r.shape_operator.unwrap().iter().flatten().all(|&s| s == 0.0));
            assert!(r.principal_curvatures.unwrap().iter().all(|&k| k == 0.0));
            assert_eq!(r.mean_curvature, Some(0.0));
            assert_eq!(r.gauss_curvature.map(f64::abs), Some(0.0));
            if sig == Signature::Minkowski {
                assert_eq!(r.mean_tilde, Some(0.0));
                assert_eq!(r.gauss_tilde.map(f64::abs), Some(0.0));
            }
        }
    }

    #[test]
    fn lightlike_minkowski_report_is_tilde_only() {
        let f = parse_field("x1 + x2^2/100", 2).unwrap();
        let r = curvature_report(&f, &[0.0, 0.0], Signature::Minkowski).unwrap();
        assert_eq!(r.causal_type, Causality::Lightlike);
        assert!(r.tilde_only);
        assert!(r.mean_curvature.is_none() && r.principal_curvatures.is_none());
        assert_relative_eq!(r.mean_tilde.unwrap(), 0.0, epsilon = 1e-15);
        let t = parse_field("2*x1 + x2^2", 2).unwrap();
        let r = curvature_report(&t, &[0.0, 0.0], Signature::Minkowski).unwrap();
        assert!(r.tilde_only);
        // (1 − 4)·2 + 0
        assert_relative_eq!(r.mean_tilde.unwrap(), -6.0, epsilon = 1e-13);
    }

    #[test]
    fn gauss_curvature_matches_weighted_determinant() {
        let f = parse_field("exp(x1/3)*x2^2/2 + x1^2 + x1*x2/4", 2).unwrap();
        let x = [0.4, -0.7];
        let r = curvature_report(&f, &x, Signature::Euclidean).unwrap();
        let det = ma_residual(&f, &x).unwrap();
        assert_relative_eq!(
            r.gauss_curvature.unwrap(),
            r.w.powf(-2.0) * det,
            max_relative = 1e-10
        );
        let shape = DMatrix::from_row_slice(2, 2, &r.shape_operator.unwrap().concat());
        assert_relative_eq!(shape.determinant(), r.gauss_curvature.unwrap(), max_relative = 1e-8);
        assert_relative_eq!(shape.trace(), r.mean_curvature.unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn laplacian_examples() {
        assert_relative_eq!(laplacian(&cone(0.5), &[3.0, 4.0]).unwrap(), 0.1, max_relative = 1e-14);
        let ex = parse_field("0.5*sqrt(x1^2+1)", 2).unwrap();
        assert_relative_eq!(
            laplacian(&ex, &[3f64.sqrt(), -11.0]).unwrap(),
            0.0625,
            max_relative = 1e-14
        );
        assert_eq!(laplacian(&parse_field("3*x1+2", 2).unwrap(), &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn csv_row_matches_header_width() {
        let r = curvature_report(&cone(0.5), &[3.0, 4.0], Signature::Minkowski).unwrap();
        let header = CurvatureReport::csv_header(2);
        assert_eq!(header.split(',').count(), r.csv_row().split(',').count());
    }
}
