//! Finite domain boxes and declared singular sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]` standing in for ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidArgument(
                "domain bounds must have equal, non-zero length".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::InvalidArgument(
                "domain bounds must be finite with lower < upper".into(),
            ));
        }
        Ok(DomainBox { lower, upper })
    }

    /// The cube `[-half, half]ⁿ`.
    pub fn cube(dim: usize, half: f64) -> Self {
        DomainBox {
            lower: vec![-half; dim],
            upper: vec![half; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&xi, (&lo, &hi))| {
            let slack = 1e-12 * (hi - lo);
            xi >= lo - slack && xi <= hi + slack
        })
    }

    /// Parameter interval `[t_lo, t_hi]` for which `x + t·v` stays inside.
    pub fn ray_interval(&self, x: &[f64], v: &[f64]) -> (f64, f64) {
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for k in 0..x.len() {
            if v[k] == 0.0 {
                continue;
            }
            let a = (self.lower[k] - x[k]) / v[k];
            let b = (self.upper[k] - x[k]) / v[k];
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
        (t_lo, t_hi)
    }

    /// Point at fractional coordinates `s ∈ [0,1]ⁿ`.
    pub fn lerp(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&si, (&lo, &hi))| lo + si * (hi - lo))
            .collect()
    }
}

/// Affine subspace `point + span(directions)` where a field is not smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedSet {
    pub point: Vec<f64>,
    /// Orthonormal spanning directions; empty for a single point.
    pub span: Vec<Vec<f64>>,
}

impl ExcludedSet {
    pub fn point(point: Vec<f64>) -> Self {
        ExcludedSet {
            point,
            span: Vec::new(),
        }
    }

    /// Orthonormalizes `directions` (Gram–Schmidt); dependent ones are dropped.
    pub fn new(point: Vec<f64>, directions: Vec<Vec<f64>>) -> Self {
        let mut span: Vec<Vec<f64>> = Vec::new();
        for mut d in directions {
            for s in &span {
                let proj = dot(&d, s);
                for (di, si) in d.iter_mut().zip(s) {
                    *di -= proj * si;
                }
            }
            let n = norm(&d);
            if n > 1e-12 {
                span.push(d.into_iter().map(|c| c / n).collect());
            }
        }
        ExcludedSet { point, span }
    }

    /// Coordinate subspace `{x_1 = … = x_k = 0}` in ℝⁿ.
    pub fn coordinate_axes_zero(k: usize, dim: usize) -> Self {
        let span = (k..dim)
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                e
            })
            .collect();
        ExcludedSet {
            point: vec![0.0; dim],
            span,
        }
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = x.iter().zip(&self.point).map(|(a, b)| a - b).collect();
        for s in &self.span {
            let proj = dot(&r, s);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri -= proj * si;
            }
        }
        r
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        norm(&self.residual(x))
    }

    /// Distance from the closed segment `[a, b]`.
    pub fn segment_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        // the orthogonal residual is affine in t, so its squared norm is a quadratic
        let ra = self.residual(a);
        let rb = self.residual(b);
        let d: Vec<f64> = rb.iter().zip(&ra).map(|(p, q)| p - q).collect();
        let dd = dot(&d, &d);
        let t = if dd > 0.0 {
            (-dot(&ra, &d) / dd).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let r: Vec<f64> = ra.iter().zip(&d).map(|(p, q)| p + t * q).collect();
        norm(&r)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_interval_hits_box_faces() {
        let b = DomainBox::cube(2, 10.0);
        let (lo, hi) = b.ray_interval(&[0.0, 0.0], &[0.0, 1.0]);
        assert_eq!((lo, hi), (-10.0, 10.0));
        let (lo, hi) = b.ray_interval(&[3.0, 4.0], &[0.6, 0.8]);
        assert!((hi - 7.5).abs() < 1e-12);
        assert!((lo + 17.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(DomainBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(DomainBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn distances_to_points_and_lines() {
        let origin = ExcludedSet::point(vec![0.0, 0.0]);
        assert!((origin.distance(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        // segment passing through the origin
        assert_eq!(origin.segment_distance(&[-1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((origin.segment_distance(&[1.0, 1.0], &[2.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);

        let axis = ExcludedSet::coordinate_axes_zero(2, 3);
        assert!((axis.distance(&[3.0, 4.0, 100.0]) - 5.0).abs() < 1e-12);
    }
}
