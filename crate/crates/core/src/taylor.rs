//! Truncated univariate Taylor arithmetic.
//!
//! A [`Taylor`] holds the normalized coefficients `c_k = f^(k)(0) / k!` of a
//! function of one variable `t`, truncated after degree [`MAX_DEGREE`].
//! Feeding `x(t) = x₀ + t·v` through an expression yields the derivatives of
//! `t ↦ u(x₀ + t·v)` up to fourth order in a single pass whose cost is linear
//! in the expression size.

use crate::error::DomainOp;

pub const MAX_DEGREE: usize = 4;
const N: usize = MAX_DEGREE + 1;
const FACTORIAL: [f64; N] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// Arithmetic needed by the expression evaluator.
///
/// Partial operations report the failing operation; the caller attaches the
/// evaluation point.
pub trait Number: Sized + Clone {
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self, DomainOp>;
    fn sqrt(&self) -> Result<Self, DomainOp>;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self, DomainOp>;
    fn abs(&self) -> Result<Self, DomainOp>;

    fn powi(&self, exponent: i32) -> Result<Self, DomainOp> {
        let mut base = self.clone();
        let mut k = exponent.unsigned_abs();
        let mut acc = Self::constant(1.0);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        if exponent < 0 {
            Self::constant(1.0).div(&acc).map_err(|_| DomainOp::Pow)
        } else {
            Ok(acc)
        }
    }
}

impl Number for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, rhs: &Self) -> Result<Self, DomainOp> {
        if *rhs == 0.0 {
            Err(DomainOp::Div)
        } else {
            Ok(self / rhs)
        }
    }
    fn sqrt(&self) -> Result<Self, DomainOp> {
        if *self < 0.0 {
            Err(DomainOp::Sqrt)
        } else {
            Ok(f64::sqrt(*self))
        }
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Result<Self, DomainOp> {
        if *self <= 0.0 {
            Err(DomainOp::Log)
        } else {
            Ok(f64::ln(*self))
        }
    }
    fn abs(&self) -> Result<Self, DomainOp> {
        Ok(f64::abs(*self))
    }
}

/// Degree-4 truncated Taylor polynomial in one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taylor {
    coeffs: [f64; N],
}

impl Taylor {
    pub fn new(coeffs: [f64; N]) -> Self {
        Taylor { coeffs }
    }

    /// The line `t ↦ x₀ + t·v` for one coordinate.
    pub fn variable(x0: f64, v: f64) -> Self {
        Taylor {
            coeffs: [x0, v, 0.0, 0.0, 0.0],
        }
    }

    pub fn coeffs(&self) -> &[f64; N] {
        &self.coeffs
    }

    /// `k`-th derivative at `t = 0`.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coeffs[k] * FACTORIAL[k]
    }

    /// Derivatives `0..=degree` at `t = 0`.
    pub fn derivatives(&self, degree: usize) -> Vec<f64> {
        (0..=degree.min(MAX_DEGREE))
            .map(|k| self.derivative(k))
            .collect()
    }

    fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }
}

impl Number for Taylor {
    fn constant(c: f64) -> Self {
        Taylor {
            coeffs: [c, 0.0, 0.0, 0.0, 0.0],
        }
    }

    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn add(&self, rhs: &Self) -> Self {
        let mut c = self.coeffs;
        for (a, b) in c.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        Taylor { coeffs: c }
    }

    fn sub(&self, rhs: &Self) -> Self {
        let mut c = self.coeffs;
        for (a, b) in c.iter_mut().zip(rhs.coeffs) {
            *a -= b;
        }
        Taylor { coeffs: c }
    }

    fn mul(&self, rhs: &Self) -> Self {
        let a = &self.coeffs;
        let b = &rhs.coeffs;
        let mut c = [0.0; N];
        for k in 0..N {
            c[k] = (0..=k).map(|i| a[i] * b[k - i]).sum();
        }
        Taylor { coeffs: c }
    }

    fn neg(&self) -> Self {
        Taylor {
            coeffs: self.coeffs.map(|c| -c),
        }
    }

    fn div(&self, rhs: &Self) -> Result<Self, DomainOp> {
        let b = &rhs.coeffs;
        if b[0] == 0.0 {
            return Err(DomainOp::Div);
        }
        let a = &self.coeffs;
        let mut c = [0.0; N];
        for k in 0..N {
            let s: f64 = (1..=k).map(|i| b[i] * c[k - i]).sum();
            c[k] = (a[k] - s) / b[0];
        }
        Ok(Taylor { coeffs: c })
    }

    fn sqrt(&self) -> Result<Self, DomainOp> {
        let a = &self.coeffs;
        if a[0] < 0.0 {
            return Err(DomainOp::Sqrt);
        }
        if a[0] == 0.0 {
            // sqrt is only differentiable at zero along constant lines
            return if self.is_constant() {
                Ok(Taylor::constant(0.0))
            } else {
                Err(DomainOp::Sqrt)
            };
        }
        let mut c = [0.0; N];
        c[0] = a[0].sqrt();
        for k in 1..N {
            let s: f64 = (1..k).map(|i| c[i] * c[k - i]).sum();
            c[k] = (a[k] - s) / (2.0 * c[0]);
        }
        Ok(Taylor { coeffs: c })
    }

    fn exp(&self) -> Self {
        let a = &self.coeffs;
        let mut c = [0.0; N];
        c[0] = a[0].exp();
        for k in 1..N {
            let s: f64 = (1..=k).map(|i| i as f64 * a[i] * c[k - i]).sum();
            c[k] = s / k as f64;
        }
        Taylor { coeffs: c }
    }

    fn ln(&self) -> Result<Self, DomainOp> {
        let a = &self.coeffs;
        if a[0] <= 0.0 {
            return Err(DomainOp::Log);
        }
        let mut c = [0.0; N];
        c[0] = a[0].ln();
        for k in 1..N {
            let s: f64 = (1..k).map(|i| i as f64 * c[i] * a[k - i]).sum();
            c[k] = (a[k] - s / k as f64) / a[0];
        }
        Ok(Taylor { coeffs: c })
    }

    fn abs(&self) -> Result<Self, DomainOp> {
        let a0 = self.coeffs[0];
        if a0 > 0.0 {
            Ok(*self)
        } else if a0 < 0.0 {
            Ok(Number::neg(self))
        } else if self.is_constant() {
            Ok(Taylor::constant(0.0))
        } else {
            Err(DomainOp::Abs)
        }
    }
}
