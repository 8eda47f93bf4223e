//! Numerical thresholds. Every report that depends on one carries the value
//! that was used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Kernel threshold, relative to `1 + λ_max(D²u)`.
    pub kernel: f64,
    /// Affinity residual threshold, relative to `1 + |u(x₀)|`.
    pub affinity: f64,
    /// Lemma-level residuals (third/fourth derivative sign and size checks).
    pub lemma: f64,
    /// Algebraic identity residuals, relative.
    pub identity: f64,
    /// Half-width of the lightlike band around `‖Du‖ = 1`.
    pub light: f64,
    /// Final sphere supremum at or below which a quantity counts as decayed.
    pub decay: f64,
    /// Largest principal curvature (or `|Δu|`) accepted as flat.
    pub conclusion: f64,
    /// Largest `|det D²u|` accepted as developable.
    pub developable: f64,
    /// Smallest Hessian eigenvalue accepted as convex, relative to `1 + λ_max`.
    pub convexity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel: 1e-8,
            affinity: 1e-9,
            lemma: 1e-8,
            identity: 1e-8,
            light: 1e-9,
            decay: 1e-6,
            conclusion: 1e-7,
            developable: 1e-10,
            convexity: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("kernel", self.kernel),
            ("affinity", self.affinity),
            ("lemma", self.lemma),
            ("identity", self.identity),
            ("light", self.light),
            ("decay", self.decay),
            ("conclusion", self.conclusion),
            ("developable", self.developable),
            ("convexity", self.convexity),
        ];
        for (name, value) in all {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance {name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}
