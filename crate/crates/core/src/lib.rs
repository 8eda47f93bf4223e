//! Differential geometry of graphs `x ↦ (x, u(x))` in Euclidean and
//! Minkowski space, with the tools needed to study convex solutions of
//! `det D²u = 0`: exact jets up to order four, curvature reports, ruling
//! extraction, and decay-based rigidity verdicts.
//!
//! ```
//! use zerogauss::{curvature_report, parse_field, Signature};
//!
//! let u = parse_field("0.5*sqrt(x1^2+1)", 2).unwrap();
//! let r = curvature_report(&u, &[0.0, 0.0], Signature::Minkowski).unwrap();
//! assert_eq!(r.mean_tilde, Some(0.5));
//! ```

pub mod affinity;
pub mod corpus;
pub mod curvature;
pub mod domain;
pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod output;
pub mod rigidity;
pub mod sampling;
pub mod taylor;
pub mod tolerance;

pub use affinity::{
    affinity_check, euclidean_combination_identity, flatness_residuals, gradient_sq_residuals,
    hessian_kernel, htilde_second_derivative, lemma_report, trace_ruling, RulingSegment,
    StopReason, TraceOptions,
};
pub use corpus::{corpus, CorpusEntry};
pub use curvature::{
    causal_type, curvature_report, laplacian, ma_residual, CausalType, Causality,
    CurvatureReport, Signature,
};
pub use domain::{DomainBox, ExcludedSet};
pub use error::{Error, Result};
pub use expr::Expr;
pub use field::{grid_field, parse_field, Jet, Jet2, Mixed, ScalarField};
pub use grid::GridSpec;
pub use rigidity::{
    decay_profile, developability_scan, rigidity_verdict, sphere_sup, timelike_scan,
    DecayProfile, Outcome, Quantity, RigidityConfig, Verdict,
};
pub use tolerance::Tolerances;

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/rulings.md")]
    mod rulings {}
    #[doc = include_str!("../../../book/src/rigidity.md")]
    mod rigidity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
