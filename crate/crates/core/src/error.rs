use thiserror::Error;

/// Errors surfaced by the library.
///
/// Solver non-convergence is deliberately *not* an error: it is reported
/// through [`crate::solver::SolveFlags`] so that partial results stay
/// inspectable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fields live on different grids ({0} vs {1})")]
    GridMismatch(String, String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("crack segment endpoint ({0:.6}, {1:.6}) lies outside the domain")]
    SegmentOutsideDomain(f64, f64),

    #[error(
        "mollifier radius {radius:.3e} is under-resolved: lattice spacing {h:.3e} exceeds radius/4"
    )]
    MollifierResolution { radius: f64, h: f64 },

    #[error("jump constraint violated for {variant}: {detail}")]
    ConstraintViolated { variant: &'static str, detail: String },

    #[error("exceptional set too large: |omega| = {measure:.6e} exceeds the admissible {bound:.6e}")]
    ExceptionalSetTooLarge { measure: f64, bound: f64 },
}
