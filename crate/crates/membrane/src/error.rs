//! Error taxonomy shared by all modules.
//!
//! The CLI maps these onto its exit-code contract: configuration errors → 1,
//! solver errors → 2, diagnostics errors → 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MembraneError {
    /// Hyperbolicity lost: g = 1 + Q dropped to or below the guard threshold.
    #[error("degenerate metric: g = 1 + Q = {g:.6e} <= {threshold:.1e}{}", at.as_ref().map(|s| format!(" at {s}")).unwrap_or_default())]
    DegenerateMetric {
        g: f64,
        threshold: f64,
        at: Option<String>,
    },

    /// The e_A correction system of the adapted frame is singular.
    #[error("frame solve failed: {0}")]
    FrameSolveFailed(String),

    /// Angular decomposition requested at (numerically) r = 0.
    #[error("origin-singular operation requested at r = {0:.3e} < 1e-8")]
    OriginSingular(f64),

    /// A jet was queried beyond its stored derivative order.
    #[error("insufficient jet: requested order {requested}, stored order {available}")]
    InsufficientJet { requested: usize, available: usize },

    /// Non-finite field values during evolution.
    #[error("solver blow-up at t = {t:.6}: {what}")]
    SolverBlowUp { t: f64, what: String },

    /// Pulse profile support violates (1 - 2δ, 1).
    #[error("bad profile: {0}")]
    BadProfile(String),

    /// A diagnostic asked for events outside the stored evolution history.
    #[error("out of history: {0}")]
    OutOfHistory(String),

    /// The t = 1 extraction surface left the stored t'-slab range.
    #[error("interpolation out of slab: {0}")]
    InterpolationOutOfSlab(String),

    /// Scaling fit with too few or non-spanning samples.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    /// Configuration rejected before any run.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Checkpoint file malformed, checksum mismatch, or version unsupported.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, MembraneError>;

impl MembraneError {
    /// Exit-code class for the CLI: 1 = config, 2 = solver, 3 = diagnostics.
    pub fn exit_code(&self) -> i32 {
        use MembraneError::*;
        match self {
            Config(_) | BadProfile(_) => 1,
            DegenerateMetric { .. } | SolverBlowUp { .. } | Io(_) | Checkpoint(_) => 2,
            FrameSolveFailed(_)
            | OriginSingular(_)
            | InsufficientJet { .. }
            | OutOfHistory(_)
            | InterpolationOutOfSlab(_)
            | InsufficientSamples(_) => 3,
        }
    }
}
