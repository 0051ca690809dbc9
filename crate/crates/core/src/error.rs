use thiserror::Error;

/// Errors raised by parameter validation and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MofError {
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: &'static str, constraint: String },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("pole of the response kernel at omega = {omega}")]
    Pole { omega: f64 },

    #[error("geometric sum does not converge: |R1 R2| = {product}")]
    NonSummable { product: f64 },

    #[error("root bracketing failed on [{lo}, {hi}] (reached tolerance {tol})")]
    RootBracket { lo: f64, hi: f64, tol: f64 },

    #[error("Courant condition violated: dt/dx = {ratio}")]
    Courant { ratio: f64 },

    #[error("mirror at x = {position} is within {margin} cells of the lattice edge")]
    MirrorMargin { position: f64, margin: usize },

    #[error("position {position} lies outside [0, {extent}]")]
    OutOfBox { position: f64, extent: f64 },

    #[error("delay history not resolved: {0}")]
    History(String),

    #[error("mode is not normalized (norm^2 = {norm2})")]
    Unnormalized { norm2: f64 },

    #[error("reflected and transmitted lobes overlap at measurement time")]
    LobeOverlap,

    #[error("lattice transport exceeds one cell per step: |v| dt / dx = {ratio}")]
    Superluminal { ratio: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl MofError {
    /// `true` for failures of a numerical method, `false` for rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            MofError::Pole { .. }
                | MofError::NonSummable { .. }
                | MofError::RootBracket { .. }
                | MofError::History(_)
                | MofError::LobeOverlap
                | MofError::Superluminal { .. }
                | MofError::NonFinite(_)
                | MofError::Fit(_)
        )
    }

    pub(crate) fn param(name: &'static str, constraint: impl Into<String>) -> Self {
        MofError::InvalidParameter { name, constraint: constraint.into() }
    }
}

pub type Result<T> = std::result::Result<T, MofError>;
