//! Error type shared across the crate.
//!
//! Messages for domain errors are fixed strings that callers (and the CLI)
//! match on; keep them stable.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mask came out empty (or the shape has no area on this grid).
    #[error("degenerate domain")]
    DegenerateDomain,

    /// Cell size exceeds a bounding-box extent.
    #[error("resolution too coarse")]
    ResolutionTooCoarse,

    /// Distribution functions are defined for thresholds t ≥ 0 only.
    #[error("negative threshold")]
    NegativeThreshold,

    /// Steiner symmetrization requested on a grid with no (n, m) split.
    #[error("no codimension split")]
    NoCodimensionSplit,

    /// Concentration / profile evaluation outside [0, total measure].
    #[error("measure out of range")]
    MeasureOutOfRange,

    /// Two profiles (or a profile and a grid) disagree on total measure.
    #[error("incompatible profile")]
    IncompatibleProfile,

    /// The requested extremal coupling is not Sobolev-regular (target
    /// profile not nonincreasing, or the key condition fails).
    #[error("extremal not Sobolev-regular")]
    ExtremalNotSobolev,

    /// μ′ or (u*)′ requested where the function has a plateau.
    #[error("derivative undefined on plateau")]
    PlateauDerivative,

    /// Two grid functions do not live on the same masked grid.
    #[error("incompatible grids")]
    IncompatibleGrids,

    /// Direct double-sum Riesz check refused above the configured cap.
    #[error("instance too large for direct Riesz")]
    RieszTooLarge,

    /// The comparison function is not Steiner-symmetric on its grid.
    #[error("W is not Steiner-symmetric")]
    NotSteinerSymmetric,

    /// Chain-rule lemma hypothesis (key condition) fails.
    #[error("Lemma hypothesis violated")]
    LemmaHypothesisViolated,

    /// p outside the supported p-Laplacian range.
    #[error("exponent out of range")]
    ExponentOutOfRange,

    /// Conjugate gradients hit the iteration cap before the residual target.
    #[error("solver stalled")]
    SolverStalled,

    /// The active mask is not connected; the Dirichlet problem decouples.
    #[error("disconnected domain")]
    DisconnectedDomain,

    /// Symmetrization splits (n, m) disagree, or an axis request is invalid.
    #[error("incompatible symmetrization axes")]
    IncompatibleAxes,

    /// Unparseable shape / function / profile spec string.
    #[error("bad function spec: {0}")]
    BadFunctionSpec(String),

    /// Structural validation of a profile failed (breaks, signs, order).
    #[error("invalid profile: {0}")]
    InvalidProfile(&'static str),

    /// Scalar argument outside its documented range.
    #[error("invalid parameter: {0}")]
    BadParameter(&'static str),

    /// Suite configuration file rejected; line is 1-based.
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// File format violation while reading grids/profiles.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate a misconfigured run rather than a
    /// failed mathematical claim (the CLI maps these to exit code 2).
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::BadFunctionSpec(_)
                | Error::BadParameter(_)
        )
    }
}
