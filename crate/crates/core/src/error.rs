use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument violates its precondition.
    InvalidParameter(String),
    /// Two discrete objects live on different grids.
    GridMismatch,
    /// `t` is a caustic of the oscillator: `cos(√k t)` or `sin(√k t)` vanishes
    /// to tolerance, or a difference stencil straddles such a time.
    SingularTime { k: f64, t: f64 },
    /// The pin Gram matrix fails the admissibility condition.
    PinDegenerate(String),
    /// A determinant that must be inverted is zero.
    DegenerateDeterminant,
    /// Samples along a ray are too coarse to follow the logarithm's branch.
    BranchCrossing { index: usize },
    /// The contour integrand does not decay within the truncation radius.
    ContourDivergent { tail: f64, total: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Domain errors are failures of the mathematics at the requested point,
    /// as opposed to malformed input.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::SingularTime { .. }
                | Error::PinDegenerate(_)
                | Error::DegenerateDeterminant
                | Error::BranchCrossing { .. }
                | Error::ContourDivergent { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::GridMismatch => write!(f, "operands live on different time grids"),
            Error::SingularTime { k, t } => write!(
                f,
                "singular time: the oscillator propagator diverges at k = {k}, t = {t}"
            ),
            Error::PinDegenerate(msg) => write!(f, "degenerate pin matrix: {msg}"),
            Error::DegenerateDeterminant => write!(f, "degenerate determinant"),
            Error::BranchCrossing { index } => {
                write!(f, "branch crossing of the logarithm near sample {index}")
            }
            Error::ContourDivergent { tail, total } => write!(
                f,
                "contour integrand does not decay: tail {tail:e} against accumulated {total:e}"
            ),
        }
    }
}

impl core::error::Error for Error {}
