use thiserror::Error;

/// Errors raised by the simulation modules.
///
/// Every variant maps to a stable numeric code (see [`Error::code`]) that the
/// C ABI hands back to foreign callers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid too coarse: sigma {sigma} is below 4 grid spacings ({min})")]
    GridTooCoarse { sigma: f64, min: f64 },
    #[error("boundary leak: tail mass {tail:e} near the grid edges exceeds {limit:e}")]
    BoundaryLeak { tail: f64, limit: f64 },
    #[error("wavepacket not normalized: norm^2 = {norm}")]
    NotNormalized { norm: f64 },
    #[error("wavepacket amplitude vanishes everywhere")]
    ZeroAmplitude,
    #[error("wavepackets live on different grids")]
    GridMismatch,
    #[error("wavepackets are at different times ({0} vs {1})")]
    TimeMismatch(f64, f64),
    #[error("dissimilar wavepackets ({0} vs {1}) never coalesce")]
    SpeciesMismatch(String, String),
    #[error("no overlap: measure {measure:e} does not exceed threshold {threshold:e}")]
    NoOverlap { measure: f64, threshold: f64 },
    #[error("cannot split a {quanta}-quantum packet into {parts} parts")]
    TooManyParts { parts: usize, quanta: u32 },
    #[error("aggregate has no members")]
    EmptyAggregate,
    #[error("norm drift {drift:e} in a single step")]
    NormDrift { drift: f64 },
    #[error("at step {index}: {source}")]
    AtStep {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("position {position} lies outside the grid domain")]
    OffGrid { position: f64 },
    #[error("reduction width {width} is below 2 grid spacings ({min})")]
    WidthTooSmall { width: f64, min: f64 },
    #[error("ensemble of {n} particles is below the minimum of {min}")]
    EnsembleTooSmall { n: usize, min: usize },
    #[error("degenerate apparatus axes: {0}")]
    DegenerateAxes(String),
    #[error("mode {mode} holds no quanta")]
    EmptySource { mode: usize },
    #[error("{quanta} fermion quanta cannot fit into {modes} modes")]
    Overfilled { quanta: u64, modes: usize },
    #[error("bose occupancy diverges for energy {energy} <= chemical potential {mu}")]
    DivergentOccupancy { energy: f64, mu: f64 },
}

impl Error {
    /// Stable numeric code for foreign callers. Never renumber.
    pub fn code(&self) -> i32 {
        match self {
            Error::InvalidGrid(_) => 10,
            Error::InvalidParameter(_) => 11,
            Error::GridTooCoarse { .. } => 12,
            Error::BoundaryLeak { .. } => 13,
            Error::NotNormalized { .. } => 14,
            Error::ZeroAmplitude => 15,
            Error::GridMismatch => 16,
            Error::TimeMismatch(..) => 17,
            Error::SpeciesMismatch(..) => 18,
            Error::NoOverlap { .. } => 19,
            Error::TooManyParts { .. } => 20,
            Error::EmptyAggregate => 21,
            Error::NormDrift { .. } => 22,
            Error::AtStep { source, .. } => source.code(),
            Error::OffGrid { .. } => 23,
            Error::WidthTooSmall { .. } => 24,
            Error::EnsembleTooSmall { .. } => 25,
            Error::DegenerateAxes(_) => 26,
            Error::EmptySource { .. } => 27,
            Error::Overfilled { .. } => 28,
            Error::DivergentOccupancy { .. } => 29,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
