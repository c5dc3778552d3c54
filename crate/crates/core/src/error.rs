use thiserror::Error;

/// Errors raised by the engine.
///
/// The variants are grouped by how a batch driver should react:
/// configuration mistakes (`InvalidParams`, `StageMismatch`, ...),
/// resource limits (`StageCapExceeded`, `RangeCapExceeded`,
/// `FloorBudgetExceeded`), and exactness guards that indicate an internal
/// bug and must abort the run (`NegativeAtomMeasure`).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("stage {requested} out of range: explicit rule provides cutting data for stages 1..={available}")]
    StageOutOfRange { requested: u32, available: u32 },

    #[error("stage mismatch: left operand at stage {left}, right at stage {right}")]
    StageMismatch { left: u32, right: u32 },

    #[error(
        "headroom violation at stage {stage}: shifted range [{start}, {end}) leaves [0, {height})"
    )]
    HeadroomViolation {
        stage: u32,
        start: String,
        end: String,
        height: String,
    },

    #[error("stage cap {cap} exceeded: {context}")]
    StageCapExceeded { cap: u32, context: String },

    #[error("range-count cap {cap} exceeded while lifting to stage {stage}")]
    RangeCapExceeded { cap: usize, stage: u32 },

    #[error("floor budget {budget} exceeded: stage {stage} has {floors} floors")]
    FloorBudgetExceeded {
        budget: u64,
        stage: u32,
        floors: String,
    },

    #[error(
        "cut count {cuts} at stage {stage} is degenerate for witness statistics (need at least 3)"
    )]
    DegenerateCutCount { stage: u32, cuts: u64 },

    #[error("shift {m} outside the admissible window ({low}, {high}] for stage {stage}")]
    ShiftOutOfWindow {
        stage: u32,
        m: String,
        low: String,
        high: String,
    },

    #[error("cylinder parts overlap: parts {left} and {right} intersect with measure {measure}")]
    OverlappingParts {
        left: usize,
        right: usize,
        measure: String,
    },

    #[error("count cap exceeded: {count} > {cap}")]
    CountCapExceeded { count: u32, cap: u32 },

    #[error("factor cap exceeded: {factors} > {cap}")]
    FactorCapExceeded { factors: usize, cap: usize },

    #[error("negative atom measure {measure} for atom mask {mask:#b}: exactness bug, aborting")]
    NegativeAtomMeasure { mask: u16, measure: String },

    #[error("sampling rate {rate} exceeds the inversion cap {cap}")]
    RateCapExceeded { rate: String, cap: String },

    #[error("{0}")]
    EmptyInput(String),
}

impl Error {
    /// True for the resource-limit family (exit code 3 in the CLI).
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::StageCapExceeded { .. }
                | Error::RangeCapExceeded { .. }
                | Error::FloorBudgetExceeded { .. }
        )
    }

    /// True for exactness guards that indicate an internal bug.
    pub fn is_exactness_bug(&self) -> bool {
        matches!(self, Error::NegativeAtomMeasure { .. })
    }
}
