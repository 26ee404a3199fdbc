//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by network construction and dynamics operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum NetError {
    #[error("neuron count must be at least 2, got {0}")]
    NeuronCountTooSmall(usize),

    #[error("threshold theta must be positive, got {0}")]
    NonPositiveTheta(f64),

    #[error("parameter vector `{name}` has length {got}, expected {expected}")]
    BadVectorLength {
        name: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("inhibition matrix has {got} entries, expected {expected}")]
    BadMatrixShape { got: usize, expected: usize },

    #[error("gamma must be positive: gamma[{index}] = {value}")]
    NonPositiveGamma { index: usize, value: f64 },

    #[error("beta must exceed theta: beta[{index}] = {value}, theta = {theta}")]
    BetaNotAboveTheta {
        index: usize,
        value: f64,
        theta: f64,
    },

    #[error("inhibition must be positive: h[{from}][{to}] = {value}")]
    NonPositiveInhibition { from: usize, to: usize, value: f64 },

    #[error("h equals theta: h[{from}][{to}] = {value} is within tolerance of theta = {theta}")]
    InhibitionAtThreshold {
        from: usize,
        to: usize,
        value: f64,
        theta: f64,
    },

    #[error("potential {value} at coordinate {index} is outside [-theta, theta] = [-{theta}, {theta}]")]
    PotentialOutOfRange {
        index: usize,
        value: f64,
        theta: f64,
    },

    #[error("state has dimension {got}, expected {expected}")]
    BadStateDimension { got: usize, expected: usize },

    #[error("flow requires t >= 0, got {0}")]
    NegativeTime(f64),

    #[error("spike time undefined: potential {value} at neuron {index} is at or above threshold")]
    AlreadyAtThreshold { index: usize, value: f64 },

    #[error("point is not on the section: no coordinate is zero")]
    NotOnSection,

    #[error("winner set is empty")]
    EmptyWinnerSet,

    #[error("winner {index} is not at threshold: potential {value}, theta {theta}")]
    WinnerNotAtThreshold {
        index: usize,
        value: f64,
        theta: f64,
    },

    #[error("point is on or near the partition boundary: time-gap margin {margin} below tolerance {tolerance}")]
    OnPartitionBoundary { margin: f64, tolerance: f64 },

    #[error("jump probe failed to straddle the tie: winners agree on both sides")]
    ProbeStraddleFailed,

    #[error("cycle candidate rejected: itinerary left the candidate word during refinement at round {round}")]
    CandidateLeftWord { round: usize },

    #[error("sample count must be at least 1")]
    SampleCountZero,

    #[error("probe scale {delta} must stay below the expansivity constant {alpha}")]
    DeltaTooLarge { delta: f64, alpha: f64 },

    #[error("section sampling rejected too many near-tie draws: {rejected} of {attempts}")]
    ResampleFailure { rejected: usize, attempts: usize },

    #[error("all samples were discarded before generation {generation}")]
    AllSamplesDiscarded { generation: usize },

    #[error("atom successor is ambiguous: {disagreeing} of {members} member images disagree with the majority")]
    AmbiguousSuccessor { disagreeing: usize, members: usize },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, NetError>;
