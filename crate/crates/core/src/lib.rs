//! Optimal monotone categorization of a one-dimensional quality interval.
//!
//! A sender commits, before learning the quality of an object, to a monotone
//! partition of the quality interval into pooling intervals and exactly
//! revealed points. A receiver prices every announcement at his conditional
//! mean. When the weighting the sender uses to evaluate outcomes differs
//! from the receiver's distribution, the partition matters, and the optimum
//! can be read off the lower convex envelope of the sender mass expressed as
//! a function of the receiver percentile.
//!
//! The crate is organized around that pipeline:
//!
//! - [`priors`] holds the receiver cdf, the sender weighting (which need not
//!   be a cdf), and the transforms that induce a weighting from richer
//!   primitives such as state-dependent payoffs or group-weighted welfare.
//! - [`solver`] composes the percentile curve, takes its lower convex
//!   envelope, and extracts the optimal categorization; it also builds the
//!   prior-flipped problem.
//! - [`valuation`] evaluates categorizations: posterior means, the pool
//!   weighting, sender value by three independent routes, and a
//!   brute-force dynamic-programming oracle for small grids.
//! - [`analysis`] packages the pooling/separation predicates and produces a
//!   diagnostics report for an instance.
//! - [`schooling`] is the grade-design application with costly learning:
//!   it reduces the school's problem to a categorization instance with an
//!   induced sender weighting and backs out the incentive-compatible
//!   learning schedule.

pub mod analysis;
pub mod priors;
pub mod schooling;
pub mod solver;
pub mod valuation;
pub use analysis::{diagnose, DiagnosticsReport};
pub use priors::{
    build_receiver, build_sender, QualitySupport, ReceiverCdf, ReceiverFamily, SenderFamily,
    SenderWeighting, SignedGridMeasure,
};
pub use solver::{
    compose_h, compose_h_exact, extract_categorization, flip_problem, lower_convex_envelope,
    Categorization, PercentileCurve,
};
pub use valuation::{dp_oracle, random_categorization, sender_value, ValueMethod};

/// Numeric thresholds shared across the crate. Grid values are O(1) on the
/// unit interval, so absolute tolerances are used throughout.
pub mod tolerances {
    /// Envelope-vs-curve classification and dominance slack.
    pub const TOL_ENV: f64 = 1e-9;
    /// Maximum disagreement tolerated between the three value routes.
    pub const TOL_VAL: f64 = 1e-6;
    /// Maximum incentive violation tolerated at a valid learning schedule.
    pub const TOL_IC: f64 = 1e-6;
    /// Minimum cdf slope; smaller increments make the quantile ill-posed.
    pub const SLOPE_FLOOR: f64 = 1e-12;
    /// Largest grid the dynamic-programming oracle accepts.
    pub const MAX_ORACLE_N: usize = 800;
    /// Strict-improvement threshold used when breaking oracle ties.
    pub const TIE_EPS: f64 = 1e-12;
}

/// Errors for construction and solving.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid support: lo={lo}, hi={hi}")]
    InvalidSupport { lo: f64, hi: f64 },

    #[error("{context}: table must be strictly increasing (violated at knot {index})")]
    TableNotIncreasing { context: &'static str, index: usize },

    #[error("{family} family: {reason}")]
    BadFamilyParameter {
        family: &'static str,
        reason: String,
    },

    #[error("grid too small: need at least {need} points, got {got}")]
    GridTooSmall { need: usize, got: usize },

    #[error("sender and receiver are defined on different supports")]
    SupportMismatch,

    #[error("weighting must equal 1 at the top of the support, got {at_hi}")]
    NotNormalized { at_hi: f64 },

    #[error("{context}: non-finite value encountered")]
    NonFinite { context: &'static str },

    #[error("downward jump at the lower endpoint (size {size}) is not permitted")]
    DownwardJump { size: f64 },

    #[error("transformed weighting has non-positive total mass {total}")]
    DegenerateTransform { total: f64 },

    #[error("flip undefined: {reason}")]
    FlipUndefined { reason: &'static str },

    #[error("quality {x} lies outside the support")]
    OutOfSupport { x: f64 },

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("test requires a cdf weighting, but {context}")]
    NotACdf { context: &'static str },

    #[error("oracle grid {n} exceeds the limit {max}")]
    OracleGridTooLarge { n: usize, max: usize },

    #[error("learning cost must exceed the learning value at the top: c(a_hi)={cost_at_hi} <= lambda={lambda}")]
    ConditionViolated { cost_at_hi: f64, lambda: f64 },

    #[error("invalid configuration: {what}")]
    BadConfig { what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
