//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A (product, campus) pair appears more than once in the input records.
    #[error("duplicate cell for product '{product}' at campus '{campus}'")]
    DuplicateCell { product: String, campus: String },

    /// A price or quantity is negative or non-finite.
    #[error("invalid value for product '{product}' at campus '{campus}': {value} ({what})")]
    NegativeValue {
        product: String,
        campus: String,
        value: f64,
        what: &'static str,
    },

    /// A product has zero total deployed quantity; its deployment mix is undefined.
    #[error("product '{product}' has zero total quantity")]
    ZeroTotalQuantity { product: String },

    /// No records were supplied.
    #[error("panel has no records")]
    EmptyPanel,

    /// Observed cells do not connect all products and campuses; the two-way
    /// fixed effects are not identified.
    #[error("panel is disconnected: {components} components in the observed-cell graph")]
    DisconnectedPanel { components: usize },

    /// An observed row or column carries zero total weight, so the weighted
    /// fit cannot identify its effect.
    #[error("degenerate weights: {what} '{id}' has zero total quantity over observed cells")]
    DegenerateWeights { what: &'static str, id: String },

    /// The exposure vector is (numerically) collinear with the all-ones vector
    /// and the two equality constraints cannot be resolved.
    #[error("degenerate exposure: constraints are numerically collinear")]
    DegenerateExposure,

    /// The cost target lies outside [min exposure, max exposure].
    #[error("infeasible cost target {cost}: outside exposure hull [{min}, {max}]")]
    InfeasibleCost { cost: f64, min: f64, max: f64 },

    /// The slack fallback cannot reach the requested tolerance; the limiting
    /// slack equals the distance from the cost target to the exposure hull.
    #[error("cost slack tolerance unreachable: limiting slack {limiting_slack}, tolerance {tolerance}")]
    ToleranceUnreachable {
        limiting_slack: f64,
        tolerance: f64,
    },

    /// An operation that requires a fully observed panel was given missing cells.
    #[error("panel is incomplete: {missing} missing cells")]
    IncompletePanel { missing: usize },

    /// CDR is undefined when realized system cost is zero.
    #[error("system cost is zero; cost distortion ratio undefined")]
    ZeroSystemCost,

    /// A product id was not found in the panel.
    #[error("unknown product '{product}'")]
    UnknownProduct { product: String },

    /// Imputation error is undefined when no cells were masked.
    #[error("no masked cells to evaluate")]
    NoMaskedCells,

    /// Scenario parameters violate the generator's preconditions.
    #[error("bad scenario parameters: {0}")]
    BadParams(String),

    /// Repeated masking draws never satisfied the identifiability constraints.
    #[error("identifiability constraints unreachable after {attempts} masking attempts")]
    IdentifiabilityUnreachable { attempts: usize },

    /// A small dense solve failed unexpectedly.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// Input file failed to parse; carries a line number when known.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
