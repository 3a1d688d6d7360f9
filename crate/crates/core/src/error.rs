use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquareMatrix { rows: usize, cols: usize },

    #[error("{what}: size {size} exceeds limit {limit}")]
    SizeLimitExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("index {index} out of bounds for dimension {bound}")]
    IndexOutOfBounds { index: usize, bound: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid mode configuration: {0}")]
    InvalidConfiguration(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("C({n},{m}) = {count} subsets exceeds the enumeration cap {cap}")]
    CombinatorialBlowup {
        n: usize,
        m: usize,
        count: u128,
        cap: u128,
    },

    #[error("expansion needs {required} permanent evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("alpha = {alpha} outside the admissible range [0, 1)")]
    AlphaOutOfRange { alpha: f64 },

    #[error("eta = {eta} outside the admissible range (0, 1)")]
    EtaOutOfRange { eta: f64 },

    #[error("Hoeffding window parameter C = {c} must lie in (0, {limit})")]
    WindowExceedsRange { c: f64, limit: f64 },

    #[error("no transmission threshold: bound stays below epsilon up to eta = 1")]
    NoThreshold,

    #[error("no postselection margin: the setup is already simulable at p = 0")]
    NoMargin,

    #[error("chain stuck on a zero-valued target for {steps} consecutive steps")]
    NonErgodicStart { steps: u64 },
}

impl Error {
    /// Budget and overflow failures are resource problems rather than bad input.
    pub fn is_resource_error(&self) -> bool {
        matches!(
            self,
            Error::Overflow(_) | Error::BudgetExceeded { .. } | Error::CombinatorialBlowup { .. }
        )
    }
}
