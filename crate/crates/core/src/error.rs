use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty OAM window [{min}, {max}]")]
    EmptyWindow { min: i32, max: i32 },

    #[error("a basis needs at least one path")]
    NoPaths,

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not unitary (max |M^dag M - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("operator is not contractive (largest singular value {max_singular:.12})")]
    NotContractive { max_singular: f64 },

    #[error("leakage: {element} sends {mode} outside the OAM window")]
    Leakage { element: String, mode: String },

    #[error("mode {0} is not part of the basis")]
    UnknownMode(String),

    #[error("state is not normalized (squared norm {norm_sqr:.12})")]
    Unnormalized { norm_sqr: f64 },

    #[error("state norm exceeds one (squared norm {norm_sqr:.12})")]
    NormTooLarge { norm_sqr: f64 },

    #[error("subspace is empty")]
    EmptySubspace,

    #[error("nothing to compose")]
    EmptyComposition,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("port {port} does not exist (basis has {paths} paths)")]
    MissingPort { port: u8, paths: u8 },

    #[error("inner circuit `{name}` does not act on OAM alone")]
    InnerTouchesPolarization { name: String },

    #[error("count row {row} has no positive entry")]
    ZeroCountRow { row: usize },

    #[error("analyzer set is not orthonormal (max Gram deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("unattainable calibration target {0}")]
    UnattainableTarget(f64),

    #[error("basis index {0} is outside 1..=7")]
    InvalidBasisIndex(usize),

    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
